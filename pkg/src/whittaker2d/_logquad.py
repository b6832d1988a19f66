"""Log-space trapezoid quadrature for integrands of the form exp(f).

The closed-form solvers integrate exp(gamma * h) where gamma * h spans
hundreds of units either way; accumulating in log space keeps everything
finite.
"""

from __future__ import annotations

import numpy as np

__all__ = ["log_cumtrapz_exp"]


def log_cumtrapz_exp(logf: np.ndarray, dt: float) -> np.ndarray:
    """log of the running trapezoid integral of exp(logf) on a uniform grid.

    Returns an array the same length as logf whose i-th entry is
    log( integral from t_0 to t_i ), with -inf at i = 0.
    """
    logf = np.asarray(logf, dtype=float)
    cell = np.logaddexp(logf[:-1], logf[1:]) + np.log(dt / 2.0)
    out = np.empty(logf.shape[0])
    out[0] = -np.inf
    np.logaddexp.accumulate(cell, out=out[1:])
    return out
