"""Closed-form quantities for diagonal Gaussians.

Every density here is N(mean, diag(exp(log_var))). Variances travel as
log-variances so the optimizer can treat them as unconstrained; exp() is
applied at the point of use. All per-dimension reductions run in float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

LOG_2PI = math.log(2.0 * math.pi)


def _as_vector(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise UsageError(f"expected a 1-D vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class DiagGaussian:
    """One sense: a mean vector plus per-dimension log-variance."""

    mean: np.ndarray
    log_var: np.ndarray

    def __post_init__(self):
        mean = _as_vector(self.mean)
        log_var = _as_vector(self.log_var)
        if mean.size < 1 or mean.size != log_var.size:
            raise UsageError(
                f"mean (D={mean.size}) and log_var (D={log_var.size}) must share a length >= 1"
            )
        if not (np.isfinite(mean).all() and np.isfinite(log_var).all()):
            raise UsageError("DiagGaussian parameters must be finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "log_var", log_var)

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def var(self) -> np.ndarray:
        return np.exp(self.log_var)


def _check_pair(a: DiagGaussian, b: DiagGaussian) -> None:
    if a.dim != b.dim:
        raise UsageError(f"dimension mismatch: {a.dim} vs {b.dim}")


def log_el_kernel(a: DiagGaussian, b: DiagGaussian) -> float:
    """Log Gaussian overlap integral, log of int N_a(x) N_b(x) dx.

    Closed form: log N(mean_a; mean_b, var_a + var_b)
      = -(D/2) log 2pi - 1/2 sum_d [ log(va_d + vb_d) + (mu_a,d - mu_b,d)^2 / (va_d + vb_d) ]

    Symmetric in (a, b).
    """
    _check_pair(a, b)
    sv = a.var + b.var
    diff = a.mean - b.mean
    return float(-0.5 * (a.dim * LOG_2PI + np.sum(np.log(sv) + diff * diff / sv)))


def kl_diag(a: DiagGaussian, b: DiagGaussian) -> float:
    """KL(a || b) between diagonal Gaussians.

    Closed form: 1/2 sum_d [ log(vb_d / va_d) + (va_d + (mu_a,d - mu_b,d)^2) / vb_d - 1 ]

    Non-negative; zero iff a == b. Asymmetric in general.
    """
    _check_pair(a, b)
    vb = b.var
    diff = a.mean - b.mean
    return float(0.5 * np.sum(b.log_var - a.log_var + (a.var + diff * diff) / vb - 1.0))


def entropy(a: DiagGaussian) -> float:
    """Differential entropy, (D/2) log(2 pi e) + 1/2 sum_d log_var_d.

    Can be negative for small variances.
    """
    return float(0.5 * a.dim * (LOG_2PI + 1.0) + 0.5 * np.sum(a.log_var))
