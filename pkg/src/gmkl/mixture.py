"""Gaussian mixture embeddings and the approximate KL divergence between them.

The true KL between two Gaussian mixtures is intractable. Following the
Hershey/Olsen approximations combined into stricter bounds (Durrieu et al.),
we compute, for mixtures f (components i, weights p) and g (components j,
weights q):

  upper(f||g) = sum_i p_i log[ sum_k p_k EL_ik(f,f) / sum_j q_j exp(-KL(f_i||g_j)) ]
                + sum_i p_i H(f_i)
  lower(f||g) = sum_i p_i log[ sum_k p_k exp(-KL(f_i||f_k)) / sum_j q_j EL_ij(f,g) ]
                - sum_i p_i H(f_i)

with EL the pairwise Gaussian overlap integral and H the component entropy.
The training divergence is the mean of the two bounds; the entropy terms
cancel there but both bounds are exposed individually. Everything runs in
the log domain (log-sum-exp with max shift), so no intermediate exp can
overflow for any reasonable parameter range.

This module also holds the analytic gradient of the mean-of-bounds
divergence with respect to all mixture parameters, used by the trainer, and
a seeded Monte-Carlo estimator of the true KL used as a test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .gauss import LOG_2PI, DiagGaussian

WEIGHT_SUM_TOL = 1e-6


def log_softmax(scores: np.ndarray) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    shifted = s - s.max()
    return shifted - math.log(np.exp(shifted).sum())


def _logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    # max-shift; first index wins ties, all -inf rows stay -inf
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis))
    return out + np.squeeze(m, axis=axis)


@dataclass(frozen=True)
class MixtureEmbedding:
    """One word: C weighted diagonal-Gaussian senses over a shared D-space."""

    weights: np.ndarray   # [C], on the probability simplex
    means: np.ndarray     # [C, D]
    log_vars: np.ndarray  # [C, D]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        mu = np.asarray(self.means, dtype=np.float64)
        lv = np.asarray(self.log_vars, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise UsageError("weights must be a non-empty 1-D vector")
        if mu.ndim != 2 or mu.shape != lv.shape or mu.shape[0] != w.size:
            raise UsageError(
                f"means/log_vars must be [C, D] arrays matching {w.size} weights, "
                f"got {mu.shape} and {lv.shape}"
            )
        if not (np.isfinite(w).all() and np.isfinite(mu).all() and np.isfinite(lv).all()):
            raise UsageError("mixture parameters must be finite")
        if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL or w.min() < -1e-12 or w.max() > 1.0 + 1e-12:
            raise UsageError(f"weights must lie on the simplex, got {w}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "log_vars", lv)

    @classmethod
    def from_components(cls, weights, components) -> "MixtureEmbedding":
        comps = list(components)
        means = np.stack([c.mean for c in comps])
        log_vars = np.stack([c.log_var for c in comps])
        return cls(np.asarray(weights, dtype=np.float64), means, log_vars)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def component(self, j: int) -> DiagGaussian:
        return DiagGaussian(self.means[j], self.log_vars[j])

    @property
    def components(self) -> list[DiagGaussian]:
        return [self.component(j) for j in range(self.n_components)]

    def log_weights(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights)


def _check_dims(f: MixtureEmbedding, g: MixtureEmbedding) -> None:
    if f.dim != g.dim:
        raise UsageError(f"dimension mismatch: {f.dim} vs {g.dim}")


# ---------------------------------------------------------------------------
# pairwise component grids (vectorized versions of the gauss closed forms)

def _log_el_grid(mu_a, var_a, mu_b, var_b) -> np.ndarray:
    """log EL between every component pair: [Ca, D] x [Cb, D] -> [Ca, Cb]."""
    d = mu_a.shape[1]
    diff = mu_a[:, None, :] - mu_b[None, :, :]
    sv = var_a[:, None, :] + var_b[None, :, :]
    return -0.5 * (d * LOG_2PI + np.sum(np.log(sv) + diff * diff / sv, axis=-1))


def _kl_grid(mu_a, var_a, lv_a, mu_b, var_b, lv_b) -> np.ndarray:
    """KL(a_i || b_j) for every component pair: -> [Ca, Cb]."""
    diff = mu_a[:, None, :] - mu_b[None, :, :]
    return 0.5 * np.sum(
        lv_b[None, :, :] - lv_a[:, None, :]
        + (var_a[:, None, :] + diff * diff) / var_b[None, :, :]
        - 1.0,
        axis=-1,
    )


def _component_entropies(lv: np.ndarray) -> np.ndarray:
    d = lv.shape[1]
    return 0.5 * d * (LOG_2PI + 1.0) + 0.5 * lv.sum(axis=1)


def _bounds_raw(logp, mu_f, lv_f, logq, mu_g, lv_g) -> tuple[float, float]:
    """(lower, upper) for raw parameter arrays; entropies computed once."""
    var_f = np.exp(lv_f)
    var_g = np.exp(lv_g)
    a_num = _logsumexp(logp[None, :] + _log_el_grid(mu_f, var_f, mu_f, var_f), axis=1)
    b_den = _logsumexp(logq[None, :] - _kl_grid(mu_f, var_f, lv_f, mu_g, var_g, lv_g), axis=1)
    c_num = _logsumexp(logp[None, :] - _kl_grid(mu_f, var_f, lv_f, mu_f, var_f, lv_f), axis=1)
    e_den = _logsumexp(logq[None, :] + _log_el_grid(mu_f, var_f, mu_g, var_g), axis=1)
    ent = _component_entropies(lv_f)
    p = np.exp(logp)
    upper = float(p @ (a_num - b_den) + p @ ent)
    lower = float(p @ (c_num - e_den) - p @ ent)
    return lower, upper


def kl_bounds(f: MixtureEmbedding, g: MixtureEmbedding) -> tuple[float, float]:
    """Stricter (lower, upper) bounds on KL(f || g) in one pass."""
    _check_dims(f, g)
    return _bounds_raw(f.log_weights(), f.means, f.log_vars,
                       g.log_weights(), g.means, g.log_vars)


def kl_upper(f: MixtureEmbedding, g: MixtureEmbedding) -> float:
    return kl_bounds(f, g)[1]


def kl_lower(f: MixtureEmbedding, g: MixtureEmbedding) -> float:
    return kl_bounds(f, g)[0]


def kl_approx(f: MixtureEmbedding, g: MixtureEmbedding) -> float:
    """Mean of the upper and lower KL bounds; the training divergence.

    May be negative (it averages an approximation) and is asymmetric in
    (f, g) in general.
    """
    lower, upper = kl_bounds(f, g)
    return 0.5 * (upper + lower)


def log_energy(f: MixtureEmbedding, g: MixtureEmbedding) -> float:
    """Log of the pair energy exp(-KL~(f||g)); exactly -kl_approx(f, g).

    The energy itself is never materialized; the loss only consumes logs.
    """
    return -kl_approx(f, g)


def _kl_approx_raw(logp, mu_f, lv_f, logq, mu_g, lv_g) -> float:
    lower, upper = _bounds_raw(logp, mu_f, lv_f, logq, mu_g, lv_g)
    return 0.5 * (upper + lower)


# ---------------------------------------------------------------------------
# analytic gradient of the mean-of-bounds divergence

def _kl_approx_grads_raw(logp, mu_f, lv_f, logq, mu_g, lv_g):
    """Value and gradients of kl_approx for raw parameter arrays.

    Returns (value, d_logp, d_mu_f, d_lv_f, d_logq, d_mu_g, d_lv_g) where
    d_logp / d_logq are gradients with respect to log-weights (p_m * d/dp_m),
    the form a softmax parameterization consumes directly:
    d/dscore_m = d_logp_m - p_m * sum(d_logp).

    The entropy terms cancel in the mean of bounds, so they carry no
    gradient here.
    """
    p = np.exp(logp)
    var_f = np.exp(lv_f)
    var_g = np.exp(lv_g)

    diff_ww = mu_f[:, None, :] - mu_f[None, :, :]
    sv_ww = var_f[:, None, :] + var_f[None, :, :]
    diff_wv = mu_f[:, None, :] - mu_g[None, :, :]
    sv_wv = var_f[:, None, :] + var_g[None, :, :]
    d = mu_f.shape[1]

    log_el_ww = -0.5 * (d * LOG_2PI + np.sum(np.log(sv_ww) + diff_ww * diff_ww / sv_ww, axis=-1))
    log_el_wv = -0.5 * (d * LOG_2PI + np.sum(np.log(sv_wv) + diff_wv * diff_wv / sv_wv, axis=-1))
    kl_ww = 0.5 * np.sum(
        lv_f[None, :, :] - lv_f[:, None, :] + (var_f[:, None, :] + diff_ww * diff_ww) / var_f[None, :, :] - 1.0,
        axis=-1,
    )
    kl_wv = 0.5 * np.sum(
        lv_g[None, :, :] - lv_f[:, None, :] + (var_f[:, None, :] + diff_wv * diff_wv) / var_g[None, :, :] - 1.0,
        axis=-1,
    )

    a_num = _logsumexp(logp[None, :] + log_el_ww, axis=1)
    b_den = _logsumexp(logq[None, :] - kl_wv, axis=1)
    c_num = _logsumexp(logp[None, :] - kl_ww, axis=1)
    e_den = _logsumexp(logq[None, :] + log_el_wv, axis=1)

    # responsibilities: each row sums to 1
    r_a = np.exp(logp[None, :] + log_el_ww - a_num[:, None])
    r_b = np.exp(logq[None, :] - kl_wv - b_den[:, None])
    r_c = np.exp(logp[None, :] - kl_ww - c_num[:, None])
    r_e = np.exp(logq[None, :] + log_el_wv - e_den[:, None])

    s = a_num - b_den + c_num - e_den
    value = 0.5 * float(p @ s)

    d_logp = 0.5 * p * s + 0.5 * ((p[:, None] * (r_a + r_c)).sum(axis=0))
    d_logq = -0.5 * ((p[:, None] * (r_b + r_e)).sum(axis=0))

    # per-term weights on the component grids
    w_a = 0.5 * p[:, None] * r_a    # on log_el_ww[i, k]
    w_b = 0.5 * p[:, None] * r_b    # on kl_wv[i, j]
    w_c = -0.5 * p[:, None] * r_c   # on kl_ww[i, k]
    w_e = -0.5 * p[:, None] * r_e   # on log_el_wv[i, j]

    d_mu_f = np.zeros_like(mu_f)
    d_lv_f = np.zeros_like(lv_f)
    d_mu_g = np.zeros_like(mu_g)
    d_lv_g = np.zeros_like(lv_g)

    # log EL terms: d/dmu_i = -diff/sv, d/dmu_other = +diff/sv,
    # d/dvar (either slot) = (diff^2/sv^2 - 1/sv)/2, chained by *var.
    t = diff_ww / sv_ww
    sgrid = 0.5 * (diff_ww * diff_ww / (sv_ww * sv_ww) - 1.0 / sv_ww)
    d_mu_f += -(w_a[:, :, None] * t).sum(axis=1) + (w_a[:, :, None] * t).sum(axis=0)
    d_lv_f += ((w_a[:, :, None] * sgrid).sum(axis=1) + (w_a[:, :, None] * sgrid).sum(axis=0)) * var_f

    t = diff_wv / sv_wv
    sgrid = 0.5 * (diff_wv * diff_wv / (sv_wv * sv_wv) - 1.0 / sv_wv)
    d_mu_f += -(w_e[:, :, None] * t).sum(axis=1)
    d_mu_g += (w_e[:, :, None] * t).sum(axis=0)
    d_lv_f += (w_e[:, :, None] * sgrid).sum(axis=1) * var_f
    d_lv_g += (w_e[:, :, None] * sgrid).sum(axis=0) * var_g

    # KL terms, from slot i into slot j: d/dmu_i = diff/var_to,
    # d/dlv_from = (var_from/var_to - 1)/2, d/dlv_to = (1 - (var_from + diff^2)/var_to)/2.
    t = diff_wv / var_g[None, :, :]
    d_mu_f += (w_b[:, :, None] * t).sum(axis=1)
    d_mu_g += -(w_b[:, :, None] * t).sum(axis=0)
    d_lv_f += (w_b[:, :, None] * (0.5 * (var_f[:, None, :] / var_g[None, :, :] - 1.0))).sum(axis=1)
    d_lv_g += (w_b[:, :, None] * (0.5 * (1.0 - (var_f[:, None, :] + diff_wv * diff_wv) / var_g[None, :, :]))).sum(axis=0)

    t = diff_ww / var_f[None, :, :]
    d_mu_f += (w_c[:, :, None] * t).sum(axis=1) - (w_c[:, :, None] * t).sum(axis=0)
    d_lv_f += (w_c[:, :, None] * (0.5 * (var_f[:, None, :] / var_f[None, :, :] - 1.0))).sum(axis=1)
    d_lv_f += (w_c[:, :, None] * (0.5 * (1.0 - (var_f[:, None, :] + diff_ww * diff_ww) / var_f[None, :, :]))).sum(axis=0)

    return value, d_logp, d_mu_f, d_lv_f, d_logq, d_mu_g, d_lv_g


def _kl_gap_grads(logp, mu_f, lv_f, logq1, mu_g1, lv_g1, logq2, mu_g2, lv_g2):
    """Values and gradients for the pair kl_approx(f,g1), kl_approx(f,g2).

    Specialized for the hinge gap kl_approx(f,g1) - kl_approx(f,g2): the
    f-side self terms (the EL and exp(-KL) sums over f's own components and
    the entropies) are identical in both divergences, so their gradients
    cancel in the gap and are never materialized. Self-term values are
    computed once and shared.

    Returns (v1, v2, d_logp_gap, d_mu_f_gap, d_lv_f_gap,
             (d_logq1, d_mu_g1, d_lv_g1), (d_logq2, d_mu_g2, d_lv_g2))
    where the f-side arrays and d_logp_gap differentiate the gap v1 - v2,
    and each g-side tuple differentiates its own divergence (negate the g2
    tuple to get gap gradients).
    """
    p = np.exp(logp)
    var_f = np.exp(lv_f)
    d = mu_f.shape[1]

    diff = mu_f[:, None, :] - mu_f[None, :, :]
    sv = var_f[:, None, :] + var_f[None, :, :]
    log_el_ww = -0.5 * (d * LOG_2PI + np.sum(np.log(sv) + diff * diff / sv, axis=-1))
    kl_ww = 0.5 * np.sum(
        lv_f[None, :, :] - lv_f[:, None, :] + (var_f[:, None, :] + diff * diff) / var_f[None, :, :] - 1.0,
        axis=-1,
    )
    self_num = _logsumexp(logp[None, :] + log_el_ww, axis=1) \
        + _logsumexp(logp[None, :] - kl_ww, axis=1)   # a_num + c_num per row

    def side(logq, mu_g, lv_g):
        var_g = np.exp(lv_g)
        diff = mu_f[:, None, :] - mu_g[None, :, :]
        dsq = diff * diff
        sv = var_f[:, None, :] + var_g[None, :, :]
        vf = var_f[:, None, :]
        vg = var_g[None, :, :]
        log_el = -0.5 * (d * LOG_2PI + np.sum(np.log(sv) + dsq / sv, axis=-1))
        kl = 0.5 * np.sum(lv_g[None, :, :] - lv_f[:, None, :] + (vf + dsq) / vg - 1.0, axis=-1)
        b_den = _logsumexp(logq[None, :] - kl, axis=1)
        e_den = _logsumexp(logq[None, :] + log_el, axis=1)
        r_b = np.exp(logq[None, :] - kl - b_den[:, None])
        r_e = np.exp(logq[None, :] + log_el - e_den[:, None])
        value = 0.5 * float(p @ (self_num - b_den - e_den))
        d_logp_side = 0.5 * p * (-b_den - e_den)
        d_logq = -0.5 * ((p[:, None] * (r_b + r_e)).sum(axis=0))

        w_b = (0.5 * p[:, None] * r_b)[:, :, None]
        w_e = (-0.5 * p[:, None] * r_e)[:, :, None]
        t_kl = diff / vg
        t_el = diff / sv
        s_el = 0.5 * (dsq / (sv * sv) - 1.0 / sv)
        d_mu_f = (w_b * t_kl).sum(axis=1) - (w_e * t_el).sum(axis=1)
        d_mu_g = (w_e * t_el).sum(axis=0) - (w_b * t_kl).sum(axis=0)
        d_lv_f = (w_b * (0.5 * (vf / vg - 1.0))).sum(axis=1) + (w_e * s_el).sum(axis=1) * var_f
        d_lv_g = (w_b * (0.5 * (1.0 - (vf + dsq) / vg))).sum(axis=0) + (w_e * s_el).sum(axis=0) * var_g
        return value, d_logp_side, d_mu_f, d_lv_f, (d_logq, d_mu_g, d_lv_g)

    v1, dlp1, dmf1, dlf1, g1 = side(logq1, mu_g1, lv_g1)
    v2, dlp2, dmf2, dlf2, g2 = side(logq2, mu_g2, lv_g2)
    return v1, v2, dlp1 - dlp2, dmf1 - dmf2, dlf1 - dlf2, g1, g2


# ---------------------------------------------------------------------------
# Monte-Carlo reference oracle

def mc_kl_oracle(f: MixtureEmbedding, g: MixtureEmbedding, n: int, seed) -> tuple[float, float]:
    """Monte-Carlo estimate of the true KL(f || g) with its standard error.

    Samples x ~ f and averages log f(x) - log g(x); unbiased, deterministic
    under the seed. Used to validate the bounds, never in training.
    """
    _check_dims(f, g)
    if n < 1:
        raise UsageError("sample count must be positive")
    rng = np.random.default_rng(seed)
    comps = rng.choice(f.n_components, size=n, p=f.weights)
    std = np.exp(0.5 * f.log_vars)
    x = f.means[comps] + rng.standard_normal((n, f.dim)) * std[comps]
    diffs = _mixture_logpdf(f, x) - _mixture_logpdf(g, x)
    est = float(diffs.mean())
    stderr = float(diffs.std(ddof=1) / math.sqrt(n))
    return est, stderr


def _mixture_logpdf(m: MixtureEmbedding, x: np.ndarray) -> np.ndarray:
    var = np.exp(m.log_vars)
    diff = x[:, None, :] - m.means[None, :, :]
    comp_ll = -0.5 * np.sum(LOG_2PI + m.log_vars[None, :, :] + diff * diff / var[None, :, :], axis=-1)
    return _logsumexp(m.log_weights()[None, :] + comp_ll, axis=1)
