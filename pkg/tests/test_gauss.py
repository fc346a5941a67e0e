"""Closed-form Gaussian quantities against independent numerical oracles."""

import math

import numpy as np
import pytest

from gmkl.errors import UsageError
from gmkl.gauss import DiagGaussian, entropy, kl_diag, log_el_kernel

HALF_LOG_4PI = 0.5 * math.log(4.0 * math.pi)
HALF_LOG_2PIE = 0.5 * (math.log(2.0 * math.pi) + 1.0)


def gauss(mean, var):
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    var = np.atleast_1d(np.asarray(var, dtype=float))
    return DiagGaussian(mean, np.log(var))


def quadrature_log_el(a, b, span=40.0, n=20001):
    """Per-dimension trapezoid integral of N_a*N_b, multiplied across dims."""
    total = 0.0
    for d in range(a.dim):
        x = np.linspace(-span, span, n)
        pa = np.exp(-0.5 * (x - a.mean[d]) ** 2 / a.var[d]) / np.sqrt(2 * np.pi * a.var[d])
        pb = np.exp(-0.5 * (x - b.mean[d]) ** 2 / b.var[d]) / np.sqrt(2 * np.pi * b.var[d])
        total += math.log(np.trapezoid(pa * pb, x))
    return total


# -- worked values ----------------------------------------------------------

def test_log_el_standard_normal_self():
    a = gauss([0.0], [1.0])
    assert log_el_kernel(a, a) == pytest.approx(-HALF_LOG_4PI, abs=1e-12)
    assert log_el_kernel(a, a) == pytest.approx(-1.26551, abs=1e-5)


def test_log_el_unit_shift():
    a = gauss([0.0], [1.0])
    b = gauss([1.0], [1.0])
    assert log_el_kernel(a, b) == pytest.approx(-HALF_LOG_4PI - 0.25, abs=1e-12)


def test_kl_identity_is_exactly_zero(rng):
    for _ in range(20):
        d = rng.integers(1, 6)
        a = DiagGaussian(rng.normal(size=d), rng.uniform(-2, 2, d))
        assert kl_diag(a, a) == 0.0


def test_kl_unit_shift():
    assert kl_diag(gauss([0.0], [1.0]), gauss([1.0], [1.0])) == pytest.approx(0.5, abs=1e-15)


def test_entropy_values():
    assert entropy(gauss([0.0], [1.0])) == pytest.approx(HALF_LOG_2PIE, abs=1e-12)
    assert entropy(gauss([0.0, 0.0], [1.0, 1.0])) == pytest.approx(2 * HALF_LOG_2PIE, abs=1e-12)
    assert entropy(gauss([0.0], [4.0])) == pytest.approx(HALF_LOG_2PIE + 0.5 * math.log(4), abs=1e-12)
    assert entropy(gauss([5.0], [1e-4])) < 0  # small variances go negative


# -- oracle agreement -------------------------------------------------------

def test_log_el_matches_quadrature(rng):
    for _ in range(100):
        d = int(rng.integers(1, 4))
        a = DiagGaussian(rng.uniform(-3, 3, d), np.log(rng.uniform(0.1, 4.0, d)))
        b = DiagGaussian(rng.uniform(-3, 3, d), np.log(rng.uniform(0.1, 4.0, d)))
        assert log_el_kernel(a, b) == pytest.approx(quadrature_log_el(a, b), abs=1e-6)


def test_kl_matches_monte_carlo(rng):
    a = DiagGaussian(rng.uniform(-2, 2, 2), np.log(rng.uniform(0.3, 2.0, 2)))
    b = DiagGaussian(rng.uniform(-2, 2, 2), np.log(rng.uniform(0.3, 2.0, 2)))
    n = 1_000_000
    x = a.mean + rng.standard_normal((n, 2)) * np.sqrt(a.var)

    def logpdf(g, pts):
        return -0.5 * np.sum(np.log(2 * np.pi * g.var) + (pts - g.mean) ** 2 / g.var, axis=1)

    diffs = logpdf(a, x) - logpdf(b, x)
    stderr = diffs.std(ddof=1) / math.sqrt(n)
    assert abs(kl_diag(a, b) - diffs.mean()) < 3 * stderr


# -- invariants -------------------------------------------------------------

def test_log_el_symmetric_bit_for_bit(rng):
    for _ in range(50):
        d = int(rng.integers(1, 8))
        a = DiagGaussian(rng.normal(size=d), rng.uniform(-2, 2, d))
        b = DiagGaussian(rng.normal(size=d), rng.uniform(-2, 2, d))
        assert log_el_kernel(a, b) == log_el_kernel(b, a)


def test_kl_nonnegative(rng):
    for _ in range(200):
        d = int(rng.integers(1, 6))
        a = DiagGaussian(rng.uniform(-3, 3, d), rng.uniform(-3, 3, d))
        b = DiagGaussian(rng.uniform(-3, 3, d), rng.uniform(-3, 3, d))
        assert kl_diag(a, b) >= -1e-12


def test_kl_asymmetry_witness():
    a = gauss([0.0], [1.0])
    b = gauss([0.0], [9.0])
    assert abs(kl_diag(a, b) - kl_diag(b, a)) > 0.1


def test_translation_invariance(rng):
    for _ in range(20):
        d = int(rng.integers(1, 5))
        mean_a, mean_b = rng.normal(size=d), rng.normal(size=d)
        lv_a, lv_b = rng.uniform(-1, 1, d), rng.uniform(-1, 1, d)
        shift = rng.uniform(-50, 50)
        a0, b0 = DiagGaussian(mean_a, lv_a), DiagGaussian(mean_b, lv_b)
        a1, b1 = DiagGaussian(mean_a + shift, lv_a), DiagGaussian(mean_b + shift, lv_b)
        assert log_el_kernel(a1, b1) == pytest.approx(log_el_kernel(a0, b0), abs=1e-9)
        assert kl_diag(a1, b1) == pytest.approx(kl_diag(a0, b0), abs=1e-9)
        assert entropy(a1) == entropy(a0)


# -- validation -------------------------------------------------------------

def test_dimension_mismatch_rejected():
    a = gauss([0.0], [1.0])
    b = gauss([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(UsageError):
        log_el_kernel(a, b)
    with pytest.raises(UsageError):
        kl_diag(a, b)


def test_invalid_parameters_rejected():
    with pytest.raises(UsageError):
        DiagGaussian(np.array([np.nan]), np.array([0.0]))
    with pytest.raises(UsageError):
        DiagGaussian(np.array([0.0]), np.array([np.inf]))
    with pytest.raises(UsageError):
        DiagGaussian(np.array([0.0, 1.0]), np.array([0.0]))
    with pytest.raises(UsageError):
        DiagGaussian(np.zeros((2, 2)), np.zeros(2))
