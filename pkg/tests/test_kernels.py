"""Interference kernels: closed-form anchors, limits, monotonicity, caching."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import erf

from hetnet_ase.kernels import (
    PathLoss,
    clear_kernel_caches,
    kernel_F,
    kernel_F_batch,
    kernel_H,
    kernel_H_batch,
)
from hetnet_ase.numerics import DomainError

PL4 = PathLoss(4.0)


def closed_form_F_shape1_alpha4(x):
    # For y=1, a=4 the inner integrand is 1/(1+u^2):
    # F(x,1) = 1 + sqrt(x) * arctan(sqrt(x)).
    return 1.0 + math.sqrt(x) * math.atan(math.sqrt(x))


def trapezoid_oracle_H1_alpha4(n=2_000_001):
    # H(1) - 1 = integral over [1,1e4] of (1 - exp(-1/u^2)) du plus a u^-2
    # tail bound; cross-checked against sqrt(pi)*erf(1) - 1 + 1/e.
    u = np.geomspace(1.0, 1e4, n)
    return float(np.trapezoid(-np.expm1(-1.0 / u**2), u)) + 1e-4


def test_limits_at_zero_arguments():
    assert kernel_F(0.0, 3.0, PL4) == 1.0
    assert kernel_F(5.0, 0.0, PL4) == 1.0
    assert kernel_H(0.0, PL4) == 1.0


def test_F_closed_form_anchor():
    assert_allclose(kernel_F(1.0, 1.0, PL4), 1.0 + math.pi / 4.0, rtol=1e-10)
    for x in [1e-6, 0.03, 0.7, 4.0, 250.0, 1e8]:
        assert_allclose(kernel_F(x, 1.0, PL4), closed_form_F_shape1_alpha4(x), rtol=1e-9)


def test_H_trapezoid_and_closed_form_anchor():
    closed = math.sqrt(math.pi) * erf(1.0) - 1.0 + math.exp(-1.0)
    assert_allclose(kernel_H(1.0, PL4), 1.0 + closed, rtol=1e-10)
    assert_allclose(trapezoid_oracle_H1_alpha4(), closed, rtol=1e-6)


def test_H_strictly_increasing():
    xs = np.logspace(-3, 3, 25)
    vals = [kernel_H(float(x), PL4) for x in xs]
    assert kernel_H(2.0, PL4) > kernel_H(1.0, PL4)
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(v >= 1.0 for v in vals)


def test_F_nondecreasing_in_x_and_y():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = float(rng.uniform(0.0, 20.0))
        y = float(rng.uniform(0.0, 12.0))
        dx = float(rng.uniform(0.1, 5.0))
        dy = float(rng.uniform(0.1, 5.0))
        base = kernel_F(x, y, PL4)
        assert base >= 1.0
        assert kernel_F(x + dx, y, PL4) >= base
        assert kernel_F(x, y + dy, PL4) >= base


def test_F_accepts_fractional_shape():
    # relaxation code evaluates non-integer Gamma shapes
    lo = kernel_F(2.0, 2.0, PL4)
    mid = kernel_F(2.0, 2.5, PL4)
    hi = kernel_F(2.0, 3.0, PL4)
    assert lo < mid < hi


def test_continuity_in_x():
    for x in [0.0, 0.4, 3.0, 90.0]:
        ref = kernel_F(x, 2.0, PL4)
        for delta in [1e-3, 1e-5, 1e-7]:
            assert abs(kernel_F(x + delta, 2.0, PL4) - ref) < 50.0 * math.sqrt(delta) + 1e-6


@pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0, 6.0])
def test_other_exponents_stay_finite_and_ordered(alpha):
    pl = PathLoss(alpha)
    a = kernel_F(1.0, 2.0, pl)
    b = kernel_F(10.0, 2.0, pl)
    assert 1.0 < a < b < math.inf
    assert 1.0 < kernel_H(1.0, pl) < kernel_H(10.0, pl) < math.inf


def test_batch_matches_scalar():
    xs = np.logspace(-5, 5, 41)
    clear_kernel_caches()
    fb = kernel_F_batch(xs, 3.0, PL4)
    hb = kernel_H_batch(xs, PL4)
    clear_kernel_caches()
    fs = np.array([kernel_F(float(x), 3.0, PL4) for x in xs])
    hs = np.array([kernel_H(float(x), PL4) for x in xs])
    assert_allclose(fb, fs, rtol=1e-9)
    assert_allclose(hb, hs, rtol=1e-9)


def test_cache_is_semantically_invisible():
    clear_kernel_caches()
    cold = kernel_F(3.7, 4.0, PL4)
    warm = kernel_F(3.7, 4.0, PL4)
    assert cold == warm
    clear_kernel_caches()
    again = kernel_F(3.7, 4.0, PL4)
    assert again == cold


def test_invalid_inputs_rejected():
    with pytest.raises(DomainError):
        PathLoss(2.0)
    with pytest.raises(DomainError):
        PathLoss(float("nan"))
    with pytest.raises(DomainError):
        kernel_F(-1.0, 2.0, PL4)
    with pytest.raises(DomainError):
        kernel_F(1.0, -2.0, PL4)
    with pytest.raises(DomainError):
        kernel_F(float("inf"), 2.0, PL4)
    with pytest.raises(DomainError):
        kernel_H(-0.5, PL4)
    with pytest.raises(DomainError):
        kernel_H(float("nan"), PL4)
