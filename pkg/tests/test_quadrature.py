import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lfuav.quadrature import (
    GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODES, QuadratureConfig, integrate,
)


def test_rule_constants():
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    np.testing.assert_allclose(NODES, -NODES[::-1], atol=0)
    # Kronrod rule is exact to degree 22, the embedded Gauss rule to degree 13
    for k in range(23):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert np.dot(KRONROD_WEIGHTS, NODES ** k) == pytest.approx(exact, abs=1e-14)
        if k <= 13:
            assert np.dot(GAUSS_WEIGHTS, NODES ** k) == pytest.approx(exact, abs=1e-14)


def test_polynomial_exact_in_one_panel():
    r = integrate(lambda x: 3 * x ** 5 - x ** 2 + 1, -1.0, 2.0)
    assert r.value == pytest.approx(3 * (64 - 1) / 6 - (8 + 1) / 3 + 3, abs=1e-13)
    assert r.intervals == 1 and r.converged


@pytest.mark.parametrize("f,a,b,exact", [
    (np.sqrt, 0.0, 1.0, 2.0 / 3.0),
    (lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, 2.0),
    (lambda x: np.abs(x - 0.3), 0.0, 1.0, 0.5 * (0.09 + 0.49)),
    (lambda x: np.exp(-x) * np.cos(20 * x), 0.0, 10.0,
     float(mpmath.quad(lambda t: mpmath.e ** -t * mpmath.cos(20 * t), [0, 10]))),
])
def test_hard_integrands(f, a, b, exact):
    r = integrate(f, a, b, abs_tol=1e-11, rel_tol=1e-12)
    assert r.converged
    assert r.value == pytest.approx(exact, abs=1e-10)


@given(st.floats(0.5, 6.0), st.floats(0.1, 20.0), st.floats(0.01, 5.0))
def test_gamma_density_pieces_against_mpmath(m, scale, upper):
    def f(x):
        return np.exp((m - 1) * np.log(x) - x / scale - math.lgamma(m) - m * math.log(scale))

    r = integrate(f, 0.0, upper, breakpoints=[upper / 16, upper / 2], abs_tol=1e-11, rel_tol=1e-11)
    exact = float(mpmath.gammainc(m, 0, upper / scale, regularized=True))
    assert r.value == pytest.approx(exact, abs=5e-10)


def test_batched_equals_individual():
    ks = np.array([1.0, 2.0, 5.0])
    batch = integrate(lambda x: np.sin(ks[:, None] * x[None, :]), 0.0, 3.0)
    for k, v in zip(ks, batch.value):
        assert v == pytest.approx((1 - math.cos(3 * k)) / k, abs=1e-9)


def test_breakpoints_help_kinks():
    f = lambda x: np.abs(x - 1 / 3)  # noqa: E731
    plain = integrate(f, 0.0, 1.0, abs_tol=1e-13, rel_tol=1e-13)
    split = integrate(f, 0.0, 1.0, breakpoints=[1 / 3], abs_tol=1e-13, rel_tol=1e-13)
    assert split.intervals < plain.intervals
    assert split.value == pytest.approx(5 / 18, abs=1e-14)


def test_non_convergence_reported():
    r = integrate(lambda x: np.sin(1.0 / x), 1e-4, 1.0, abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=4)
    assert not r.converged and r.error > 1e-14


def test_degenerate_and_invalid_ranges():
    assert integrate(np.exp, 1.0, 1.0).value == 0.0
    with pytest.raises(ValueError):
        integrate(np.exp, 1.0, 0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0.0)
    assert QuadratureConfig().split(3).abs_tol == pytest.approx(1e-9 / 3)
