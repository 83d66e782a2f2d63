import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclane.constants import (
    ParameterError,
    ProblemParams,
    RegimeTag,
    classical_coefficient,
    hardy_exponents,
    in_classification_regime,
    kappa,
    mu_zero,
    normalization_constant,
    regime_classify,
    spectral_constant,
    spectral_constant_integral,
    spectral_sign,
    theta_star,
)


def gamma_closed_form(N, s, tau):
    # independent route through math.gamma
    return (
        2 ** (2 * s)
        * math.gamma((N + tau) / 2)
        * math.gamma((2 * s - tau) / 2)
        / (math.gamma(-tau / 2) * math.gamma((N - 2 * s + tau) / 2))
    )


orders = st.floats(0.05, 0.95)
dims = st.integers(1, 7)


def test_normalization_examples():
    assert normalization_constant(1, 0.5) == pytest.approx(1 / math.pi, rel=1e-14)
    assert normalization_constant(3, 0.5) == pytest.approx(1 / math.pi**2, rel=1e-14)


def test_normalization_rejects_s_one():
    with pytest.raises(ParameterError):
        normalization_constant(3, 1.0)


@pytest.mark.parametrize(
    "N, s, tau, expected",
    [(3, 0.5, -1.0, 2 / math.pi), (3, 0.5, -0.5, 0.5), (2, 0.3, -0.7, None), (5, 0.9, -1.3, None)],
)
def test_spectral_constant_values(N, s, tau, expected):
    oracle = gamma_closed_form(N, s, tau) if expected is None else expected
    assert spectral_constant(N, s, tau) == pytest.approx(oracle, rel=1e-13)


@pytest.mark.parametrize("N, s", [(1, 0.3), (2, 0.5), (3, 0.25), (6, 0.9)])
def test_zeros_are_exact(N, s):
    assert spectral_constant(N, s, 0.0) == 0.0
    assert spectral_constant(N, s, 2 * s - N) == 0.0
    assert spectral_constant_integral(N, s, 0.0) == 0.0


@pytest.mark.parametrize("N, s, tau", [(3, 0.5, -1.0), (3, 0.5, -0.5), (2, 0.3, -1.5), (1, 0.3, -0.2), (5, 0.9, 1.0)])
def test_integral_route_agrees(N, s, tau):
    a = spectral_constant(N, s, tau)
    b = spectral_constant_integral(N, s, tau, tol=1e-8)
    assert abs(a - b) <= 1e-7 * (1 + abs(a))


@given(dims, orders, st.floats(0.01, 0.99))
def test_symmetry(N, s, frac):
    tau = -N + frac * (N + 2 * s)
    a = spectral_constant(N, s, tau)
    b = spectral_constant(N, s, 2 * s - N - tau)
    assert abs(a - b) <= 1e-10 * (1 + abs(a))


@given(dims, orders, st.floats(0.01, 0.99))
def test_sign_pattern(N, s, frac):
    tau = -N + frac * (N + 2 * s)
    value = spectral_constant(N, s, tau)
    z1, z2 = sorted((0.0, 2 * s - N))
    if z1 < tau < z2:
        assert value > 0
        assert spectral_sign(N, s, tau) == 1
    elif tau < z1 or tau > z2:
        assert value < 0
        assert spectral_sign(N, s, tau) == -1


@given(dims, orders, st.floats(0.02, 0.98), st.floats(0.02, 0.98))
def test_concavity_midpoint(N, s, f1, f2):
    lo, hi = -N, 2 * s
    t1, t2 = lo + f1 * (hi - lo), lo + f2 * (hi - lo)
    mid = spectral_constant(N, s, 0.5 * (t1 + t2))
    avg = 0.5 * (spectral_constant(N, s, t1) + spectral_constant(N, s, t2))
    assert mid >= avg - 1e-12 * (1 + abs(avg))


@pytest.mark.parametrize("N, s", [(3, 0.5), (2, 0.25), (4, 0.8)])
def test_mu_zero_is_minus_the_maximum(N, s):
    oracle = -(2 ** (2 * s)) * math.gamma((N + 2 * s) / 4) ** 2 / math.gamma((N - 2 * s) / 4) ** 2
    assert mu_zero(N, s) == pytest.approx(oracle, rel=1e-13)
    taus = np.linspace(-N + 1e-3, 2 * s - 1e-3, 4001)
    assert -mu_zero(N, s) >= np.max(spectral_constant(N, s, taus)) - 1e-13
    assert spectral_constant(N, s, (2 * s - N) / 2) == pytest.approx(-oracle, rel=1e-12)


def test_hardy_examples():
    h = hardy_exponents(3, 0.5, -0.5)
    assert h.tau_plus == pytest.approx(-0.5, abs=1e-12)
    assert h.tau_minus == pytest.approx(-1.5, abs=1e-12)
    h0 = hardy_exponents(3, 0.5, 0.0)
    assert (h0.tau_minus, h0.tau_plus) == (-2.0, 0.0)
    hc = hardy_exponents(3, 0.5, mu_zero(3, 0.5))
    assert hc.tau_minus == hc.tau_plus == -1.0


def test_hardy_rejects_below_mu_zero():
    with pytest.raises(ParameterError):
        hardy_exponents(3, 0.5, mu_zero(3, 0.5) - 0.1)


@settings(max_examples=60)
@given(st.integers(2, 6), orders, st.floats(0.0, 1.0))
def test_hardy_round_trip(N, s, frac):
    m0 = mu_zero(N, s)
    mu = m0 + frac * (20 - m0)
    h = hardy_exponents(N, s, mu)
    assert abs(h.tau_minus + h.tau_plus - (2 * s - N)) <= 1e-10
    for tau in (h.tau_minus, h.tau_plus):
        assert abs(spectral_constant(N, s, tau) + mu) <= 1e-10 * max(1.0, abs(mu))


def test_kappa_examples():
    assert kappa(ProblemParams(3, 0.5, 0.0, 3.0)) == pytest.approx(math.sqrt(0.5), abs=1e-12)


@given(st.integers(2, 6), orders, st.floats(0.0, 1.0), st.floats(0.05, 4.0))
def test_kappa_defining_identity(N, s, theta_frac, dp):
    theta = -2 * s + 0.01 + theta_frac * 2.0
    p = (N + theta) / (N - 2 * s) + dp
    params = ProblemParams(N, s, theta, p)
    beta = (2 * s + theta) / (p - 1)
    assert kappa(params) ** (p - 1) == pytest.approx(spectral_constant(N, s, -beta), rel=1e-12)


def test_kappa_vanishes_at_serrin_threshold():
    N, s, theta = 3, 0.5, 0.0
    ps = (N + theta) / (N - 2 * s)
    values = [kappa(ProblemParams(N, s, theta, ps + d)) for d in (1e-2, 1e-4, 1e-6)]
    assert values[0] > values[1] > values[2] > 0
    assert values[2] < 1e-3


def test_classical_coefficient_examples():
    assert classical_coefficient(3, 0.0, 7.0) == pytest.approx((2 / 9) ** (1 / 6), rel=1e-14)
    assert classical_coefficient(4, 0.0, 5.0) == pytest.approx(0.75**0.25, rel=1e-14)
    assert classical_coefficient(3, 0.0, 3.0) == 0.0


@pytest.mark.parametrize(
    "N, s, theta, p, tag, classified",
    [
        (3, 0.5, 0.0, 3.0, RegimeTag.SOBOLEV_SUPERCRITICAL, True),
        (3, 0.5, 0.0, 1.8, RegimeTag.SOBOLEV_SUBCRITICAL, False),
        (3, 0.5, 0.0, 2.0, RegimeTag.SOBOLEV_CRITICAL, True),
        (3, 0.5, 0.0, 1.2, RegimeTag.SERRIN_SUBCRITICAL, False),
        (3, 0.5, -0.5, 1.4, RegimeTag.SOBOLEV_SUBCRITICAL, True),
    ],
)
def test_regime_examples(N, s, theta, p, tag, classified):
    params = ProblemParams(N, s, theta, p, unrestricted=True)
    assert regime_classify(params).tag is tag
    assert regime_classify(params).tag.value in {
        "SerrinSubcritical",
        "SerrinSupercritical_SobolevSub",
        "SobolevCritical",
        "SobolevSupercritical",
    }
    assert in_classification_regime(params) is classified


def test_theta_star_examples():
    assert theta_star(3, 0.5, 0.0, 3.0) == 2.0
    assert theta_star(3, 0.5, -1.0, 1.5) == 0.0
    for N, s, tt in [(3, 0.5, 0.0), (4, 0.3, 0.7), (2, 0.75, -1.2)]:
        assert theta_star(N, s, tt, (N + 2 * s + tt) / (N - 2 * s)) == pytest.approx(0.0, abs=1e-14)


def test_params_validation():
    with pytest.raises(ParameterError):
        ProblemParams(3, 1.2, 0.0, 3.0)
    with pytest.raises(ParameterError):
        ProblemParams(3, 0.5, -1.5, 3.0)
    with pytest.raises(ParameterError):
        ProblemParams(3, 0.5, 0.0, 1.2)
