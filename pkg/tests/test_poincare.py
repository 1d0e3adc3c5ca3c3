import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from carnot_bbm import algebra, fixtures, metric
from carnot_bbm.integrate import Estimate, IntegratorConfig
from carnot_bbm.mollify import make_family
from carnot_bbm.poincare import (MollifierWeight, OneDimSample, PoincareError, RadialWeight, ball_poincare,
                                 fractional_poincare, fractional_weight, g_function, one_dim_inequality,
                                 oscillation, poincare_ponce, pp_double_integral, scaled_interval_inequality,
                                 sigma_rescaled_inequality, threshold_n0)
from carnot_bbm.sobolev import dilate_field, make_field

from _oracles import box_mass_1d, box_threshold_1d, one_dim_linear_g, one_dim_linear_lhs

K = metric.koranyi()
H = algebra.heisenberg(1)
WEIGHTS = [RadialWeight("box", 1.0), RadialWeight("linear", 1.0), RadialWeight("power", 1.0, -0.5),
           RadialWeight("box", 0.3)]


def random_sample(seed, knots=12, p=2.0, weight=None):
    rng = np.random.default_rng(seed)
    t = np.sort(np.concatenate([[-0.5, 0.5], rng.uniform(-0.5, 0.5, knots - 2)]))
    return OneDimSample(t, np.cumsum(rng.standard_normal(knots)), p, weight or RadialWeight())


# weights


@pytest.mark.parametrize("w", WEIGHTS)
def test_weight_cumulative_matches_quad(w):
    for x in (0.1, 0.29, 0.7, 1.5):
        ref = integrate.quad(lambda t: float(w(t)), 0, x, points=[w.scale] if w.scale < x else None)[0]
        assert w.cumulative(x) == pytest.approx(ref, rel=1e-7)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(WEIGHTS), st.floats(0.01, 0.99), st.floats(0.1, 3.0))
def test_weight_ppf_inverts_cumulative(w, u, top):
    x = float(w.ppf(u, top))
    assert w.cumulative(x) == pytest.approx(u * w.cumulative(top), rel=1e-9, abs=1e-12)


def test_weight_scaling():
    w = RadialWeight("linear", 1.0)
    np.testing.assert_allclose(w.scaled(2.0)(np.array([0.1, 0.3])), w(np.array([0.2, 0.6])))


@pytest.mark.parametrize("kw", [{"kind": "gauss"}, {"scale": 0.0}, {"kind": "power", "exponent": 0.5},
                                {"kind": "power", "exponent": -1.0}])
def test_invalid_weights(kw):
    with pytest.raises(PoincareError):
        RadialWeight(**kw)


# one dimension


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_linear_function_hand_values(p):
    s = OneDimSample(np.array([-0.5, 0.5]), np.array([-0.5, 0.5]), p, RadialWeight("box", 1.0))
    assert s.oscillation() == pytest.approx(one_dim_linear_lhs(p), rel=1e-12)
    # |t - s|^p / |t - s|^p = 1 on the unit square
    assert s.double_integral() == pytest.approx(1.0, rel=1e-10)
    tau = np.array([0.1, 0.5, 0.9])
    np.testing.assert_allclose(g_function(s, tau), one_dim_linear_g(tau), rtol=1e-12)


def test_linear_function_p1_case():
    rep = one_dim_inequality(OneDimSample(np.array([-0.5, 0.5]), np.array([-0.5, 0.5]), 1.0))
    assert rep.lhs == pytest.approx(0.25)
    assert rep.rhs == pytest.approx(1.0)
    assert rep.bound_constant == pytest.approx(2.0)
    assert rep.holds


def test_constant_function():
    s = OneDimSample(np.linspace(-0.5, 0.5, 5), np.full(5, 2.0), 2.0)
    rep = one_dim_inequality(s)
    assert rep.lhs == 0 and rep.rhs == 0 and rep.holds
    np.testing.assert_array_equal(g_function(s, np.array([0.2, 0.7])), 0.0)


@pytest.mark.parametrize("method", ["gauss", "quad"])
def test_double_integral_against_brute_force(method):
    s = random_sample(3, knots=6, weight=RadialWeight("linear", 1.0))
    f = lambda t, u: abs(s(t) - s(u)) ** 2 / abs(t - u) ** 2 * float(s.weight(abs(t - u))) if t != u else 0.0
    ref = integrate.dblquad(lambda u, t: f(t, u), -0.5, 0.5, -0.5, 0.5, epsabs=1e-10, epsrel=1e-8)[0]
    assert s.double_integral(method=method) == pytest.approx(ref, rel=1e-5)


def test_gauss_and_quad_agree_with_singular_weight():
    s = random_sample(4, weight=RadialWeight("power", 1.0, -0.7))
    assert s.double_integral(method="gauss") == pytest.approx(s.double_integral(method="quad"), rel=1e-6)


def test_lag_integral_linear():
    s = OneDimSample(np.array([0.0, 1.0]), np.array([0.0, 2.0]), 2.0)
    # |2 tau|^2 over a range of length 1 - tau
    assert s.lag_integral(0.25) == pytest.approx(4 * 0.0625 * 0.75)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("w", WEIGHTS[:3])
def test_one_dim_inequality_random(seed, w):
    rep = one_dim_inequality(random_sample(seed, p=1.0 + seed % 3, weight=w))
    assert rep.holds
    assert rep.implied_constant <= rep.bound_constant * (1 + 1e-7)


@pytest.mark.parametrize("seed", range(6))
def test_g_halving(seed):
    s = random_sample(seed, p=1.0 + 0.5 * seed)
    tau = np.linspace(0.002, 0.998, 400)
    assert np.all(g_function(s, tau) <= g_function(s, tau / 2) * (1 + 1e-6) + 1e-14)


@pytest.mark.parametrize("seed", range(4))
def test_bbm_auxiliary_inequality(seed):
    # int g phi >= (1/2) int g int phi for nonincreasing phi, g halving-monotone
    s = random_sample(seed)
    phi = RadialWeight("linear", 1.0)
    tau = np.linspace(1e-4, 1 - 1e-4, 4001)
    g = g_function(s, tau)
    lhs = np.trapezoid(g * phi(tau), tau)
    rhs = 0.5 * np.trapezoid(g, tau) * np.trapezoid(phi(tau), tau)
    assert lhs >= rhs * (1 - 1e-6)


@pytest.mark.parametrize("sigma", [0.25, 1.0, 3.0])
def test_sigma_rescaled(sigma):
    s = random_sample(5, weight=RadialWeight("linear", 1.0))
    rep = sigma_rescaled_inequality(s, sigma)
    assert rep.holds
    assert rep.bound_constant == pytest.approx(2 * sigma / s.weight.cumulative(sigma))


def test_sigma_rescaled_linear_closed_form():
    s = OneDimSample(np.array([-0.5, 0.5]), np.array([-0.5, 0.5]), 2.0, RadialWeight("box", 1.0))
    # phi(sigma tau) = 1 on [0, 1] for sigma <= 1, so rhs = 1
    assert sigma_rescaled_inequality(s, 0.5).rhs == pytest.approx(1.0)


def test_one_dim_domain_errors():
    s = OneDimSample(np.array([0.0, 2.0]), np.array([0.0, 1.0]), 2.0)
    with pytest.raises(PoincareError):
        one_dim_inequality(s)
    with pytest.raises(PoincareError):
        g_function(random_sample(0), 1.0)
    with pytest.raises(PoincareError):
        sigma_rescaled_inequality(random_sample(0), 0.0)
    with pytest.raises(PoincareError):
        OneDimSample(np.array([0.0, 0.0]), np.array([1.0, 1.0]))


# threshold logic


@pytest.mark.parametrize("T,C", [(1.0, 4.0), (0.1, 4.0), (0.1, 10.0), (0.37, 3.0)])
def test_box_threshold_closed_form(T, C):
    fam = make_family("box", 1, 2.0)
    n0 = threshold_n0(lambda m: float(fam.cdf(T, m)), 2.0 / C)
    assert n0 == box_threshold_1d(T, C)
    assert box_mass_1d(T, n0) > 2 / C >= box_mass_1d(T, n0 - 1) if n0 > 1 else True


def test_threshold_unreachable():
    with pytest.raises(PoincareError):
        threshold_n0(lambda m: 0.1, 0.5, n_max=100)


@pytest.mark.parametrize("n", [7, 8, 20])
def test_scaled_interval_above_threshold(n):
    rng = np.random.default_rng(8)
    t = np.linspace(-1, 1, 15)
    s = OneDimSample(t, np.cumsum(rng.standard_normal(15)), 2.0)
    rep = scaled_interval_inequality(s, 0.2, 0.1, make_family("box", 1, 2.0), n, C=4.0)
    assert rep.threshold["n0"] == 6
    assert rep.holds


def test_scaled_interval_needs_monotone_weight():
    s = OneDimSample(np.linspace(-1, 1, 5), np.arange(5.0), 2.0)
    with pytest.raises(PoincareError):
        scaled_interval_inequality(s, 0.0, 0.5, make_family("box", 4, 1.0), 3)


# group level


@pytest.fixture(scope="module")
def h1():
    return fixtures.ball_volume("heisenberg(1)"), fixtures.poincare_constant(2, 4)


CFG = IntegratorConfig(samples=40_000, seed=21)


def test_constant_field_has_zero_oscillation(h1):
    f = make_field("constant", H, K)
    rep = ball_poincare(CFG, K, H, f, 2, RadialWeight(), 1.0, c_B=h1[0])
    assert rep.lhs == 0 and rep.rhs == 0
    assert rep.implied_constant is None
    assert not rep.hard_failure


def test_oscillation_of_coordinate_closed_form():
    # int_B |x_1|^2 on the H^1 unit ball is pi / 12 (x_1 has mean zero there)
    from carnot_bbm.sobolev import coordinate
    est = oscillation(IntegratorConfig(samples=400_000, seed=2), K, H, coordinate(H, 0), 2, 1.0)
    assert abs(est.value - math.pi / 12) < 4 * est.stderr + 1e-3


@pytest.mark.parametrize("name", ["windowed_gaussian", "cutoff_x1", "bump"])
def test_ball_poincare_finite_constant(h1, name):
    rep = ball_poincare(CFG, K, H, make_field(name, H, K), 2, RadialWeight(), 1.0, c_B=h1[0], C_pQ=h1[1])
    assert rep.lhs > 3 * rep.lhs_stderr
    assert rep.rhs > 0
    assert math.isfinite(rep.implied_constant)
    assert not rep.hard_failure


@pytest.mark.parametrize("R", [0.5, 2.0])
def test_rescaling_is_exact_with_common_random_numbers(h1, R):
    base = make_field("cutoff_x1", H, K)
    ref = ball_poincare(CFG, K, H, base, 2, RadialWeight(), 1.0, c_B=h1[0])
    rep = ball_poincare(CFG, K, H, dilate_field(base, 1 / R), 2, RadialWeight().scaled(1 / R), R, c_B=h1[0])
    assert rep.implied_constant == pytest.approx(ref.implied_constant, rel=1e-9)


def test_pp_double_integral_line_against_lag_quadrature():
    # on R^1 with phi = tau^((1-s)p-1) the double integral is the Gagliardo integral over mu B
    R1 = algebra.abelian(1)
    f = make_field("bump", R1, K)
    s, p, mu = 0.7, 2.0, 3.0
    est = pp_double_integral(IntegratorConfig(samples=400_000, seed=5), K, R1, f, p, fractional_weight(p, s), 1.0,
                             mu=mu, c_B=Estimate(2.0, 0.0, 1))
    x = np.linspace(-mu, mu, 6001)
    fx = f(x[:, None])

    def D(tau):
        return np.trapezoid(np.abs(np.interp(x + tau, x, fx, right=0.0) - fx) ** p * (x + tau <= mu), x)

    ref = 2 * integrate.quad(lambda t: D(t) / t ** (1 + s * p), 0, 2 * mu, limit=200, points=[2.0])[0]
    assert abs(est.value - ref) < 4 * est.stderr + 2e-3 * ref


def test_poincare_ponce_threshold_and_bound(h1):
    cb, C_pQ = h1
    fam = make_family("box", H, cb.value)
    rep = poincare_ponce(CFG, K, H, make_field("cutoff_x1", H, K), 2, fam, 16, 1.0, C_pQ=C_pQ, c_B=cb)
    assert rep.threshold["n0"] == 1
    assert rep.threshold["mass"] == pytest.approx(1.0)
    assert rep.bound_constant == pytest.approx(2 * C_pQ)
    assert rep.holds


def test_poincare_ponce_needs_C_above_C_pQ(h1):
    with pytest.raises(PoincareError):
        poincare_ponce(CFG, K, H, make_field("bump", H, K), 2, make_family("box", H, 1.0), 4, 1.0, C=0.5 * h1[1],
                       C_pQ=h1[1])


def test_fractional_range_checked(h1):
    with pytest.raises(PoincareError):
        fractional_poincare(CFG, K, H, make_field("bump", H, K), 2, 0.4, 1.0, c_B=h1[0])
    with pytest.raises(PoincareError):
        fractional_poincare(CFG, K, H, make_field("bump", H, K), 2, 1.0, 1.0, c_B=h1[0])


def test_fractional_compensation(h1):
    f = make_field("cutoff_x1", H, K)
    reps = [fractional_poincare(CFG, K, H, f, 2, s, 1.0, c_B=h1[0]) for s in (0.5, 0.9, 0.99)]
    comp = [r.params["compensated"] for r in reps]
    raw = [r.params["gagliardo"] for r in reps]
    assert max(comp) / min(comp) < 2
    assert raw[-1] > 5 * raw[0]


def test_fractional_constant_field(h1):
    rep = fractional_poincare(CFG, K, H, make_field("constant", H, K), 2, 0.7, 1.0, c_B=h1[0])
    assert rep.lhs == 0 and rep.params["gagliardo"] == 0


def test_mollifier_weight_matches_family():
    fam = make_family("power_tail", 4, 1.0)
    w = MollifierWeight(fam, 4)
    assert w.nonincreasing
    assert w.cumulative(0.5) == pytest.approx(0.5**0.25)
    assert not MollifierWeight(make_family("box", 4, 1.0), 4).nonincreasing


def test_report_row_flattens():
    rep = one_dim_inequality(random_sample(1))
    row = rep.to_row()
    assert {"lhs", "rhs", "implied_constant", "p"} <= set(row)
