import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carnot_bbm import algebra, metric
from carnot_bbm.integrate import (BallSampler, Estimate, IntegrationError, IntegratorConfig, Moments,
                                  ball_volume_constant, dilation_scaled_integral, folland_radial, integrate_ball,
                                  rng_stream, run_monte_carlo)

from _oracles import H1_BALL_VOLUME, koranyi_ball_volume

K = metric.koranyi()
H = algebra.heisenberg(1)


def test_rng_streams_are_keyed():
    a = rng_stream(1, 2, 3).random(4)
    np.testing.assert_array_equal(a, rng_stream(1, 2, 3).random(4))
    assert not np.allclose(a, rng_stream(1, 2, 4).random(4))
    assert not np.allclose(a, rng_stream(1, 3, 3).random(4))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 40), min_size=1, max_size=6), st.integers(0, 2**31))
def test_moment_merge_matches_pooled(sizes, seed):
    rng = np.random.default_rng(seed)
    chunks = [rng.standard_normal((s, 2)) for s in sizes]
    total = Moments(0, np.zeros(1), np.zeros((1, 1)))
    for c in chunks:
        total = total.merge(Moments.of(c))
    pooled = Moments.of(np.concatenate(chunks))
    assert total.n == pooled.n
    np.testing.assert_allclose(total.mean, pooled.mean, atol=1e-12)
    np.testing.assert_allclose(total.m2, pooled.m2, atol=1e-9)


def test_ratio_delta_method():
    rng = np.random.default_rng(0)
    x = rng.normal(2.0, 0.1, 4000)
    m = Moments.of(np.stack([x, np.ones_like(x)], axis=1))
    r, err = m.ratio(0, 1)
    assert r == pytest.approx(x.mean())
    assert err == pytest.approx(x.std(ddof=1) / math.sqrt(len(x)), rel=1e-9)


@pytest.mark.parametrize("threads", ["1", "3"])
def test_thread_count_does_not_change_results(monkeypatch, threads):
    monkeypatch.setenv("CARNOT_BBM_THREADS", threads)
    cfg = IntegratorConfig(samples=50_000, seed=9, chunk_size=4096)
    est = integrate_ball(cfg, K, H, lambda x: x[:, 0] ** 2)
    monkeypatch.setenv("CARNOT_BBM_THREADS", "1")
    ref = integrate_ball(cfg, K, H, lambda x: x[:, 0] ** 2)
    assert est.value == ref.value and est.stderr == ref.stderr


def test_error_target_stops_early():
    cfg = IntegratorConfig(samples=10**6, seed=1, chunk_size=10_000, error_target=0.01)
    mom = run_monte_carlo(lambda rng, n: 1.0 + rng.standard_normal(n), cfg)
    assert mom.n < 10**6
    assert mom.stderr[0] / mom.mean[0] < 0.01


def test_non_finite_integrand_raises():
    with pytest.raises(IntegrationError):
        integrate_ball(IntegratorConfig(samples=1000), K, H, lambda x: np.full(len(x), np.nan))


@pytest.mark.parametrize("kw", [{"method": "simpson"}, {"samples": 0}, {"chunk_size": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        IntegratorConfig(**kw)


def test_sampler_points_inside_ball():
    c = np.array([0.5, -0.2, 0.3])
    s = BallSampler(K, H, c, 0.7)
    pts = s.draw(np.random.default_rng(0), 3000)
    assert len(pts) == 3000
    assert np.all(metric.gauge_distance(K, H, pts, c) < 0.7)


@pytest.mark.parametrize("name", ["abelian(2)", "heisenberg(1)", "heisenberg(2)", "engel"])
def test_ball_volume_against_closed_form(name):
    a = algebra.builtin_group(name)
    est = ball_volume_constant(IntegratorConfig(samples=400_000, seed=3), K, a)
    assert abs(est.value - koranyi_ball_volume(a.layer_dims)) < 4 * est.stderr


def test_grid_method_converges_to_volume():
    a = algebra.abelian(2)
    est = integrate_ball(IntegratorConfig(method="grid", grid_resolution=400), K, a, lambda x: np.ones(len(x)))
    assert est.method == "grid:400"
    assert est.value == pytest.approx(math.pi, rel=2e-3)


def test_left_invariance_of_haar_measure():
    # the integral over a translated ball equals the integral of the translated integrand
    f = lambda x: np.exp(-np.sum(x**2, axis=1))
    c = np.array([0.4, 0.1, -0.3])
    cfg = IntegratorConfig(samples=200_000, seed=4)
    a = integrate_ball(cfg, K, H, f, center=c)
    b = integrate_ball(cfg, K, H, lambda x: f(algebra.multiply(H, c, x)))
    assert a.value == pytest.approx(b.value, rel=1e-12)


def test_dilation_scaling():
    f = lambda x: np.ones(len(x))
    cfg = IntegratorConfig(samples=200_000, seed=5)
    # int_{B(0,2)} f(delta_(1/2) x) dx = 2^Q |B(0, 1)|
    est = dilation_scaled_integral(cfg, K, H, f, 0.5, radius=2.0)
    assert abs(est.value - 2**H.Q * H1_BALL_VOLUME) < 4 * est.stderr


@pytest.mark.parametrize("g", [lambda r: np.ones_like(r), lambda r: r**2, lambda r: np.exp(-r)])
def test_folland_radial_with_exact_c_B(g):
    cfg = IntegratorConfig(samples=300_000, seed=6)
    direct = integrate_ball(cfg, K, H, lambda x: g(metric.gauge_norm(K, H, x)))
    radial = folland_radial(cfg, K, H, g, 1.0, c_B=H1_BALL_VOLUME)
    assert abs(direct.value - radial) < 4 * direct.stderr


def test_folland_radial_divergence_reported():
    with pytest.raises(IntegrationError):
        folland_radial(IntegratorConfig(), K, H, lambda r: r ** -4.5, 1.0, c_B=1.0)


def test_estimate_unpacks():
    v, e = Estimate(1.0, 0.1, 10)
    assert (v, e) == (1.0, 0.1)
