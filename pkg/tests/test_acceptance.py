"""Acceptance suite: the ten end-to-end criteria, each at its stated tolerance.

Every test prints one line ``[PASS|FAIL] criterion k: ...`` before asserting,
so ``pytest -v tests/test_acceptance.py`` doubles as the acceptance report.
Run directly with ``python3 tests/test_acceptance.py``.
"""
import json
import math

import numpy as np
import pytest

from carnot_bbm import algebra, cli, fixtures, metric
from carnot_bbm.integrate import (Estimate, IntegratorConfig, folland_radial, integrate_ball, rng_stream)
from carnot_bbm.mollify import KINDS, make_family
from carnot_bbm.poincare import (OneDimSample, RadialWeight, ball_poincare, fractional_poincare, g_function,
                                 one_dim_inequality, poincare_ponce, scaled_interval_inequality, threshold_n0)
from carnot_bbm.sobolev import bbm_functional, dilate_field, kappa, kappa_n_directions, make_field

from _oracles import R1_BALL_VOLUME, R1_KAPPA, R2_KAPPA_P2, box_mass_1d, box_threshold_1d

K = metric.koranyi()
H = algebra.heisenberg(1)
SMOOTH_FIELDS = ("windowed_gaussian", "cutoff_x1", "bump")


@pytest.fixture
def report(capsys):
    def _report(k, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {k}: {detail}")
        assert ok, detail

    return _report


def test_criterion_01_group_core(report):
    rng = rng_stream(1, 100)
    worst = {}
    for name in ("abelian(3)", "heisenberg(1)", "heisenberg(2)", "engel"):
        a = algebra.builtin_group(name)
        x, y, z = (algebra.random_points(a, rng, 1000) for _ in range(3))
        lam = rng.uniform(0.25, 4.0, 1000)
        m, d = algebra.multiply, algebra.dilate
        worst[name] = max(
            np.max(np.abs(m(a, m(a, x, y), z) - m(a, x, m(a, y, z)))),
            np.max(np.abs(m(a, x, np.zeros(a.N)) - x)),
            np.max(np.abs(m(a, np.zeros(a.N), x) - x)),
            np.max(np.abs(m(a, x, algebra.inverse(a, x)))),
            np.max(np.abs(d(a, lam, m(a, x, y)) - m(a, d(a, lam, x), d(a, lam, y)))),
        )
    ok = all(v < 1e-12 for v in worst.values())
    report(1, ok, "max group-law error " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + " (< 1e-12)")


def test_criterion_02_measure(report):
    cfg = IntegratorConfig(samples=10**6, seed=2)
    one = lambda x: np.ones(len(x))
    lines, ok = [], True
    for name in ("heisenberg(1)", "engel"):
        a = algebra.builtin_group(name)
        b1 = integrate_ball(cfg, K, a, one, radius=1.0, stream=3)
        b2 = integrate_ball(cfg, K, a, one, radius=2.0, stream=4)
        r = b2.value / b1.value
        err = r * math.hypot(b1.stderr / b1.value, b2.stderr / b2.value)
        good = abs(r - 2**a.Q) <= 3 * err
        ok &= good
        lines.append(f"{name} ratio {r:.3f} vs 2^{a.Q}={2**a.Q} (3se={3 * err:.3f})")
    cb = fixtures.ball_volume("heisenberg(1)")
    profiles = {
        "1": lambda r: np.ones_like(r),
        "r^2": lambda r: r**2,
        "exp(-r)": lambda r: np.exp(-r),
        "(1-r)^3": lambda r: (1 - r) ** 3,
        "r^-1/2": lambda r: r**-0.5,
    }
    worst_z = 0.0
    for label, g in profiles.items():
        direct = integrate_ball(cfg, K, H, lambda x: g(metric.gauge_norm(K, H, x)), stream=5)
        radial = folland_radial(cfg, K, H, g, 1.0, c_B=cb.value)
        se = math.hypot(direct.stderr, radial * cb.stderr / cb.value)
        z = abs(direct.value - radial) / se
        worst_z = max(worst_z, z)
        ok &= z <= 3
    lines.append(f"radial reduction vs ball MC on 5 profiles, worst |z|={worst_z:.2f} (<= 3)")
    report(2, ok, "; ".join(lines))


def test_criterion_03_kappa(report):
    R2 = algebra.abelian(2)
    k = kappa(IntegratorConfig(samples=10**7, seed=3), K, R2, 2)
    rel = abs(k.value - R2_KAPPA_P2) / R2_KAPPA_P2
    fam = make_family("smooth_bump", H, fixtures.ball_volume("heisenberg(1)").value)
    V = rng_stream(3, 101).standard_normal((20, 2))
    mom = kappa_n_directions(IntegratorConfig(samples=10**6, seed=3), K, H, 2, fam, 4, V)
    cov = mom.cov / mom.n
    z = []
    for i in range(len(V)):
        g = -np.full(len(V), 1 / len(V))
        g[i] += 1
        z.append(abs(g @ mom.mean) / math.sqrt(g @ cov @ g))
    ok = rel < 0.01 and max(z) <= 3
    report(3, ok, f"kappa(R^2, p=2) = {k.value:.5f} (rel err {rel:.1e} < 1e-2); "
                  f"kappa_n over 20 directions on H^1, max |z| vs direction mean = {max(z):.2f} (<= 3)")


def test_criterion_04_bbm_upper_bound(report):
    cases = [(H, name, fixtures.ball_volume("heisenberg(1)").value) for name in SMOOTH_FIELDS]
    R1 = algebra.abelian(1)
    cases.append((R1, "bump", R1_BALL_VOLUME))
    cfg = IntegratorConfig(samples=20_000, seed=4)
    total, bad = 0, []
    for alg, name, cb in cases:
        f = make_field(name, alg, K)
        for kind in KINDS:
            fam = make_family(kind, alg, cb)
            for n in range(1, 65):
                res = bbm_functional(cfg, K, alg, f, 2, fam, n, kappa_ref=Estimate(1.0, 0.0, 0))
                total += 1
                if not res.upper_bound_holds(3.0):
                    bad.append((alg.name, name, kind, n))
    report(4, not bad, f"I_n <= energy + 3 se on {total} (field, family, n<=64) combinations, "
                       f"{len(bad)} violations {bad[:3]}")


def test_criterion_05_bbm_convergence(report):
    R1 = algebra.abelian(1)
    f1 = make_field("bump", R1, K)
    fam1 = make_family("smooth_bump", R1, R1_BALL_VOLUME)
    grid = bbm_functional(IntegratorConfig(method="grid", grid_resolution=2000), K, R1, f1, 2, fam1, 64,
                          kappa_ref=Estimate(R1_KAPPA, 0.0, 0))
    fH = make_field("windowed_gaussian", H, K)
    famH = make_family("smooth_bump", H, fixtures.ball_volume("heisenberg(1)").value)
    mc = bbm_functional(IntegratorConfig(samples=10**7, seed=5), K, H, fH, 2, famH, 32,
                        kappa_ref=fixtures.kappa("heisenberg(1)", 2))
    ok = 0.98 <= grid.ratio <= 1.02 and 0.95 <= mc.ratio <= 1.05
    report(5, ok, f"R^1 bump eps=1/64 ratio {grid.ratio:.5f} in [0.98, 1.02]; "
                  f"H^1 windowed Gaussian eps=1/32 ratio {mc.ratio:.4f} +- {mc.ratio_stderr:.4f} in [0.95, 1.05]")


def test_criterion_06_one_dim_poincare(report):
    rng = rng_stream(6, 102)
    weights = [RadialWeight("box", 1.0), RadialWeight("linear", 1.0), RadialWeight("power", 1.0, -0.5)]
    violations, halving_bad, trials = 0, 0, 0
    tau = np.linspace(0.001, 0.999, 500)
    for k in range(100):
        m = int(rng.integers(3, 18))
        t = np.sort(np.concatenate([[-0.5, 0.5], rng.uniform(-0.5, 0.5, m - 2)]))
        v = np.cumsum(rng.standard_normal(m)) * rng.uniform(0.1, 3)
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        for w in weights:
            trials += 1
            violations += not one_dim_inequality(OneDimSample(t, v, p, w)).holds
        g = g_function(OneDimSample(t, v, p), tau)
        g2 = g_function(OneDimSample(t, v, p), tau / 2)
        halving_bad += not np.all(g <= g2 * (1 + 1e-6) + 1e-14)
    hand = one_dim_inequality(OneDimSample(np.array([-0.5, 0.5]), np.array([-0.5, 0.5]), 1.0))
    hand_ok = abs(hand.lhs - 0.25) < 1e-12 and abs(hand.bound - 2.0) < 1e-9
    ok = violations == 0 and halving_bad == 0 and hand_ok
    report(6, ok, f"{violations}/{trials} inequality violations, {halving_bad}/100 g-halving failures, "
                  f"f(t)=t p=1: lhs={hand.lhs:g} <= {hand.bound:g}")


def test_criterion_07_threshold(report):
    fam = make_family("box", 1, R1_BALL_VOLUME)
    C = 4.0
    rng = rng_stream(7, 103)
    t = np.linspace(-1, 1, 17)
    sample = OneDimSample(t, np.cumsum(rng.standard_normal(17)), 2.0)
    ok, parts = True, []
    for T in (1.0, 0.1):
        n0 = threshold_n0(lambda m: float(fam.cdf(T, m)), 2 / C)
        expect = box_threshold_1d(T, C)
        ok &= n0 == expect and box_mass_1d(T, n0) > 2 / C
        held = [scaled_interval_inequality(sample, 0.0, T, fam, n, C).holds for n in (n0 + 1, n0 + 2, 2 * n0 + 3)]
        ok &= all(held)
        parts.append(f"T={T:g}: n0={n0} (closed form {expect}), holds for 3 n > n0: {all(held)}")
    report(7, ok, "; ".join(parts))


def test_criterion_08_group_poincare_ponce(report):
    cb = fixtures.ball_volume("heisenberg(1)")
    C_pQ = fixtures.poincare_constant(2, H.Q)
    hard, spreads, runs = 0, {}, 0
    for name in SMOOTH_FIELDS:
        base = make_field(name, H, K)
        consts = []
        for k, R in enumerate((0.5, 1.0, 2.0)):
            cfg = IntegratorConfig(samples=200_000, seed=80 + k)
            rep = ball_poincare(cfg, K, H, dilate_field(base, 1 / R), 2, RadialWeight("box", 1.0).scaled(1 / R), R,
                                c_B=cb, C_pQ=C_pQ)
            hard += rep.hard_failure
            runs += 1
            consts.append(rep.implied_constant)
        spreads[name] = max(consts) / min(consts) - 1
        for kind in KINDS:
            for n in (4, 16, 64):
                rep = poincare_ponce(IntegratorConfig(samples=50_000, seed=88), K, H, base, 2,
                                     make_family(kind, H, cb.value), n, 1.0, C_pQ=C_pQ, c_B=cb)
                hard += rep.hard_failure
                runs += 1
    stable = all(s <= 0.2 for s in spreads.values())
    report(8, hard == 0 and stable,
           f"{hard} hard failures in {runs} runs; implied-constant spread over R in {{1/2,1,2}}: "
           + ", ".join(f"{k}={100 * v:.1f}%" for k, v in spreads.items()) + " (<= 20%)")


def test_criterion_09_fractional(report):
    cb = fixtures.ball_volume("heisenberg(1)")
    cfg = IntegratorConfig(samples=200_000, seed=9)
    ok, parts = True, []
    for name in SMOOTH_FIELDS:
        f = make_field(name, H, K)
        reps = [fractional_poincare(cfg, K, H, f, 2, s, 1.0, c_B=cb) for s in (0.5, 0.7, 0.9, 0.99)]
        comp = [r.params["compensated"] for r in reps]
        raw = [r.params["gagliardo"] for r in reps]
        spread = max(comp) / min(comp)
        blow = raw[-1] / raw[0]
        ok &= spread <= 2 and blow >= 5
        parts.append(f"{name}: (1-s)G spread x{spread:.2f}, G(.99)/G(.5) = {blow:.1f}")
    report(9, ok, "; ".join(parts))


def test_criterion_10_determinism(report, tmp_path):
    configs = {
        "group-axioms": {},
        "group-info": {"group": "engel"},
        "cb-estimate": {"samples": 50_000},
        "kappa": {"samples": 50_000, "n": [2, 8], "directions": 5},
        "bbm-converge": {"samples": 50_000, "n": [2, 8]},
        "poincare-1d": {"trials": 5, "T": [1.0, 0.1]},
        "poincare-ball": {"samples": 20_000, "R": [0.5, 1.0], "mollifier": "box", "n": [4]},
        "fractional": {"samples": 20_000, "s": [0.5, 0.99]},
        "selftest": {},
    }
    differing = []
    for name, extra in configs.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps({"experiment": name, "seed": 10, **extra}))
        outs = []
        for rep in ("a", "b"):
            cli.main(["run", str(path), "--out", str(tmp_path / name / rep)])
            outs.append((tmp_path / name / rep / "results.csv").read_bytes())
        if outs[0] != outs[1] or not outs[0]:
            differing.append(name)
    report(10, not differing, f"{len(configs) - len(differing)}/{len(configs)} CLI experiments byte-identical "
                              f"on rerun {differing or ''}")


if __name__ == "__main__":
    raise SystemExit(pytest.main(["-v", __file__]))
