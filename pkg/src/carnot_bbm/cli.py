"""Command-line experiment runner.

Every subcommand takes an optional JSON config (``--config``) whose keys
mirror the flags; flags override the config.  ``run CONFIG`` dispatches on
the config's ``experiment`` key.  Results go to stdout as JSON, or with
``--out DIR`` to DIR/results.csv (tabular, deterministic) and
DIR/results.json (summary plus a provenance block).

Exit codes: 0 ok, 1 invariant violation, 2 config/schema error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import pathlib
import platform
import sys
import time

import jsonschema
import numpy as np
import scipy

from . import __version__, algebra, fixtures, integrate, metric, mollify, poincare, sobolev

EXIT_OK, EXIT_INVARIANT, EXIT_SCHEMA, EXIT_NUMERICAL = 0, 1, 2, 3

EXPERIMENTS = ("group-info", "group-axioms", "cb-estimate", "kappa", "bbm-converge", "poincare-1d",
               "poincare-ball", "fractional", "selftest")

_num_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_int_list = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "group": {"oneOf": [
            {"type": "string"},
            {"type": "object", "required": ["name", "layer_dims", "structure_constants"]},
        ]},
        "gauge": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["koranyi", "cc"]},
                "layer_weights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "horizontal_scales": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "cc_budget": {"type": "array", "items": {"type": "integer", "minimum": 1},
                              "minItems": 2, "maxItems": 2},
            },
        },
        "field": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": list(sobolev.FIELD_NAMES)},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "scale": {"type": "number", "exclusiveMinimum": 0},
                "value": {"type": "number"},
            },
        },
        "p": {"type": "number", "minimum": 1},
        "mollifier": {"enum": list(mollify.KINDS)},
        "n": _int_list,
        "s": _num_list,
        "R": _num_list,
        "C": {"type": "number", "exclusiveMinimum": 0},
        "T": _num_list,
        "weight": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["box", "linear", "power"]},
                "scale": {"type": "number", "exclusiveMinimum": 0},
                "exponent": {"type": "number"},
            },
        },
        "weights": {"type": "array", "items": {"$ref": "#/properties/weight"}, "minItems": 1},
        "trials": {"type": "integer", "minimum": 1},
        "knots": {"type": "integer", "minimum": 2},
        "directions": {"type": "integer", "minimum": 1},
        "samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "method": {"enum": ["monte_carlo", "grid"]},
        "grid_resolution": {"type": "integer", "minimum": 1},
        "chunk_size": {"type": "integer", "minimum": 1},
        "window": {"type": "number", "exclusiveMinimum": 0},
        "ratio_tolerance": {"type": "number", "exclusiveMinimum": 0},
        "compensation_factor": {"type": "number", "minimum": 1},
        "allow_anisotropic": {"type": "boolean"},
        "mu": {"type": "number", "exclusiveMinimum": 0},
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "center": _num_list,
        "out": {"type": "string"},
    },
}


class ConfigError(ValueError):
    pass


# helpers


def _group(cfg) -> algebra.StratifiedAlgebra:
    g = cfg.get("group", "heisenberg(1)")
    return algebra.builtin_group(g) if isinstance(g, str) else algebra.StratifiedAlgebra.from_dict(g)


def _gauge(cfg) -> metric.HomogeneousGauge:
    g = dict(cfg.get("gauge", {}))
    kw = {"kind": g.get("kind", "koranyi")}
    for key in ("layer_weights", "horizontal_scales", "cc_budget"):
        if key in g:
            kw[key] = tuple(g[key])
    return metric.HomogeneousGauge(**kw)


def _integrator(cfg, default_samples=200_000) -> integrate.IntegratorConfig:
    return integrate.IntegratorConfig(method=cfg.get("method", "monte_carlo"),
                                      samples=int(cfg.get("samples", default_samples)),
                                      seed=int(cfg.get("seed", 0)),
                                      chunk_size=int(cfg.get("chunk_size", 1 << 16)),
                                      grid_resolution=int(cfg.get("grid_resolution", 64)))


def _c_B(cfg, gauge, alg):
    """Frozen fixture for the default gauge when available, otherwise a fresh estimate."""
    if "gauge" not in cfg or cfg["gauge"] == {}:
        try:
            return fixtures.ball_volume(alg.name)
        except KeyError:
            pass
    return integrate.ball_volume_constant(_integrator(cfg, 10**6), gauge, alg)


def _field(cfg, alg, gauge):
    spec = dict(cfg.get("field", {"name": "windowed_gaussian"}))
    return sobolev.make_field(spec.pop("name"), alg, gauge, **spec)


def _weight(spec) -> poincare.RadialWeight:
    return poincare.RadialWeight(spec.get("kind", "box"), spec.get("scale", 1.0), spec.get("exponent", 0.0))


def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    return v


class Result:
    """Rows for the CSV, a JSON summary and named invariant checks."""

    def __init__(self, rows=None, summary=None, checks=None):
        self.rows = rows or []
        self.summary = summary or {}
        self.checks = checks or {}

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


# experiments


def exp_group_info(cfg) -> Result:
    alg = _group(cfg)
    res = exp_group_axioms(cfg, alg)
    summary = {"name": alg.name, "step": alg.step, "layer_dims": list(alg.layer_dims), "N": alg.N, "Q": alg.Q,
               "m1": alg.m1, "weights": alg.weights.tolist(), "group": alg.to_dict()}
    try:
        cb = fixtures.ball_volume(alg.name)
        summary["c_B_fixture"] = {"value": cb.value, "stderr": cb.stderr}
    except KeyError:
        pass
    summary.update(res.summary)
    return Result(res.rows, summary, res.checks)


def exp_group_axioms(cfg, alg=None) -> Result:
    names = [alg] if alg is not None else (
        [_group(cfg)] if "group" in cfg else
        [algebra.builtin_group(n) for n in ("abelian(3)", "heisenberg(1)", "heisenberg(2)", "engel")])
    rng = integrate.rng_stream(int(cfg.get("seed", 0)), 1)
    size = int(cfg.get("samples", 1000))
    rows, checks = [], {}
    for a in names:
        x, y, z = (algebra.random_points(a, rng, size) for _ in range(3))
        lam, mu = np.exp(rng.normal(size=size)), np.exp(rng.normal(size=size))
        errs = {
            "associativity": np.max(np.abs(algebra.multiply(a, algebra.multiply(a, x, y), z)
                                           - algebra.multiply(a, x, algebra.multiply(a, y, z)))),
            "identity": np.max(np.abs(algebra.multiply(a, x, np.zeros(a.N)) - x)),
            "inverse": np.max(np.abs(algebra.multiply(a, x, algebra.inverse(a, x)))),
            "dilation_homomorphism": np.max(np.abs(
                algebra.dilate(a, lam, algebra.multiply(a, x, y))
                - algebra.multiply(a, algebra.dilate(a, lam, x), algebra.dilate(a, lam, y)))),
            "dilation_group": np.max(np.abs(algebra.dilate(a, lam, algebra.dilate(a, mu, x))
                                            - algebra.dilate(a, lam * mu, x))),
        }
        for k, v in errs.items():
            # relative to the size of the points involved
            ok = bool(v < 1e-12 * max(1.0, float(np.max(np.abs(x)) ** a.step * np.max(lam) ** a.step)))
            rows.append({"group": a.name, "law": k, "max_error": float(v), "pass": ok})
            checks[f"{a.name}:{k}"] = ok
    return Result(rows, {"samples": size}, checks)


def exp_cb_estimate(cfg) -> Result:
    alg, gauge = _group(cfg), _gauge(cfg)
    icfg = _integrator(cfg, 10**6)
    cb = integrate.ball_volume_constant(icfg, gauge, alg)
    summary = {"gauge": gauge.to_dict(), "group": alg.name, "Q": alg.Q, "c_B": cb.value, "stderr": cb.stderr,
               "samples": cb.samples, "seed": icfg.seed}
    return Result([summary], summary, {"c_B_positive": cb.value > 0})


def exp_kappa(cfg) -> Result:
    alg, gauge = _group(cfg), _gauge(cfg)
    icfg = _integrator(cfg)
    p = float(cfg.get("p", 2))
    allow = bool(cfg.get("allow_anisotropic", False))
    k = sobolev.kappa(icfg, gauge, alg, p, allow_anisotropic=allow)
    fam = mollify.make_family(cfg.get("mollifier", "box"), alg, _c_B(cfg, gauge, alg).value)
    rng = integrate.rng_stream(icfg.seed, 2)
    V = rng.standard_normal((int(cfg.get("directions", 20)), alg.m1))
    V[0] = np.eye(alg.m1)[0]
    rows, checks = [], {}
    for n in cfg.get("n", [1, 4, 16]):
        mom = sobolev.kappa_n_directions(icfg, gauge, alg, p, fam, n, V, allow)
        worst = direction_spread(mom)
        rows.append({"n": n, "eps": fam.eps(n), "kappa_n_e1": float(mom.mean[0]), "stderr": float(mom.stderr[0]),
                     "kappa_n_mean": float(np.mean(mom.mean)), "max_z": worst, "kappa": k.value,
                     "kappa_stderr": k.stderr, "mass_in_unit_ball": float(fam.cdf(1.0, n))})
        checks[f"direction_independence:n={n}"] = worst < 3.0 or allow
    return Result(rows, {"kappa": k.value, "stderr": k.stderr, "p": p, "group": alg.name}, checks)


def direction_spread(mom) -> float:
    """Largest |kappa_n(v_i) - mean_j kappa_n(v_j)| in units of its paired standard error."""
    k = len(mom.mean)
    cov = mom.cov / mom.n
    worst = 0.0
    for i in range(k):
        g = -np.full(k, 1.0 / k)
        g[i] += 1.0
        sd = math.sqrt(max(g @ cov @ g, 1e-300))
        worst = max(worst, abs(g @ mom.mean) / sd)
    return worst


def exp_bbm_converge(cfg) -> Result:
    alg, gauge = _group(cfg), _gauge(cfg)
    icfg = _integrator(cfg)
    p = float(cfg.get("p", 2))
    f = _field(cfg, alg, gauge)
    fam = mollify.make_family(cfg.get("mollifier", "smooth_bump"), alg, _c_B(cfg, gauge, alg).value)
    try:
        kap = fixtures.kappa(alg.name, p) if "gauge" not in cfg else None
    except KeyError:
        kap = None
    if kap is None:
        kap = sobolev.kappa(_integrator(cfg, 10**6), gauge, alg, p, bool(cfg.get("allow_anisotropic", False)))
    results = sobolev.convergence_experiment(icfg, gauge, alg, f, p, fam, cfg.get("n", [2, 4, 8, 16, 32]),
                                             kappa_ref=kap, window=cfg.get("window"))
    rows, checks = [], {}
    for r in results:
        rows.append({"n": r.n, "eps": r.eps, "I_n": r.value, "stderr": r.stderr, "kappa": r.kappa,
                     "energy": r.energy, "ratio": r.ratio, "ratio_stderr": r.ratio_stderr,
                     "upper_bound_ok": r.upper_bound_holds()})
        checks[f"upper_bound:n={r.n}"] = r.upper_bound_holds()
    last = results[-1]
    if "ratio_tolerance" in cfg and not last.degenerate:
        checks["ratio_at_largest_n"] = abs(last.ratio - 1.0) <= cfg["ratio_tolerance"]
    summary = {"field": f.name, "family": fam.kind, "p": p, "group": alg.name,
               "degenerate": last.degenerate, "final_ratio": last.ratio}
    return Result(rows, summary, checks)


def random_piecewise(rng, knots: int, interval=(-0.5, 0.5)):
    t = np.linspace(*interval, knots)
    return t, np.cumsum(rng.standard_normal(knots)) * rng.uniform(0.1, 3.0)


def exp_poincare_1d(cfg) -> Result:
    p = float(cfg.get("p", 2))
    rng = integrate.rng_stream(int(cfg.get("seed", 0)), 3)
    weights = [_weight(w) for w in cfg.get("weights", [{"kind": "box"}, {"kind": "linear"},
                                                      {"kind": "power", "exponent": -0.5}])]
    rows, checks = [], {}
    for k in range(int(cfg.get("trials", 20))):
        t, v = random_piecewise(rng, int(cfg.get("knots", 17)))
        for w in weights:
            rep = poincare.one_dim_inequality(poincare.OneDimSample(t, v, p, w))
            rows.append({"kind": "lemma", "trial": k, "weight": w.describe(), "lhs": rep.lhs, "rhs": rep.rhs,
                         "bound": rep.bound, "implied_constant": rep.implied_constant, "holds": rep.holds})
            checks[f"lemma:{k}:{w.describe()}"] = bool(rep.holds)
    if "T" in cfg:
        fam = mollify.make_family(cfg.get("mollifier", "box"), 1, 2.0)
        C = float(cfg.get("C", 4.0))
        t, v = random_piecewise(rng, int(cfg.get("knots", 17)), (-1.0, 1.0))
        smp = poincare.OneDimSample(t, v, p)
        for T in cfg["T"]:
            n0 = poincare.threshold_n0(lambda m: float(fam.cdf(T, m)), 2.0 / C)
            for n in cfg.get("n", [n0 + 1, n0 + 2, 2 * n0 + 3]):
                rep = poincare.scaled_interval_inequality(smp, 0.0, T, fam, n, C)
                rows.append({"kind": "threshold", "T": T, "n": n, "n0": n0, "mass": rep.threshold["mass"],
                             "lhs": rep.lhs, "rhs": rep.rhs, "bound": rep.bound,
                             "implied_constant": rep.implied_constant, "holds": rep.holds})
                if n > n0:
                    checks[f"threshold:T={T}:n={n}"] = bool(rep.holds)
    return Result(rows, {"p": p, "trials": int(cfg.get("trials", 20))}, checks)


def exp_poincare_ball(cfg) -> Result:
    alg, gauge = _group(cfg), _gauge(cfg)
    icfg = _integrator(cfg)
    p = float(cfg.get("p", 2))
    base = _field(cfg, alg, gauge)
    cb = _c_B(cfg, gauge, alg)
    phi = _weight(cfg.get("weight", {"kind": "box"}))
    mu, beta = float(cfg.get("mu", poincare.MU_DEFAULT)), float(cfg.get("beta", poincare.BETA_DEFAULT))
    try:
        C_pQ = fixtures.poincare_constant(p, alg.Q)
    except KeyError:
        C_pQ = None
    rows, checks, consts = [], {}, []
    for k, R in enumerate(cfg.get("R", [0.5, 1.0, 2.0])):
        # rescaled problem f o delta_(1/R) on B(0, R) with phi(tau / R); an independent stream per R,
        # since common random numbers would reproduce the R = 1 constant exactly
        f = sobolev.dilate_field(base, 1.0 / R)
        rep = poincare.ball_poincare(dataclasses.replace(icfg, seed=icfg.seed + k), gauge, alg, f, p,
                                     phi.scaled(1.0 / R), R, mu=mu, beta=beta, c_B=cb,
                                     C_pQ=C_pQ)
        rows.append({"R": R, "lhs": rep.lhs, "lhs_stderr": rep.lhs_stderr, "rhs": rep.rhs,
                     "rhs_stderr": rep.rhs_stderr, "implied_constant": rep.implied_constant,
                     "constant_stderr": rep.constant_stderr, "hard_failure": rep.hard_failure})
        checks[f"no_hard_failure:R={R}"] = not rep.hard_failure
        if rep.implied_constant is not None:
            consts.append(rep.implied_constant)
    if cfg.get("mollifier") and C_pQ is not None:
        fam = mollify.make_family(cfg["mollifier"], alg, cb.value)
        C = float(cfg.get("C", 2 * C_pQ))
        for n in cfg.get("n", [4, 8, 16]):
            rep = poincare.poincare_ponce(icfg, gauge, alg, base, p, fam, n, 1.0, C=C, C_pQ=C_pQ, mu=mu, beta=beta,
                                          c_B=cb)
            rows.append({"R": 1.0, "n": n, "n0": rep.threshold["n0"], "mass": rep.threshold["mass"],
                         "lhs": rep.lhs, "lhs_stderr": rep.lhs_stderr, "rhs": rep.rhs, "rhs_stderr": rep.rhs_stderr,
                         "implied_constant": rep.implied_constant, "constant_stderr": rep.constant_stderr,
                         "hard_failure": rep.hard_failure, "holds": rep.holds})
            checks[f"no_hard_failure:n={n}"] = not rep.hard_failure
            if n >= rep.threshold["n0"]:
                checks[f"poincare_ponce:n={n}"] = bool(rep.holds)
    if len(consts) > 1 and min(consts) > 0:
        mid = float(np.median(consts))
        checks["scaling_stability"] = all(abs(k / mid - 1) <= 0.2 for k in consts)
    return Result(rows, {"field": base.name, "p": p, "group": alg.name, "C_pQ": C_pQ}, checks)


def exp_fractional(cfg) -> Result:
    alg, gauge = _group(cfg), _gauge(cfg)
    icfg = _integrator(cfg)
    p = float(cfg.get("p", 2))
    f = _field(cfg, alg, gauge)
    cb = _c_B(cfg, gauge, alg)
    R = float(cfg.get("R", [1.0])[0])
    rows, comp = [], []
    checks = {}
    for s in cfg.get("s", [0.5, 0.7, 0.9, 0.99]):
        rep = poincare.fractional_poincare(icfg, gauge, alg, f, p, s, R, c_B=cb)
        rows.append({"s": s, "R": R, "lhs": rep.lhs, "lhs_stderr": rep.lhs_stderr, "gagliardo": rep.params["gagliardo"],
                     "gagliardo_stderr": rep.params["gagliardo_stderr"], "compensated": rep.params["compensated"],
                     "rhs": rep.rhs, "implied_constant": rep.implied_constant, "hard_failure": rep.hard_failure})
        comp.append(rep.params["compensated"])
        checks[f"no_hard_failure:s={s}"] = not rep.hard_failure
    if not f.is_constant and min(comp) > 0:
        checks["compensation_bounded"] = max(comp) / min(comp) <= float(cfg.get("compensation_factor", 2.0))
    return Result(rows, {"field": f.name, "p": p, "group": alg.name}, checks)


def exp_selftest(cfg) -> Result:
    """Fast end-to-end sanity suite (seconds)."""
    rows, checks = [], {}
    ax = exp_group_axioms({"samples": 200, "seed": cfg.get("seed", 0)})
    checks.update({f"axioms:{k}": v for k, v in ax.checks.items()})
    g = metric.koranyi()
    R2 = algebra.abelian(2)
    icfg = integrate.IntegratorConfig(samples=int(cfg.get("samples", 200_000)), seed=int(cfg.get("seed", 0)))
    cb = integrate.ball_volume_constant(icfg, g, R2)
    rows.append({"check": "c_B(R^2) ~ pi", "value": cb.value, "stderr": cb.stderr})
    checks["disc_area"] = abs(cb.value - math.pi) < 4 * cb.stderr + 1e-3
    k = sobolev.kappa(icfg, g, R2, 2)
    rows.append({"check": "kappa(R^2, p=2) ~ 1/2", "value": k.value, "stderr": k.stderr})
    checks["kappa_disc"] = abs(k.value - 0.5) < 4 * k.stderr + 1e-3
    smp = poincare.OneDimSample(np.array([-0.5, 0.5]), np.array([-0.5, 0.5]), 1.0, poincare.RadialWeight("box", 1.0))
    rep = poincare.one_dim_inequality(smp)
    rows.append({"check": "1-D lemma f(t)=t, p=1", "value": rep.lhs, "stderr": 0.0})
    checks["one_dim_hand_case"] = abs(rep.lhs - 0.25) < 1e-12 and abs(rep.bound - 2.0) < 1e-9
    H = algebra.heisenberg(1)
    path = metric.ballbox_path(H, np.array([0.0, 0.0, 1.0]))
    checks["ballbox_endpoint"] = bool(np.max(np.abs(path.endpoint(H) - [0, 0, 1])) < 1e-9)
    return Result(rows, {"checks": len(checks)}, checks)


RUNNERS = {
    "group-info": exp_group_info,
    "group-axioms": exp_group_axioms,
    "cb-estimate": exp_cb_estimate,
    "kappa": exp_kappa,
    "bbm-converge": exp_bbm_converge,
    "poincare-1d": exp_poincare_1d,
    "poincare-ball": exp_poincare_ball,
    "fractional": exp_fractional,
    "selftest": exp_selftest,
}


# config handling and output


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/" + "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"config error at {where}: {exc.message}") from None


def load_config(path) -> dict:
    try:
        text = pathlib.Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config error at /: top level must be an object")
    return cfg


def provenance(cfg: dict) -> dict:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return {
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "seed": cfg.get("seed", 0),
        "versions": {"carnot_bbm": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def rows_to_csv(rows) -> str:
    if not rows:
        return ""
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in _clean(r).items()})
    return buf.getvalue()


def execute(cfg: dict, out: str | None, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    validate_config(cfg)
    name = cfg.get("experiment")
    if name not in RUNNERS:
        raise ConfigError("config error at /experiment: missing or unknown experiment")
    try:
        res = RUNNERS[name](cfg)
    except (integrate.IntegrationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    failed = sorted(k for k, v in res.checks.items() if not v)
    doc = {"experiment": name, "summary": _clean(res.summary), "checks": {k: bool(v) for k, v in res.checks.items()},
           "passed": not failed, "provenance": provenance(cfg)}
    if out:
        d = pathlib.Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "results.csv").write_text(rows_to_csv(res.rows))
        (d / "results.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"{name}: {'PASS' if not failed else 'FAIL'} ({len(res.rows)} rows) -> {d}", file=stream)
    else:
        doc["rows"] = _clean(res.rows)
        print(json.dumps(doc, indent=2, sort_keys=True), file=stream)
    if failed:
        print("invariant violations: " + ", ".join(failed), file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _add_common(sp):
    sp.add_argument("--config", help="JSON experiment config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--out", help="output directory for results.csv and results.json")
    sp.add_argument("--group")
    sp.add_argument("--p", type=float)
    sp.add_argument("--mollifier", choices=mollify.KINDS)
    sp.add_argument("--n", type=int, nargs="+")
    sp.add_argument("--s", type=float, nargs="+")
    sp.add_argument("--R", type=float, nargs="+")
    sp.add_argument("--field")
    sp.add_argument("--method", choices=["monte_carlo", "grid"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="carnot-bbm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config")
    run.add_argument("--seed", type=int)
    run.add_argument("--samples", type=int)
    run.add_argument("--out")
    for name in EXPERIMENTS:
        _add_common(sub.add_parser(name))
    return ap


def _merge_flags(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    for key in ("seed", "samples", "group", "p", "mollifier", "n", "s", "R", "method", "out"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if getattr(args, "field", None):
        cfg["field"] = {"name": args.field}
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
        else:
            cfg = load_config(args.config) if args.config else {}
            cfg["experiment"] = args.command
        cfg = _merge_flags(cfg, args)
        out = cfg.pop("out", None)
        return execute(cfg, out)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_SCHEMA
    except (algebra.AlgebraError, metric.GaugeError, poincare.PoincareError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
