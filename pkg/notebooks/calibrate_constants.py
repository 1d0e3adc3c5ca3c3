"""Freeze the numerical fixtures the package ships with.

Run from the repository root:

    python3 notebooks/calibrate_constants.py

It writes src/carnot_bbm/data/fixtures.json with

* c_B = |B(0, 1)| for the built-in groups (Monte Carlo, 10^7 samples on H^1),
* kappa for H^1 at p = 1, 2,
* the empirical Poincaré constant C_{p,Q}: the largest implied constant
  lhs / rhs of the ball inequality over a suite of fields (two support
  radii each), weights and ball centres.  The theorem only asserts that such a constant exists;
  this script measures one and pins it.
"""
from __future__ import annotations

import json
import pathlib
import time

import numpy as np

from carnot_bbm import algebra, metric
from carnot_bbm.integrate import IntegratorConfig, ball_volume_constant
from carnot_bbm.mollify import make_family
from carnot_bbm.poincare import MollifierWeight, RadialWeight, ball_poincare
from carnot_bbm.sobolev import kappa, make_field

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "carnot_bbm" / "data" / "fixtures.json"
SEED = 20240601


def est(e):
    return {"value": e.value, "stderr": e.stderr, "samples": e.samples, "seed": SEED}


def main():
    gauge = metric.koranyi()
    doc = {"c_B": {}, "kappa": {}, "C_pQ": {}}
    t0 = time.time()

    cbs = {}
    for name, samples in (("heisenberg(1)", 10**7), ("engel", 4 * 10**6), ("heisenberg(2)", 4 * 10**6),
                          ("abelian(2)", 10**6)):
        alg = algebra.builtin_group(name)
        cb = ball_volume_constant(IntegratorConfig(samples=samples, seed=SEED), gauge, alg)
        cbs[name] = cb
        doc["c_B"][name] = est(cb)
        print(f"c_B[{name}] = {cb.value:.6f} +- {cb.stderr:.2g}  ({time.time() - t0:.0f}s)")

    H = algebra.heisenberg(1)
    for p in (1, 2):
        k = kappa(IntegratorConfig(samples=10**7, seed=SEED), gauge, H, p)
        doc["kappa"][f"heisenberg(1),p={p}"] = est(k)
        print(f"kappa[H1, p={p}] = {k.value:.6f} +- {k.stderr:.2g}  ({time.time() - t0:.0f}s)")

    cfg = IntegratorConfig(samples=200_000, seed=SEED)
    for p, name in ((2, "heisenberg(1)"), (1, "heisenberg(1)"), (2, "abelian(2)")):
        alg = algebra.builtin_group(name)
        cb = cbs[name]
        weights = [RadialWeight("box", 1.0), RadialWeight("linear", 1.0), RadialWeight("power", 1.0, -0.5),
                   RadialWeight("box", 0.25)]
        for kind in ("box", "power_tail", "smooth_bump"):
            fam = make_family(kind, alg, cb.value)
            # the ball inequality needs nonincreasing weights; box rho1_n grows when Q > 1
            weights += [w for w in (MollifierWeight(fam, n) for n in (1, 2, 4, 8)) if w.nonincreasing]
        centers = [np.zeros(alg.N), np.r_[0.4, np.zeros(alg.N - 1)]]
        worst, where = 0.0, None
        for field_name in ("windowed_gaussian", "cutoff_x1", "bump"):
            for radius in (1.0, 1.5):
                f = make_field(field_name, alg, gauge, radius=radius)
                for w in weights:
                    for c in centers:
                        rep = ball_poincare(cfg, gauge, alg, f, p, w, 1.0, center=c, c_B=cb)
                        if rep.implied_constant is not None and rep.implied_constant > worst:
                            worst, where = rep.implied_constant, (f.name, w.describe(), c.tolist())
        Q = alg.Q
        doc["C_pQ"][f"p={p},Q={Q}"] = {"value": worst, "argmax": where, "samples": cfg.samples, "seed": SEED,
                                      "group": name, "mu": 8.0, "beta": 1.0}
        print(f"C_pQ[p={p}, Q={Q}] = {worst:.4f} at {where}  ({time.time() - t0:.0f}s)")

    OUT.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
