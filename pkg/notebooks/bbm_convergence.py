"""How the nonlocal functional I_n approaches the horizontal Sobolev energy.

    python3 notebooks/bbm_convergence.py

On H^1 with the Korányi gauge, for each mollifier family we print the ratio
I_n / (kappa * ||grad_H f||_p^p) as eps_n = 1/n shrinks.  The ratio stays
below one for every n and climbs to one as n grows.  The last block repeats
the run on the real line, where a deterministic grid replaces Monte Carlo.
"""
from carnot_bbm import algebra, fixtures, metric
from carnot_bbm.integrate import Estimate, IntegratorConfig
from carnot_bbm.mollify import KINDS, make_family
from carnot_bbm.sobolev import convergence_experiment, make_field

K = metric.koranyi()
H = algebra.heisenberg(1)
cb = fixtures.ball_volume("heisenberg(1)").value
kap = fixtures.kappa("heisenberg(1)", 2)
f = make_field("windowed_gaussian", H, K)
cfg = IntegratorConfig(samples=200_000, seed=1)

for kind in KINDS:
    print(f"\n{kind} on H^1, p = 2")
    print(f"{'n':>4} {'I_n':>10} {'ratio':>8} {'+-':>7}")
    for r in convergence_experiment(cfg, K, H, f, 2, make_family(kind, H, cb), [1, 2, 4, 8, 16, 32], kappa_ref=kap):
        print(f"{r.n:>4} {r.value:>10.5f} {r.ratio:>8.4f} {r.ratio_stderr:>7.4f}")

R1 = algebra.abelian(1)
g = make_field("bump", R1, K)
grid = IntegratorConfig(method="grid", grid_resolution=2000)
print("\nsmooth_bump on R^1, p = 2, grid quadrature")
for r in convergence_experiment(grid, K, R1, g, 2, make_family("smooth_bump", R1, 2.0), [1, 4, 16, 64],
                                kappa_ref=Estimate(1.0, 0.0, 0)):
    print(f"{r.n:>4} {r.ratio:.5f}")
