"""Poincaré inequalities on H^1, from one dimension up to the group.

    python3 notebooks/poincare_demo.py

1. The one-dimensional weighted inequality on random piecewise-linear data.
2. The threshold n0 past which the rescaled interval inequality kicks in.
3. The ball inequality and its implied constant under rescaling of the ball.
4. The fractional inequality: (1 - s) times the Gagliardo seminorm stays bounded.
"""
import numpy as np

from carnot_bbm import algebra, fixtures, metric
from carnot_bbm.integrate import IntegratorConfig, rng_stream
from carnot_bbm.mollify import make_family
from carnot_bbm.poincare import (OneDimSample, RadialWeight, ball_poincare, fractional_poincare,
                                 one_dim_inequality, threshold_n0)
from carnot_bbm.sobolev import dilate_field, make_field

rng = rng_stream(0, 0)
print("one-dimensional inequality, lhs <= bound")
for w in (RadialWeight("box", 1.0), RadialWeight("linear", 1.0), RadialWeight("power", 1.0, -0.5)):
    t = np.sort(np.concatenate([[-0.5, 0.5], rng.uniform(-0.5, 0.5, 6)]))
    rep = one_dim_inequality(OneDimSample(t, np.cumsum(rng.standard_normal(8)), 2.0, w))
    print(f"  {w.kind:>6}: {rep.lhs:.4f} <= {rep.bound:.4f}")

fam = make_family("box", 1, 2.0)
for T in (1.0, 0.5, 0.1):
    print(f"threshold n0 at T = {T}: {threshold_n0(lambda m: float(fam.cdf(T, m)), 0.5)}")

K = metric.koranyi()
H = algebra.heisenberg(1)
cb = fixtures.ball_volume("heisenberg(1)")
C = fixtures.poincare_constant(2, H.Q)
f = make_field("cutoff_x1", H, K)
print(f"\nball inequality on H^1 (C_pQ = {C:.4f})")
for k, R in enumerate((0.5, 1.0, 2.0)):
    rep = ball_poincare(IntegratorConfig(samples=100_000, seed=k), K, H, dilate_field(f, 1 / R), 2,
                        RadialWeight("box", 1.0).scaled(1 / R), R, c_B=cb, C_pQ=C)
    print(f"  R = {R}: implied constant {rep.implied_constant:.4f}")

print("\nfractional inequality, bump field")
g = make_field("bump", H, K)
for s in (0.5, 0.7, 0.9, 0.99):
    rep = fractional_poincare(IntegratorConfig(samples=100_000, seed=1), K, H, g, 2, s, 1.0, c_B=cb)
    print(f"  s = {s}: G = {rep.params['gagliardo']:.3f}, (1-s) G = {rep.params['compensated']:.4f}")
