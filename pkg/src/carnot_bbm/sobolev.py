"""Test fields, horizontal gradients, the constants kappa_n and kappa, and the
nonlocal functional

    I_n(f) = int int |f(y) - f(x)|^p / ||x^-1 y||^p rho_n(||x^-1 y||) dx dy.

With h = x^-1 y the inner variable is drawn from the mollifier itself
(h = delta_r(sigma), r ~ rho1_n, sigma uniform on the unit gauge sphere in
the cone-measure sense), so the estimator carries no 1/||h||^p singularity.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .algebra import StratifiedAlgebra, dilate, horizontal_frame, multiply
from .integrate import (BallSampler, Estimate, IntegrationError, IntegratorConfig, Moments,
                        run_monte_carlo, unit_box)
from .metric import GaugeError, HomogeneousGauge, estimate_quasi_triangle_alpha, gauge_norm, gauge_norm_gradient
from .mollify import MollifierFamily

LEAKAGE_FRACTION = 0.98


class WindowLeakageError(IntegrationError):
    """The sampling window does not contain every contributing point."""


# scalar fields


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real function on G in canonical coordinates.

    ``grad`` is the Euclidean gradient in canonical coordinates; the horizontal
    gradient is obtained by contracting it with the horizontal frame.
    ``support_radius`` is a gauge radius outside which f vanishes (None when
    f only decays).
    """

    name: str
    alg: StratifiedAlgebra
    f: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    support_radius: float | None = None
    smoothness: str = "C1G"

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    @property
    def is_constant(self) -> bool:
        return self.name.startswith("constant")

    def horizontal_gradient(self, x) -> np.ndarray:
        if self.grad is None:
            return horizontal_gradient(self, self.alg, x).components
        x = np.asarray(x, dtype=float)
        return np.einsum("...n,...nj->...j", self.grad(x), horizontal_frame(self.alg, x))


@dataclass
class HorizontalGradient:
    components: np.ndarray

    @property
    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.components, axis=-1)


def _s(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 0
    out[m] = np.exp(-1.0 / t[m])
    return out


def smooth_cutoff(u):
    """C-infinity cutoff: 1 for u <= 1/2, 0 for u >= 1."""
    a, b = _s(1.0 - u), _s(np.asarray(u) - 0.5)
    return a / (a + b)


def smooth_cutoff_derivative(u):
    u = np.asarray(u, dtype=float)
    a, b = _s(1.0 - u), _s(u - 0.5)
    with np.errstate(divide="ignore", invalid="ignore"):
        da = np.where(a > 0, -a / (1.0 - u) ** 2, 0.0)
        db = np.where(b > 0, b / (u - 0.5) ** 2, 0.0)
    return (da * b - a * db) / (a + b) ** 2


def _bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    out[m] = np.exp(-1.0 / (1.0 - u[m] ** 2))
    return out


def _bump_derivative(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    out[m] = _bump(u[m]) * (-2.0 * u[m] / (1.0 - u[m] ** 2) ** 2)
    return out


def windowed_gaussian(alg, gauge, radius: float = 1.5, scale: float = 1.0) -> ScalarField:
    """exp(-|x|^2 / scale^2) chi(||x|| / radius)."""
    def f(x):
        return np.exp(-np.sum(x * x, axis=-1) / scale**2) * smooth_cutoff(gauge_norm(gauge, alg, x) / radius)

    def grad(x):
        g = np.exp(-np.sum(x * x, axis=-1) / scale**2)
        u = gauge_norm(gauge, alg, x) / radius
        return g[..., None] * (-2.0 * x / scale**2 * smooth_cutoff(u)[..., None]
                               + (smooth_cutoff_derivative(u) / radius)[..., None] * gauge_norm_gradient(gauge, alg, x))

    return ScalarField(f"windowed_gaussian(R={radius:g})", alg, f, grad, radius)


def cutoff_coordinate(alg, gauge, index: int = 0, radius: float = 1.5) -> ScalarField:
    """x_index chi(||x|| / radius)."""
    def f(x):
        return x[..., index] * smooth_cutoff(gauge_norm(gauge, alg, x) / radius)

    def grad(x):
        u = gauge_norm(gauge, alg, x) / radius
        out = (x[..., index] * smooth_cutoff_derivative(u) / radius)[..., None] * gauge_norm_gradient(gauge, alg, x)
        out[..., index] += smooth_cutoff(u)
        return out

    return ScalarField(f"cutoff_x{index + 1}(R={radius:g})", alg, f, grad, radius)


def bump(alg, gauge, radius: float = 1.0) -> ScalarField:
    """psi(||x|| / radius) with psi(u) = exp(-1/(1-u^2)); smooth on abelian groups."""
    def f(x):
        return _bump(gauge_norm(gauge, alg, x) / radius)

    def grad(x):
        u = gauge_norm(gauge, alg, x) / radius
        return (_bump_derivative(u) / radius)[..., None] * gauge_norm_gradient(gauge, alg, x)

    return ScalarField(f"bump(R={radius:g})", alg, f, grad, radius)


def gaussian(alg, scale: float = 1.0) -> ScalarField:
    def f(x):
        return np.exp(-np.sum(x * x, axis=-1) / scale**2)

    def grad(x):
        return -2.0 * x / scale**2 * f(x)[..., None]

    return ScalarField("gaussian", alg, f, grad, None)


def coordinate(alg, index: int) -> ScalarField:
    def grad(x):
        out = np.zeros_like(x)
        out[..., index] = 1.0
        return out

    return ScalarField(f"coordinate(x{index + 1})", alg, lambda x: x[..., index].copy(), grad, None)


def constant(alg, value: float = 1.0, radius: float = 1.0) -> ScalarField:
    """Constant field; support_radius is nominal (differences vanish everywhere)."""
    return ScalarField(f"constant({value:g})", alg, lambda x: np.full(x.shape[:-1], float(value)),
                       lambda x: np.zeros_like(x), radius)


FIELD_NAMES = ("windowed_gaussian", "cutoff_x1", "bump", "gaussian", "constant")


def make_field(name: str, alg, gauge, **kw) -> ScalarField:
    if name == "windowed_gaussian":
        return windowed_gaussian(alg, gauge, **kw)
    if name == "cutoff_x1":
        return cutoff_coordinate(alg, gauge, 0, **kw)
    if name == "bump":
        return bump(alg, gauge, **kw)
    if name == "gaussian":
        return gaussian(alg, **kw)
    if name == "constant":
        return constant(alg, **kw)
    raise ValueError(f"unknown field {name!r}; choose from {FIELD_NAMES}")


def horizontal_gradient(field: ScalarField, alg: StratifiedAlgebra, x, h_step: float = 1e-5) -> HorizontalGradient:
    """X_j f(x) = d/dt f(x . exp(t X_j)) at t = 0, by central differences."""
    x = np.asarray(x, dtype=float)
    comps = []
    for j in range(alg.m1):
        e = np.zeros(alg.N)
        e[j] = h_step
        comps.append((field(multiply(alg, x, e)) - field(multiply(alg, x, -e))) / (2 * h_step))
    out = np.stack(comps, axis=-1)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite horizontal gradient")
    return HorizontalGradient(out)


def pansu_remainder(field: ScalarField, alg: StratifiedAlgebra, x, h) -> np.ndarray:
    """omega_x(h) = |f(x h) - f(x) - <grad_X f(x), h_hat>|."""
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    lin = np.sum(field.horizontal_gradient(x) * h[..., : alg.m1], axis=-1)
    return np.abs(field(multiply(alg, x, h)) - field(x) - lin)


LINEARIZE_BELOW = 1e-7


def difference_quotient(field: ScalarField, alg, x, sigma, r, p: float) -> np.ndarray:
    """|f(x . delta_r sigma) - f(x)|^p / r^p for unit-sphere points sigma.

    Radii below LINEARIZE_BELOW use the first-order limit |<grad_X f(x), sigma_hat>|^p,
    which avoids 0/0 once delta_r sigma underflows.
    """
    r = np.asarray(r, dtype=float)
    out = np.empty(len(r))
    small = r < LINEARIZE_BELOW
    big = ~small
    if big.any():
        h = dilate(alg, r[big], sigma[big])
        out[big] = np.abs(field(multiply(alg, x[big], h)) - field(x[big])) ** p / r[big] ** p
    if small.any():
        out[small] = np.abs(np.sum(field.horizontal_gradient(x[small]) * sigma[small, : alg.m1], axis=-1)) ** p
    return out


# mollifier sampling


def sample_sphere(gauge, alg, rng, size: int) -> np.ndarray:
    """Unit-sphere points distributed by the cone measure (radial projections of uniform ball points)."""
    u = BallSampler(gauge, alg, np.zeros(alg.N), 1.0).draw(rng, size)
    return dilate(alg, 1.0 / gauge_norm(gauge, alg, u), u)


def sample_mollifier_polar(gauge, alg, family: MollifierFamily, n: int, rng, size: int, r_max=None):
    """(sigma, r) with h = delta_r sigma distributed with density rho_n(||h||)."""
    sigma = sample_sphere(gauge, alg, rng, size)
    return sigma, family.sample_radius(rng, n, size, r_max)


def sample_mollifier(gauge, alg, family: MollifierFamily, n: int, rng, size: int, r_max=None) -> np.ndarray:
    """Points h with density rho_n(||h||) (conditioned on ||h|| < r_max if given)."""
    sigma, r = sample_mollifier_polar(gauge, alg, family, n, rng, size, r_max)
    return dilate(alg, r, sigma)


def _require_invariant(gauge, allow_anisotropic):
    if not gauge.rotation_invariant and not allow_anisotropic:
        raise GaugeError("kappa needs a gauge invariant under horizontal rotations")


def kappa_n(cfg: IntegratorConfig, gauge, alg, p: float, family: MollifierFamily, n: int, v=None,
            allow_anisotropic: bool = False) -> Estimate:
    """int_{B(0,1)} |<v, h_hat>|^p / ||h||^p rho_n(||h||) dh for a unit vector v."""
    v = np.eye(alg.m1)[0] if v is None else np.asarray(v, dtype=float)
    mom = kappa_n_directions(cfg, gauge, alg, p, family, n, v[None, :], allow_anisotropic)
    return Estimate(float(mom.mean[0]), float(mom.stderr[0]), mom.n)


def kappa_n_directions(cfg, gauge, alg, p, family, n, V, allow_anisotropic=False) -> Moments:
    """kappa_n for each row of V on common samples; the joint moments give paired errors."""
    _require_invariant(gauge, allow_anisotropic)
    V = np.asarray(V, dtype=float)
    V = V / np.linalg.norm(V, axis=1, keepdims=True)

    def sample(rng, size):
        sigma, r = sample_mollifier_polar(gauge, alg, family, n, rng, size)
        inside = (r < 1.0)[:, None]
        # h_hat / ||h|| = sigma_hat for h = delta_r sigma
        return inside * np.abs(sigma[:, : alg.m1] @ V.T) ** p

    return run_monte_carlo(sample, cfg, stream=20)


def unit_ball_moment(cfg, gauge, alg, p: float) -> Estimate:
    """E|x_1|^p for x uniform in B(0, 1)."""
    sampler = BallSampler(gauge, alg, np.zeros(alg.N), 1.0)

    def sample(rng, size):
        x, inside = sampler.box_draw(rng, size)
        return np.stack([inside * np.abs(x[:, 0]) ** p, inside.astype(float)], axis=1)

    mom = run_monte_carlo(sample, cfg, stream=21)
    val, err = mom.ratio(0, 1)
    return Estimate(val, err, mom.n)


def kappa(cfg: IntegratorConfig, gauge, alg, p: float, allow_anisotropic: bool = False) -> Estimate:
    """kappa = (p + Q)/(Q c_B) int_{B(0,1)} |x_1|^p dx."""
    _require_invariant(gauge, allow_anisotropic)
    m = unit_ball_moment(cfg, gauge, alg, p)
    c = (p + alg.Q) / alg.Q
    return Estimate(c * m.value, c * m.stderr, m.samples)


def kappa_n_factorized(cfg, gauge, alg, p, family: MollifierFamily, n: int) -> Estimate:
    """kappa_n = kappa * int_0^1 rho1_n."""
    k = kappa(cfg, gauge, alg, p)
    mass = float(family.cdf(1.0, n))
    return Estimate(k.value * mass, k.stderr * mass, k.samples)


# the nonlocal functional


@dataclass
class BBMResult:
    n: int
    eps: float
    value: float
    stderr: float
    kappa: float
    kappa_stderr: float
    energy: float
    energy_stderr: float
    excess: float  # I_n - energy, estimated on common samples
    excess_stderr: float
    ratio: float | None
    ratio_stderr: float | None
    samples: int
    method: str = "monte_carlo"
    window: float = 0.0

    @property
    def degenerate(self) -> bool:
        return self.ratio is None

    def upper_bound_holds(self, k: float = 3.0) -> bool:
        return self.excess <= k * self.excess_stderr + 1e-12 * max(1.0, abs(self.energy))

    def to_row(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


@lru_cache(maxsize=32)
def _alpha(gauge: HomogeneousGauge, alg: StratifiedAlgebra) -> float:
    if gauge.quasi_triangle_alpha is not None:
        return float(gauge.quasi_triangle_alpha)
    return estimate_quasi_triangle_alpha(gauge, alg, 20000, np.random.default_rng(7))


def default_window(gauge, alg, support: float, reach: float) -> float:
    """Radius W with |f(xh) - f(x)| = 0 whenever ||x|| >= W, ||h|| <= reach."""
    return 1.05 * _alpha(gauge, alg) * (support + reach)


def _window_for(field, gauge, alg, reach, window):
    if window is not None:
        return float(window)
    if field.support_radius is None:
        raise ValueError(f"field {field.name} has no support radius; pass an explicit window")
    return default_window(gauge, alg, field.support_radius, reach)


def _check_leak(xnorm, contributing, window):
    if np.any(contributing & (xnorm > LEAKAGE_FRACTION * window)):
        raise WindowLeakageError(f"integrand is nonzero near the window boundary (radius {window:g})")


def _finish(n, family, moments_or_sums, kap: Estimate, method, window, samples) -> BBMResult:
    mean, cov = moments_or_sums
    I, E, D = mean
    sI, sE, sD = np.sqrt(np.maximum(np.diag(cov), 0.0))
    if E <= 0:
        ratio = ratio_err = None
    else:
        ratio = I / (kap.value * E)
        # delta method on I / (kappa E); I and E share samples, kappa is independent
        g = np.array([1.0 / I if I > 0 else 0.0, -1.0 / E])
        rel2 = g @ cov[:2, :2] @ g + (kap.stderr / kap.value) ** 2
        ratio_err = abs(ratio) * math.sqrt(max(rel2, 0.0))
        if I == 0:
            ratio_err = sI / (kap.value * E)
    return BBMResult(n, family.eps(n), float(I), float(sI), kap.value, kap.stderr, float(E), float(sE),
                     float(D), float(sD), ratio, ratio_err, samples, method, window)


def bbm_functional(cfg: IntegratorConfig, gauge, alg, field: ScalarField, p: float, family: MollifierFamily,
                   n: int, window: float | None = None, kappa_ref: Estimate | None = None,
                   stream: int = 30) -> BBMResult:
    """Estimate I_n(f) together with int |grad_X f|^p on the same x samples."""
    if p < 1:
        raise ValueError("p must be >= 1")
    window = _window_for(field, gauge, alg, family.support(n), window)
    kap = kappa_ref if kappa_ref is not None else Estimate(float("nan"), 0.0, 0)
    if cfg.method == "grid":
        return _bbm_grid(cfg, gauge, alg, field, p, family, n, window, kap)
    xs = BallSampler(gauge, alg, np.zeros(alg.N), window)
    vol = xs.box_volume

    def sample(rng, size):
        x = (2 * rng.random((size, alg.N)) - 1) * xs.half_widths
        xn = gauge_norm(gauge, alg, x)
        inside = xn < window
        sigma, r = sample_mollifier_polar(gauge, alg, family, n, rng, size)
        diff = difference_quotient(field, alg, x, sigma, r, p)
        _check_leak(xn, inside & (diff > 0), window)
        grad = np.linalg.norm(field.horizontal_gradient(x), axis=-1) ** p
        I = vol * inside * diff
        E = vol * inside * grad
        return np.stack([I, E, I - E], axis=1)

    mom = run_monte_carlo(sample, cfg, stream=stream)
    return _finish(n, family, (mom.mean, mom.cov / mom.n), kap, "monte_carlo", window, mom.n)


def _sphere_quadrature(gauge, alg, res: int):
    """Cone-measure quadrature on the unit sphere: unit-ball grid points projected radially."""
    h = unit_box(gauge, alg)
    axes = [(np.arange(res) + 0.5) / res * 2 * w - w for w in h]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, alg.N)
    pts = pts[gauge_norm(gauge, alg, pts) < 1]
    sig = dilate(alg, 1.0 / gauge_norm(gauge, alg, pts), pts)
    uniq, counts = np.unique(np.round(sig, 12), axis=0, return_counts=True)
    return uniq, counts / counts.sum()


def _bbm_grid(cfg, gauge, alg, field, p, family, n, window, kap) -> BBMResult:
    from .integrate import _grid_points

    res = cfg.grid_resolution
    xs = BallSampler(gauge, alg, np.zeros(alg.N), window)
    x, cell = _grid_points(xs, res)
    xn = gauge_norm(gauge, alg, x)
    x = x[xn < window]
    xn = xn[xn < window]
    radii = family.ppf((np.arange(res) + 0.5) / res, n)
    dirs, wts = _sphere_quadrature(gauge, alg, max(2, min(res, 16)))
    acc = np.zeros(len(x))
    rr = np.empty(len(x))
    for r in radii:
        rr.fill(r)
        for sig, w in zip(dirs, wts):
            d = difference_quotient(field, alg, x, np.broadcast_to(sig, x.shape), rr, p)
            _check_leak(xn, d > 0, window)
            acc += w * d
    I = cell * acc.sum() / len(radii)
    E = cell * np.sum(np.linalg.norm(field.horizontal_gradient(x), axis=-1) ** p)
    zero = np.zeros((3, 3))
    return _finish(n, family, (np.array([I, E, I - E]), zero), kap, f"grid:{res}", window, len(x) * len(radii) * len(dirs))


def sobolev_energy(cfg, gauge, alg, field: ScalarField, p: float, window: float | None = None) -> Estimate:
    """int |grad_X f|^p over the window ball."""
    from .integrate import integrate_ball

    window = _window_for(field, gauge, alg, 0.0, window)
    return integrate_ball(cfg, gauge, alg, lambda x: np.linalg.norm(field.horizontal_gradient(x), axis=-1) ** p,
                          radius=window, stream=31)


def convergence_experiment(cfg, gauge, alg, field: ScalarField, p: float, family: MollifierFamily, n_list,
                           kappa_ref: Estimate | None = None, window: float | None = None) -> list[BBMResult]:
    """BBMResult for each n; ratios I_n / (kappa * energy) should approach 1."""
    if p <= 1:
        raise ValueError("the convergence statement needs p > 1")
    kap = kappa_ref if kappa_ref is not None else kappa(cfg, gauge, alg, p)
    reach = max(family.support(n) for n in n_list)
    window = _window_for(field, gauge, alg, reach, window)
    out = []
    for n in n_list:
        res = bbm_functional(cfg, gauge, alg, field, p, family, n, window, kap)
        if not math.isfinite(res.energy):
            raise IntegrationError("non-finite Sobolev energy")
        out.append(res)
    return out


def dilate_field(field: ScalarField, lam: float) -> ScalarField:
    """x -> f(delta_lam x); support radius scales by 1/lam."""
    alg = field.alg
    w = alg.weights

    def f(x):
        return field(dilate(alg, lam, x))

    grad = None
    if field.grad is not None:
        def grad(x):
            return field.grad(dilate(alg, lam, x)) * lam**w

    S = None if field.support_radius is None else field.support_radius / lam
    return ScalarField(f"{field.name}@delta({lam:g})", alg, f, grad, S, field.smoothness)
