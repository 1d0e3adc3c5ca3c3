"""Haar integration in canonical coordinates.

Haar measure is Lebesgue measure in exponential coordinates, so balls are
integrated by sampling a coordinate box that contains them.  Monte Carlo
runs are split into fixed-size chunks, chunk ``i`` drawing from the
counter-based stream (seed, stream, i); partial moments are merged in chunk
order, so results do not depend on how many threads computed them.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import integrate as sp_integrate

from .algebra import StratifiedAlgebra, dilate, multiply
from .metric import HomogeneousGauge, gauge_norm, to_unit_sphere

THREADS_ENV = "CARNOT_BBM_THREADS"


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "monte_carlo"
    samples: int = 1_000_000
    seed: int = 0
    error_target: float | None = None
    chunk_size: int = 1 << 16
    grid_resolution: int = 64

    def __post_init__(self):
        if self.method not in ("monte_carlo", "grid"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if self.samples < 1 or self.chunk_size < 1 or self.grid_resolution < 1:
            raise ValueError("samples, chunk_size and grid_resolution must be positive")

    def with_samples(self, samples: int) -> "IntegratorConfig":
        return replace(self, samples=int(samples))


@dataclass
class Estimate:
    value: float
    stderr: float
    samples: int
    method: str = "monte_carlo"

    def __iter__(self):
        yield self.value
        yield self.stderr


def rng_stream(seed: int, stream: int, chunk: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream, chunk)."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(stream), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def thread_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


@dataclass
class Moments:
    """Sample mean vector and covariance of per-sample statistic vectors."""

    n: int
    mean: np.ndarray
    m2: np.ndarray  # sum of outer products of deviations

    @property
    def cov(self) -> np.ndarray:
        return self.m2 / max(self.n - 1, 1)

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov) / self.n)

    def merge(self, other: "Moments") -> "Moments":
        if self.n == 0:
            return other
        n = self.n + other.n
        d = other.mean - self.mean
        mean = self.mean + d * (other.n / n)
        m2 = self.m2 + other.m2 + np.outer(d, d) * (self.n * other.n / n)
        return Moments(n, mean, m2)

    @classmethod
    def of(cls, vals: np.ndarray) -> "Moments":
        vals = np.asarray(vals, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        mean = vals.mean(axis=0)
        dev = vals - mean
        return cls(len(vals), mean, dev.T @ dev)

    def ratio(self, i: int, j: int) -> tuple[float, float]:
        """mean_i / mean_j with a delta-method standard error."""
        a, b = self.mean[i], self.mean[j]
        c = self.cov / self.n
        r = a / b
        var = (c[i, i] - 2 * r * c[i, j] + r * r * c[j, j]) / (b * b)
        return float(r), float(math.sqrt(max(var, 0.0)))


def run_monte_carlo(sample_fn, cfg: IntegratorConfig, stream: int = 0, target_index: int = 0) -> Moments:
    """Accumulate moments of ``sample_fn(rng, n) -> (n, k)`` over ``cfg.samples`` draws.

    With ``cfg.error_target`` set, chunks are consumed in order until the
    relative standard error of statistic ``target_index`` drops below it.
    """
    n_chunks = -(-cfg.samples // cfg.chunk_size)
    sizes = [min(cfg.chunk_size, cfg.samples - i * cfg.chunk_size) for i in range(n_chunks)]

    def chunk(i):
        vals = np.asarray(sample_fn(rng_stream(cfg.seed, stream, i), sizes[i]), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise IntegrationError("integrand produced non-finite values")
        return Moments.of(vals)

    total = Moments(0, np.zeros(1), np.zeros((1, 1)))
    threads = thread_count()
    batch = threads if threads > 1 else 1
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for start in range(0, n_chunks, batch):
            idx = range(start, min(start + batch, n_chunks))
            parts = list(pool.map(chunk, idx)) if pool else [chunk(i) for i in idx]
            for part in parts:
                total = total.merge(part)
                if cfg.error_target is not None and total.n > 1:
                    m = total.mean[target_index]
                    if m != 0 and total.stderr[target_index] / abs(m) < cfg.error_target:
                        return total
    finally:
        if pool:
            pool.shutdown()
    return total


# ball sampling


@lru_cache(maxsize=64)
def _calibrated_box(gauge: HomogeneousGauge, alg: StratifiedAlgebra) -> np.ndarray:
    rng = rng_stream(0, 999)
    pts = to_unit_sphere(gauge, alg, rng.standard_normal((4096, alg.N)))
    return 1.25 * np.max(np.abs(pts), axis=0)


def unit_box(gauge: HomogeneousGauge, alg: StratifiedAlgebra) -> np.ndarray:
    """Half-widths h_i with B(0, 1) inside the box |x_i| <= h_i.

    Exact for Korányi gauges (|x_(j)| <= a_j^(-j/q) on the unit ball);
    calibrated by sampling the unit sphere with a safety margin otherwise.
    """
    if gauge.kind != "koranyi":
        return _calibrated_box(gauge, alg)
    q = gauge.exponent(alg)
    a = gauge.weights_for(alg)
    w = alg.weights
    h = a[w - 1] ** (-w / q)
    if gauge.horizontal_scales is not None:
        h = h.copy()
        h[: alg.m1] /= np.asarray(gauge.horizontal_scales)
    return h


@dataclass
class BallSampler:
    """Rejection sampler for B(center, radius) = center . B(0, radius)."""

    gauge: HomogeneousGauge
    alg: StratifiedAlgebra
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")
        self.half_widths = unit_box(self.gauge, self.alg) * self.radius ** self.alg.weights

    @property
    def box_volume(self) -> float:
        return float(np.prod(2 * self.half_widths))

    def box_draw(self, rng: np.random.Generator, n: int):
        """Uniform points of the box around the ball and their membership mask."""
        u = (2 * rng.random((n, self.alg.N)) - 1) * self.half_widths
        inside = gauge_norm(self.gauge, self.alg, u) < self.radius
        return multiply(self.alg, self.center, u), inside

    def draw(self, rng: np.random.Generator, n: int, max_rounds: int = 1000) -> np.ndarray:
        """Exactly n uniform points of the ball."""
        out, have = [], 0
        for _ in range(max_rounds):
            pts, inside = self.box_draw(rng, max(64, int(1.3 * (n - have) / 0.3)))
            if not inside.any():
                continue
            out.append(pts[inside])
            have += int(inside.sum())
            if have >= n:
                return np.concatenate(out)[:n]
        raise IntegrationError("ball sampler acceptance is zero; degenerate gauge box")


def _grid_points(sampler: BallSampler, res: int):
    alg = sampler.alg
    if alg.N > 4:
        raise IntegrationError("grid quadrature is limited to N <= 4")
    axes = [(np.arange(res) + 0.5) / res * 2 * h - h for h in sampler.half_widths]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, alg.N)
    cell = sampler.box_volume / res**alg.N
    return mesh, cell


def integrate_ball(cfg: IntegratorConfig, gauge: HomogeneousGauge, alg: StratifiedAlgebra, f,
                   center=None, radius: float = 1.0, stream: int = 0) -> Estimate:
    """Integral of f over B(center, radius) with respect to Haar measure."""
    center = np.zeros(alg.N) if center is None else center
    sampler = BallSampler(gauge, alg, center, radius)
    vol = sampler.box_volume
    if cfg.method == "grid":
        mesh, cell = _grid_points(sampler, cfg.grid_resolution)
        inside = gauge_norm(gauge, alg, mesh) < radius
        vals = np.asarray(f(multiply(alg, sampler.center, mesh[inside])), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise IntegrationError("integrand produced non-finite values")
        return Estimate(float(vals.sum() * cell), 0.0, len(mesh), f"grid:{cfg.grid_resolution}")

    def sample(rng, n):
        pts, inside = sampler.box_draw(rng, n)
        vals = np.zeros(n)
        if inside.any():
            vals[inside] = f(pts[inside])
        return vol * vals

    mom = run_monte_carlo(sample, cfg, stream)
    return Estimate(float(mom.mean[0]), float(mom.stderr[0]), mom.n)


_CB_CACHE: dict = {}


def ball_volume_constant(cfg: IntegratorConfig, gauge: HomogeneousGauge, alg: StratifiedAlgebra) -> Estimate:
    """c_B = |B(0, 1)|, cached per (gauge, group, config)."""
    key = (gauge, alg.to_json(), cfg)
    if key not in _CB_CACHE:
        est = integrate_ball(cfg, gauge, alg, lambda x: np.ones(len(x)), stream=1)
        if est.value <= 0:
            raise IntegrationError("zero acceptance: ball volume estimate vanished")
        _CB_CACHE[key] = est
    return _CB_CACHE[key]


def folland_radial(cfg: IntegratorConfig, gauge: HomogeneousGauge, alg: StratifiedAlgebra, g,
                   R: float, r_min: float = 0.0, c_B: float | None = None) -> float:
    """Radial reduction Q c_B int_{r_min}^R g(r) r^(Q-1) dr of int_{r_min<||x||<R} g(||x||) dx."""
    if c_B is None:
        c_B = ball_volume_constant(cfg, gauge, alg).value
    Q = alg.Q
    with warnings.catch_warnings():
        warnings.simplefilter("error", sp_integrate.IntegrationWarning)
        try:
            val, err = sp_integrate.quad(lambda r: g(r) * r ** (Q - 1), r_min, R, limit=500,
                                         epsabs=1e-13, epsrel=1e-11)
        except sp_integrate.IntegrationWarning as exc:
            raise IntegrationError(f"radial integral did not converge: {exc}") from None
    if not math.isfinite(val):
        raise IntegrationError("radial integral diverged")
    return Q * c_B * val


def dilation_scaled_integral(cfg, gauge, alg, f, lam: float, radius: float = 1.0) -> Estimate:
    """int_{B(0, radius)} f(delta_lam x) dx, for checking the lam^-Q scaling of Haar measure."""
    return integrate_ball(cfg, gauge, alg, lambda x: f(dilate(alg, lam, x)), radius=radius, stream=2)
