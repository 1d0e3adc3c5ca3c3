"""Poincaré inequalities with nonlocal right-hand sides.

One dimension: f is piecewise linear (knots t_k, values v_k), so both
sides of the interval inequality are computed exactly up to a final 1-D
quadrature in the lag tau:

    int_I int_I |f(t) - f(s)|^p / |t - s|^p phi(|t - s|) dt ds
        = 2 int_0^L phi(tau) tau^-p D(tau) dtau,
    D(tau) = int |f(t + tau) - f(t)|^p dt,

where D is evaluated in closed form.

On the group the double integral

    J(phi) = int_{mu B} int_{mu B} |f(y) - f(x)|^p / ||x^-1 y||^(p+Q-1) phi(||x^-1 y||) dx dy

is estimated by sampling x uniformly in mu B and h = x^-1 y radially with
density proportional to phi (the cone-measure factor Q c_B r^(Q-1) cancels
the extra power of ||h||).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate as sp_integrate
from scipy import special

from . import fixtures
from .algebra import dilate, multiply
from .integrate import (BallSampler, Estimate, IntegratorConfig, ball_volume_constant, run_monte_carlo)
from .metric import gauge_norm
from .mollify import MollifierFamily
from .sobolev import ScalarField, _alpha, difference_quotient, sample_sphere

MU_DEFAULT = 8.0
BETA_DEFAULT = 1.0
N_MAX = 10**6


class PoincareError(ValueError):
    pass


# weights


@dataclass(frozen=True)
class RadialWeight:
    """Nonincreasing weight phi on (0, inf).

    box: 1[tau < scale];  linear: (1 - tau/scale)_+;  power: (tau/scale)^exponent, -1 < exponent <= 0.
    """

    kind: str = "box"
    scale: float = 1.0
    exponent: float = 0.0

    def __post_init__(self):
        if self.kind not in ("box", "linear", "power"):
            raise PoincareError(f"unknown weight kind {self.kind!r}")
        if self.scale <= 0:
            raise PoincareError("weight scale must be positive")
        if self.kind == "power" and not -1 < self.exponent <= 0:
            raise PoincareError("power weights need -1 < exponent <= 0 (locally integrable, nonincreasing)")

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        L = self.scale
        if self.kind == "box":
            return np.where((tau >= 0) & (tau < L), 1.0, 0.0)
        if self.kind == "linear":
            return np.clip(1.0 - tau / L, 0.0, None) * (tau >= 0)
        with np.errstate(divide="ignore"):
            return np.where(tau > 0, (tau / L) ** self.exponent, np.inf if self.exponent < 0 else 1.0)

    def cumulative(self, x) -> float:
        """int_0^x phi."""
        x = max(float(x), 0.0)
        L = self.scale
        if self.kind == "box":
            return min(x, L)
        if self.kind == "linear":
            u = min(x, L) / L
            return L * (u - u * u / 2)
        a = self.exponent
        return L * (x / L) ** (a + 1) / (a + 1)

    def ppf(self, u, top: float):
        """Quantiles of the density phi / cumulative(top) on [0, top]."""
        u = np.asarray(u, dtype=float)
        L = self.scale
        if self.kind == "box":
            return u * min(top, L)
        if self.kind == "linear":
            c = self.cumulative(top)
            return L * (1.0 - np.sqrt(np.clip(1.0 - 2.0 * u * c / L, 0.0, None)))
        return top * u ** (1.0 / (self.exponent + 1))

    def scaled(self, c: float) -> "RadialWeight":
        """tau -> phi(c tau)."""
        return RadialWeight(self.kind, self.scale / c, self.exponent)

    @property
    def alg_exponent(self):
        return self.exponent if self.kind == "power" and self.exponent != 0 else None

    @property
    def breaks(self) -> list[float]:
        return [self.scale] if self.kind in ("box", "linear") else []

    @property
    def nonincreasing(self) -> bool:
        return True

    def describe(self) -> str:
        return f"{self.kind}(scale={self.scale:g}" + (f", exponent={self.exponent:g})" if self.kind == "power" else ")")


@dataclass(frozen=True)
class MollifierWeight:
    """phi = rho1_n, the one-dimensional counterpart of a mollifier family."""

    family: MollifierFamily
    n: int

    def __call__(self, tau):
        return self.family.one_dim(tau, self.n)

    def cumulative(self, x) -> float:
        return float(self.family.cdf(x, self.n))

    def ppf(self, u, top: float):
        return self.family.ppf(np.asarray(u) * self.family.cdf(top, self.n), self.n)

    @property
    def alg_exponent(self):
        return 1.0 / self.n - 1.0 if self.family.kind == "power_tail" and self.n > 1 else None

    @property
    def breaks(self) -> list[float]:
        return [self.family.support(self.n)]

    @property
    def nonincreasing(self) -> bool:
        if self.family.kind == "power_tail" or self.family.Q == 1:
            return True
        return False

    def describe(self) -> str:
        return f"rho1_{self.n}[{self.family.kind}]"


# one-dimensional machinery


def _pl_power_integral(x, y, p: float) -> float:
    """Exact int |ell|^p for the piecewise-linear ell through (x_k, y_k)."""
    dx = np.diff(x)
    A, B = np.abs(y[:-1]), np.abs(y[1:])
    cross = y[:-1] * y[1:] < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        same = np.where(np.isclose(A, B, rtol=1e-12, atol=0.0), A**p,
                        (B ** (p + 1) - A ** (p + 1)) / ((p + 1) * (B - A)))
        opp = (A ** (p + 1) + B ** (p + 1)) / ((p + 1) * (A + B))
    val = np.where(cross, opp, same)
    val = np.where((A == 0) & (B == 0), 0.0, val)
    return float(np.sum(dx * val))


@dataclass
class OneDimSample:
    """Piecewise-linear f on [knots[0], knots[-1]] with exponent p and weight phi."""

    knots: np.ndarray
    values: np.ndarray
    p: float = 2.0
    weight: object = field(default_factory=RadialWeight)

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.knots.ndim != 1 or self.knots.shape != self.values.shape or len(self.knots) < 2:
            raise PoincareError("knots and values must be matching 1-D arrays of length >= 2")
        if np.any(np.diff(self.knots) <= 0):
            raise PoincareError("knots must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise PoincareError("values must be finite")
        if self.p < 1:
            raise PoincareError("p must be >= 1")

    @classmethod
    def from_function(cls, f, a: float, b: float, size: int = 4097, **kw) -> "OneDimSample":
        t = np.linspace(a, b, size)
        return cls(t, f(t), **kw)

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def length(self) -> float:
        return float(self.knots[-1] - self.knots[0])

    def __call__(self, t):
        return np.interp(t, self.knots, self.values)

    def restrict(self, a: float, b: float) -> "OneDimSample":
        lo, hi = self.interval
        if a < lo - 1e-12 or b > hi + 1e-12 or b <= a:
            raise PoincareError(f"[{a}, {b}] is not inside the sample interval [{lo}, {hi}]")
        inner = self.knots[(self.knots > a) & (self.knots < b)]
        t = np.concatenate([[a], inner, [b]])
        return OneDimSample(t, self(t), self.p, self.weight)

    def with_weight(self, weight) -> "OneDimSample":
        return OneDimSample(self.knots, self.values, self.p, weight)

    def mean(self) -> float:
        v = self.values
        return float(np.sum(np.diff(self.knots) * (v[:-1] + v[1:])) / (2 * self.length))

    def oscillation(self) -> float:
        """int_I |f - mean_I f|^p."""
        return _pl_power_integral(self.knots, self.values - self.mean(), self.p)

    def lag_integral(self, tau: float) -> float:
        """D(tau) = int_a^(b - tau) |f(t + tau) - f(t)|^p dt."""
        a, b = self.interval
        if tau <= 0:
            return 0.0
        if tau >= b - a:
            return 0.0
        t = self.knots
        pts = np.concatenate([t[t <= b - tau], t[t >= a + tau] - tau, [a, b - tau]])
        pts = np.unique(np.clip(pts, a, b - tau))
        d = self(pts + tau) - self(pts)
        return _pl_power_integral(pts, d, self.p)

    def _lag_ratio(self, tau: float) -> float:
        """D(tau) / tau^p, continued to tau = 0 by int |f'|^p."""
        if tau <= 0:
            slopes = np.diff(self.values) / np.diff(self.knots)
            return float(np.sum(np.diff(self.knots) * np.abs(slopes) ** self.p))
        return self.lag_integral(tau) / tau**self.p

    def _lag_breaks(self, top: float):
        t = self.knots
        diffs = (t[:, None] - t[None, :])[np.triu_indices(len(t), 1)] if len(t) <= 512 else np.array([])
        if len(t) > 512:  # uniform-ish dense grids: kinks sit near multiples of the spacing
            h = np.min(np.diff(t))
            diffs = np.arange(1, int(self.length / h) + 1) * h
        br = np.concatenate([np.abs(diffs), getattr(self.weight, "breaks", [])])
        return _merge_close(np.concatenate([[0.0], br[(br > 0) & (br < top)], [top]]), 1e-9 * top)

    def double_integral(self, weight=None, sigma: float = 1.0, method: str = "gauss", nodes: int = 24) -> float:
        """int_I int_I |f(t) - f(s)|^p / |t - s|^p phi(sigma |t - s|) dt ds.

        The lag axis is cut at every kink of D and of phi; each piece gets a
        Gauss-Legendre rule (Gauss-Jacobi on the first piece when phi has an
        algebraic singularity at 0).  ``method="quad"`` uses adaptive
        quadrature instead, as a slower reference.
        """
        w = self.weight if weight is None else weight
        top = self.length
        pts = self._lag_breaks(top)
        extra = np.array([b / sigma for b in getattr(w, "breaks", [])])
        if extra.size:
            pts = _merge_close(np.concatenate([pts, extra[(extra > 0) & (extra < top)]]), 1e-9 * top)
        a_exp = getattr(w, "alg_exponent", None)
        total = 0.0
        for k, (lo, hi) in enumerate(zip(pts[:-1], pts[1:])):
            singular = k == 0 and a_exp is not None
            if method == "quad":
                total += self._quad_piece(w, sigma, lo, hi, a_exp if singular else None)
                continue
            if singular:
                # phi(sigma tau) = c tau^a on the first piece
                c = float(w(sigma * hi)) / hi**a_exp
                x, wt = special.roots_jacobi(nodes, 0.0, a_exp)
                tau = hi * (x + 1) / 2
                vals = np.array([self._lag_ratio(t) for t in tau])
                total += c * (hi / 2) ** (a_exp + 1) * np.dot(wt, vals)
            else:
                x, wt = np.polynomial.legendre.leggauss(nodes)
                tau = lo + (hi - lo) * (x + 1) / 2
                vals = np.array([self._lag_ratio(t) for t in tau]) * w(sigma * tau)
                total += (hi - lo) / 2 * np.dot(wt, vals)
        return 2.0 * float(total)

    def _quad_piece(self, w, sigma, lo, hi, a_exp):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
            if a_exp is not None:
                c = float(w(sigma * hi)) / hi**a_exp
                return sp_integrate.quad(lambda s: c * self._lag_ratio(s), lo, hi,
                                         weight="alg", wvar=(a_exp, 0), limit=200)[0]
            return sp_integrate.quad(lambda s: float(w(sigma * s)) * self._lag_ratio(s),
                                     lo, hi, limit=200, epsabs=1e-13, epsrel=1e-10)[0]


def _merge_close(pts, tol):
    pts = np.sort(pts)
    keep = np.concatenate([[True], np.diff(pts) > tol])
    out = pts[keep]
    out[-1] = pts[-1]
    return out


def g_function(sample: OneDimSample, tau) -> np.ndarray:
    """g(tau) = tau^-p int_0^(1 - tau) |f(u + tau) - f(u)|^p du for f rescaled to the unit interval."""
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any((taus <= 0) | (taus >= 1)):
        raise PoincareError("g is defined for 0 < tau < 1")
    L = sample.length
    out = np.array([sample.lag_integral(L * s) / L / s**sample.p for s in taus])
    return out if np.ndim(tau) else float(out[0])


@dataclass
class PoincareReport:
    lhs: float
    rhs: float
    implied_constant: float | None
    bound_constant: float | None = None
    holds: bool | None = None
    lhs_stderr: float = 0.0
    rhs_stderr: float = 0.0
    constant_stderr: float = 0.0
    threshold: dict | None = None
    params: dict = field(default_factory=dict)

    @property
    def bound(self) -> float | None:
        """bound_constant * rhs, the right side the inequality promises."""
        return None if self.bound_constant is None else self.bound_constant * self.rhs

    @property
    def hard_failure(self) -> bool:
        """Positive oscillation with a vanishing right side contradicts the inequality."""
        return self.lhs > 3 * self.lhs_stderr and self.lhs > 0 and self.rhs == 0

    def to_row(self) -> dict:
        row = {k: v for k, v in asdict(self).items() if k not in ("threshold", "params")}
        row.update(self.params)
        if self.threshold:
            row.update({f"threshold_{k}": v for k, v in self.threshold.items()})
        return row


def _ratio(lhs, rhs):
    if rhs > 0:
        return lhs / rhs
    return None if lhs == 0 else math.inf


def _check_weight(w):
    if not getattr(w, "nonincreasing", True):
        raise PoincareError(f"weight {w.describe()} is not nonincreasing")


REL_TOL = 1e-7


def one_dim_inequality(sample: OneDimSample) -> PoincareReport:
    """int_I |f - f_I|^p <= 2 / int_0^1 phi * int_I int_I ... on a unit-length interval."""
    if abs(sample.length - 1.0) > 1e-12:
        raise PoincareError("the one-dimensional lemma is stated on an interval of length 1; "
                            "use scaled_interval_inequality")
    w = sample.weight
    _check_weight(w)
    mass = w.cumulative(1.0)
    if mass <= 0:
        raise PoincareError("int_0^1 phi vanishes")
    lhs = sample.oscillation()
    rhs = sample.double_integral()
    K = 2.0 / mass
    return PoincareReport(lhs, rhs, _ratio(lhs, rhs), K, lhs <= K * rhs * (1 + REL_TOL) + 1e-14,
                          params={"p": sample.p, "weight": w.describe()})


def sigma_rescaled_inequality(sample: OneDimSample, sigma: float) -> PoincareReport:
    """Same lemma with weight phi(sigma tau) and prefactor 2 sigma / int_0^sigma phi."""
    if sigma <= 0:
        raise PoincareError("sigma must be positive")
    if abs(sample.length - 1.0) > 1e-12:
        raise PoincareError("the rescaled inequality is stated on an interval of length 1")
    w = sample.weight
    _check_weight(w)
    mass = w.cumulative(sigma)
    if mass <= 0:
        raise PoincareError("int_0^sigma phi vanishes")
    lhs = sample.oscillation()
    rhs = sample.double_integral(sigma=sigma)
    K = 2.0 * sigma / mass
    return PoincareReport(lhs, rhs, _ratio(lhs, rhs), K, lhs <= K * rhs * (1 + REL_TOL) + 1e-14,
                          params={"p": sample.p, "weight": w.describe(), "sigma": sigma})


def threshold_n0(mass_of_n, target: float, n_max: int = N_MAX) -> int:
    """Smallest n >= 1 with mass_of_n(n) > target (masses nondecreasing in n)."""
    if mass_of_n(n_max) <= target:
        raise PoincareError(f"mollifier mass never exceeds {target:g} up to n = {n_max}; C is too small")
    lo, hi = 1, n_max
    if mass_of_n(1) > target:
        return 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mass_of_n(mid) > target:
            hi = mid
        else:
            lo = mid
    return hi


def scaled_interval_inequality(sample: OneDimSample, t0: float, T: float, family: MollifierFamily, n: int,
                               C: float = 4.0) -> PoincareReport:
    """On I(t0, T) = [t0 - T/2, t0 + T/2]: int_I |f - f_I|^p <= C T^p int_I int_I ... rho1_n."""
    if C <= 2:
        raise PoincareError("the interval corollary needs C > 2")
    if T <= 0:
        raise PoincareError("T must be positive")
    w = MollifierWeight(family, n)
    _check_weight(w)
    sub = sample.restrict(t0 - T / 2, t0 + T / 2).with_weight(w)
    n0 = threshold_n0(lambda m: float(family.cdf(T, m)), 2.0 / C)
    lhs = sub.oscillation()
    rhs = sub.double_integral()
    mass = float(family.cdf(T, n))
    holds = lhs <= C * T**sub.p * rhs * (1 + REL_TOL) + 1e-14
    return PoincareReport(lhs, T**sub.p * rhs, _ratio(lhs, T**sub.p * rhs), C, holds,
                          threshold={"n0": n0, "mass": mass, "target": 2.0 / C, "above": n >= n0},
                          params={"p": sub.p, "n": n, "T": T, "t0": t0, "family": family.kind})


# group-level inequalities


def calibrated_constant(p: float, Q: int) -> float:
    """Empirical C_{p,Q} frozen by the calibration script."""
    return fixtures.poincare_constant(p, Q)


def oscillation(cfg, gauge, alg, field: ScalarField, p, R, center=None, stream: int = 40) -> Estimate:
    """int_B |f - f_B|^p over B = B(center, R), f_B estimated in a first pass."""
    center = np.zeros(alg.N) if center is None else np.asarray(center, dtype=float)
    sampler = BallSampler(gauge, alg, center, R)
    vol = sampler.box_volume

    def first(rng, size):
        x, inside = sampler.box_draw(rng, size)
        return np.stack([inside * field(x), inside.astype(float)], axis=1)

    fB = run_monte_carlo(first, cfg, stream).ratio(0, 1)[0]

    def second(rng, size):
        x, inside = sampler.box_draw(rng, size)
        return vol * inside * np.abs(field(x) - fB) ** p

    mom = run_monte_carlo(second, cfg, stream + 1)
    return Estimate(float(mom.mean[0]), float(mom.stderr[0]), mom.n)


def pp_double_integral(cfg, gauge, alg, field: ScalarField, p, weight, R, center=None, mu: float = MU_DEFAULT,
                       c_B: Estimate | None = None, stream: int = 50) -> Estimate:
    """J(phi) over (mu B) x (mu B).

    With a compactly supported field only pairs touching the support ball S
    contribute.  The kernel is symmetric, so
    J = int_{x in S} int_y (1 + 1[y not in S]) ..., and x is drawn from S only.
    """
    center = np.zeros(alg.N) if center is None else np.asarray(center, dtype=float)
    c_B = c_B if c_B is not None else ball_volume_constant(cfg, gauge, alg)
    rho = mu * R
    r_max = 2.0 * _alpha(gauge, alg) * rho
    Z = alg.Q * c_B.value * weight.cumulative(r_max)
    if Z <= 0:
        return Estimate(0.0, 0.0, 0)
    S = field.support_radius
    if S is not None:
        xs = BallSampler(gauge, alg, np.zeros(alg.N), S)
    else:
        xs = BallSampler(gauge, alg, center, rho)
    vol = xs.box_volume

    def sample(rng, size):
        x, in_x = xs.box_draw(rng, size)
        sigma = sample_sphere(gauge, alg, rng, size)
        r = weight.ppf(rng.random(size), r_max)
        y = multiply(alg, x, dilate(alg, r, sigma))
        cinv = -center
        keep = in_x & (gauge_norm(gauge, alg, multiply(alg, cinv, x)) < rho) \
            & (gauge_norm(gauge, alg, multiply(alg, cinv, y)) < rho)
        vals = np.zeros(size)
        if keep.any():
            vals[keep] = difference_quotient(field, alg, x[keep], sigma[keep], r[keep], p)
            if S is not None:
                vals[keep] *= 1.0 + (gauge_norm(gauge, alg, y[keep]) >= S)
        return vol * Z * vals

    mom = run_monte_carlo(sample, cfg, stream)
    val, err = float(mom.mean[0]), float(mom.stderr[0])
    rel_cb = c_B.stderr / c_B.value if c_B.value else 0.0
    return Estimate(val, math.hypot(err, val * rel_cb), mom.n)


def ball_poincare(cfg, gauge, alg, field: ScalarField, p, phi, R: float, center=None, mu: float = MU_DEFAULT,
                  beta: float = BETA_DEFAULT, c_B: Estimate | None = None, C_pQ: float | None = None) -> PoincareReport:
    """lhs = int_B |f - f_B|^p, rhs = R^p J(phi) / int_0^(beta R) phi; implied constant lhs / rhs."""
    _check_weight(phi)
    if p < 1:
        raise PoincareError("p must be >= 1")
    mass = phi.cumulative(beta * R)
    if mass <= 0:
        raise PoincareError("int_0^(beta R) phi vanishes")
    lhs = oscillation(cfg, gauge, alg, field, p, R, center)
    J = pp_double_integral(cfg, gauge, alg, field, p, phi, R, center, mu, c_B)
    scale = R**p / mass
    return _group_report(lhs, J, scale, C_pQ, {"p": p, "R": R, "mu": mu, "beta": beta,
                                               "weight": phi.describe(), "field": field.name})


def _group_report(lhs: Estimate, J: Estimate, scale: float, C, params, threshold=None) -> PoincareReport:
    rhs, rhs_err = scale * J.value, scale * J.stderr
    k = _ratio(lhs.value, rhs)
    k_err = 0.0
    if k is not None and math.isfinite(k) and lhs.value > 0:
        k_err = k * math.hypot(lhs.stderr / lhs.value, rhs_err / rhs)
    holds = None
    if C is not None:
        holds = lhs.value <= C * rhs + 3 * math.hypot(lhs.stderr, C * rhs_err)
    return PoincareReport(lhs.value, rhs, k, C, holds, lhs.stderr, rhs_err, k_err, threshold, params)


def poincare_ponce(cfg, gauge, alg, field: ScalarField, p, family: MollifierFamily, n: int, R: float, center=None,
                   C: float | None = None, C_pQ: float | None = None, mu: float = MU_DEFAULT,
                   beta: float = BETA_DEFAULT, c_B: Estimate | None = None) -> PoincareReport:
    """lhs <= C R^p int int |f(x) - f(y)|^p / ||x^-1 y||^p Q c_B rho_n(||x^-1 y||), for n past the threshold.

    The right side is J(rho1_n); n0 is the smallest n with int_0^(beta R) rho1_n > C_pQ / C.
    """
    if not family.nonincreasing:
        raise PoincareError("the Poincaré-Ponce inequality needs nonincreasing mollifiers")
    C_pQ = calibrated_constant(p, alg.Q) if C_pQ is None else C_pQ
    C = 2.0 * C_pQ if C is None else C
    if C <= C_pQ:
        raise PoincareError("need C > C_pQ")
    w = MollifierWeight(family, n)
    n0 = threshold_n0(lambda m: float(family.cdf(beta * R, m)), C_pQ / C)
    lhs = oscillation(cfg, gauge, alg, field, p, R, center)
    J = pp_double_integral(cfg, gauge, alg, field, p, w, R, center, mu, c_B)
    thr = {"n0": n0, "mass": w.cumulative(beta * R), "target": C_pQ / C, "above": n >= n0,
           "one_dim_nonincreasing": w.nonincreasing}
    return _group_report(lhs, J, R**p, C, {"p": p, "R": R, "n": n, "family": family.kind, "mu": mu,
                                           "beta": beta, "C_pQ": C_pQ, "field": field.name}, thr)


def fractional_weight(p: float, s: float) -> RadialWeight:
    """phi(tau) = tau^((1-s)p - 1), which turns J into the Gagliardo integral."""
    return RadialWeight("power", 1.0, (1.0 - s) * p - 1.0)


def fractional_poincare(cfg, gauge, alg, field: ScalarField, p, s: float, R: float, center=None,
                        mu: float = MU_DEFAULT, beta: float = BETA_DEFAULT, c_B: Estimate | None = None,
                        C_pQ: float | None = None) -> PoincareReport:
    """lhs <= C_pQ beta^((1-s)p) (1-s) p R^(sp) int int |f(y) - f(x)|^p / ||y^-1 x||^(Q+sp)."""
    if not (1.0 - 1.0 / p <= s < 1.0):
        raise PoincareError(f"s must lie in [1 - 1/p, 1) = [{1 - 1 / p:g}, 1), got {s}")
    lhs = oscillation(cfg, gauge, alg, field, p, R, center)
    G = pp_double_integral(cfg, gauge, alg, field, p, fractional_weight(p, s), R, center, mu, c_B)
    C = None if C_pQ is None else C_pQ * beta ** ((1 - s) * p)
    rep = _group_report(lhs, G, (1 - s) * p * R ** (s * p), C,
                        {"p": p, "s": s, "R": R, "mu": mu, "beta": beta, "field": field.name,
                         "gagliardo": G.value, "gagliardo_stderr": G.stderr,
                         "compensated": (1 - s) * G.value, "compensated_stderr": (1 - s) * G.stderr})
    return rep
