"""Homogeneous gauges, Carnot-Caratheodory distance and ball-box paths."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import algebra as alg_mod
from .algebra import StratifiedAlgebra, dilate, inverse, multiply


class GaugeError(ValueError):
    pass


class CCDistanceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class HomogeneousGauge:
    """Korányi-type gauge (sum_j a_j |x_(j)|^(2k!/j))^(1/(2k!)) or the CC norm.

    ``horizontal_scales`` stretches the horizontal block before taking its
    Euclidean length.  It breaks rotation invariance and exists only to run
    experiments with non-invariant gauges.
    """

    kind: str = "koranyi"
    layer_weights: tuple[float, ...] | None = None
    horizontal_scales: tuple[float, ...] | None = None
    quasi_triangle_alpha: float | None = None
    cc_budget: tuple[int, int] = (16, 200)

    def __post_init__(self):
        if self.kind not in ("koranyi", "cc"):
            raise GaugeError(f"unknown gauge kind {self.kind!r}")
        if self.layer_weights is not None and any(a <= 0 for a in self.layer_weights):
            raise GaugeError("Korányi layer weights must be positive")
        if self.horizontal_scales is not None and any(s <= 0 for s in self.horizontal_scales):
            raise GaugeError("horizontal scales must be positive")

    @property
    def rotation_invariant(self) -> bool:
        return self.kind == "koranyi" and (
            self.horizontal_scales is None or len(set(self.horizontal_scales)) == 1
        )

    def weights_for(self, alg: StratifiedAlgebra) -> np.ndarray:
        if self.layer_weights is None:
            return default_layer_weights(alg)
        if len(self.layer_weights) != alg.step:
            raise GaugeError(f"need {alg.step} layer weights, got {len(self.layer_weights)}")
        return np.array(self.layer_weights, dtype=float)

    def exponent(self, alg: StratifiedAlgebra) -> int:
        return 2 * math.factorial(alg.step)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "layer_weights": None if self.layer_weights is None else list(self.layer_weights),
            "horizontal_scales": None if self.horizontal_scales is None else list(self.horizontal_scales),
        }


def default_layer_weights(alg: StratifiedAlgebra) -> np.ndarray:
    """a_1 = 1 keeps |x_hat| <= ||x||; a_j = 16 above, the classical Heisenberg choice."""
    return np.array([1.0] + [16.0] * (alg.step - 1))


def koranyi(alg: StratifiedAlgebra | None = None, **kw) -> HomogeneousGauge:
    return HomogeneousGauge("koranyi", **kw)


def _block_sq(gauge, alg, x):
    out = []
    for j in range(1, alg.step + 1):
        blk = x[..., alg.layer_slice(j)]
        if j == 1 and gauge.horizontal_scales is not None:
            blk = blk * np.asarray(gauge.horizontal_scales)
        out.append(np.sum(blk * blk, axis=-1))
    return out


def gauge_norm(gauge: HomogeneousGauge, alg: StratifiedAlgebra, x) -> np.ndarray:
    """Homogeneous norm of (batched) points."""
    x = alg_mod._as_points(alg, x)
    if gauge.kind == "cc":
        flat = x.reshape(-1, alg.N)
        vals = [cc_distance(alg, p, np.zeros(alg.N), gauge.cc_budget).upper for p in flat]
        return np.array(vals).reshape(x.shape[:-1])
    q = gauge.exponent(alg)
    a = gauge.weights_for(alg)
    s = sum(a[j - 1] * sq ** (q // (2 * j)) for j, sq in enumerate(_block_sq(gauge, alg, x), start=1))
    return s ** (1.0 / q)


def gauge_norm_gradient(gauge: HomogeneousGauge, alg: StratifiedAlgebra, x) -> np.ndarray:
    """Euclidean gradient of the Korányi gauge in canonical coordinates (x != 0)."""
    if gauge.kind != "koranyi":
        raise GaugeError("analytic gradient only available for Korányi gauges")
    x = alg_mod._as_points(alg, x)
    q = gauge.exponent(alg)
    a = gauge.weights_for(alg)
    sqs = _block_sq(gauge, alg, x)
    grad_s = np.zeros_like(x)
    for j, sq in enumerate(sqs, start=1):
        e = q // (2 * j)  # S contains a_j * sq**e
        sl = alg.layer_slice(j)
        blk = x[..., sl]
        if j == 1 and gauge.horizontal_scales is not None:
            blk = blk * np.asarray(gauge.horizontal_scales) ** 2
        grad_s[..., sl] = (a[j - 1] * 2 * e * sq ** (e - 1))[..., None] * blk
    s = sum(a[j - 1] * sq ** (q // (2 * j)) for j, sq in enumerate(sqs, start=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(s > 0, s ** (1.0 / q - 1.0) / q, 0.0)
    return scale[..., None] * grad_s


def gauge_distance(gauge: HomogeneousGauge, alg: StratifiedAlgebra, x, y) -> np.ndarray:
    """Left-invariant distance d(x, y) = ||y^{-1} . x||."""
    return gauge_norm(gauge, alg, multiply(alg, inverse(alg, y), x))


def to_unit_sphere(gauge, alg, x) -> np.ndarray:
    """Dilate nonzero points onto the unit gauge sphere."""
    r = gauge_norm(gauge, alg, x)
    return dilate(alg, 1.0 / r, x)


# horizontal paths and the ball-box construction


class HorizontalPath:
    """Concatenation of horizontal segments exp(v_k), v_k in R^m1.

    Single-field paths (each v_k along one X_i, possibly with negative time)
    are built with ``from_segments`` and export as (index, duration) pairs.
    """

    def __init__(self, vectors, experimental: bool = False):
        self.vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        self.experimental = experimental

    @classmethod
    def from_segments(cls, m1: int, segments, experimental: bool = False) -> "HorizontalPath":
        V = np.zeros((len(segments), m1))
        for k, (i, t) in enumerate(segments):
            V[k, i] = t
        return cls(V, experimental)

    @property
    def segments(self) -> list[tuple[int, float]]:
        out = []
        for v in self.vectors:
            nz = np.flatnonzero(v)
            if len(nz) > 1:
                raise ValueError("path has segments that are not along a single field")
            out.append((int(nz[0]) if len(nz) else 0, float(v[nz[0]]) if len(nz) else 0.0))
        return out

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(self.vectors, axis=1)))

    def endpoint(self, alg: StratifiedAlgebra, start=None) -> np.ndarray:
        p = np.zeros(alg.N) if start is None else np.asarray(start, dtype=float)
        for v in self.vectors:
            p = multiply(alg, p, alg_mod.horizontal_point(alg, v))
        return p

    def to_json(self) -> str:
        """Single-field paths as a list of [index, duration]; others as {"vectors": ...}."""
        try:
            return json.dumps([[i, t] for i, t in self.segments])
        except ValueError:
            return json.dumps({"vectors": self.vectors.tolist()})

    @classmethod
    def from_json(cls, text: str, m1: int) -> "HorizontalPath":
        doc = json.loads(text)
        if isinstance(doc, dict):
            return cls(np.array(doc["vectors"], dtype=float).reshape(-1, m1))
        return cls.from_segments(m1, [(int(i), float(t)) for i, t in doc])


@dataclass
class BallBoxDecomposition:
    """Template multi-indexes (I, J, omega) of the ball-box map and constants a, b.

    Slot n moves along X_{I[n]} for time (-1)^omega[n] t_{J[n]}.  In the
    slots flagged by ``abs_slot`` the time is |t_{J[n]}| instead, so that a
    negative t reaches the opposite bracket direction.
    """

    I: np.ndarray
    J: np.ndarray
    omega: np.ndarray
    abs_slot: np.ndarray
    m1: int
    a: float = float("nan")
    b: float = float("nan")

    @property
    def M(self) -> int:
        return len(self.I)

    def path(self, t) -> HorizontalPath:
        t = np.asarray(t, dtype=float)
        segs = []
        for i, j, om, ab in zip(self.I, self.J, self.omega, self.abs_slot):
            tj = abs(t[j]) if ab else t[j]
            segs.append((int(i), float((-1) ** om * tj)))
        return HorizontalPath.from_segments(self.m1, segs)

    def evaluate(self, alg, t) -> np.ndarray:
        return self.path(t).endpoint(alg)


def ballbox_template(alg: StratifiedAlgebra) -> BallBoxDecomposition:
    """Multi-indexes of length M = m1 + 4 m2 + 10 m3.

    Weight-1 slots are single segments, weight-2 slots commutator squares
    sign(t) t^2 [X_i, X_k], weight-3 slots nested commutators t^3 [X_i, [X_j, X_k]].
    """
    I, J, om, ab = [], [], [], []

    def add(slots, j):
        for i, sign, absflag in slots:
            I.append(i), J.append(j), om.append(sign), ab.append(absflag)

    for i in range(alg.m1):
        add([(i, 0, False)], i)
    if alg.step >= 2:
        pairs, _ = alg_mod.lower_central_pairs(alg)
        start = alg.layer_slice(2).start
        for n, (i, k) in enumerate(pairs):
            add([(i, 0, True), (k, 0, False), (i, 1, True), (k, 1, False)], start + n)
    if alg.step == 3:
        triples, _ = alg_mod.third_layer_triples(alg)
        start = alg.layer_slice(3).start
        for n, (i, j, k) in enumerate(triples):
            add([(i, 0, False), (j, 0, True), (k, 0, True), (j, 1, True), (k, 1, True),
                 (i, 1, False), (k, 0, True), (j, 0, True), (k, 1, True), (j, 1, True)], start + n)
    return BallBoxDecomposition(*(np.array(v, dtype=int) for v in (I, J, om)), np.array(ab, dtype=bool), alg.m1)


def ballbox_times(alg: StratifiedAlgebra, z) -> np.ndarray:
    """Times t with ``ballbox_template(alg).evaluate(alg, t) == z``."""
    z = np.asarray(z, dtype=float)
    if z.shape != (alg.N,):
        raise alg_mod.AlgebraError(f"expected a single point of dimension {alg.N}")
    tmpl = ballbox_template(alg)
    t = np.zeros(alg.N)
    t[: alg.m1] = z[: alg.m1]
    if alg.step == 1:
        return t
    w = multiply(alg, inverse(alg, tmpl.path(t).endpoint(alg)), z)
    _, rows = alg_mod.lower_central_pairs(alg)
    coef = np.linalg.solve(rows.T, w[alg.layer_slice(2)])
    sl2 = alg.layer_slice(2)
    t[sl2] = np.sign(coef) * np.sqrt(np.abs(coef))
    if alg.step == 2:
        return t
    t_sq = np.zeros(alg.N)
    t_sq[sl2] = t[sl2]
    squares = [s for s, j in zip(tmpl.path(t_sq).segments, tmpl.J) if sl2.start <= j < sl2.stop]
    w3 = multiply(alg, inverse(alg, HorizontalPath.from_segments(alg.m1, squares).endpoint(alg)), w)
    _, rows3 = alg_mod.third_layer_triples(alg)
    coef3 = np.linalg.solve(rows3.T, w3[alg.layer_slice(3)])
    t[alg.layer_slice(3)] = np.cbrt(coef3)
    return t


def ballbox_path(alg: StratifiedAlgebra, z) -> HorizontalPath:
    """Horizontal path from 0 to z made of single-field segments.

    Horizontal coordinates are reached by straight segments, weight-2
    coordinates by commutator squares and weight-3 coordinates by nested
    commutators.  Step-3 output is flagged experimental.
    """
    path = ballbox_template(alg).path(ballbox_times(alg, z))
    path.experimental = alg.step == 3
    return path


def estimate_ballbox(alg: StratifiedAlgebra, rng: np.random.Generator, samples: int = 32,
                     budget=(16, 200)) -> BallBoxDecomposition:
    """Empirical constants for the ball-box map.

    a = 1/(M+1) makes E(Q(0, aR)) lie in B_X(0, R) exactly, since a path of
    M segments with |t| < aR has length below R.  b = a * min over sampled z
    of d_X(z) / max_n |t_n(z)| is sampled, not certified.
    """
    dec = ballbox_template(alg)
    a = 1.0 / (dec.M + 1)
    ratios = []
    for z in rng.standard_normal((samples, alg.N)):
        t = ballbox_times(alg, z)
        d = cc_distance(alg, z, np.zeros(alg.N), budget).upper
        ratios.append(d / np.max(np.abs(t)))
    dec.a = a
    dec.b = a * min(ratios)
    return dec


# Carnot-Caratheodory distance by direct collocation


@dataclass
class CCResult:
    upper: float
    lower_hint: float
    path: HorizontalPath
    converged: bool
    residual: float

    def __iter__(self):
        yield self.upper
        yield self.lower_hint


def _chain(alg, V):
    """Endpoint of piecewise-constant controls; V has shape (..., K, m1)."""
    p = np.zeros(V.shape[:-2] + (alg.N,))
    step = np.zeros(V.shape[:-1] + (alg.N,))
    step[..., : alg.m1] = V
    for k in range(V.shape[-2]):
        p = multiply(alg, p, step[..., k, :])
    return p


def _chain_jac(alg, V, h=1e-7):
    K, m = V.shape
    n = K * m
    pert = np.repeat(V[None], 2 * n, axis=0).reshape(2 * n, n)
    idx = np.arange(n)
    pert[idx, idx] += h
    pert[n + idx, idx] -= h
    ends = _chain(alg, pert.reshape(2 * n, K, m))
    return ((ends[:n] - ends[n:]) / (2 * h)).T


def _resample_path(alg, path: HorizontalPath, K: int) -> np.ndarray:
    """Spread path segments over K equal-time controls (exact when pieces align)."""
    segs = [(i, t) for i, t in path.segments if t != 0.0]
    V = np.zeros((K, alg.m1))
    if not segs:
        return V
    total = sum(abs(t) for _, t in segs)
    counts = [max(1, int(round(K * abs(t) / total))) for _, t in segs]
    while sum(counts) > K:
        counts[int(np.argmax(counts))] -= 1
        if min(counts) == 0:
            break
    k = 0
    for (i, t), c in zip(segs, counts):
        for _ in range(c):
            if k < K:
                V[k, i] += t / c
                k += 1
            else:
                V[K - 1, i] += t / c
    return V


def cc_distance(alg: StratifiedAlgebra, x, y, budget=(16, 200), seed: int = 0,
                starts: int = 8, tol: float = 1e-9) -> CCResult:
    """Upper bound on d_X(x, y) from an energy-minimising polygonal horizontal path.

    ``budget`` is (number of control intervals, iteration cap).  The target
    y^{-1} x is reached to ``tol``; lengths of candidate paths are compared
    with the ball-box path, which is always a valid fallback.
    """
    K, iters = int(budget[0]), int(budget[1])
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = multiply(alg, inverse(alg, y), x)
    lower = float(np.linalg.norm(g[: alg.m1]))
    if np.max(np.abs(g[alg.m1:]), initial=0.0) == 0.0:
        # exp of a horizontal vector: the straight segment attains the lower bound
        straight = HorizontalPath(g[None, : alg.m1])
        return CCResult(lower, lower, straight, True, 0.0)
    bb = ballbox_path(alg, g)
    best = CCResult(bb.length, lower, bb, True, float(np.max(np.abs(bb.endpoint(alg) - g))))
    scale = bb.length
    rng = np.random.default_rng([seed, K])
    V0 = _resample_path(alg, bb, K)
    inits = [V0]
    for s in range(1, starts):
        if s % 2:
            inits.append(V0 + rng.standard_normal(V0.shape) * scale / K)
        else:
            ang = 2 * np.pi * (np.arange(K) + 0.5) / K
            circ = np.zeros((K, alg.m1))
            pair = rng.choice(alg.m1, size=min(2, alg.m1), replace=False)
            circ[:, pair[0]] = np.cos(ang) * scale / K
            if len(pair) > 1:
                circ[:, pair[1]] = np.sin(ang) * scale / K
            inits.append(circ + rng.standard_normal(V0.shape) * scale / (4 * K))
    any_converged = False
    g_scaled = g
    for V_init in inits:
        def fun(v):
            return K * float(v @ v) / scale**2

        def jac(v):
            return 2 * K * v / scale**2

        def cons(v):
            return (_chain(alg, v.reshape(1, K, alg.m1))[0] - g_scaled) / scale

        def cons_jac(v):
            return _chain_jac(alg, v.reshape(K, alg.m1)) / scale

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = optimize.minimize(fun, V_init.ravel(), jac=jac, method="SLSQP",
                                    constraints=[{"type": "eq", "fun": cons, "jac": cons_jac}],
                                    options={"maxiter": iters, "ftol": 1e-14})
        v = res.x
        for _ in range(20):  # Gauss-Newton projection onto the endpoint constraint
            r = _chain(alg, v.reshape(1, K, alg.m1))[0] - g
            if np.max(np.abs(r)) < 1e-13 * max(1.0, scale):
                break
            Jm = _chain_jac(alg, v.reshape(K, alg.m1))
            v = v - np.linalg.lstsq(Jm, r, rcond=None)[0]
        V = v.reshape(K, alg.m1)
        resid = float(np.max(np.abs(_chain(alg, V[None])[0] - g)))
        if resid > tol * max(1.0, scale):
            continue
        any_converged = True
        length = float(np.sum(np.linalg.norm(V, axis=1)))
        if length < best.upper:
            path = HorizontalPath(V)
            best = CCResult(length, lower, path, True, resid)
    if not any_converged:
        warnings.warn("CC optimizer did not reach the endpoint tolerance; "
                      "reporting the ball-box path length", CCDistanceWarning, stacklevel=2)
        best.converged = False
    return best


@dataclass
class MetricEquivalence:
    lam: float
    samples: int
    ratios: np.ndarray = field(repr=False)


def estimate_equivalence_lambda(gauge, alg, samples, rng=None, budget=(16, 200)) -> MetricEquivalence:
    """lambda = max over sampled unit-gauge points of max(d_X, 1/d_X).

    ``samples`` is either a count (points drawn from ``rng`` and projected
    to the unit sphere) or an array of nonzero points.
    """
    if np.ndim(samples) == 0:
        if int(samples) < 1:
            raise ValueError("need at least one sample")
        rng = np.random.default_rng(0) if rng is None else rng
        pts = rng.standard_normal((int(samples), alg.N))
    else:
        pts = np.asarray(samples, dtype=float)
    unit = to_unit_sphere(gauge, alg, pts)
    d = np.array([cc_distance(alg, p, np.zeros(alg.N), budget).upper for p in unit])
    ratios = np.maximum(d, 1.0 / d)
    return MetricEquivalence(float(max(1.0, ratios.max())), len(unit), ratios)


def estimate_quasi_triangle_alpha(gauge, alg, samples, rng=None) -> float:
    """Smallest alpha >= 1 with d(x,y) <= alpha (d(x,z) + d(z,y)) on sampled triples."""
    if np.ndim(samples) == 0:
        if int(samples) < 1:
            raise ValueError("need at least one sample")
        rng = np.random.default_rng(0) if rng is None else rng
        x, y, z = (rng.standard_normal((int(samples), alg.N)) for _ in range(3))
    else:
        x, y, z = (np.asarray(s, dtype=float) for s in samples)
    dxy = gauge_distance(gauge, alg, x, y)
    den = gauge_distance(gauge, alg, x, z) + gauge_distance(gauge, alg, z, y)
    ok = den > 0
    return float(max(1.0, np.max(dxy[ok] / den[ok], initial=1.0)))
