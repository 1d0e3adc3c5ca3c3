"""Stratified Lie algebras of step <= 3 and the induced group law.

Points of the group are arrays of canonical (first-kind exponential)
coordinates, ordered by increasing weight.  The product is given by the
Baker-Campbell-Hausdorff series, which terminates at order three for
nilpotent algebras of step at most three, so the group law here is exact.

All functions accept batched points: the last axis carries the N
coordinates and any leading axes broadcast.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

VALIDATION_TOL = 1e-12
MAX_STEP = 3


class AlgebraError(ValueError):
    """Raised for invalid structure constants or mismatched points."""


@dataclass(frozen=True, eq=False)
class StratifiedAlgebra:
    """A stratified nilpotent Lie algebra with [X_i, X_j] = sum_l c[i, j, l] X_l.

    Construction validates antisymmetry, grading, the Jacobi identity and
    the requirement that the first layer generates every higher layer.
    """

    name: str
    layer_dims: tuple[int, ...]
    structure_constants: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(m) for m in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        c = np.array(self.structure_constants, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "structure_constants", c)
        self._validate()

    @property
    def step(self) -> int:
        return len(self.layer_dims)

    @property
    def N(self) -> int:
        return sum(self.layer_dims)

    @property
    def Q(self) -> int:
        return sum(j * m for j, m in enumerate(self.layer_dims, start=1))

    @property
    def m1(self) -> int:
        return self.layer_dims[0]

    @property
    def weights(self) -> np.ndarray:
        return np.repeat(np.arange(1, self.step + 1), self.layer_dims)

    def layer_slice(self, j: int) -> slice:
        """Coordinate slice of layer ``j`` (1-based)."""
        start = sum(self.layer_dims[: j - 1])
        return slice(start, start + self.layer_dims[j - 1])

    def _validate(self):
        dims = self.layer_dims
        if not 1 <= len(dims) <= MAX_STEP:
            raise AlgebraError(f"step must be in 1..{MAX_STEP}, got {len(dims)}")
        if any(m < 1 for m in dims):
            raise AlgebraError(f"layer dimensions must be positive, got {dims}")
        n = self.N
        c = self.structure_constants
        if c.shape != (n, n, n):
            raise AlgebraError(f"structure constants must have shape {(n, n, n)}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise AlgebraError("structure constants must be finite")
        if np.max(np.abs(c + c.transpose(1, 0, 2)), initial=0.0) > VALIDATION_TOL:
            raise AlgebraError("structure constants are not antisymmetric")
        w = self.weights
        allowed = w[:, None, None] + w[None, :, None] == w[None, None, :]
        if np.max(np.abs(np.where(allowed, 0.0, c)), initial=0.0) > VALIDATION_TOL:
            raise AlgebraError("structure constants violate the grading")
        # Jacobi: [X_a,[X_b,X_c]] + cyclic = 0
        inner = np.einsum("bcm,aml->abcl", c, c)
        jac = inner + inner.transpose(1, 2, 0, 3) + inner.transpose(2, 0, 1, 3)
        if np.max(np.abs(jac), initial=0.0) > VALIDATION_TOL:
            raise AlgebraError("structure constants violate the Jacobi identity")
        for j in range(2, self.step + 1):
            span = self.bracket_generators(j)
            rank = np.linalg.matrix_rank(span, tol=1e-9) if span.size else 0
            if rank != dims[j - 1]:
                raise AlgebraError(f"layer {j} is not generated by [W_1, W_{j - 1}]")

    def bracket_generators(self, j: int) -> np.ndarray:
        """Rows spanning [W_1, W_{j-1}] restricted to layer ``j`` coordinates."""
        sl_j = self.layer_slice(j)
        c = self.structure_constants
        rows = [
            c[i, k, sl_j]
            for i in range(self.m1)
            for k in range(self.layer_slice(j - 1).start, self.layer_slice(j - 1).stop)
        ]
        return np.array(rows)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "step": self.step,
            "layer_dims": list(self.layer_dims),
            "structure_constants": self.structure_constants.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "StratifiedAlgebra":
        try:
            alg = cls(doc["name"], tuple(doc["layer_dims"]), np.array(doc["structure_constants"]))
        except KeyError as exc:
            raise AlgebraError(f"missing key {exc.args[0]!r} in group document") from None
        if "step" in doc and int(doc["step"]) != alg.step:
            raise AlgebraError(f"declared step {doc['step']} does not match layer_dims")
        return alg

    @classmethod
    def from_json(cls, text: str) -> "StratifiedAlgebra":
        return cls.from_dict(json.loads(text))


def _as_points(alg: StratifiedAlgebra, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (alg.N,):
        raise AlgebraError(f"expected points with last axis {alg.N}, got shape {x.shape}")
    return x


def bracket(alg: StratifiedAlgebra, a, b) -> np.ndarray:
    """Lie bracket of algebra elements given in the basis X_1..X_N."""
    a = _as_points(alg, a)
    b = _as_points(alg, b)
    return np.einsum("...i,...j,ijl->...l", a, b, alg.structure_constants)


def multiply(alg: StratifiedAlgebra, x, y) -> np.ndarray:
    """Group product x . y in canonical coordinates (exact BCH for step <= 3)."""
    x = _as_points(alg, x)
    y = _as_points(alg, y)
    if alg.step == 1:
        return x + y
    xy = bracket(alg, x, y)
    z = x + y + 0.5 * xy
    if alg.step == 3:
        z = z + (bracket(alg, x, xy) - bracket(alg, y, xy)) / 12.0
    return z


def inverse(alg: StratifiedAlgebra, x) -> np.ndarray:
    """Group inverse; in exponential coordinates this is negation."""
    return -_as_points(alg, x)


def dilate(alg: StratifiedAlgebra, lam, x) -> np.ndarray:
    """Group dilation: coordinate i is scaled by lam**w_i."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise AlgebraError("dilation factor must be positive")
    x = _as_points(alg, x)
    return x * lam[..., None] ** alg.weights


def horizontal_frame(alg: StratifiedAlgebra, x) -> np.ndarray:
    """Left-invariant horizontal fields X_1..X_m1 at x, shape (..., N, m1).

    Column j is d/dt (x . t e_j) at t = 0, i.e. e_j + [x, e_j]/2 + [x, [x, e_j]]/12.
    """
    x = _as_points(alg, x)
    c = alg.structure_constants[:, : alg.m1, :]  # c[i, j, l] with j horizontal
    ad = np.einsum("...i,ijl->...lj", x, c)  # ad_x e_j, shape (..., N, m1)
    eye = np.zeros((alg.N, alg.m1))
    eye[np.arange(alg.m1), np.arange(alg.m1)] = 1.0
    frame = eye + 0.5 * ad
    if alg.step == 3:
        ad_full = np.einsum("...i,ijl->...lj", x, alg.structure_constants)
        frame = frame + np.einsum("...lk,...kj->...lj", ad_full, ad) / 12.0
    return frame


def apply_horizontal_rotation(alg: StratifiedAlgebra, A, x, tol: float = 1e-10) -> np.ndarray:
    """Horizontal change of basis (x_hat, x_check) -> (A x_hat, x_check), A orthogonal."""
    A = np.asarray(A, dtype=float)
    if A.shape != (alg.m1, alg.m1):
        raise AlgebraError(f"rotation must be {alg.m1}x{alg.m1}, got {A.shape}")
    if np.max(np.abs(A.T @ A - np.eye(alg.m1))) > tol:
        raise AlgebraError("horizontal rotation matrix is not orthogonal")
    x = _as_points(alg, x)
    out = x.copy()
    out[..., : alg.m1] = x[..., : alg.m1] @ A.T
    return out


def horizontal_point(alg: StratifiedAlgebra, v) -> np.ndarray:
    """exp(sum_j v_j X_j) for a horizontal vector v."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (alg.N,))
    out[..., : alg.m1] = v
    return out


# built-in groups


def abelian(n: int) -> StratifiedAlgebra:
    return StratifiedAlgebra(f"abelian({n})", (n,), np.zeros((n, n, n)))


def heisenberg(n: int = 1) -> StratifiedAlgebra:
    """Heisenberg group H^n with [X_i, X_{n+i}] = T (one central direction)."""
    dim = 2 * n + 1
    c = np.zeros((dim, dim, dim))
    for i in range(n):
        c[i, n + i, 2 * n] = 1.0
        c[n + i, i, 2 * n] = -1.0
    return StratifiedAlgebra(f"heisenberg({n})", (2 * n, 1), c)


def engel() -> StratifiedAlgebra:
    """Engel group: layers (2, 1, 1), [X1, X2] = X3, [X1, X3] = X4."""
    c = np.zeros((4, 4, 4))
    c[0, 1, 2], c[1, 0, 2] = 1.0, -1.0
    c[0, 2, 3], c[2, 0, 3] = 1.0, -1.0
    return StratifiedAlgebra("engel", (2, 1, 1), c)


def builtin_group(name: str) -> StratifiedAlgebra:
    """Look up ``abelian(n)``, ``heisenberg(n)`` (or ``heisenberg``) and ``engel``."""
    key = name.strip().lower().replace(" ", "")
    if key == "engel":
        return engel()
    if key == "heisenberg":
        return heisenberg(1)
    for prefix, make in (("abelian", abelian), ("heisenberg", heisenberg)):
        if key.startswith(prefix + "(") and key.endswith(")"):
            try:
                n = int(key[len(prefix) + 1 : -1])
            except ValueError:
                break
            if n < 1:
                break
            return make(n)
    raise AlgebraError(f"unknown group {name!r}")


def random_points(alg: StratifiedAlgebra, rng: np.random.Generator, size: int, scale: float = 1.0):
    """Gaussian points with weight-j coordinates scaled by scale**j."""
    return rng.standard_normal((size, alg.N)) * scale ** alg.weights


def lower_central_pairs(alg: StratifiedAlgebra):
    """Horizontal pairs (i, k), i < k, whose brackets span layer 2 (greedy)."""
    return _greedy_basis(alg, 2, itertools.combinations(range(alg.m1), 2), lambda p: bracket(
        alg, _unit(alg, p[0]), _unit(alg, p[1])))


def third_layer_triples(alg: StratifiedAlgebra):
    """Triples (i, j, k) whose brackets [X_i, [X_j, X_k]] span layer 3 (greedy)."""
    cands = ((i, j, k) for i in range(alg.m1) for j, k in itertools.combinations(range(alg.m1), 2))
    return _greedy_basis(alg, 3, cands, lambda t: bracket(
        alg, _unit(alg, t[0]), bracket(alg, _unit(alg, t[1]), _unit(alg, t[2]))))


def _unit(alg, i):
    e = np.zeros(alg.N)
    e[i] = 1.0
    return e


def _greedy_basis(alg, layer, candidates, vector_of):
    if alg.step < layer:
        return [], np.zeros((0, 0))
    sl = alg.layer_slice(layer)
    chosen, rows = [], []
    for cand in candidates:
        v = vector_of(cand)[sl]
        trial = np.array(rows + [v])
        if np.linalg.matrix_rank(trial, tol=1e-9) > len(rows):
            chosen.append(cand)
            rows.append(v)
        if len(rows) == alg.layer_dims[layer - 1]:
            break
    if len(rows) < alg.layer_dims[layer - 1]:
        raise AlgebraError(f"layer {layer} is not reachable from iterated horizontal brackets")
    return chosen, np.array(rows)
