"""Radial mollifier families and their one-dimensional counterparts.

A family is described on the group by a profile rho_n(r), r = ||x||, with
int_G rho_n(||x||) dx = 1, and on the half line by

    rho1_n(r) = Q c_B rho_n(r) r^(Q-1),   int_0^inf rho1_n = 1.

Scales follow eps_n = 1/n.  Built-in kinds:

* ``box``: rho_n = 1[r < eps] / (c_B eps^Q), so rho1_n = Q r^(Q-1) / eps^Q.
* ``power_tail``: rho1_n(r) = (1/n) r^(1/n - 1) on (0, 1]; mass leaks out of
  every ball only like 1 - delta^(1/n), a slowly concentrating family.
* ``smooth_bump``: rho_n proportional to psi(r/eps), psi(u) = exp(-1/(1-u^2)).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate as sp_integrate

from .algebra import StratifiedAlgebra

KINDS = ("box", "power_tail", "smooth_bump")
NORMALIZATION_TOL = 1e-8


def _psi(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    out[m] = np.exp(-1.0 / (1.0 - u[m] ** 2))
    return out


@lru_cache(maxsize=32)
def _bump_table(Q: int, size: int = 4097):
    """Normalizer and cdf table of u -> psi(u) u^(Q-1) on [0, 1]."""
    grid = np.linspace(0.0, 1.0, size)
    pieces = [sp_integrate.quad(lambda u: _psi(u) * u ** (Q - 1), a, b, epsabs=1e-15, epsrel=1e-12)[0]
              for a, b in zip(grid[:-1], grid[1:])]
    cdf = np.concatenate([[0.0], np.cumsum(pieces)])
    Z = cdf[-1]
    return Z, grid, cdf / Z


@dataclass(frozen=True)
class MollifierFamily:
    kind: str
    Q: int
    c_B: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown mollifier kind {self.kind!r}; choose from {KINDS}")
        if self.c_B <= 0 or self.Q < 1:
            raise ValueError("need Q >= 1 and c_B > 0")

    @staticmethod
    def eps(n: int) -> float:
        if n < 1:
            raise ValueError("mollifier index n must be >= 1")
        return 1.0 / n

    @property
    def nonincreasing(self) -> bool:
        """Whether the group profile r -> rho_n(r) is nonincreasing (true for all built-ins)."""
        return True

    def support(self, n: int) -> float:
        return 1.0 if self.kind == "power_tail" else self.eps(n)

    def one_dim(self, r, n: int):
        """rho1_n(r)."""
        r = np.asarray(r, dtype=float)
        e = self.eps(n)
        Q = self.Q
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "box":
                return np.where((r >= 0) & (r < e), Q * r ** (Q - 1) / e**Q, 0.0)
            if self.kind == "power_tail":
                return np.where((r > 0) & (r <= 1), r ** (1.0 / n - 1) / n, 0.0)
            Z = _bump_table(Q)[0]
            u = r / e
            return np.where(r >= 0, _psi(u) * u ** (Q - 1) / (e * Z), 0.0)

    def profile(self, r, n: int):
        """rho_n(r), the radial profile on the group."""
        r = np.asarray(r, dtype=float)
        e = self.eps(n)
        if self.kind == "box":
            return np.where((r >= 0) & (r < e), 1.0 / (self.c_B * e**self.Q), 0.0)
        if self.kind == "smooth_bump":
            Z = _bump_table(self.Q)[0]
            return _psi(r / e) / (self.Q * self.c_B * e**self.Q * Z)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.one_dim(r, n) / (self.Q * self.c_B * r ** (self.Q - 1))

    def cdf(self, r, n: int):
        """int_0^r rho1_n."""
        r = np.clip(np.asarray(r, dtype=float), 0.0, None)
        e = self.eps(n)
        if self.kind == "box":
            return np.minimum(r / e, 1.0) ** self.Q
        if self.kind == "power_tail":
            return np.minimum(r, 1.0) ** (1.0 / n)
        _, grid, cdf = _bump_table(self.Q)
        return np.interp(np.minimum(r / e, 1.0), grid, cdf)

    def ppf(self, u, n: int):
        u = np.asarray(u, dtype=float)
        e = self.eps(n)
        if self.kind == "box":
            return e * u ** (1.0 / self.Q)
        if self.kind == "power_tail":
            return u**n
        _, grid, cdf = _bump_table(self.Q)
        return e * np.interp(u, cdf, grid)

    def sample_radius(self, rng: np.random.Generator, n: int, size: int, r_max: float | None = None):
        """Radii with density rho1_n, optionally conditioned on r < r_max."""
        top = 1.0 if r_max is None else float(self.cdf(r_max, n))
        return self.ppf(rng.random(size) * top, n)

    def tail_mass(self, n: int, delta: float) -> float:
        """int_{||x|| > delta} rho_n = 1 - int_0^delta rho1_n."""
        if delta <= 0:
            raise ValueError("delta must be positive")
        return float(max(0.0, 1.0 - self.cdf(delta, n)))

    def radial_normalization(self, n: int) -> float:
        """int_0^inf rho_n(r) r^(Q-1) dr by quadrature; should equal 1/(Q c_B)."""
        Q = self.Q
        top = self.support(n)
        if self.kind == "power_tail":
            # endpoint singularity r^(1/n - 1) handled by an algebraic weight
            c = 1.0 / (n * Q * self.c_B)
            return sp_integrate.quad(lambda r: c, 0, top, weight="alg", wvar=(1.0 / n - 1, 0))[0]
        f = lambda r: float(self.profile(r, n)) * r ** (Q - 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
            return sp_integrate.quad(f, 0, top, epsabs=1e-15, epsrel=1e-12, limit=200)[0]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "Q": self.Q, "c_B": self.c_B}


@dataclass(frozen=True)
class OneDimMollifier:
    family: MollifierFamily
    n: int

    def __call__(self, r):
        return self.family.one_dim(r, self.n)

    def mass(self, upper: float = math.inf) -> float:
        top = min(upper, self.family.support(self.n))
        return float(self.family.cdf(top, self.n))

    @property
    def nonincreasing(self) -> bool:
        """Recomputed on a grid; the r^(Q-1) factor usually breaks monotonicity."""
        top = self.family.support(self.n)
        r = np.linspace(top * 1e-6, top * (1 - 1e-6), 2001)
        v = self(r)
        return bool(np.all(np.diff(v) <= 1e-12 * np.max(np.abs(v))))


def make_family(kind: str, alg: StratifiedAlgebra | int, c_B: float) -> MollifierFamily:
    Q = alg if isinstance(alg, int) else alg.Q
    return MollifierFamily(kind, int(Q), float(c_B))


def to_one_dim(family: MollifierFamily, n: int) -> OneDimMollifier:
    family.eps(n)
    return OneDimMollifier(family, int(n))


def tail_mass(family: MollifierFamily, n: int, delta: float) -> float:
    return family.tail_mass(n, delta)
