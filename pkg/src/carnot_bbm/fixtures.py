"""Frozen numerical fixtures shipped with the package (see notebooks/calibrate_constants.py)."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .integrate import Estimate


@lru_cache(maxsize=1)
def load() -> dict:
    with resources.files("carnot_bbm").joinpath("data/fixtures.json").open() as fh:
        return json.load(fh)


def _entry(section: str, key: str) -> dict:
    table = load().get(section, {})
    if key not in table:
        raise KeyError(f"no frozen {section} fixture for {key!r}; run notebooks/calibrate_constants.py")
    return table[key]


def ball_volume(group: str) -> Estimate:
    e = _entry("c_B", group)
    return Estimate(e["value"], e["stderr"], e["samples"], "fixture")


def kappa(group: str, p: float) -> Estimate:
    e = _entry("kappa", f"{group},p={p:g}")
    return Estimate(e["value"], e["stderr"], e["samples"], "fixture")


def poincare_constant(p: float, Q: int) -> float:
    """Empirical C_{p,Q}: the largest implied constant over the calibration suite."""
    return float(_entry("C_pQ", f"p={p:g},Q={Q}")["value"])
