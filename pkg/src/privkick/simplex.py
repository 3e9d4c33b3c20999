"""Probability vectors on the unit simplex and its eta-floored subsets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

SUM_TOL = 1e-9
FLOOR_TOL = 1e-12


class SimplexError(ValueError):
    pass


class SumMismatch(SimplexError):
    pass


class FloorViolation(SimplexError):
    pass


class BadEta(SimplexError):
    pass


class DimensionMismatch(SimplexError):
    pass


@dataclass(frozen=True)
class SimplexVector:
    entries: np.ndarray

    @property
    def m(self) -> int:
        return int(self.entries.shape[0])

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class RestrictedSimplexVector:
    inner: SimplexVector
    eta: float

    @property
    def entries(self) -> np.ndarray:
        return self.inner.entries

    @property
    def m(self) -> int:
        return self.inner.m

    def __array__(self, dtype=None, copy=None):
        return self.inner.__array__(dtype)


def _check_eta(m: int, eta: float) -> None:
    if not (eta >= 0.0) or m * eta > 1.0 + FLOOR_TOL:
        raise BadEta(f"eta={eta!r} infeasible for m={m} (need 0 <= eta <= 1/m)")


def validate(v: Sequence[float], eta: float = 0.0) -> RestrictedSimplexVector:
    """Certify ``v`` as a member of the eta-restricted simplex.

    The entries are stored as given; nothing is renormalized.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 2:
        raise DimensionMismatch(f"expected a vector with at least 2 entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SimplexError("entries must be finite")
    m = arr.shape[0]
    _check_eta(m, eta)
    total = float(np.sum(arr))
    if abs(total - 1.0) > SUM_TOL:
        raise SumMismatch(f"entries sum to {total!r}")
    low = float(np.min(arr))
    if low < eta - FLOOR_TOL:
        raise FloorViolation(f"entry {low!r} below floor {eta!r}")
    return RestrictedSimplexVector(SimplexVector(arr), float(eta))


def vertices(m: int, eta: float) -> List[RestrictedSimplexVector]:
    """Extreme points of the eta-restricted simplex.

    Each vertex has m-1 entries equal to eta and one equal to 1-(m-1)*eta.
    At eta = 1/m all of them coincide and a single point is returned.
    """
    if m < 2:
        raise DimensionMismatch("m must be at least 2")
    _check_eta(m, eta)
    top = 1.0 - (m - 1) * eta
    if top - eta <= FLOOR_TOL:
        # restricted simplex has collapsed to its barycentre
        return [validate(np.full(m, 1.0 / m), min(eta, 1.0 / m))]
    out = []
    for i in range(m):
        x = np.full(m, float(eta))
        x[i] = top
        out.append(validate(x, eta))
    return out


def vertex(m: int, eta: float, index: int = -1) -> np.ndarray:
    """The vertex with the large entry at ``index`` as a plain array."""
    _check_eta(m, eta)
    x = np.full(m, float(eta))
    x[index] = 1.0 - (m - 1) * eta
    return x


def l2_distance(a, b) -> float:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    return float(np.linalg.norm(x - y))
