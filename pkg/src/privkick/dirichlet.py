"""Dirichlet mechanism: randomize a policy by drawing from Dir(k * pi)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from privkick.simplex import (
    DimensionMismatch,
    RestrictedSimplexVector,
    SimplexError,
    SimplexVector,
)
from privkick.special import log_gamma

TINY = 1e-300

RngState = np.random.Generator


class ShapeUnderflow(ArithmeticError):
    pass


class BoundaryPoint(ValueError):
    pass


class BadBeta(ValueError):
    pass


def make_rng(seed: int, *labels: int) -> np.random.Generator:
    """Independent stream for ``(seed, *labels)``.

    Streams for different label tuples are statistically independent, and a
    stream never depends on which other streams were created before it.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, labels)])))


def log_gamma_variates(shape: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """log of Gamma(shape, 1) variates, elementwise, safe for tiny shapes.

    Uses Gamma(a) = Gamma(a + 1) * U ** (1 / a), evaluated in log space, so a
    shape like 1e-6 gives a log-variate near -1e6 instead of an exact zero.
    """
    shape = np.asarray(shape, dtype=np.float64)
    if np.any(~(shape > 0.0)):
        raise ShapeUnderflow("all shapes must be strictly positive")
    g = rng.standard_gamma(shape + 1.0)
    u = 1.0 - rng.random(shape.shape)  # (0, 1]
    with np.errstate(divide="ignore"):
        out = np.log(g) + np.log(u) / shape
    if not np.all(np.isfinite(out)):
        raise ShapeUnderflow("gamma variate underflowed in log space")
    return out


def dirichlet_rows(shape: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One Dirichlet draw per row of ``shape``; rows of the result sum to 1."""
    logg = log_gamma_variates(shape, rng)
    logg = logg - logg.max(axis=-1, keepdims=True)
    x = np.maximum(np.exp(logg), TINY)
    return x / x.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class DirichletMechanism:
    k: float
    eta: float
    m: int

    def __post_init__(self):
        if not self.k > 0.0:
            raise ValueError(f"k must be positive, got {self.k!r}")
        if not self.k * self.eta > 0.0:
            raise ValueError("k * eta must be positive")
        if self.m < 2 or self.m * self.eta > 1.0 + 1e-12:
            raise ValueError(f"eta={self.eta!r} infeasible for m={self.m}")

    def _check(self, pi: RestrictedSimplexVector) -> np.ndarray:
        if pi.m != self.m:
            raise DimensionMismatch(f"mechanism has m={self.m}, input has m={pi.m}")
        if pi.eta < self.eta:
            raise SimplexError(f"input certified at eta={pi.eta}, mechanism needs {self.eta}")
        return pi.entries

    def sample(self, pi: RestrictedSimplexVector, rng: np.random.Generator) -> SimplexVector:
        p = self._check(pi)
        return SimplexVector(dirichlet_rows(self.k * p, rng))

    def sample_batch(self, pis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draws for a (B, m) batch of floored policies (no certification)."""
        return dirichlet_rows(self.k * np.asarray(pis, dtype=np.float64), rng)

    def log_density(self, pi: RestrictedSimplexVector, z) -> float:
        p = self._check(pi)
        x = np.asarray(z, dtype=np.float64)
        if x.shape != p.shape:
            raise DimensionMismatch(f"{x.shape} vs {p.shape}")
        if np.any(x <= 0.0):
            raise BoundaryPoint("density is only evaluated at interior points")
        shapes = self.k * p
        out = log_gamma(self.k)
        for a, xi in zip(shapes, x):
            out += (a - 1.0) * math.log(xi) - log_gamma(a)
        return out


def sample(mech: DirichletMechanism, pi: RestrictedSimplexVector, rng: np.random.Generator) -> SimplexVector:
    return mech.sample(pi, rng)


def log_density(mech: DirichletMechanism, pi: RestrictedSimplexVector, z) -> float:
    return mech.log_density(pi, z)


def concentration_radius(k: float, beta: float) -> float:
    """Radius r with P(||Dir(k pi) - pi||_2 >= r) <= beta."""
    if not 0.0 < beta < 1.0:
        raise BadBeta(f"beta must lie in (0, 1), got {beta!r}")
    if k < 0:
        raise ValueError("k must be non-negative")
    return math.sqrt(math.log(1.0 / beta) / (2.0 * (k + 1.0)))


def flat_dirichlet(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform draws from the m-simplex, as a (n, m) array."""
    return dirichlet_rows(np.ones((n, m)), rng)


__all__ = [
    "BadBeta",
    "BoundaryPoint",
    "DirichletMechanism",
    "RngState",
    "ShapeUnderflow",
    "concentration_radius",
    "dirichlet_rows",
    "flat_dirichlet",
    "log_density",
    "log_gamma_variates",
    "make_rng",
    "sample",
]
