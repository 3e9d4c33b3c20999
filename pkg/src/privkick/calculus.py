"""Privacy pricing for the composed mechanism Dir_k o f.

``epsilon_exact`` is the closed-form likelihood-ratio bound for a teacher map
f that is L-Lipschitz into the eta-restricted simplex, with the outputs
restricted to the tau-interior.  ``delta_mc`` estimates the probability mass
that a vertex input puts outside that interior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special as sp

from privkick.dirichlet import dirichlet_rows
from privkick.special import log_gamma


class DegenerateConfig(ValueError):
    pass


class BadTau(ValueError):
    pass


class BadAccuracy(ValueError):
    pass


@dataclass(frozen=True)
class MechanismConfig:
    k: float
    eta: float
    tau: float
    b: float
    L: float
    m: int

    def __post_init__(self):
        m = self.m
        if m < 2:
            raise DegenerateConfig("need at least two actions")
        if not self.k > 0:
            raise DegenerateConfig(f"k must be positive, got {self.k!r}")
        if not (0.0 < self.eta <= 1.0 / m + 1e-12):
            raise DegenerateConfig(f"eta must lie in (0, 1/m], got {self.eta!r}")
        if not (0.0 < self.tau <= 1.0 / m + 1e-12):
            raise DegenerateConfig(f"tau must lie in (0, 1/m], got {self.tau!r}")
        if self.b < 0 or self.L < 0:
            raise DegenerateConfig("b and L must be non-negative")

    def with_k(self, k: float) -> "MechanismConfig":
        return MechanismConfig(k=k, eta=self.eta, tau=self.tau, b=self.b, L=self.L, m=self.m)


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float
    delta_accuracy: float
    n_samples: int = 0

    def certificate(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "delta_half_width": self.delta_accuracy,
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True)
class DeltaEstimate:
    delta: float
    half_width: float
    n_samples: int


def epsilon_terms(cfg: MechanismConfig) -> tuple[float, float]:
    """(sensitivity term, gamma term) of the epsilon bound, unfloored."""
    m, k, eta = cfg.m, cfg.k, cfg.eta
    top = k * (1.0 - (m - 1) * eta)
    if not top > 0:
        raise DegenerateConfig(f"k(1-(m-1)eta) = {top!r} is not positive")
    sens = math.sqrt(m) * cfg.L * cfg.b * k * math.log(1.0 / cfg.tau)
    gam = (m - 1) * log_gamma(k * eta) + log_gamma(top) - m * log_gamma(k / m)
    return sens, gam


def epsilon_exact(cfg: MechanismConfig) -> float:
    sens, gam = epsilon_terms(cfg)
    return max(0.0, sens + gam)


def chebyshev_half_width(n_samples: int, confidence: float) -> float:
    """Half-width t with P(|mean - p| >= t) <= 1 - confidence for a Bernoulli mean."""
    if not 0.0 < confidence < 1.0:
        raise BadAccuracy(f"confidence must lie in (0, 1), got {confidence!r}")
    return math.sqrt(0.25 / (n_samples * (1.0 - confidence)))


def required_samples(t: float, confidence: float) -> int:
    """Smallest N with 1 / (4 N t^2) <= 1 - confidence."""
    if not t > 0:
        raise BadAccuracy(f"accuracy must be positive, got {t!r}")
    if not 0.0 < confidence < 1.0:
        raise BadAccuracy(f"confidence must lie in (0, 1), got {confidence!r}")
    x = 0.25 / (t * t * (1.0 - confidence))
    n = max(1, math.ceil(x))
    # guard against x landing a rounding error above an integer
    if n > 1 and 0.25 / ((n - 1) * t * t) <= (1.0 - confidence) * (1.0 + 1e-12):
        n -= 1
    return n


def _outside_count(k: float, eta: float, tau: float, m: int, n: int, rng: np.random.Generator, chunk: int) -> int:
    alpha = k * np.full(m, eta)
    alpha[-1] = k * (1.0 - (m - 1) * eta)
    count = 0
    left = n
    while left > 0:
        b = min(chunk, left)
        x = dirichlet_rows(np.broadcast_to(alpha, (b, m)), rng)
        count += int(np.count_nonzero(x.min(axis=1) < tau))
        left -= b
    return count


def delta_mc(
    k: float,
    eta: float,
    tau: float,
    m: int,
    n_samples: int,
    rng: np.random.Generator,
    confidence: float = 0.95,
    workers: int = 1,
    chunk: int = 65536,
) -> DeltaEstimate:
    """Monte-Carlo estimate of the mass a vertex input puts outside the tau-interior.

    With ``workers > 1`` the draw budget is split over child streams spawned
    from ``rng``; the counts are summed, so the result depends only on the
    seed and the worker count.
    """
    if n_samples < 1:
        raise BadAccuracy("n_samples must be at least 1")
    if tau < 0:
        raise BadTau(f"tau must be non-negative, got {tau!r}")
    if m * tau > 1.0:
        return DeltaEstimate(1.0, 0.0, 0)
    if tau == 0.0:
        return DeltaEstimate(0.0, 0.0, 0)
    hw = chebyshev_half_width(n_samples, confidence)
    if workers == 1:
        count = _outside_count(k, eta, tau, m, n_samples, rng, chunk)
    else:
        shares = [n_samples // workers + (1 if i < n_samples % workers else 0) for i in range(workers)]
        count = sum(_outside_count(k, eta, tau, m, s, child, chunk) for s, child in zip(shares, rng.spawn(workers)))
    return DeltaEstimate(count / n_samples, hw, n_samples)


def delta_beta(k: float, eta: float, tau: float) -> float:
    """Exact delta for two actions: x_1 ~ Beta(k eta, k (1 - eta))."""
    if tau < 0:
        raise BadTau(f"tau must be non-negative, got {tau!r}")
    if 2 * tau > 1.0:
        return 1.0
    if tau == 0.0:
        return 0.0
    a, b = k * eta, k * (1.0 - eta)
    inside = sp.betainc(a, b, 1.0 - tau) - sp.betainc(a, b, tau)
    return float(min(1.0, max(0.0, 1.0 - inside)))


def lipschitz_upper_bound(params) -> float:
    """Product of layer spectral norms times the output head's contraction.

    ReLU is 1-Lipschitz and so is softmax; the eta floor scales the softmax
    by (1 - m eta).
    """
    bound = 1.0
    for w in params.weights:
        bound *= float(np.linalg.norm(w, ord=2)) if w.size else 0.0
    if params.head == "policy":
        bound *= 1.0 - params.out_dim * params.eta
    return bound


def price(
    cfg: MechanismConfig,
    delta_accuracy: float,
    confidence: float,
    rng: Optional[np.random.Generator],
    method: str = "auto",
) -> PrivacyParams:
    """Bundle epsilon and delta into one certificate.

    ``method="auto"`` uses the exact Beta path when m == 2 and Monte Carlo
    otherwise; ``method="mc"`` always samples.
    """
    eps = epsilon_exact(cfg)
    if method == "auto" and cfg.m == 2:
        return PrivacyParams(eps, delta_beta(cfg.k, cfg.eta, cfg.tau), 0.0, 0)
    if method not in ("auto", "mc"):
        raise ValueError(f"unknown method {method!r}")
    n = required_samples(delta_accuracy, confidence)
    est = delta_mc(cfg.k, cfg.eta, cfg.tau, cfg.m, n, rng, confidence=confidence)
    return PrivacyParams(eps, est.delta, est.half_width, est.n_samples)

