"""Per-rollout privacy bookkeeping for the teacher."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from privkick.calculus import MechanismConfig, PrivacyParams, price
from privkick.dirichlet import DirichletMechanism, flat_dirichlet


class AlreadyExpended(RuntimeError):
    pass


@dataclass(frozen=True)
class KSchedule:
    k0: float
    c: float
    k_min: float = 0.0

    def __post_init__(self):
        if not self.k0 > 0:
            raise ValueError("k0 must be positive")
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"vanishing coefficient must lie in (0, 1), got {self.c!r}")


def step_schedule(s: KSchedule, j: int) -> float:
    """k for rollout ``j``; 0 once k0 * c**j has fallen below ``k_min``."""
    if j < 0:
        raise ValueError("rollout index must be non-negative")
    k = s.k0 * s.c**j
    return k if k >= s.k_min else 0.0


@dataclass(frozen=True)
class LedgerEntry:
    j: int
    k: float
    eps: float
    delta: float


def _budget_value(x):
    return None if x is None or math.isinf(x) else x


@dataclass
class PrivacyLedger:
    eps_max: float = math.inf
    delta_max: float = math.inf
    entries: List[LedgerEntry] = field(default_factory=list)
    epsilon_total: float = 0.0
    delta_total: float = 0.0
    expended: bool = False
    expended_at: Optional[int] = None

    def silent(self, j: int) -> bool:
        """True if the teacher may no longer answer honestly in rollout ``j``."""
        return self.expended_at is not None and j >= self.expended_at

    def to_dict(self) -> dict:
        return {
            "entries": [{"j": e.j, "k": e.k, "eps": e.eps, "delta": e.delta} for e in self.entries],
            "totals": {"epsilon": self.epsilon_total, "delta": self.delta_total},
            "budget": {"epsilon": _budget_value(self.eps_max), "delta": _budget_value(self.delta_max)},
            "expended_at": self.expended_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PrivacyLedger":
        budget = d["budget"]
        led = cls(
            eps_max=math.inf if budget["epsilon"] is None else budget["epsilon"],
            delta_max=math.inf if budget["delta"] is None else budget["delta"],
        )
        led.entries = [LedgerEntry(e["j"], e["k"], e["eps"], e["delta"]) for e in d["entries"]]
        led.epsilon_total = d["totals"]["epsilon"]
        led.delta_total = d["totals"]["delta"]
        led.expended_at = d["expended_at"]
        led.expended = led.expended_at is not None
        return led


def record(ledger: PrivacyLedger, j: int, k_j: float, pricing: Optional[PrivacyParams]) -> PrivacyLedger:
    """Log rollout ``j`` in place and return the ledger.

    The entry that pushes a total past its budget is still logged; the
    teacher goes silent from rollout ``j + 1`` on.  A zero ``k_j`` means the
    schedule itself has run out and expiry starts at ``j``.
    """
    if ledger.expended:
        if k_j != 0.0:
            raise AlreadyExpended(f"budget expended at rollout {ledger.expended_at}; got k={k_j}")
        return ledger
    if k_j == 0.0:
        ledger.expended = True
        ledger.expended_at = j
        return ledger
    ledger.entries.append(LedgerEntry(j, float(k_j), pricing.epsilon, pricing.delta))
    ledger.epsilon_total += pricing.epsilon
    ledger.delta_total += pricing.delta
    if ledger.epsilon_total > ledger.eps_max or ledger.delta_total > ledger.delta_max:
        ledger.expended = True
        ledger.expended_at = j + 1
    return ledger


def teacher_policy(
    ledger: PrivacyLedger,
    mech: Optional[DirichletMechanism],
    pi_true: np.ndarray,
    rng: np.random.Generator,
    j: Optional[int] = None,
) -> np.ndarray:
    """What the teacher reveals for a (B, m) or (m,) batch of true policies.

    Once the ledger is expended (as of rollout ``j`` when given) the output
    is a flat-Dirichlet draw; only the shape of ``pi_true`` is used then.
    """
    shape = np.shape(pi_true)
    silent = ledger.expended if j is None else ledger.silent(j)
    if silent or mech is None:
        batch = 1 if len(shape) == 1 else shape[0]
        out = flat_dirichlet(shape[-1], batch, rng)
        return out[0] if len(shape) == 1 else out
    return mech.sample_batch(pi_true, rng)


class Pricer:
    """Caches one certificate per distinct k; delta only depends on (k, eta, tau, m)."""

    def __init__(self, template: MechanismConfig, delta_accuracy: float, confidence: float, rng: np.random.Generator):
        self.template = template
        self.delta_accuracy = delta_accuracy
        self.confidence = confidence
        self.rng = rng
        self._cache: Dict[float, PrivacyParams] = {}

    def __call__(self, k: float) -> PrivacyParams:
        if k not in self._cache:
            self._cache[k] = price(self.template.with_k(k), self.delta_accuracy, self.confidence, self.rng)
        return self._cache[k]
