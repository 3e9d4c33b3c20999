"""Privacy-aware kickstarting: a gated 2-norm pull toward the revealed teacher policy.

The student only pays for its distance to a revealed teacher policy when
that distance exceeds ``alpha = lam * concentration_radius(k, beta)``;
anything inside the ball is attributed to mechanism noise and ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from privkick.accountant import KSchedule, Pricer, PrivacyLedger, record, step_schedule, teacher_policy
from privkick.calculus import MechanismConfig, lipschitz_upper_bound
from privkick.dirichlet import DirichletMechanism, concentration_radius
from privkick.env import GridLayout
from privkick.nets import NetworkParameters, policy_forward
from privkick.ppo import (
    Agent,
    Batch,
    PpoConfig,
    collect_rollout,
    epoch_row,
    make_batch,
    make_envs,
    policy_loss,
    ppo_update,
)
from privkick.simplex import DimensionMismatch


class MissingTeacherData(ValueError):
    pass


@dataclass
class KickstartConfig:
    lam: float = 0.5
    beta: float = 0.1
    balance: float = 1.0
    smooth: float = 1e-8

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")


def alpha_lambda(cfg: KickstartConfig, k_current: float) -> float:
    if k_current < 0:
        raise ValueError("k must be non-negative")
    return cfg.lam * concentration_radius(k_current, cfg.beta)


def penalty(cfg: KickstartConfig, pi_student, pi_teacher, k_current: float):
    """Gated distance for one state or a batch; returns (value, gate)."""
    s = np.asarray(pi_student, dtype=np.float64)
    t = np.asarray(pi_teacher, dtype=np.float64)
    if s.shape != t.shape:
        raise DimensionMismatch(f"{s.shape} vs {t.shape}")
    d = np.linalg.norm(s - t, axis=-1)
    gate = d > alpha_lambda(cfg, k_current)
    value = np.where(gate, d, 0.0)
    if value.ndim == 0:
        return float(value), bool(gate)
    return value, gate


def make_penalty(cfg: KickstartConfig, teacher: np.ndarray, k_current: float):
    """Penalty callback for ``ppo.policy_loss``.

    The gate is re-evaluated at every call but carries no gradient; the norm
    is smoothed as sqrt(d^2 + s) - sqrt(s).
    """
    alpha = alpha_lambda(cfg, k_current)
    root_s = math.sqrt(cfg.smooth)
    scale = cfg.balance / teacher.shape[0]

    def fn(pi: np.ndarray):
        diff = pi - teacher
        d2 = np.einsum("ij,ij->i", diff, diff)
        gate = np.sqrt(d2) > alpha
        smooth = np.sqrt(d2 + cfg.smooth)
        value = scale * float(np.sum(np.where(gate, smooth - root_s, 0.0)))
        grad = (scale * gate / smooth)[:, None] * diff
        return value, grad, gate

    return fn


def student_loss(params: NetworkParameters, batch: Batch, ppo_cfg: PpoConfig, ks_cfg: KickstartConfig, k_current: float):
    """Negated augmented objective: clipped surrogate plus the gated penalty."""
    if batch.teacher is None:
        raise MissingTeacherData("rollout carries no teacher policies")
    return policy_loss(params, batch, ppo_cfg, make_penalty(ks_cfg, batch.teacher, k_current))


class TeacherSource:
    """Answers a batch of observations with the teacher's revealed policy.

    ``exact=True`` hands over the true policy (no mechanism, no ledger).
    """

    def __init__(
        self,
        params: NetworkParameters,
        rng: np.random.Generator,
        ledger: Optional[PrivacyLedger] = None,
        exact: bool = False,
    ):
        self.params = params
        self.rng = rng
        self.ledger = ledger if ledger is not None else PrivacyLedger()
        self.exact = exact
        self.mech: Optional[DirichletMechanism] = None
        self.k = math.inf if exact else 0.0
        self.j: Optional[int] = None

    def start_rollout(self, j: int, k: float) -> None:
        self.j = j
        self.k = k
        self.mech = DirichletMechanism(k, self.params.eta, self.params.out_dim) if k > 0 else None

    @property
    def silent(self) -> bool:
        return self.mech is None or (self.ledger.expended if self.j is None else self.ledger.silent(self.j))

    def __call__(self, obs: np.ndarray) -> np.ndarray:
        if self.exact:
            return policy_forward(self.params, obs).pi
        if self.silent:
            # the true policy is never computed once the teacher is silent
            placeholder = np.empty((obs.shape[0], self.params.out_dim))
            return teacher_policy(self.ledger, None, placeholder, self.rng, self.j)
        return teacher_policy(self.ledger, self.mech, policy_forward(self.params, obs).pi, self.rng, self.j)


@dataclass
class StudentRun:
    rows: List[dict]
    ledger: Optional[PrivacyLedger]
    agent: Agent


def run_student(
    teacher: NetworkParameters,
    layout: GridLayout,
    ppo_cfg: PpoConfig,
    ks_cfg: KickstartConfig,
    epochs: int,
    rngs: dict,
    schedule: Optional[KSchedule] = None,
    eps_max: float = math.inf,
    delta_max: float = math.inf,
    tau: float = 0.01,
    b: float = 0.05,
    delta_accuracy: float = 0.01,
    confidence: float = 0.95,
) -> StudentRun:
    """Train a student against a teacher checkpoint.

    With ``schedule=None`` the teacher answers exactly (conventional
    kickstarting).  Otherwise each rollout ``j`` runs: k_j from the schedule,
    price at k_j, record in the ledger, collect with the revealed teacher
    policies, update.  ``rngs`` holds the ``init``, ``rollout``, ``mech`` and
    ``price`` streams.
    """
    envs = make_envs(layout, ppo_cfg.n_envs)
    agent = Agent.create(layout.obs_dim, envs[0].m, ppo_cfg, rngs["init"])
    exact = schedule is None
    ledger = None if exact else PrivacyLedger(eps_max, delta_max)
    source = TeacherSource(teacher, rngs["mech"], ledger, exact=exact)
    pricer = None
    if not exact:
        template = MechanismConfig(
            k=schedule.k0, eta=teacher.eta, tau=tau, b=b, L=lipschitz_upper_bound(teacher), m=teacher.out_dim
        )
        pricer = Pricer(template, delta_accuracy, confidence, rngs["price"])
    rows = []
    for j in range(epochs):
        extra = {}
        if exact:
            k_now = math.inf
        else:
            k_j = step_schedule(schedule, j) if not ledger.expended else 0.0
            if k_j > 0:
                record(ledger, j, k_j, pricer(k_j))
            else:
                record(ledger, j, 0.0, None)
            k_now = 0.0 if ledger.silent(j) else k_j
            source.start_rollout(j, k_now)
            extra = {"k_current": k_now, "eps_total": ledger.epsilon_total, "delta_total": ledger.delta_total}
        r = collect_rollout(envs, agent.policy, agent.value, ppo_cfg.steps_per_epoch, source, rngs["rollout"])
        batch = make_batch(r, ppo_cfg)
        diag = ppo_update(agent, batch, ppo_cfg, make_penalty(ks_cfg, batch.teacher, k_now))
        rows.append(epoch_row(j, ppo_cfg, r, diag, **extra))
    return StudentRun(rows, ledger, agent)
