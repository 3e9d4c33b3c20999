"""Clipped-surrogate policy optimization with GAE, on lockstepped env copies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from privkick.env import FeatureGrid, GridLayout
from privkick.nets import (
    DEFAULT_ETA,
    Adam,
    NetworkParameters,
    backward,
    init_params,
    policy_forward,
    value_forward,
    value_forward_cached,
)

CSV_COLUMNS = (
    "epoch",
    "env_steps",
    "median_return",
    "mean_return",
    "clip_frac",
    "entropy",
    "penalty_mean",
    "gate_active_frac",
    "k_current",
    "eps_total",
    "delta_total",
)


class NonFiniteLoss(FloatingPointError):
    pass


@dataclass
class PpoConfig:
    clip: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    steps_per_epoch: int = 1000
    n_envs: int = 8
    pi_iters: int = 80
    v_iters: int = 80
    pi_lr: float = 3e-4
    v_lr: float = 1e-3
    max_kl: float = 0.015
    ent_coef: float = 0.0
    hidden: Sequence[int] = (64, 64)
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        if not 0.0 < self.clip < 1.0:
            raise ValueError("clip ratio must lie in (0, 1)")
        if not (0.0 < self.gamma <= 1.0 and 0.0 < self.gae_lambda <= 1.0):
            raise ValueError("gamma and gae_lambda must lie in (0, 1]")
        if self.steps_per_epoch % self.n_envs:
            raise ValueError("steps_per_epoch must be a multiple of n_envs")
        self.hidden = tuple(self.hidden)


@dataclass
class Rollout:
    """Time-major (S, N) arrays for N env copies run for S steps each."""

    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    logp: np.ndarray
    values: np.ndarray
    next_values: np.ndarray
    ends: np.ndarray  # episode boundary after this step (goal or time limit)
    pi: np.ndarray  # behaviour policy, (S, N, m)
    teacher: Optional[np.ndarray] = None  # revealed teacher policy, (S, N, m)
    gate: Optional[np.ndarray] = None
    episode_returns: List[float] = field(default_factory=list)

    @property
    def T(self) -> int:
        return self.actions.size

    def flat(self, name: str) -> np.ndarray:
        a = getattr(self, name)
        return a.reshape((self.T,) + a.shape[2:])


def sample_actions(pi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(pi.shape[0])
    a = (np.cumsum(pi, axis=1) < u[:, None]).sum(axis=1)
    return np.minimum(a, pi.shape[1] - 1)


def collect_rollout(
    envs: Sequence[FeatureGrid],
    policy: NetworkParameters,
    value: NetworkParameters,
    T: int,
    teacher=None,
    rng: Optional[np.random.Generator] = None,
) -> Rollout:
    """Run the policy for ``T`` total steps, split evenly over ``envs``.

    Every env is reset at the start; an episode cut off by the end of the
    rollout is bootstrapped from the value of its last observation and its
    return is not reported.  ``teacher``, when given, is called on each batch
    of observations and its answers stored alongside.
    """
    n = len(envs)
    if T < 1 or T % n:
        raise ValueError(f"T={T} must be a positive multiple of {n} envs")
    S = T // n
    m = policy.out_dim
    obs = np.stack([e.reset(rng) for e in envs])
    d = obs.shape[1]
    R = Rollout(
        obs=np.empty((S, n, d)),
        actions=np.empty((S, n), dtype=np.int64),
        rewards=np.empty((S, n)),
        logp=np.empty((S, n)),
        values=np.empty((S, n)),
        next_values=np.zeros((S, n)),
        ends=np.zeros((S, n), dtype=bool),
        pi=np.empty((S, n, m)),
        teacher=np.empty((S, n, m)) if teacher is not None else None,
    )
    ep_ret = np.zeros(n)
    for t in range(S):
        pi = policy_forward(policy, obs).pi
        a = sample_actions(pi, rng)
        R.obs[t] = obs
        R.pi[t] = pi
        R.actions[t] = a
        R.logp[t] = np.log(pi[np.arange(n), a])
        R.values[t] = value_forward(value, obs)
        if teacher is not None:
            R.teacher[t] = teacher(obs)
        nxt = np.empty_like(obs)
        cut = []
        for i, env in enumerate(envs):
            res = env.step(int(a[i]))
            R.rewards[t, i] = res.reward
            ep_ret[i] += res.reward
            if res.done:
                R.ends[t, i] = True
                if res.truncated:
                    cut.append((i, res.observation))
                R.episode_returns.append(float(ep_ret[i]))
                ep_ret[i] = 0.0
                nxt[i] = env.reset(rng)
            else:
                nxt[i] = res.observation
        if cut:
            idx = [i for i, _ in cut]
            R.next_values[t, idx] = value_forward(value, np.stack([o for _, o in cut]))
        obs = nxt
    R.next_values[:-1][~R.ends[:-1]] = R.values[1:][~R.ends[:-1]]
    last = ~R.ends[-1]
    R.next_values[-1][last] = value_forward(value, obs)[last]
    return R


def gae_advantages(r: Rollout, gamma: float, lam: float):
    """Generalized advantage estimates and value targets, shaped like ``r.rewards``.

    ``next_values`` already holds 0 after a goal and the bootstrap value after
    a time-limit cut; ``ends`` stops the recursion at episode boundaries.
    """
    delta = r.rewards + gamma * r.next_values - r.values
    adv = np.zeros_like(delta)
    running = np.zeros(delta.shape[1:])
    for t in range(delta.shape[0] - 1, -1, -1):
        running = delta[t] + gamma * lam * np.where(r.ends[t], 0.0, running)
        adv[t] = running
    return adv, adv + r.values


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    logp_old: np.ndarray
    adv: np.ndarray
    ret: np.ndarray
    teacher: Optional[np.ndarray] = None


def make_batch(r: Rollout, cfg: PpoConfig) -> Batch:
    adv, ret = gae_advantages(r, cfg.gamma, cfg.gae_lambda)
    adv = adv.reshape(-1)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    return Batch(
        obs=r.flat("obs"),
        actions=r.flat("actions"),
        logp_old=r.flat("logp"),
        adv=adv,
        ret=ret.reshape(-1),
        teacher=r.flat("teacher") if r.teacher is not None else None,
    )


# A penalty maps the current policy (B, m) to (mean value, dL/dpi, per-row gate).
Penalty = Callable[[np.ndarray], tuple]


def policy_loss(policy: NetworkParameters, batch: Batch, cfg: PpoConfig, penalty: Optional[Penalty] = None):
    """Loss to minimise, its parameter gradients, and diagnostics."""
    out = policy_forward(policy, batch.obs)
    pi = out.pi
    B = pi.shape[0]
    rows = np.arange(B)
    pa = pi[rows, batch.actions]
    logp = np.log(pa)
    ratio = np.exp(logp - batch.logp_old)
    adv = batch.adv
    clipped = np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip)
    surr = np.minimum(ratio * adv, clipped * adv)
    # the unclipped branch carries gradient unless the clip is binding
    active = ~(((adv > 0) & (ratio > 1.0 + cfg.clip)) | ((adv < 0) & (ratio < 1.0 - cfg.clip)))
    logpi = np.log(pi)
    ent = -np.sum(pi * logpi, axis=1)
    loss = -surr.mean() - cfg.ent_coef * ent.mean()
    g = np.zeros_like(pi)
    g[rows, batch.actions] = -(adv * active / np.exp(batch.logp_old)) / B
    if cfg.ent_coef:
        g += cfg.ent_coef * (logpi + 1.0) / B
    info = {
        "kl": float(np.mean(batch.logp_old - logp)),
        "clip_frac": float(np.mean(np.abs(ratio - 1.0) > cfg.clip)),
        "entropy": float(ent.mean()),
        "penalty_mean": None,
        "gate_active_frac": None,
    }
    if penalty is not None:
        p_val, p_grad, gate = penalty(pi)
        info["penalty_mean"] = p_val
        info["gate_active_frac"] = float(gate.mean())
        if gate.any():
            loss = loss + p_val
            g = g + p_grad
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"policy loss is {loss}")
    return float(loss), backward(policy, out, g), info


def value_loss(value: NetworkParameters, batch: Batch):
    v, cache = value_forward_cached(value, batch.obs)
    err = v - batch.ret
    loss = float(np.mean(err * err))
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"value loss is {loss}")
    return loss, backward(value, cache, 2.0 * err / err.size)


@dataclass
class Agent:
    policy: NetworkParameters
    value: NetworkParameters
    pi_opt: Adam
    v_opt: Adam

    @classmethod
    def create(cls, obs_dim: int, m: int, cfg: PpoConfig, rng: np.random.Generator) -> "Agent":
        policy = init_params([obs_dim, *cfg.hidden, m], rng, "policy", cfg.eta)
        value = init_params([obs_dim, *cfg.hidden, 1], rng, "linear")
        return cls(policy, value, Adam(policy, cfg.pi_lr), Adam(value, cfg.v_lr))


def ppo_update(agent: Agent, batch: Batch, cfg: PpoConfig, penalty: Optional[Penalty] = None) -> dict:
    """Up to ``pi_iters`` full-batch policy steps, stopping early on KL, then value regression."""
    first = None
    for _ in range(cfg.pi_iters):
        loss, grads, info = policy_loss(agent.policy, batch, cfg, penalty)
        if first is None:
            first = dict(info, loss=loss)
        if info["kl"] > cfg.max_kl:
            break
        agent.pi_opt.step(agent.policy, grads)
    for _ in range(cfg.v_iters):
        vl, vgrads = value_loss(agent.value, batch)
        agent.v_opt.step(agent.value, vgrads)
    first["clip_frac"] = info["clip_frac"]
    return first


def make_envs(layout: GridLayout, n: int) -> List[FeatureGrid]:
    return [FeatureGrid(layout) for _ in range(n)]


def epoch_row(epoch: int, cfg: PpoConfig, rollout: Rollout, diag: dict, **extra) -> dict:
    rets = np.asarray(rollout.episode_returns)
    row = {
        "epoch": epoch,
        "env_steps": (epoch + 1) * cfg.steps_per_epoch,
        "median_return": float(np.median(rets)) if rets.size else None,
        "mean_return": float(np.mean(rets)) if rets.size else None,
        "clip_frac": diag["clip_frac"],
        "entropy": diag["entropy"],
        "penalty_mean": diag.get("penalty_mean"),
        "gate_active_frac": diag.get("gate_active_frac"),
        "k_current": None,
        "eps_total": None,
        "delta_total": None,
    }
    row.update(extra)
    return row


def run_ppo(
    layout: GridLayout,
    cfg: PpoConfig,
    epochs: int,
    init_rng: np.random.Generator,
    rollout_rng: np.random.Generator,
) -> tuple[Agent, List[dict]]:
    """Plain policy optimization from scratch; returns the agent and per-epoch rows."""
    envs = make_envs(layout, cfg.n_envs)
    agent = Agent.create(layout.obs_dim, envs[0].m, cfg, init_rng)
    rows = []
    for epoch in range(epochs):
        r = collect_rollout(envs, agent.policy, agent.value, cfg.steps_per_epoch, None, rollout_rng)
        diag = ppo_update(agent, make_batch(r, cfg), cfg)
        rows.append(epoch_row(epoch, cfg, r, diag))
    return agent, rows
