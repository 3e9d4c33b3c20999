"""Desk-scale versions of the four kickstarting experiments.

Every experiment is a list of *arms* (scratch PPO, exactly-kickstarted, or
privately-kickstarted students) run over a list of seeds.  All randomness
for seed ``s`` comes from ``make_rng(master_seed, s, label)`` with the
labels below, so a run depends on nothing but (master seed, seed, arm
settings) and reordering the seed list changes nothing.  Arms share the
streams of a seed, which pairs them for comparison.

Layout of an output directory::

    out/<arm>/seed_<s>.csv          one row per epoch, columns CSV_COLUMNS
    out/<arm>/seed_<s>_ledger.json  privacy ledger (private arms only)
    out/<arm>/summary.json          pointwise median / p15 / p85
    out/summary.json                all arms
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from privkick.accountant import KSchedule
from privkick.dirichlet import make_rng
from privkick.env import GridLayout
from privkick.kickstart import KickstartConfig, run_student
from privkick.nets import load_checkpoint, save_checkpoint
from privkick.ppo import CSV_COLUMNS, PpoConfig, run_ppo

EXPERIMENT_IDS = ("teacher_vs_small", "kickstart_noprivacy", "private_kickstart", "privacy_unaware")
ARM_KINDS = ("scratch", "exact", "private")

# sub-stream labels under (master_seed, seed)
INIT, ROLLOUT, MECH, PRICE = 0, 1, 2, 3


class MissingCheckpoint(FileNotFoundError):
    pass


class MisalignedEpochs(ValueError):
    pass


# Keys an arm may override; everything else in an arm dict is rejected.
ARM_KEYS = (
    "name",
    "kind",
    "seeds",
    "hidden",
    "lambda",
    "beta",
    "balance",
    "k0",
    "vanish_c",
    "k_min",
    "eps_max",
    "delta_max",
)


@dataclass
class ExperimentConfig:
    id: str
    arms: List[dict]
    seeds: List[int] = field(default_factory=lambda: list(range(30)))
    epochs: int = 100
    master_seed: int = 0
    out_dir: str = "out"
    layout: dict = field(default_factory=dict)
    ppo: dict = field(default_factory=dict)
    teacher_hidden: Sequence[int] = (64, 64)
    student_hidden: Sequence[int] = (32, 32)
    teacher_checkpoint: Optional[str] = None
    # kickstart defaults, overridable per arm
    lam: float = 0.5
    beta: float = 0.1
    balance: float = 1.0
    k0: float = 5.0
    vanish_c: float = 0.3
    k_min: float = 0.0
    eps_max: Optional[float] = None
    delta_max: Optional[float] = None
    # mechanism pricing
    tau: float = 0.01
    b: float = 0.05
    delta_accuracy: float = 0.01
    confidence: float = 0.95
    workers: int = 1

    def __post_init__(self):
        if self.id not in EXPERIMENT_IDS:
            raise ValueError(f"unknown experiment id {self.id!r}; expected one of {EXPERIMENT_IDS}")
        if not self.seeds:
            raise ValueError("seed list is empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("duplicate seeds")
        if not self.arms:
            raise ValueError("no arms")
        names = [a.get("name") for a in self.arms]
        if None in names or len(set(names)) != len(names):
            raise ValueError("every arm needs a unique name")
        for a in self.arms:
            extra = set(a) - set(ARM_KEYS)
            if extra:
                raise ValueError(f"arm {a['name']!r}: unknown keys {sorted(extra)}")
            if a.get("kind", "scratch") not in ARM_KINDS:
                raise ValueError(f"arm {a['name']!r}: kind must be one of {ARM_KINDS}")
            if "seeds" in a and (not a["seeds"] or len(set(a["seeds"])) != len(a["seeds"])):
                raise ValueError(f"arm {a['name']!r}: seed list must be non-empty and unique")
        self.teacher_hidden = tuple(self.teacher_hidden)
        self.student_hidden = tuple(self.student_hidden)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["teacher_hidden"] = list(self.teacher_hidden)
        d["student_hidden"] = list(self.student_hidden)
        return d

    def grid(self) -> GridLayout:
        return GridLayout.from_dict(self.layout)

    def arm_seeds(self, arm: dict) -> List[int]:
        return list(arm.get("seeds", self.seeds))

    def arm_setting(self, arm: dict, key: str):
        attr = "lam" if key == "lambda" else key
        return arm.get(key, getattr(self, attr))


@dataclass
class CurveSummary:
    epochs: List[int]
    median: List[float]
    p15: List[float]
    p85: List[float]
    n_seeds: int

    def to_dict(self) -> dict:
        return asdict(self)


def nearest_rank(sorted_values: np.ndarray, p: float) -> float:
    """The smallest value with at least p percent of the data at or below it."""
    n = len(sorted_values)
    rank = max(1, math.ceil(p / 100.0 * n - 1e-9))
    return float(sorted_values[rank - 1])


def summarize_curves(curves: Sequence[Sequence[float]], epochs: Sequence[int]) -> CurveSummary:
    """Pointwise median, 15th and 85th nearest-rank percentiles over seeds."""
    arr = np.asarray(curves, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] != len(epochs):
        raise MisalignedEpochs(f"curves of shape {arr.shape} do not match {len(epochs)} epochs")
    med, lo, hi = [], [], []
    for col in arr.T:
        s = np.sort(col[~np.isnan(col)])
        if s.size == 0:
            med.append(math.nan), lo.append(math.nan), hi.append(math.nan)
            continue
        med.append(float(np.median(s)))
        lo.append(nearest_rank(s, 15))
        hi.append(nearest_rank(s, 85))
    return CurveSummary(list(epochs), med, lo, hi, arr.shape[0])


def write_csv(path, rows: List[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(["" if r[c] is None else repr(r[c]) for c in CSV_COLUMNS])


def read_csv(path) -> List[dict]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {rd.fieldnames}")
        out = []
        for r in rd:
            row = {c: (None if r[c] == "" else float(r[c])) for c in CSV_COLUMNS}
            row["epoch"] = int(row["epoch"])
            row["env_steps"] = int(row["env_steps"])
            out.append(row)
        return out


def summarize(paths: Sequence, column: str = "median_return") -> CurveSummary:
    """CurveSummary of ``column`` over per-seed CSV files."""
    if not paths:
        raise MisalignedEpochs("no seed CSVs to summarize")
    runs = [read_csv(p) for p in paths]
    epochs = [r["epoch"] for r in runs[0]]
    for p, run in zip(paths, runs):
        if [r["epoch"] for r in run] != epochs:
            raise MisalignedEpochs(f"{p} has different epochs from {paths[0]}")
    curves = [[math.nan if r[column] is None else r[column] for r in run] for run in runs]
    return summarize_curves(curves, epochs)


def summarize_dir(out_dir) -> Dict[str, CurveSummary]:
    """Summaries for every arm directory under ``out_dir``, written back as summary.json files."""
    out_dir = Path(out_dir)
    result = {}
    for arm_dir in sorted(p for p in out_dir.iterdir() if p.is_dir()):
        paths = sorted(arm_dir.glob("seed_*.csv"), key=lambda p: int(p.stem.split("_")[1]))
        if not paths:
            continue
        s = summarize(paths)
        (arm_dir / "summary.json").write_text(json.dumps(s.to_dict(), indent=1))
        result[arm_dir.name] = s
    (out_dir / "summary.json").write_text(json.dumps({k: v.to_dict() for k, v in result.items()}, indent=1))
    return result


def seed_rngs(master_seed: int, seed: int) -> dict:
    return {
        "init": make_rng(master_seed, seed, INIT),
        "rollout": make_rng(master_seed, seed, ROLLOUT),
        "mech": make_rng(master_seed, seed, MECH),
        "price": make_rng(master_seed, seed, PRICE),
    }


def _budget(x):
    return math.inf if x is None else float(x)


def run_arm_seed(cfg: ExperimentConfig, arm: dict, seed: int, teacher=None):
    """One (arm, seed) run; returns (rows, ledger dict or None, agent)."""
    layout = cfg.grid()
    kind = arm.get("kind", "scratch")
    rngs = seed_rngs(cfg.master_seed, seed)
    hidden = tuple(arm.get("hidden", cfg.student_hidden))
    ppo_cfg = PpoConfig(hidden=hidden, **cfg.ppo)
    if kind == "scratch":
        agent, rows = run_ppo(layout, ppo_cfg, cfg.epochs, rngs["init"], rngs["rollout"])
        return rows, None, agent
    ks = KickstartConfig(
        lam=cfg.arm_setting(arm, "lambda"),
        beta=cfg.arm_setting(arm, "beta"),
        balance=cfg.arm_setting(arm, "balance"),
    )
    schedule = None
    if kind == "private":
        schedule = KSchedule(cfg.arm_setting(arm, "k0"), cfg.arm_setting(arm, "vanish_c"), cfg.arm_setting(arm, "k_min"))
    run = run_student(
        teacher,
        layout,
        ppo_cfg,
        ks,
        cfg.epochs,
        rngs,
        schedule=schedule,
        eps_max=_budget(cfg.arm_setting(arm, "eps_max")),
        delta_max=_budget(cfg.arm_setting(arm, "delta_max")),
        tau=cfg.tau,
        b=cfg.b,
        delta_accuracy=cfg.delta_accuracy,
        confidence=cfg.confidence,
    )
    return run.rows, (run.ledger.to_dict() if run.ledger is not None else None), run.agent


def load_teacher(cfg: ExperimentConfig):
    if cfg.teacher_checkpoint is None or not Path(cfg.teacher_checkpoint).is_file():
        raise MissingCheckpoint(f"experiment {cfg.id!r} needs a teacher checkpoint, got {cfg.teacher_checkpoint!r}")
    return load_checkpoint(cfg.teacher_checkpoint)["policy"]


def _job(args):
    cfg, arm, seed, teacher = args
    rows, ledger, agent = run_arm_seed(cfg, arm, seed, teacher)
    return rows, ledger, {"policy": agent.policy, "value": agent.value}


def _converged_score(rows: List[dict], tail: int = 10) -> float:
    vals = [r["median_return"] for r in rows[-tail:] if r["median_return"] is not None]
    return float(np.mean(vals)) if vals else -math.inf


def run_experiment(cfg: ExperimentConfig) -> Dict[str, CurveSummary]:
    """Run every (arm, seed) pair and write CSVs, ledgers and summaries under ``cfg.out_dir``.

    For ``teacher_vs_small`` the networks of the arm named in the first
    position are also checkpointed; the best seed (mean median return over
    the last 10 epochs) is written to ``out_dir/teacher.json``.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    teacher = None
    if any(a.get("kind", "scratch") != "scratch" for a in cfg.arms):
        teacher = load_teacher(cfg)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1))
    jobs = [(cfg, arm, seed, teacher) for arm in cfg.arms for seed in cfg.arm_seeds(arm)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    best = None
    for (_, arm, seed, _), (rows, ledger, nets) in zip(jobs, results):
        arm_dir = out / arm["name"]
        arm_dir.mkdir(exist_ok=True)
        write_csv(arm_dir / f"seed_{seed}.csv", rows)
        if ledger is not None:
            (arm_dir / f"seed_{seed}_ledger.json").write_text(json.dumps(ledger, indent=1))
        if cfg.id == "teacher_vs_small" and arm is cfg.arms[0]:
            score = _converged_score(rows)
            if best is None or score > best[0]:
                best = (score, seed, nets)
    if best is not None:
        save_checkpoint(out / "teacher.json", best[2])
        (out / "teacher_meta.json").write_text(json.dumps({"seed": best[1], "score": best[0]}))
    return summarize_dir(out)
