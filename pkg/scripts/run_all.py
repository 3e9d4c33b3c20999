"""Run the four experiments in order: the teacher run first, then the three student runs.

    python3 scripts/run_all.py [--workers N] [--out out]
"""

import argparse
from pathlib import Path

from privkick.experiments import ExperimentConfig, run_experiment

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
ORDER = ("teacher_vs_small", "kickstart_noprivacy", "private_kickstart", "privacy_unaware")


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="out")
    args = p.parse_args()
    teacher = str(Path(args.out) / "teacher_vs_small" / "teacher.json")
    for name in ORDER:
        cfg = ExperimentConfig.load(CONFIGS / f"{name}.json")
        cfg.out_dir = str(Path(args.out) / name)
        cfg.workers = args.workers
        cfg.teacher_checkpoint = teacher
        for arm, s in run_experiment(cfg).items():
            print(f"{name}/{arm}: final median {s.median[-1]:.3f} over {s.n_seeds} seeds", flush=True)


if __name__ == "__main__":
    main()
