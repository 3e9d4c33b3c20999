"""Command line entry point.

    privkick mech sample --k 5 --pi 0.3,0.7 --n 10 --seed 0
    privkick mech price --k 5 --eta 0.001 --tau 0.01 --b 0.05 --L 1 --m 5
    privkick exp run --config configs/private_kickstart.json
    privkick exp summarize --dir out/private_kickstart
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import List, Optional

import numpy as np

from privkick.calculus import MechanismConfig, price
from privkick.dirichlet import DirichletMechanism, make_rng
from privkick.experiments import ExperimentConfig, run_experiment, summarize_dir
from privkick.simplex import validate


def _floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_mech_sample(args) -> int:
    raw = _floats(args.pi)
    eta = args.eta if args.eta is not None else min(raw)
    pi = validate(raw, eta)
    mech = DirichletMechanism(args.k, eta, pi.m)
    z = mech.sample_batch(np.broadcast_to(pi.entries, (args.n, pi.m)), make_rng(args.seed))
    w = csv.writer(sys.stdout, lineterminator="\n")
    for row in z:
        w.writerow([repr(float(v)) for v in row])
    return 0


def cmd_mech_price(args) -> int:
    cfg = MechanismConfig(k=args.k, eta=args.eta, tau=args.tau, b=args.b, L=args.L, m=args.m)
    cert = price(cfg, args.t, args.conf, make_rng(args.seed), method=args.method)
    print(json.dumps(cert.certificate()))
    return 0


def cmd_exp_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.out is not None:
        cfg.out_dir = args.out
    if args.workers is not None:
        cfg.workers = args.workers
    summaries = run_experiment(cfg)
    for name, s in summaries.items():
        print(f"{name}: final median {s.median[-1]:.3f} over {s.n_seeds} seeds")
    return 0


def cmd_exp_summarize(args) -> int:
    summaries = summarize_dir(args.dir)
    print(json.dumps({k: v.to_dict() for k, v in summaries.items()}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="privkick")
    sub = p.add_subparsers(dest="group", required=True)

    mech = sub.add_parser("mech", help="Dirichlet mechanism").add_subparsers(dest="cmd", required=True)
    s = mech.add_parser("sample", help="draw Dir(k pi) samples as CSV rows")
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--pi", required=True, help="comma-separated simplex point")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--eta", type=float, default=None, help="floor certified for pi (default: min(pi))")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_mech_sample)

    pr = mech.add_parser("price", help="(epsilon, delta) certificate as JSON")
    pr.add_argument("--k", type=float, required=True)
    pr.add_argument("--eta", type=float, required=True)
    pr.add_argument("--tau", type=float, required=True)
    pr.add_argument("--b", type=float, required=True)
    pr.add_argument("--L", type=float, required=True)
    pr.add_argument("--m", type=int, required=True)
    pr.add_argument("--t", type=float, default=0.01, help="delta half-width target")
    pr.add_argument("--conf", type=float, default=0.95)
    pr.add_argument("--method", choices=("auto", "mc"), default="auto")
    pr.add_argument("--seed", type=int, default=0)
    pr.set_defaults(func=cmd_mech_price)

    exp = sub.add_parser("exp", help="experiments").add_subparsers(dest="cmd", required=True)
    r = exp.add_parser("run")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None, help="override out_dir")
    r.add_argument("--workers", type=int, default=None)
    r.set_defaults(func=cmd_exp_run)
    sm = exp.add_parser("summarize")
    sm.add_argument("--dir", required=True)
    sm.set_defaults(func=cmd_exp_summarize)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
