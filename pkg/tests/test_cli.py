import csv
import io
import json

import numpy as np
import pytest

from privkick.cli import build_parser, main

TINY = {
    "id": "teacher_vs_small",
    "arms": [{"name": "big", "hidden": [8, 8]}, {"name": "small", "hidden": [4, 4]}],
    "seeds": [0],
    "epochs": 2,
    "layout": {"max_steps": 20},
    "ppo": {"steps_per_epoch": 64, "n_envs": 4, "pi_iters": 2, "v_iters": 2},
}


def run(capsys, *argv):
    assert main(list(argv)) == 0
    return capsys.readouterr().out


def test_mech_sample_rows_on_simplex(capsys):
    out = run(capsys, "mech", "sample", "--k", "5", "--pi", "0.3,0.7", "--n", "50", "--seed", "1")
    rows = np.array([[float(x) for x in r] for r in csv.reader(io.StringIO(out))])
    assert rows.shape == (50, 2)
    assert np.allclose(rows.sum(axis=1), 1.0) and (rows > 0).all()
    assert out == run(capsys, "mech", "sample", "--k", "5", "--pi", "0.3,0.7", "--n", "50", "--seed", "1")


def test_mech_sample_rejects_bad_pi():
    with pytest.raises(ValueError):
        main(["mech", "sample", "--k", "5", "--pi", "0.3,0.8"])


def test_mech_price_certificate(capsys):
    out = run(
        capsys, "mech", "price", "--k", "5", "--eta", "0.1", "--tau", "0.01", "--b", "0.1", "--L", "1", "--m", "2",
    )
    cert = json.loads(out)
    assert cert["epsilon"] == pytest.approx(5.713082839851597677537331, rel=1e-9)
    assert 0.0 <= cert["delta"] <= 1.0


def test_mech_price_mc_method(capsys):
    cert = json.loads(
        run(
            capsys, "mech", "price", "--k", "5", "--eta", "0.1", "--tau", "0.01", "--b", "0.1", "--L", "1",
            "--m", "2", "--method", "mc", "--t", "0.05",
        )
    )
    exact = json.loads(
        run(capsys, "mech", "price", "--k", "5", "--eta", "0.1", "--tau", "0.01", "--b", "0.1", "--L", "1", "--m", "2")
    )
    assert abs(cert["delta"] - exact["delta"]) <= 0.05


def test_exp_run_and_summarize(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(TINY))
    out = run(capsys, "exp", "run", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert "big:" in out and "small:" in out
    assert (tmp_path / "o" / "big" / "seed_0.csv").is_file()
    summary = json.loads(run(capsys, "exp", "summarize", "--dir", str(tmp_path / "o")))
    assert set(summary) == {"big", "small"} and summary["big"]["n_seeds"] == 1


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["mech"])
