import filecmp
import json
import os
import subprocess
import sys

import pytest

from courtside.cli import main
from courtside.pipeline import STAGES, bundled_path


def files(d):
    return sorted(p.name for p in d.iterdir())


def same_tree(a, b):
    assert files(a) == files(b)
    _, mismatch, errors = filecmp.cmpfiles(a, b, files(a), shallow=False)
    assert mismatch == [] and errors == []


def write_cfg(tmp_path, **values):
    cfg = {"input": str(bundled_path("four_factors.csv")), "target": "W", **values}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


# --- run ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def ff_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ff")
    assert main(["run", "four_factors.cfg", "--out-dir", str(out)]) == 0
    return out


def test_four_factors_smoke(ff_run):
    rep = json.loads((ff_run / "report.json").read_text())
    assert rep["model"] == "ols"
    assert "r2" in rep["metrics"]
    assert (ff_run / "weight_plot.svg").exists()
    assert "weight_plot.svg" in rep["plots"]


def test_report_embeds_config_and_seed(ff_run):
    rep = json.loads((ff_run / "report.json").read_text())
    raw = json.loads(bundled_path("four_factors.cfg").read_text())
    assert rep["seed"] == raw["seed"]
    for k, v in raw.items():
        assert rep["config"][k] == v


def test_rerun_is_byte_identical(ff_run, tmp_path):
    assert main(["run", "four_factors.cfg", "--out-dir", str(tmp_path)]) == 0
    same_tree(ff_run, tmp_path)


def test_stage_subcommands_match_run(ff_run, tmp_path):
    for stage in STAGES:
        assert main([stage, "four_factors.cfg", "--out-dir", str(tmp_path)]) == 0
    same_tree(ff_run, tmp_path)


def test_global_flags_before_subcommand(ff_run, tmp_path):
    assert main(["--config", "four_factors", "--out-dir", str(tmp_path), "run"]) == 0
    same_tree(ff_run, tmp_path)


def test_seed_override(ff_run, tmp_path):
    assert main(["run", "four_factors.cfg", "--seed", "5", "--out-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    base = json.loads((ff_run / "report.json").read_text())
    assert rep["seed"] == 5 and rep["config"]["seed"] == 5
    assert rep["metrics"]["r2"] != base["metrics"]["r2"]


def test_seven_models(tmp_path):
    r2 = {}
    for model in ("ols", "ridge", "lasso", "huber", "tweedie", "tree", "mlp"):
        cfg = write_cfg(tmp_path, model=model, scale=True)
        out = tmp_path / model
        assert main(["run", str(cfg), "--out-dir", str(out)]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["model"] == model
        r2[model] = rep["metrics"]["r2"]
    assert abs(r2["ols"] - r2["huber"]) <= 0.05


def test_python_dash_m(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "courtside", "run", "four_factors", "--out-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "report.json").exists()


def test_make_fixture_cli(tmp_path):
    out = tmp_path / "ff.csv"
    assert main(["make-fixture", "four_factors", "--out", str(out)]) == 0
    assert out.read_bytes() == bundled_path("four_factors.csv").read_bytes()
    assert main(["make-fixture", "four_factors", "--n", "60", "--seed", "2", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "four_factors.csv").read_text().count("\n") == 61


# --- failures and exit codes -----------------------------------------------------------


def test_unknown_config_key_exit_2(tmp_path, capsys):
    assert main(["run", str(write_cfg(tmp_path, colour="red")), "--out-dir", str(tmp_path)]) == 2
    assert "colour" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path):
    assert main(["run", str(tmp_path / "nope.cfg")]) == 2
    assert main(["run"]) == 2


def test_bad_json_config_exit_2(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("{not json")
    assert main(["run", str(p)]) == 2


def test_stage_out_of_order_exit_2(tmp_path, capsys):
    assert main(["explain", "four_factors.cfg", "--out-dir", str(tmp_path)]) == 2
    assert "explain stage failed" in capsys.readouterr().err


def test_ragged_csv_exit_3_and_no_report(tmp_path, capsys):
    csv = tmp_path / "bad.csv"
    csv.write_text("a,b,W\n1,2,3\n4,5\n")
    cfg = tmp_path / "c.cfg"
    cfg.write_text(json.dumps({"input": "bad.csv", "target": "W"}))
    out = tmp_path / "out"
    out.mkdir()
    (out / "report.json").write_text("stale")
    assert main(["run", str(cfg), "--out-dir", str(out)]) == 3
    assert "ingest stage failed" in capsys.readouterr().err
    assert not (out / "report.json").exists()


def test_constant_target_exit_4(tmp_path, capsys):
    rows = "\n".join(f"{i},{(i * 7) % 5},1.0" for i in range(30))
    (tmp_path / "c.csv").write_text("a,b,y\n" + rows + "\n")
    cfg = tmp_path / "c.cfg"
    cfg.write_text(json.dumps({"input": "c.csv", "target": "y"}))
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "o")]) == 4
    assert "fit stage failed" in capsys.readouterr().err


def test_unknown_fixture_kind_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["make-fixture", "hockey"])
    assert err.value.code == 2


def test_byte_identical_across_thread_counts(tmp_path):
    outs = []
    for n in ("1", "4"):
        env = dict(os.environ, OPENBLAS_NUM_THREADS=n, OMP_NUM_THREADS=n, MKL_NUM_THREADS=n)
        out = tmp_path / f"t{n}"
        subprocess.run(
            [sys.executable, "-m", "courtside", "run", "salary", "--out-dir", str(out)],
            env=env,
            check=True,
            capture_output=True,
        )
        outs.append(out)
    same_tree(*outs)
