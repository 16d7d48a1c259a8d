import json
import subprocess
import sys

import numpy as np
import pytest

from puprior.cli import main
from puprior.datagen import write_features_csv


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def samples(tmp_path):
    rng = np.random.default_rng(0)
    paths = {}
    for name, x in (("pos", rng.normal(size=(40, 3)) + 2), ("unl", rng.normal(size=(80, 3)))):
        paths[name] = tmp_path / f"{name}.csv"
        write_features_csv(paths[name], x)
    return paths


@pytest.fixture
def hand_files(tmp_path):
    paths = {}
    for name, col in (("pos", [0.0]), ("unl", [0.0, 2.0]), ("tgt", [2.0])):
        paths[name] = tmp_path / f"h_{name}.csv"
        paths[name].write_text("x\n" + "".join(f"{v}\n" for v in col))
    return paths


class TestEstimate:
    def test_target_is_unlabeled(self, capsys, samples):
        code, out, _ = run(capsys, "estimate", samples["pos"], samples["unl"], samples["unl"],
                           "--pi", 0.3, "--json")
        assert code == 0
        doc = json.loads(out)
        assert doc["estimate_raw"] == pytest.approx(0.3, abs=1e-10)
        assert doc["pi_source"] == "known"
        assert doc["coverage"] == pytest.approx(0.85)
        assert doc["N"] == 40

    def test_hand_instance(self, capsys, hand_files):
        code, out, _ = run(capsys, "estimate", hand_files["pos"], hand_files["unl"],
                           hand_files["tgt"], "--pi", 0.5, "--tau", 1, "--json")
        assert code == 0
        assert abs(json.loads(out)["estimate_raw"]) <= 1e-12

    def test_human_output(self, capsys, hand_files):
        code, out, _ = run(capsys, "estimate", hand_files["pos"], hand_files["unl"],
                           hand_files["tgt"], "--pi", 0.5, "--tau", 1)
        assert code == 0
        assert "target prior (raw)" in out and "0.000000" in out

    def test_estimate_pi(self, capsys, samples):
        code, out, _ = run(capsys, "estimate", samples["pos"], samples["unl"], samples["unl"],
                           "--estimate-pi", "--median-tau", "--json")
        assert code == 0
        assert json.loads(out)["pi_source"] == "km2_plugin"

    def test_invalid_delta(self, capsys, samples):
        code, _, err = run(capsys, "estimate", samples["pos"], samples["unl"], samples["unl"],
                           "--pi", 0.3, "--delta", 0.06)
        assert code == 1
        assert "delta" in err

    def test_pi_flags_exclusive(self, capsys, samples):
        code, _, _ = run(capsys, "estimate", samples["pos"], samples["unl"], samples["unl"],
                         "--pi", 0.3, "--estimate-pi")
        assert code == 1
        code, _, _ = run(capsys, "estimate", samples["pos"], samples["unl"], samples["unl"])
        assert code == 1

    def test_degenerate(self, capsys, samples):
        code, _, err = run(capsys, "estimate", samples["unl"], samples["unl"], samples["unl"],
                           "--pi", 0.3)
        assert code == 2
        assert "degenerate" in err

    def test_parse_error(self, capsys, tmp_path, samples):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1,2,x\n")
        code, _, err = run(capsys, "estimate", bad, samples["unl"], samples["unl"], "--pi", 0.3)
        assert code == 1
        assert "bad.csv:2" in err

    def test_missing_file(self, capsys, tmp_path, samples):
        code, _, _ = run(capsys, "estimate", tmp_path / "none.csv", samples["unl"],
                         samples["unl"], "--pi", 0.3)
        assert code == 1


class TestBound:
    def test_reference(self, capsys):
        code, out, _ = run(capsys, "bound", "--n", 1000, "--m", 1000, "--n-prime", 1000,
                           "--denominator", 0.5, "--json")
        assert code == 0
        doc = json.loads(out)
        assert doc["bound"] == pytest.approx(0.43788, abs=1e-4)
        assert doc["coverage"] == pytest.approx(0.85)

    def test_human_coverage(self, capsys):
        code, out, _ = run(capsys, "bound", "--n", 1000, "--m", 1000, "--n-prime", 1000,
                           "--denominator", 0.5)
        assert code == 0
        assert "coverage  0.85" in out

    def test_min_size(self, capsys):
        _, out, _ = run(capsys, "bound", "--n", 5000, "--m", 1000, "--n-prime", 3000,
                        "--denominator", 0.5, "--json")
        assert json.loads(out)["N"] == 1000

    def test_missing_denominator_and_files(self, capsys):
        code, _, err = run(capsys, "bound", "--n", 1000, "--m", 1000, "--n-prime", 1000)
        assert code == 1
        assert "--denominator" in err

    def test_denominator_without_sizes(self, capsys):
        code, _, _ = run(capsys, "bound", "--denominator", 0.5)
        assert code == 1

    def test_from_files(self, capsys, samples):
        code, out, _ = run(capsys, "bound", "--positives", samples["pos"], "--unlabeled",
                           samples["unl"], "--n-prime", 100, "--json")
        assert code == 0
        doc = json.loads(out)
        assert (doc["n"], doc["m"], doc["N"]) == (80, 40, 40)
        assert doc["denominator"] > 0

    def test_from_degenerate_files(self, capsys, samples):
        code, _, _ = run(capsys, "bound", "--positives", samples["unl"], "--unlabeled",
                         samples["unl"], "--target", samples["unl"])
        assert code == 2

    def test_invalid_delta(self, capsys):
        code, _, _ = run(capsys, "bound", "--n", 10, "--m", 10, "--n-prime", 10,
                         "--denominator", 0.5, "--delta", 0.06)
        assert code == 1


class TestSimulate:
    def test_writes_files(self, capsys, tmp_path):
        out_dir = tmp_path / "sim"
        code, out, _ = run(capsys, "simulate", out_dir, "--n-source", 300, "--n-target", 200,
                           "--seed", 3, "--json")
        assert code == 0
        meta = json.loads((out_dir / "meta.json").read_text())
        assert (meta["n_positives"], meta["n_unlabeled"], meta["n_target"]) == (50, 250, 200)
        assert json.loads(out)["seed"] == 3
        lines = (out_dir / "target.csv").read_text().splitlines()
        assert len(lines) == 201 and len(lines[0].split(",")) == 10

    def test_roundtrip_into_estimate(self, capsys, tmp_path):
        d = tmp_path / "sim"
        run(capsys, "simulate", d, "--n-source", 1000, "--n-target", 1000, "--seed", 1)
        code, out, _ = run(capsys, "estimate", d / "positives.csv", d / "unlabeled.csv",
                           d / "target.csv", "--pi", 0.2, "--json")
        assert code == 0
        assert abs(json.loads(out)["estimate_raw"] - 0.8) < 0.15

    def test_invalid(self, capsys, tmp_path):
        code, _, _ = run(capsys, "simulate", tmp_path, "--pi", 1.2)
        assert code == 1


class TestBench:
    def _config(self, tmp_path, **kw):
        cfg = dict(methods=["tcpu_known_pi", "km2_ls"], repetitions=2, n_source=200,
                   n_target=200, seed=11, sweep_param="pi_prime", sweep_values=[0.2, 0.8])
        cfg.update(kw)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_rows_and_summary(self, capsys, tmp_path):
        cfg = self._config(tmp_path)
        code, out, _ = run(capsys, "bench", cfg, "--out", tmp_path / "r.csv",
                           "--summary", tmp_path / "s.json")
        assert code == 0
        assert "8 rows" in out
        assert len((tmp_path / "r.csv").read_text().splitlines()) == 9
        assert json.loads((tmp_path / "s.json").read_text())["uncertainty"].startswith("standard error")

    def test_byte_identical_across_runs_and_workers(self, capsys, tmp_path):
        cfg = self._config(tmp_path)
        texts = []
        for i, workers in enumerate((1, 1, 3)):
            out = tmp_path / f"r{i}.csv"
            assert run(capsys, "bench", cfg, "--out", out, "--workers", workers)[0] == 0
            texts.append(out.read_bytes())
        assert texts[0] == texts[1] == texts[2]

    def test_json_stdout(self, capsys, tmp_path):
        cfg = self._config(tmp_path, output_path=str(tmp_path / "r.csv"))
        code, out, _ = run(capsys, "bench", cfg, "--json")
        assert code == 0
        assert len(json.loads(out)["groups"]) == 4

    def test_needs_output(self, capsys, tmp_path):
        assert run(capsys, "bench", self._config(tmp_path))[0] == 1

    def test_bad_config(self, capsys, tmp_path):
        cfg = self._config(tmp_path, repetitions=0)
        assert run(capsys, "bench", cfg, "--out", tmp_path / "r.csv")[0] == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "puprior", "bound", "--n", "1000", "--m", "1000",
         "--n-prime", "1000", "--denominator", "0.5"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "0.437866" in proc.stdout


def test_no_command(capsys):
    assert run(capsys)[0] == 1
