import csv
import io
import json

import numpy as np
import pytest

from circgof.cli import build_parser, main
from circgof.montecarlo import PerturbationParams, perturbed_inverse_cdf
from circgof.seeding import RunSeed


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def data_rows(text):
    return list(csv.reader(ln for ln in text.splitlines() if not ln.startswith("#")))


@pytest.fixture
def uniform_file(tmp_path):
    f = tmp_path / "u.txt"
    np.savetxt(f, RunSeed(1).generator("cli-data").random(100))
    return f


class TestTest:
    def test_csv_report(self, capsys, uniform_file):
        code, out, _ = run(capsys, "test", "--input", uniform_file, "--reps", 1000, "--seed", 3)
        assert code == 0
        assert "# seed: 3" in out and "# version:" in out and '# stat: "w2"' in out
        header, row = data_rows(out)
        rec = dict(zip(header, row))
        assert 0 < float(rec["p_value"]) <= 1
        assert rec["decision"] in ("reject", "fail_to_reject")

    def test_json_is_stable_and_reproducible(self, capsys, uniform_file):
        args = ("test", "--input", uniform_file, "--stat", "r2", "--pool", "avg", "--reps", 500,
                "--format", "json", "--seed", 9)
        _, a, _ = run(capsys, *args)
        _, b, _ = run(capsys, *args)
        assert a == b
        doc = json.loads(a)
        assert list(doc) == sorted(doc) and list(doc["config"]) == sorted(doc["config"])
        assert doc["config"]["pool"] == "cs1" and doc["rows"][0]["statistic"] == "r2"

    def test_workers_do_not_change_results(self, capsys, uniform_file):
        base = ("test", "--input", uniform_file, "--reps", 2500, "--pool", "cs2")
        _, a, _ = run(capsys, *base, "--workers", 1)
        _, b, _ = run(capsys, *base, "--workers", 3)
        assert data_rows(a) == data_rows(b)

    def test_seed_from_environment(self, capsys, uniform_file, monkeypatch):
        monkeypatch.setenv("GOF_SEED", "77")
        _, out, _ = run(capsys, "test", "--input", uniform_file, "--reps", 200)
        assert "# seed: 77" in out

    def test_null_fails_to_reject_mostly(self, capsys, tmp_path):
        rejections = 0
        for s in range(20):
            f = tmp_path / f"n{s}.txt"
            np.savetxt(f, RunSeed(s).generator("cli-null").random(100))
            _, out, _ = run(capsys, "test", "--input", f, "--reps", 500, "--seed", s)
            rejections += data_rows(out)[1][-1] == "reject"
        assert rejections <= 2

    def test_perturbed_data_is_rejected(self, capsys, tmp_path):
        params = PerturbationParams(0.75, 0.5, 0.25)
        for s in range(3):
            f = tmp_path / f"p{s}.txt"
            np.savetxt(f, perturbed_inverse_cdf(RunSeed(s).generator("cli-alt").random(200), params))
            _, out, _ = run(capsys, "test", "--input", f, "--stat", "r2", "--pool", "cs1", "--reps", 1000)
            assert data_rows(out)[1][-1] == "reject"

    def test_normal_null(self, capsys, tmp_path):
        f = tmp_path / "z.csv"
        x = RunSeed(2).generator("cli-normal").normal(5.0, 2.0, 60)
        f.write_text("id,x\n" + "".join(f"{i},{v}\n" for i, v in enumerate(x)))
        code, out, _ = run(capsys, "test", "--input", f, "--column", "x", "--null", "normal:5,2",
                           "--reps", 300)
        assert code == 0 and '# null: "normal(5,2)"' in out

    @pytest.mark.parametrize("content", ["", "abc\nxyz\n"])
    def test_unreadable_input(self, capsys, tmp_path, content):
        f = tmp_path / "bad.txt"
        f.write_text(content)
        code, out, err = run(capsys, "test", "--input", f)
        assert code != 0 and out == "" and "io_error" in err

    def test_bad_selector(self, capsys, uniform_file):
        code, _, err = run(capsys, "test", "--input", uniform_file, "--stat", "bogus")
        assert code == 2 and "statistics.bad_selector" in err
        code, _, err = run(capsys, "test", "--input", uniform_file, "--pool", "median")
        assert code == 2 and "bad_selector" in err


class TestOtherCommands:
    def test_critvals(self, capsys, tmp_path):
        out_file = tmp_path / "cv.csv"
        code, out, _ = run(capsys, "critvals", "--stat", "w2,ks", "--pool", "cs0,cs1", "--n", "10,20",
                           "--reps", 300, "--output", out_file)
        assert code == 0 and out == ""
        rows = data_rows(out_file.read_text())
        assert rows[0] == ["statistic", "pooling", "n", "alpha", "value", "se", "reps"]
        assert len(rows) == 1 + 8

    def test_power_layout(self, capsys, tmp_path):
        cfg = tmp_path / "t3.json"
        cfg.write_text(json.dumps({"tau": 0.75, "eta": 0.25, "sigma": 0.25,
                                   "n_values": [10, 50, 100, 150, 200, 250, 300]}))
        code, out, _ = run(capsys, "power", "--config", cfg, "--reps", 100)
        assert code == 0
        rows = data_rows(out)
        assert len(rows) == 1 + 7 and all(len(r) == 19 for r in rows)
        assert rows[0][1:4] == ["W2_CS_0", "W2_CS_1", "W2_CS_2"] and rows[0][-1] == "KS_CS_2"
        assert '"config_file"' not in out and "# tau: 0.75" in out

    def test_power_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{"tau": 0.5, "colour": "red"}')
        code, _, err = run(capsys, "power", "--config", cfg)
        assert code == 2 and "montecarlo.bad_config" in err
        code, _, err = run(capsys, "power", "--config", tmp_path / "missing.json")
        assert code == 2 and "io_error" in err

    def test_asym_qq_rows(self, capsys):
        code, out, _ = run(capsys, "asym", "--stat", "r2", "--n", 100, "--reps", 2000)
        assert code == 0
        rows = data_rows(out)
        assert len(rows) == 1 + 1000 and rows[0][:3] == ["p", "q_asymptotic", "q_finite"]

    def test_asym_spectrum_and_selectors(self, capsys):
        code, out, _ = run(capsys, "asym", "--stat", "w2", "--pool", "cs1", "--n", 10, "--spectrum")
        assert code == 0 and len(data_rows(out)) == 1 + 11
        code, _, err = run(capsys, "asym", "--stat", "ks", "--pool", "cs1")
        assert code == 2 and "bad_selector" in err

    def test_weights(self, capsys):
        code, out, _ = run(capsys, "weights", "--n", 10, "--format", "json")
        assert code == 0
        rows = json.loads(out)["rows"]
        assert len(rows) == 10
        w = np.array([r["w_opt_i"] for r in rows])
        assert np.allclose(w, w[::-1], rtol=1e-9)

    def test_every_subcommand_documents_its_flags(self):
        parser = build_parser()
        sub = parser._subparsers._group_actions[0].choices
        for name, p in sub.items():
            text = p.format_help()
            for flag in ("--seed", "--output", "--format", "--workers", "--reps"):
                assert flag in text, (name, flag)
            assert "default" in text
