import csv
import io
import json

import pytest

from hgperfect.cli import main


@pytest.fixture
def files(tmp_path):
    paths = {
        "tri": "3 1\n3 1 2 3\n",
        "oct": "12 1\n12 1 2 3 4 5 6 7 8 9 10 11 12\n",
        "dense": "3 3\n2 1 2\n2 2 3\n2 1 3\n",
        "broken": "3 1\n2 1 7\n",
        "dup": "3 2\n2 1 2\n2 2 1\n",
        "wide": "25 1\n2 1 2\n",
    }
    out = {}
    for name, body in paths.items():
        p = tmp_path / f"{name}.hg"
        p.write_text(body)
        out[name] = str(p)
    w = tmp_path / "x.json"
    w.write_text("[0.9]")
    out["x"] = str(w)
    return out


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


class TestSample:
    def test_json_contract(self, capsys, files):
        code, out, _ = run(capsys, "sample", "--in", files["tri"], "--eps", "0.1", "--seed", "42", "--x", files["x"])
        assert code == 0
        rep = json.loads(out)
        assert {"sample", "J", "L", "T"} <= rep.keys()
        assert rep["regime"] == "asymmetric" and rep["master_seed"] == 42 and "wall_ms" not in rep

    def test_byte_identical(self, capsys, files):
        first = run(capsys, "sample", "--in", files["oct"], "--seed", "5")[1]
        assert first == run(capsys, "sample", "--in", files["oct"], "--seed", "5")[1]

    def test_auto_passes_on_wide_edge(self, capsys, files):
        code, out, _ = run(capsys, "sample", "--in", files["oct"], "--seed", "1", "--timing")
        assert code == 0 and "wall_ms" in json.loads(out)

    def test_generated_with_sidecar(self, capsys, tmp_path):
        side = tmp_path / "gen.hg"
        code, out, _ = run(capsys, "sample", "--gen", "n=9,k=3,d=2,linear", "--eps", "0.1", "--seed", "7",
                           "--L", "3", "--sidecar", str(side))
        assert code == 0 and len(json.loads(out)["sample"]) == 9
        assert side.read_text().splitlines()[0] == "9 6"

    def test_generated_without_regime(self, capsys, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, _, err = run(capsys, "sample", "--gen", "n=9,k=3,d=2,linear", "--seed", "7")
        assert code == 2 and "linear: fail" in err
        assert (tmp_path / "generated-7.hg").exists()

    def test_no_regime(self, capsys, files):
        code, out, err = run(capsys, "sample", "--in", files["dense"], "--seed", "1")
        assert code == 2 and out == ""
        assert "symmetric: fail" in err and "asymmetric: fail" in err

    def test_manual(self, capsys, files):
        code, out, err = run(capsys, "sample", "--in", files["dense"], "--regime", "manual", "--L", "2",
                             "--seed", "3")
        assert code == 0 and json.loads(out)["regime"] == "manual" and "manual" in err

    def test_manual_needs_L(self, capsys, files):
        assert run(capsys, "sample", "--in", files["dense"], "--regime", "manual")[0] == 1

    def test_parse_error(self, capsys, files):
        code, _, err = run(capsys, "sample", "--in", files["broken"], "--seed", "1")
        assert code == 1 and "out of range" in err

    def test_strict_duplicates(self, capsys, files):
        assert run(capsys, "sample", "--in", files["dup"], "--strict", "--L", "1", "--seed", "1")[0] == 1
        with pytest.warns(UserWarning):
            assert run(capsys, "sample", "--in", files["dup"], "--L", "1", "--seed", "1")[0] == 0

    def test_missing_file_and_bad_flags(self, capsys, tmp_path):
        assert run(capsys, "sample", "--in", str(tmp_path / "nope.hg"))[0] == 1
        with pytest.raises(SystemExit) as info:
            main(["sample", "--seed", "-4"])
        assert info.value.code == 1
        assert run(capsys, "sample")[0] == 1

    def test_round_cap(self, capsys, files):
        code, _, err = run(capsys, "sample", "--in", files["dense"], "--L", "1", "--round-cap", "1", "--seed", "0")
        assert code == 3 and "rounds" in err

    def test_trials_and_out(self, capsys, files, tmp_path):
        dest = tmp_path / "r.json"
        code, out, _ = run(capsys, "sample", "--in", files["oct"], "--seed", "2", "--trials", "4", "--out", str(dest))
        data = json.loads(dest.read_text())
        assert code == 0 and out == "" and len(data["runs"]) == 4 and data["rounds"]["trials"] == 4

    def test_seed_reported(self, capsys, files):
        code, out, err = run(capsys, "sample", "--in", files["oct"])
        assert code == 0 and f"master seed {json.loads(out)['master_seed']}" in err


class TestCheck:
    def test_pass(self, capsys, files):
        code, out, _ = run(capsys, "check", "--in", files["oct"])
        rows = {r["regime"]: r for r in json.loads(out)["regimes"]}
        assert code == 0 and rows["asymmetric"]["passed"] and rows["asymmetric"]["L"] >= 1

    def test_fail(self, capsys, files):
        code, out, _ = run(capsys, "check", "--in", files["dense"])
        assert code == 2 and not any(r["passed"] for r in json.loads(out)["regimes"])

    def test_mixed(self, capsys):
        code, out, _ = run(capsys, "check", "--gen", "n=100,k=10,d=2,linear", "--seed", "4")
        rows = {r["regime"]: r for r in json.loads(out)["regimes"]}
        assert code == 0 and rows["linear"]["passed"] and not rows["symmetric"]["passed"]
        assert rows["linear"]["threshold"] == pytest.approx(2.304)


class TestVerify:
    def test_pass(self, capsys, files):
        code, out, _ = run(capsys, "verify", "--in", files["tri"], "--L", "1", "--seed", "3", "--trials", "3000")
        checks = json.loads(out)["checks"]
        assert code == 0 and {c["status"] for c in checks} == {"PASS"}

    def test_mutant_fails(self, capsys, files):
        code, out, _ = run(capsys, "verify", "--in", files["tri"], "--L", "1", "--seed", "3", "--trials", "3000",
                           "--mutant", "reversed-replay")
        assert code == 4 and any(c["status"] == "FAIL" for c in json.loads(out)["checks"])

    def test_guard_skip(self, capsys, files):
        code, out, _ = run(capsys, "verify", "--in", files["wide"], "--L", "1", "--seed", "3", "--trials", "200")
        statuses = [c["status"] for c in json.loads(out)["checks"]]
        assert code == 0 and "SKIP" in statuses and "FAIL" not in statuses


class TestBench:
    def rows(self, out):
        return list(csv.DictReader(io.StringIO(out)))

    def test_L_sweep(self, capsys):
        code, out, _ = run(capsys, "bench", "--gen", "n=200,k=10,d=2,linear", "--seed", "1", "--sweep", "L=2,4",
                           "--trials", "2")
        rows = self.rows(out)
        assert code == 0 and [r["L"] for r in rows] == ["2", "4"]
        assert list(rows[0]) == ["n", "k", "d", "L", "mean_J", "mean_detect_us", "mean_total_ms"]

    def test_n_sweep(self, capsys):
        code, out, _ = run(capsys, "bench", "--gen", "n=100,k=10,d=2,linear", "--seed", "1", "--sweep", "n=100,200",
                           "--trials", "2")
        assert code == 0 and [r["n"] for r in self.rows(out)] == ["100", "200"]

    def test_fixed_repeat(self, capsys, files):
        code, out, _ = run(capsys, "bench", "--in", files["oct"], "--seed", "1", "--trials", "3")
        assert code == 0 and len(self.rows(out)) == 1

    def test_bad_sweep(self, capsys, files):
        assert run(capsys, "bench", "--in", files["oct"], "--sweep", "k=3")[0] == 1
        assert run(capsys, "bench", "--in", files["oct"], "--sweep", "n=10")[0] == 1
