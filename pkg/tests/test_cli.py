import csv
import json
import math
import subprocess
import sys

import pytest

from zrf.cli import build_parser, replay, run
from zrf.records import (SCHEMAS, file_digest, manifest_path, read_results, render,
                         write_results)


def _zrf(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = run([*argv, "--out", str(out)])
    return code, out


def test_gap_end_to_end(tmp_path):
    code, out = _zrf(tmp_path, "gap", "--r", "-1", "--k", "3", "--K", "2", "--L", "1.755",
                     "--trials", "1000", "--seed", "1", name="gap.csv")
    assert code == 0
    man = json.loads((tmp_path / "gap.manifest.json").read_text())
    assert man["outputs"] == {"gap.csv": file_digest(out)}
    assert man["n_trials"] == 1000 and man["base_seed"] == 1
    assert man["resolution"] == 2.0**-15
    assert man["schema_version"] == 1 and man["fields"] == list(SCHEMAS["gap"])
    (row,) = read_results(out)
    assert row["n"] == 1000 and row["grid_count"] == 21
    assert row["ci_hi"] <= 0.178
    assert row["ambiguous"] < 1


def test_lemma_a1_table(tmp_path):
    code, out = _zrf(tmp_path, "lemma-a1", "--m", "2", "--Q", "1e6")
    assert code == 0
    rows = read_results(out)
    assert [r["Q"] for r in rows] == [1e3, 1e4, 1e5, 1e6]
    assert all(r["m"] == 2 for r in rows)
    for r in rows:
        assert r["residual"] == pytest.approx(r["sum"] - r["main_term"], abs=1e-9)


def test_lemma_a1_check_failure_exit_code(tmp_path):
    # for m = 3 the decade changes still grow below Q ~ 2e3
    code, out = _zrf(tmp_path, "lemma-a1", "--m", "3", "--Q-min", "2", "--Q", "2e4",
                     "--check-from", "2")
    assert code == 3
    changes = [abs(r["step_change"]) for r in read_results(out)[1:]]
    assert changes[1] > changes[0]


def test_mgf_check(tmp_path):
    code, out = _zrf(tmp_path, "mgf-check", "--trials", "10")
    assert code == 0
    rows = read_results(out)
    assert len(rows) == 20 and all(r["passed"] for r in rows)
    code, _ = _zrf(tmp_path, "mgf-check", "--trials", "5", "--tol", "-1")
    assert code == 3


def test_resource_error(tmp_path, capsys):
    code, out = _zrf(tmp_path, "tail", "--k", "99")
    assert code == 2
    err = capsys.readouterr().err
    assert "ceiling" in err and "e^(2^k)" in err
    assert not out.exists()


@pytest.mark.parametrize("argv", [["tail", "--bogus", "1"], ["frob"], [], ["tail", "--trials", "1.5"],
                                  ["tail", "--x", "abc"], ["tail", "--threads", "0"],
                                  ["tail", "--event", "interval", "--x", "-3"]])
def test_argument_errors(tmp_path, capsys, argv):
    code = run([*argv, "--out", str(tmp_path / "x.csv")] if argv else argv)
    assert code == 1
    assert "usage:" in capsys.readouterr().err


def test_console_script_unknown_flag():
    proc = subprocess.run([sys.executable, "-m", "zrf.cli", "gap", "--nope"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stderr.startswith("usage:")


def test_io_error(tmp_path, capsys):
    code = run(["bounds", "--out", str(tmp_path / "missing" / "b.csv")])
    assert code == 2
    assert "I/O error" in capsys.readouterr().err


def test_help_lists_defaults():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    assert set(sub) == {"sieve", "lemma-a1", "mgf-check", "bounds", "tail", "continuity",
                        "joint", "gap"}
    for name, p in sub.items():
        text = p.format_help()
        for action in p._actions:
            if action.option_strings and action.dest not in ("help",):
                assert action.help, (name, action.dest)
        assert "default" in text


def test_scientific_notation_flags(tmp_path):
    code, out = _zrf(tmp_path, "tail", "--trials", "2e2", "--seed", "1e1", "--x", "1e0,2.5E0")
    assert code == 0
    rows = read_results(out)
    assert [r["x"] for r in rows] == [1.0, 2.5]
    assert rows[0]["n"] == 200


def test_bounds_calculator(tmp_path):
    code, out = _zrf(tmp_path, "bounds", "--r", "-1", "--k", "4", "--x", "16", "--K", "2", "--L", "2")
    assert code == 0
    vals = {r["name"]: r["value"] for r in read_results(out)}
    assert vals["lemma41"] == pytest.approx(0.13507, abs=1e-5)
    assert vals["grid_count"] == 54
    assert vals["theorem"] == pytest.approx(math.exp(-(1 - math.exp(-2)) ** 2 * 4), rel=1e-15)


def test_csv_json_agree(tmp_path):
    base = ["continuity", "--trials", "300", "--x", "1", "--a", "2,3", "--k", "2"]
    assert run([*base, "--out", str(tmp_path / "c.csv")]) == 0
    assert run([*base, "--format", "json", "--out", str(tmp_path / "c.json")]) == 0
    a, b = read_results(tmp_path / "c.csv"), read_results(tmp_path / "c.json")
    assert len(a) == len(b) == 2
    for ra, rb in zip(a, b):
        assert list(rb) == list(SCHEMAS["continuity"])
        for key in rb:
            assert ra[key] == rb[key], key


def test_byte_identical_reruns_and_threads(tmp_path):
    base = ["tail", "--trials", "3000", "--x", "0,1,2,3", "--seed", "7"]
    digests = set()
    for i, threads in enumerate(("1", "1", "3", "8")):
        out = tmp_path / f"t{i}.csv"
        assert run([*base, "--threads", threads, "--out", str(out)]) == 0
        digests.add(file_digest(out))
    assert len(digests) == 1


def test_replay_from_manifest(tmp_path):
    out = tmp_path / "j.csv"
    assert run(["joint", "--trials", "500", "--seed", "3", "--out", str(out)]) == 0
    assert replay(manifest_path(out), tmp_path / "again.csv")
    assert file_digest(tmp_path / "again.csv") == file_digest(out)


def test_sieve_outputs(tmp_path):
    code, out = _zrf(tmp_path, "sieve", "--limit", "30")
    assert code == 0
    assert [r["p"] for r in read_results(out)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    code, out = _zrf(tmp_path, "sieve", "--r", "-1", "--k", "1", name="band.csv")
    assert [r["p"] for r in read_results(out)] == [2, 3, 5, 7]


def test_empty_records_header_only(tmp_path):
    path = tmp_path / "e.csv"
    write_results([], "csv", path, SCHEMAS["tail"])
    text = path.read_bytes().decode("utf-8")
    assert text == ",".join(SCHEMAS["tail"]) + "\n"
    write_results([], "json", tmp_path / "e.json", SCHEMAS["tail"])
    assert json.loads((tmp_path / "e.json").read_text()) == []


def test_float_rendering_round_trips(tmp_path):
    vals = [0.1, 1 / 3, 1e-300, 2.0**-15, 123456789.123456789, -0.0]
    rows = [{"name": str(i), "value": v} for i, v in enumerate(vals)]
    path = tmp_path / "f.csv"
    write_results(rows, "csv", path, SCHEMAS["bounds"])
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    back = list(csv.DictReader(raw.decode().splitlines()))
    for v, r in zip(vals, back):
        assert float(r["value"]) == v and r["value"] == repr(v)
    assert render(rows, "csv", SCHEMAS["bounds"]) == raw


def test_render_rejects_unknown_fields():
    with pytest.raises(ValueError):
        render([{"nope": 1}], "csv", SCHEMAS["bounds"])
    with pytest.raises(ValueError):
        render([], "xml", SCHEMAS["bounds"])
