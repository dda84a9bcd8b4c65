import csv
import io
import json

import pytest

from seqentropy.cli import REPORT_KEYS, main, parse_args


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_parse_happy_path():
    args = parse_args("mc --dist uniform:4 --estimator h2 --reps 100000 --seed 7 --format json".split())
    assert (args.subcommand, args.estimator, args.reps, args.seed, args.format) == ("mc", "h2", 100000, 7, "json")
    assert args.dist.probs == (0.25,) * 4


@pytest.mark.parametrize("argv", [
    "mc --dist uniform:0 --estimator h2 --reps 10",
    "mc --dist uniform:4 --estimator h2",
    "mc --dist uniform:4 --estimator h3 --reps 10",
    "mc --dist uniform:4 --estimator nope --reps 10",
    "mc --dist uniform:4 --estimator h2 --reps 10 --bogus",
    "mc --dist probs:0.4,0.4 --estimator h2 --reps 10",
    "mc --dist uniform:4 --estimator h2 --reps 10 --format xml",
    "verify --dist uniform:4 --tol -1",
    "",
])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv.split())
    assert exc.value.code == 2


def test_mc_json_schema(capsys):
    code, out = run(capsys, "mc", "--dist", "uniform:4", "--estimator", "h2", "--reps", "500", "--seed", "7")
    assert code == 0
    obj = json.loads(out)
    assert tuple(obj) == REPORT_KEYS
    assert obj["reps"] == 500 and obj["seed"] == 7 and obj["estimator"] == "h2"
    assert '"mean": ' in out and len(out.split('"truth": ')[1].split(",")[0]) >= 17


def test_mc_csv_schema(capsys):
    code, out = run(capsys, "mc", "--dist", "zipf:5:1", "--estimator", "m2", "--n", "5",
                    "--reps", "100", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == REPORT_KEYS
    assert len(rows) == 2 and rows[1][0] == "m2"


def test_mc_rerun_identical_bytes(capsys):
    argv = ["mc", "--dist", "probs:0.5,0.3,0.2", "--estimator", "m4", "--n", "4", "--reps", "300", "--seed", "3"]
    _, a = run(capsys, *argv)
    _, b = run(capsys, *argv, "--workers", "2")
    assert a == b


def test_mc_biased_unbiased_claim_exits_3(capsys):
    code, out = run(capsys, "mc", "--dist", "uniform:4", "--estimator", "m4", "--n", "1", "--reps", "5000")
    assert code == 3
    assert json.loads(out)["z"] < -4


def test_mc_plugin_is_informational(capsys):
    code, out = run(capsys, "mc", "--dist", "uniform:10", "--estimator", "plugin", "--n", "10", "--reps", "2000")
    assert code == 0
    assert json.loads(out)["z"] < -10


def test_nonfinite_values_serialize_as_strings(capsys):
    code, out = run(capsys, "mc", "--dist", "uniform:2", "--estimator", "plugin", "--n", "1", "--reps", "5")
    assert json.loads(out)["z"] == "-inf"


def test_verify(capsys):
    code, out = run(capsys, "verify", "--dist", "probs:0.5,0.3,0.2", "--tol", "1e-9")
    assert code == 0
    rows = json.loads(out)
    names = [r["check"] for r in rows]
    assert names[:3] == ["expected_h1", "expected_h2", "expected_m1"]
    assert sum(n.startswith("series") for n in names) == 10
    assert all(r["passed"] for r in rows)


def test_verify_unreachable_tolerance_exits_3(capsys):
    code, _ = run(capsys, "verify", "--dist", "uniform:1000", "--tol", "1e-15")
    assert code == 3


def test_estimate(capsys):
    code, out = run(capsys, "estimate", "--dist", "uniform:4", "--estimator", "h3", "--n", "3", "--seed", "1")
    obj = json.loads(out)
    assert code == 0 and obj["estimator"] == "h3" and obj["draws"] >= 4


def test_estimate_cap_is_runtime_failure(capsys):
    code = main(["estimate", "--dist", "uniform:50", "--estimator", "h1", "--max-draws", "10"])
    assert code == 1


def test_unwritable_out_exits_1(capsys, tmp_path):
    code = main(["mc", "--dist", "uniform:2", "--estimator", "h2", "--reps", "10",
                 "--out", str(tmp_path / "missing" / "r.json")])
    assert code == 1


def test_compare_from_config(capsys, tmp_path):
    grid = tmp_path / "grid.jsonl"
    grid.write_text('{"dist": "uniform:4", "estimator": "h2"}\n'
                    '# comment\n'
                    '{"dist": "uniform:4", "estimator": "h3", "n": 10, "reps": 300}\n')
    out = tmp_path / "r.json"
    code = main(["compare", "--config", str(grid), "--reps", "200", "--seed", "5", "--out", str(out)])
    rows = json.loads(out.read_text())
    assert code == 0
    assert [(r["estimator"], r["reps"]) for r in rows] == [("h2", 200), ("h3", 300)]


def test_compare_bad_line_is_usage_error(capsys, tmp_path):
    grid = tmp_path / "grid.jsonl"
    grid.write_text('{"dist": "uniform:4", "estimator": "h3"}\n')
    assert main(["compare", "--config", str(grid)]) == 2
