import json
from pathlib import Path

import pytest

from lyaprec import cli as cli_mod
from lyaprec.cli import main
from lyaprec.errors import NumericsError

GOLDEN = Path(__file__).parent / "golden"

GOLDEN_CASES = [
    (
        "lyapunov_small.csv",
        ["lyapunov", "--rho", "0.5", "--beta", "0,2", "--q", "1", "--format", "csv"],
    ),
    (
        "lyapunov_small.json",
        ["lyapunov", "--rho", "0.5", "--beta", "0,2", "--q", "1", "--format", "json"],
    ),
    ("bigf_small.csv", ["bigf", "--rho", "0.5", "--points", "5", "--format", "csv"]),
    (
        "meanfield_small.csv",
        ["meanfield", "--rho", "0.1", "--beta", "0,7", "--format", "csv"],
    ),
    (
        "appendixb_small.json",
        [
            "appendixb",
            "--rho", "0.05",
            "--a", "5,50",
            "--cubic-beta", "20,40",
            "--format", "json",
        ],
    ),
    (
        "simulate_exact.json",
        [
            "simulate",
            "--n", "10",
            "--rho", "0.2",
            "--beta", "1.0",
            "--exact",
            "--format", "json",
        ],
    ),
    (
        "simulate_mc.json",
        [
            "simulate",
            "--n", "50",
            "--rho", "0.2",
            "--beta", "2.0",
            "--paths", "2000",
            "--seed", "7",
            "--format", "json",
        ],
    ),
    ("critical.json", ["critical", "--format", "json"]),
    (
        "phase_small.csv",
        ["phase", "--rho", "0.04,0.07,0.1", "--format", "csv"],
    ),
    (
        "phase_small.json",
        ["phase", "--rho", "0.04,0.07,0.1", "--format", "json"],
    ),
    (
        "exponent_meanfield.json",
        ["exponent", "--model", "meanfield", "--points", "8", "--format", "json"],
    ),
]


def _run(argv, tmp_path, name):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out.read_bytes()


@pytest.mark.parametrize("name,argv", GOLDEN_CASES, ids=[c[0] for c in GOLDEN_CASES])
def test_golden_outputs(name, argv, tmp_path):
    code, data = _run(argv, tmp_path, name)
    assert code == 0
    assert data == (GOLDEN / name).read_bytes()


def test_stdout_matches_file_output(capsys):
    assert main(["meanfield", "--rho", "0.1", "--beta", "0,7"]) == 0
    out = capsys.readouterr().out
    assert out.encode() == (GOLDEN / "meanfield_small.csv").read_bytes()


def test_csv_line_endings(tmp_path):
    _, data = _run(["bigf", "--rho", "0.2", "--points", "3"], tmp_path, "b.csv")
    assert data.count(b"\r\n") == 4  # header + 3 rows
    assert b"\n\n" not in data


def test_json_envelope(tmp_path):
    _, data = _run(
        ["bigf", "--rho", "0.2", "--points", "3", "--format", "json"],
        tmp_path,
        "b.json",
    )
    doc = json.loads(data)
    assert doc["schema_version"] == "1"
    assert doc["command"] == "bigf"
    assert {len(r) for r in doc["rows"]} == {len(doc["columns"])}


def test_lyapunov_rows_respect_bounds(tmp_path):
    _, data = _run(
        [
            "lyapunov",
            "--rho", "0.1,0.4",
            "--beta", "1,5",
            "--q", "2",
            "--format", "json",
        ],
        tmp_path,
        "l.json",
    )
    doc = json.loads(data)
    col = {c: i for i, c in enumerate(doc["columns"])}
    for row in doc["rows"]:
        lam = row[col["lambda"]]
        assert row[col["lower_bound"]] - 1e-9 <= lam <= row[col["upper_bound"]] + 1e-9
        assert row[col["meanfield_lambda"]] <= lam + 1e-9


def test_exit_codes(capsys):
    assert main(["simulate", "--n", "25", "--exact"]) == 3
    assert main(["critical", "--rho-lo", "0.3", "--rho-hi", "0.2"]) == 2
    assert main(["critical", "--format", "csv"]) == 2
    assert main(["lyapunov", "--rho", "abc"]) == 2
    assert main(["nonsense"]) == 2
    capsys.readouterr()


def test_numerics_exit_code(monkeypatch, capsys):
    def boom(rc):
        raise NumericsError("synthetic failure")

    monkeypatch.setitem(cli_mod._DISPATCH, "meanfield", boom)
    assert main(["meanfield"]) == 4
    assert "synthetic failure" in capsys.readouterr().err


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("rho=0.25\nbeta=0\n# comment line\n")
    _, data = _run(["lyapunov", "--config", str(cfg)], tmp_path, "a.csv")
    assert b"\r\n0.25,0," in data
    _, data = _run(
        ["lyapunov", "--config", str(cfg), "--rho", "0.5"], tmp_path, "b.csv"
    )
    assert b"\r\n0.5,0," in data
    assert b"0.25," not in data


def test_threads_do_not_change_output(monkeypatch, tmp_path):
    base = [
        "simulate",
        "--n", "20",
        "--rho", "0.2",
        "--beta", "1.0",
        "--paths", "3000",
        "--seed", "4",
    ]
    code1, d1 = _run(base, tmp_path, "t1.json")
    code2, d2 = _run(base + ["--threads", "4"], tmp_path, "t2.json")
    monkeypatch.setenv("LYAPREC_THREADS", "3")
    code3, d3 = _run(base, tmp_path, "t3.json")
    assert code1 == code2 == code3 == 0
    assert d1 == d2 == d3


def test_rerun_is_byte_identical(tmp_path):
    argv = ["phase", "--rho", "0.05,0.08", "--format", "csv"]
    _, d1 = _run(argv, tmp_path, "p1.csv")
    _, d2 = _run(argv, tmp_path, "p2.csv")
    assert d1 == d2
