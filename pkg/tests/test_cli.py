import csv
import io
import json
import math

import pytest

from entspec.cli import build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_space_l6(capsys):
    code, out, _ = run(capsys, "space", "--model", "blockaded", "--L", "6")
    assert code == 0
    assert json.loads(out)["D"] == [13, 8]


def test_space_invalid_length(capsys):
    code, _, err = run(capsys, "space", "--model", "blockaded", "--L", "0")
    assert code == 1 and "L must lie" in err


def test_space_diagonal_balanced(capsys):
    code, out, _ = run(capsys, "space", "--model", "diagonal-sz", "--L", "4", "--M", "4")
    doc = json.loads(out)
    assert code == 0 and doc["sectors"] == 5 and doc["balanced"]


def test_space_csv(capsys):
    code, out, _ = run(capsys, "space", "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "sector,d,allowed_r"


def test_bad_flags_exit_one(capsys):
    assert run(capsys, "dos", "--phi", "abc")[0] == 1
    assert run(capsys, "space", "--model", "diagonal-sz")[0] == 1
    assert run(capsys, "dos", "--phi", "-1")[0] == 1
    assert run(capsys, "nonsense")[0] == 1


def test_convergence_failure_exit_two(capsys, monkeypatch):
    from entspec import resolvent
    from entspec.exceptions import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("stuck", residual=1.0, z=1 + 1e-6j)

    monkeypatch.setattr(resolvent, "density", boom)
    code, _, err = run(capsys, "dos", "--method", "fixedpoint")
    assert code == 2 and "z=" in err and "eta=" in err


def test_dos_csv_reaches_full_mass(tmp_path):
    out = tmp_path / "dos.csv"
    assert main(["dos", "--model", "blockaded", "--phi", "1.61803398875", "--grid", "2000",
                 "--method", "closed", "--out", str(out)]) == 0
    table = rows(out.read_text())
    assert list(table[0]) == ["epsilon", "p_total", "p_sector_0", "p_sector_1", "cdf"]
    side = json.loads((tmp_path / "dos.csv.json").read_text())
    last = table[-1]
    assert abs(float(last["epsilon"]) - 4.231) < 1e-3
    assert abs(float(last["cdf"]) - (1 - side["delta_mass"])) < 1e-6
    assert (tmp_path / "dos.csv.manifest.json").exists()


def test_dos_json(capsys):
    code, out, _ = run(capsys, "dos", "--phi", "0.5", "--grid", "20", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and math.isclose(doc["delta_mass"], 1 / 3, rel_tol=1e-10)
    assert len(doc["rows"]) == 20


def test_entropy_golden(capsys):
    code, out, _ = run(capsys, "entropy", "--model", "blockaded", "--phi", "1.61803398875", "--n", "1")
    table = rows(out)
    assert code == 0
    assert abs(float(table[0]["delta_S"]) - 0.5136) < 2e-4
    assert table[-1]["n"] == "inf"


def test_scan_phases(capsys):
    code, out, _ = run(capsys, "scan", "--phi-min", "0.5", "--phi-max", "2", "--steps", "4")
    table = rows(out)
    assert code == 0
    assert [r["phase"] for r in table] == ["gapped", "multicritical", "MP", "MP"]
    assert list(table[0]) == ["phi", "z_minus", "z_plus", "delta_mass", "fitted_exponent", "phase", "delta_S1"]


def test_moments_json(capsys):
    code, out, _ = run(capsys, "moments", "--model", "unconstrained", "--n-max", "5", "--quadrature")
    doc = json.loads(out)
    assert code == 0
    assert doc["m_n"] == doc["catalan"] == [1, 2, 5, 14, 42]
    assert all(abs(a - b) < 1e-8 for a, b in zip(doc["mu_n_quadrature"], doc["catalan"]))


def test_moments_finite_exact(capsys):
    code, out, _ = run(capsys, "moments", "--n-max", "2", "--finite-L", "6", "--exact",
                       "--mc-samples", "50", "--seed", "1")
    doc = json.loads(out)
    assert code == 0 and doc["finite_exact"][1] == 221.40625 and doc["finite_N"] == 8
    assert len(doc["mc_mean"]) == 2


def test_sample_outputs(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sample", "--phi", "0.5", "--N", "100", "--samples", "2", "--bins", "10",
                 "--compare", "--out", str(out)]) == 0
    table = rows(out.read_text())
    assert len(table) == 10 and sum(int(r["count"]) for r in table) == 2 * 150
    summary = json.loads((tmp_path / "s.csv.json").read_text())
    assert abs(summary["zero_fraction"] - 1 / 3) < 0.01
    assert summary["cdf_distance"] < 0.05


@pytest.mark.parametrize("argv", [
    ["dos", "--grid", "40", "--phi", "golden"],
    ["entropy", "--n", "1,2.5,4"],
    ["sample", "--N", "40", "--samples", "3", "--seed", "9"],
    ["moments", "--n-max", "3", "--mc-samples", "5"],
    ["scan", "--steps", "2"],
    ["space", "--L", "7"],
])
def test_replay_reproduces_checksums(tmp_path, capsys, argv):
    out = tmp_path / "run.out"
    assert main(argv + ["--out", str(out)]) == 0
    manifest = json.loads((tmp_path / "run.out.manifest.json").read_text())
    assert manifest["subcommand"] == argv[0] and manifest["outputs"]
    assert main(["replay", str(tmp_path / "run.out.manifest.json")]) == 0
    assert "MISMATCH" not in capsys.readouterr().out


def test_replay_detects_tampering(tmp_path, capsys):
    out = tmp_path / "e.csv"
    main(["entropy", "--n", "2", "--out", str(out)])
    path = tmp_path / "e.csv.manifest.json"
    doc = json.loads(path.read_text())
    doc["outputs"]["e.csv"] = "0" * 64
    path.write_text(json.dumps(doc))
    assert main(["replay", str(path)]) == 1
    assert "MISMATCH" in capsys.readouterr().out


def test_help_lists_defaults():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    text = sub["dos"].format_help()
    assert "default: 2000" in text and "default: closed" in text
    assert "default: 1e-06" in text
    assert "default: 1000" in sub["sample"].format_help()
    for name in ("space", "dos", "moments", "entropy", "sample", "scan", "replay"):
        assert sub[name].format_help()


def test_version(capsys):
    assert main(["--version"]) == 0
