"""Config parsing, reports, snapshots, CSV emission and the CLI surface."""

import json
import os

import numpy as np
import pytest

from sqe.cli import main
from sqe.config import (ConfigError, parse_config, parse_scalar,
                        read_flat_file, solver_with)
from sqe.report import ExperimentReport, Metric, config_hash
from sqe.snapshot import load_snapshot, save_snapshot, write_csv
from sqe.spectral import ModeSet, SpectralField


def test_parse_scalar():
    assert parse_scalar("3") == 3
    assert parse_scalar("3.5") == 3.5
    assert parse_scalar("hello ") == "hello"
    assert parse_scalar("[1, 2.5, x]") == [1, 2.5, "x"]
    assert parse_scalar("[]") == []


def test_read_flat_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\ncutoff = 4\na = [0, 0, 0, 1]\n\nseed=7 # eol\n")
    d = read_flat_file(str(p))
    assert d == {"cutoff": 4, "a": [0, 0, 0, 1], "seed": 7}
    bad = tmp_path / "bad.cfg"
    bad.write_text("just words\n")
    with pytest.raises(ConfigError):
        read_flat_file(str(bad))


def test_parse_config_validation():
    with pytest.raises(ConfigError):
        parse_config("no-such-experiment")
    with pytest.raises(ConfigError):
        parse_config("bel", None, {"replicas": 0})
    with pytest.raises(ConfigError):
        parse_config("bel", None, {"replicas": 2.5})
    with pytest.raises(ConfigError):
        parse_config("bel", None, {"a": [0, 0, 1]})        # even degree
    cfg = parse_config("bel", None, {"seed": 3, "cutoff": 2})
    assert cfg.seed == 3 and cfg.solver.cutoff == 2
    # unknown keys ride along in extra
    cfg = parse_config("bel", None, {"r": 0.5})
    assert cfg.extra["r"] == 0.5


def test_parse_config_infers_degree_from_a():
    cfg = parse_config("moments", None,
                       {"a": [0, 0.5, 0, 0, 0, 2], "beta": 0.1,
                        "alpha0": 0.05, "alpha": 0.02, "gamma": 0.15,
                        "alpha_prime": 0.05})
    assert cfg.solver.n == 5


def test_solver_with_keeps_explicit_keys():
    cfg = parse_config("bel", None, {"cutoff": 16})
    s = solver_with(cfg, cutoff=2.0, dt=4e-3)
    assert s.cutoff == 16            # user-set key wins
    assert s.dt == 4e-3              # default key is replaced


def test_config_echo_and_hash_stability():
    cfg = parse_config("bel", None, {"seed": 1})
    e1 = cfg.echo()
    h1 = config_hash(e1)
    h2 = config_hash(dict(reversed(list(e1.items()))))
    assert h1 == h2 and len(h1) == 16
    assert config_hash({**e1, "seed": 2}) != h1


def test_report_roundtrip_and_exit_codes():
    rep = ExperimentReport("demo", {"k": 1}, seed=4)
    rep.add("metric", 1.5, 0.1, note="context")
    rep.check("gate", 0.2, True, tolerance="< 1")
    rep.finish()
    assert rep.passed() and rep.exit_code() == 0
    back = ExperimentReport.from_json(rep.to_json())
    assert back.to_json() == rep.to_json()
    assert back.hash == rep.hash
    rep.check("bad", 9.0, False)
    assert rep.exit_code() == 1
    rep.exploded = True
    assert rep.exit_code() == 3
    assert "FAIL" in rep.summary()


def test_snapshot_roundtrip(tmp_path):
    ms = ModeSet(4)
    rng = np.random.default_rng(0)
    raw = rng.standard_normal((3, ms.n_modes)) + 1j * rng.standard_normal((3, ms.n_modes))
    f = SpectralField(ms, 0.5 * (raw + np.conj(raw[..., ms.conj_index])))
    p = tmp_path / "field.sqf"
    save_snapshot(str(p), f, n=3)
    g, meta = load_snapshot(str(p))
    assert np.array_equal(g.coeffs, f.coeffs)
    assert meta["n"] == 3 and meta["cutoff"] == 4.0
    bad = tmp_path / "bad.sqf"
    bad.write_bytes(b"XXXX" + p.read_bytes()[4:])
    with pytest.raises(ValueError):
        load_snapshot(str(bad))
    trunc = tmp_path / "trunc.sqf"
    trunc.write_bytes(p.read_bytes()[:-16])
    with pytest.raises(ValueError):
        load_snapshot(str(trunc))


def test_write_csv_deterministic(tmp_path):
    rows = [(0.1, 1, "a"), (0.2, 2, "b")]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(str(p1), ("t", "k", "label"), rows)
    write_csv(str(p2), ("t", "k", "label"), rows)
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_text().splitlines()[0] == "t,k,label"


def test_cli_config_error_exit_code(capsys):
    assert main(["bel", "--replicas", "0"]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_runs_kernel_bounds(tmp_path, capsys):
    out = tmp_path / "artifacts"
    code = main(["kernel-bounds", "--out", str(out), "--seed", "1"])
    captured = capsys.readouterr().out
    assert code == 0
    assert "running kernel-bounds" in captured
    assert "overall: PASS" in captured
    report = json.loads((out / "report.json").read_text())
    assert report["experiment"] == "kernel-bounds"
    assert (out / "report.txt").exists()


def test_cli_artifacts_deterministic(tmp_path):
    outs = []
    for name in ("one", "two"):
        out = tmp_path / name
        assert main(["besov-suite", "--out", str(out), "--seed", "0",
                     "--replicas", "8"]) == 0
        outs.append(out)
    csvs = sorted(p.name for p in outs[0].iterdir() if p.suffix == ".csv")
    assert csvs
    for name in csvs:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
