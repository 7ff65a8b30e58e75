"""End-to-end tests of the command-line interface: argument handling,
config-file precedence, exit codes, CSV emission, and the validate suite."""

import json

import pytest

from catport import cli, protocol
from catport.cli import EXIT_CONFIG, EXIT_CUTOFF, EXIT_FAIL, EXIT_OK, main
from catport.protocol import Outcomes, ProtocolConfig


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ------------------------------------------------------------------ teleport

def test_teleport_defaults(capsys):
    code, out, err = run(capsys, "teleport")
    assert code == EXIT_OK and err == ""
    assert "fidelity          0.946715838201" in out
    assert "outcome           +++" in out
    assert "correction        I" in out
    assert "note:" not in out


def test_teleport_renormalization_note(capsys):
    code, out, _ = run(capsys, "teleport", "--mu-re", "1", "--nu-re", "1",
                       "--alpha", "2", "--beta-im", "2")
    assert code == EXIT_OK
    assert "renormalized" in out


def test_teleport_matches_library_call(capsys):
    code, out, _ = run(capsys, "teleport", "--alpha", "3", "--beta-re", "3",
                       "--variant", "2", "--outcomes=-,+",
                       "--correction", "ideal")
    assert code == EXIT_OK
    cfg = ProtocolConfig(alpha=3.0, beta=3.0 + 0j, variant=2,
                         correction_mode="ideal")
    want = protocol.teleport(cfg, Outcomes(sigma_ab=-1))
    assert f"fidelity          {want.fidelity:.12g}" in out
    assert "correction        X" in out


def test_teleport_out_csv(tmp_path, capsys):
    path = tmp_path / "single.csv"
    code, out, _ = run(capsys, "teleport", "--out", str(path))
    assert code == EXIT_OK
    lines = path.read_text().splitlines()
    assert lines[0].startswith("figure,variant,alpha")
    assert lines[1].startswith("teleport,1,4,")
    manifest = json.loads((tmp_path / "single.csv.manifest.json").read_text())
    assert manifest["outputs"][0]["path"] == "single.csv"


def test_teleport_rejects_contradictory_dispersive_sign(capsys):
    code, _, err = run(capsys, "teleport", "--outcomes=+,+,-")
    assert code == EXIT_CONFIG
    assert "contradicts" in err


def test_teleport_rejects_sign_with_multishot_readout(capsys):
    code, _, err = run(capsys, "teleport", "--kplus", "5", "--outcomes=+,+,+")
    assert code == EXIT_CONFIG
    assert "N = 1" in err


def test_teleport_rejects_malformed_outcomes(capsys):
    code, _, err = run(capsys, "teleport", "--outcomes", "up,down")
    assert code == EXIT_CONFIG


def test_teleport_wrong_sign_count(capsys):
    code, _, err = run(capsys, "teleport", "--variant", "2",
                       "--outcomes=+,+,+")
    assert code == EXIT_CONFIG
    assert "parity sign" in err


def test_config_error_exit_code(capsys):
    code, _, err = run(capsys, "teleport", "--alpha", "0")
    assert code == EXIT_CONFIG and "alpha" in err


def test_cutoff_error_exit_code(capsys):
    code, _, err = run(capsys, "teleport", "--cutoff-margin", "0",
                       "--alpha", "6", "--beta-im", "6")
    assert code == EXIT_CUTOFF and "cutoff" in err.lower()


# ------------------------------------------------------------------ config file

def test_config_file_supplies_defaults(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nalpha = 3.0\nbeta-im = 3.0\nvariant = 2\n")
    code, out, _ = run(capsys, "teleport", "--config", str(cfg))
    assert code == EXIT_OK
    want = protocol.teleport(ProtocolConfig(alpha=3.0, beta=3.0j, variant=2))
    assert f"fidelity          {want.fidelity:.12g}" in out


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha = 3.0\nbeta_im = 3.0\n")
    code, out, _ = run(capsys, "teleport", "--config", str(cfg),
                       "--alpha", "4", "--beta-im", "4")
    assert code == EXIT_OK
    assert "fidelity          0.946715838201" in out


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alphaa = 3.0\n")
    code, _, err = run(capsys, "teleport", "--config", str(cfg))
    assert code == EXIT_CONFIG and "unknown config key" in err


def test_config_file_missing(capsys):
    code, _, err = run(capsys, "teleport", "--config", "/no/such/file.cfg")
    assert code == EXIT_CONFIG and "cannot read config file" in err


def test_config_file_malformed_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha 3.0\n")
    code, _, err = run(capsys, "teleport", "--config", str(cfg))
    assert code == EXIT_CONFIG and "key=value" in err


# ------------------------------------------------------------------ sweep

def test_sweep_single_point(tmp_path, capsys):
    out_csv = tmp_path / "spot.csv"
    code, out, _ = run(capsys, "sweep", "--figure", "3a",
                       "--alpha-grid", "4:4:1", "--beta-grid", "4:4:1",
                       "--out", str(out_csv))
    assert code == EXIT_OK
    lines = out_csv.read_text().splitlines()
    assert len(lines) == 2
    assert "0.946715838201" in lines[1]
    manifest = json.loads(
        (tmp_path / "spot.csv.manifest.json").read_text())
    assert manifest["config"]["figure"] == "3a"
    assert manifest["schema_version"] == 1


def test_sweep_oracle_flag(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "--figure", "3a",
                       "--alpha-grid", "4:4:1", "--beta-grid", "4:4:1",
                       "--out", str(tmp_path / "o.csv"), "--oracle")
    assert code == EXIT_OK
    assert "oracle ok" in out


def test_sweep_xi_override(tmp_path, capsys):
    out_csv = tmp_path / "xi.csv"
    code, _, _ = run(capsys, "sweep", "--figure", "4a", "--xi", "2.0",
                     "--beta-re", "4", "--out", str(out_csv))
    assert code == EXIT_OK
    rows = out_csv.read_text().splitlines()[1:]
    assert len(rows) == 1 and rows[0].split(",")[5] == "2"


def test_sweep_guards(capsys):
    for argv, fragment in (
        (("sweep", "--figure", "3a", "--kminus", "2"), "k_minus"),
        (("sweep", "--figure", "3a", "--tau", "0.1"), "preset rule"),
        (("sweep", "--figure", "3a", "--xi", "2.0"), "interaction-time"),
        (("sweep", "--figure", "3a", "--beta-re", "3"), "beta-grid"),
        (("sweep", "--figure", "4a", "--outcomes=+,+,+"), "parity sign"),
        (("sweep", "--figure", "3a", "--alpha-grid", "1:2"), "lo:hi:step"),
        (("sweep", "--figure", "3a", "--alpha-grid", "2:1:0.5"), "step"),
        (("sweep", "--figure", "5a", "--n-list", "1,two"), "ints"),
    ):
        code, _, err = run(capsys, *argv)
        assert code == EXIT_CONFIG, argv
        assert fragment in err, (argv, err)


def test_sweep_n_list_override(tmp_path, capsys):
    out_csv = tmp_path / "n.csv"
    code, _, _ = run(capsys, "sweep", "--figure", "5a", "--n-list", "1,3",
                     "--beta-im", "4", "--out", str(out_csv))
    assert code == EXIT_OK
    rows = [line.split(",") for line in out_csv.read_text().splitlines()[1:]]
    assert [r[7] for r in rows] == ["1", "3"]


def test_sweep_outcome_override(tmp_path, capsys):
    out_csv = tmp_path / "mm.csv"
    code, _, _ = run(capsys, "sweep", "--figure", "3a",
                     "--alpha-grid", "4:4:1", "--beta-grid", "4:4:1",
                     "--outcomes=-,-", "--out", str(out_csv))
    assert code == EXIT_OK
    row = out_csv.read_text().splitlines()[1].split(",")
    assert row[11].startswith("--")


# ------------------------------------------------------------------ validate

def test_validate_fast(capsys):
    code, out, _ = run(capsys, "validate")
    assert code == EXIT_OK
    for name in (
        "dispersive-povm-completeness", "displacement-unitarity",
        "beamsplitter-unitarity", "parity-completeness",
        "engine-equivalence", "kraus-completeness", "correction-tables",
    ):
        assert f"ok   {name}" in out
    assert "all 7 invariants hold" in out


def test_validate_full_adds_oracle_replay(capsys):
    code, out, _ = run(capsys, "validate", "--level", "full")
    assert code == EXIT_OK
    assert "ok   dense-oracle-replay" in out
    assert "all 8 invariants hold" in out


def test_validate_catches_injected_fault(capsys, monkeypatch):
    monkeypatch.setenv("CATPORT_FAULT", "bs-sign")
    code, out, _ = run(capsys, "validate")
    assert code == EXIT_FAIL
    assert "FAIL engine-equivalence" in out
    # the fault is sign-only, so every norm/completeness invariant survives
    assert out.count("ok   ") == 6
    assert "validation failed at: engine-equivalence" in out
