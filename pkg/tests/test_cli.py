"""CLI surface: exit codes, machine output schema and determinism,
trace files, DOT output, and the property catalog."""

import os

import pytest

from mutexlab import cli
from mutexlab.protocols import build_protocol
from mutexlab.traces import parse_trace, replay


def run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_sym_all_properties_passes(capsys, tmp_path):
    code, out, _ = run(
        capsys, "check", "--protocol", "sym", "--n", "2",
        "--properties", "all", "--trace-out", str(tmp_path),
    )
    assert code == 0
    assert "all properties pass" in out


def test_check_known_bad_writes_replayable_trace(capsys, tmp_path, monkeypatch):
    # default --trace-out is the working directory
    monkeypatch.chdir(tmp_path)
    code, out, _ = run(
        capsys, "check", "--protocol", "asym-sw-noexitwait", "--n", "2",
        "--properties", "mutex",
    )
    assert code == 1
    path = tmp_path / "asym-sw-noexitwait-n2-mutex.trace"
    assert path.exists()
    proto = build_protocol("asym-sw-noexitwait", 2)
    final = replay(proto, parse_trace(path.read_text()))
    assert list(final.pcs).count("CS") == 2


def test_check_rejects_bad_n(capsys):
    code, _, err = run(capsys, "check", "--protocol", "asym", "--n", "0")
    assert code == 2
    assert "error" in err.lower()


def test_check_rejects_unknown_protocol(capsys):
    code, _, _ = run(capsys, "check", "--protocol", "petersons", "--n", "2")
    assert code == 2


def test_check_rejects_unknown_property(capsys, tmp_path):
    code, _, err = run(
        capsys, "check", "--protocol", "asym", "--n", "2",
        "--properties", "starvation", "--trace-out", str(tmp_path),
    )
    assert code == 2


def test_check_rejects_inapplicable_property(capsys, tmp_path):
    code, _, err = run(
        capsys, "check", "--protocol", "asym", "--n", "2",
        "--properties", "ext-mutex", "--trace-out", str(tmp_path),
    )
    assert code == 2


def test_check_state_cap_exit_code(capsys, tmp_path):
    code, out, _ = run(
        capsys, "check", "--protocol", "sym", "--n", "2",
        "--properties", "mutex", "--state-cap", "40",
        "--trace-out", str(tmp_path),
    )
    assert code == 3
    assert "BOUNDED" in out


def test_machine_output_schema_and_determinism(capsys, tmp_path):
    args = (
        "check", "--protocol", "sym", "--n", "2", "--properties", "all",
        "--format", "machine", "--no-timing", "--trace-out", str(tmp_path),
    )
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2  # byte-identical
    lines = out1.splitlines()
    assert lines[0] == "mutexlab-report v1"
    kv = {}
    props = {}
    for ln in lines[1:]:
        fields = dict(tok.split("=", 1) for tok in ln.split())
        if "property" in fields:
            props[fields["property"]] = fields
        else:
            kv.update(fields)
    assert kv["protocol"] == "sym" and kv["n"] == "2"
    assert kv["states"] == "1287" and kv["bounded"] == "0"
    assert "time-ms" not in kv
    assert set(props) == {
        "mutex", "ext-mutex", "no-two-351", "free-implies-clear",
        "turn-stable", "no-deadlock", "lockout-freedom",
    }
    assert all(p["verdict"] == "pass" and p["trace"] == "-" for p in props.values())
    assert kv["exit"] == "0"


def test_machine_output_lists_trace_paths(capsys, tmp_path):
    code, out, _ = run(
        capsys, "check", "--protocol", "sym-nocandidate", "--n", "2",
        "--properties", "mutex,ext-mutex", "--format", "machine",
        "--no-timing", "--trace-out", str(tmp_path),
    )
    assert code == 1
    recs = [ln for ln in out.splitlines() if ln.startswith("property=")]
    for rec in recs:
        fields = dict(tok.split("=", 1) for tok in rec.split())
        assert fields["verdict"] == "fail"
        assert os.path.exists(fields["trace"])


def test_check_bypass_flag(capsys, tmp_path):
    code, out, _ = run(
        capsys, "check", "--protocol", "asym", "--n", "3",
        "--properties", "mutex", "--bypass", "--format", "machine",
        "--no-timing", "--trace-out", str(tmp_path),
    )
    assert code == 0
    assert "max-bypass=2,2,2" in out.splitlines()
    assert "bypass-cap=4" in out.splitlines()


def test_simulate_clean_and_violating(capsys, tmp_path):
    code, out, _ = run(
        capsys, "simulate", "--protocol", "asym", "--n", "3",
        "--steps", "5000", "--seed", "42", "--trace-out", str(tmp_path),
    )
    assert code == 0
    code, out, _ = run(
        capsys, "simulate", "--protocol", "asym-sw-noexitwait", "--n", "2",
        "--steps", "2000", "--seed", "0", "--runs", "20",
        "--format", "machine", "--no-timing", "--trace-out", str(tmp_path),
    )
    assert code == 1
    viol = [ln for ln in out.splitlines() if "violations=mutex" in ln]
    assert viol
    fields = dict(tok.split("=", 1) for tok in viol[0].split()[1:])
    trace = parse_trace(open(fields["trace"]).read())
    assert trace.seed is not None
    replay(build_protocol("asym-sw-noexitwait", 2), trace)


def test_simulate_machine_deterministic(capsys, tmp_path):
    args = (
        "simulate", "--protocol", "sym", "--n", "2", "--steps", "3000",
        "--seed", "9", "--format", "machine", "--no-timing",
        "--trace-out", str(tmp_path),
    )
    _, out1, _ = run(capsys, *args)
    _, out2, _ = run(capsys, *args)
    assert out1 == out2


def test_graph_command(capsys, tmp_path):
    out_path = tmp_path / "g.dot"
    code, _, _ = run(
        capsys, "graph", "--protocol", "sym", "--n", "1",
        "--dot-out", str(out_path),
    )
    assert code == 0
    text = out_path.read_text()
    assert text.startswith('digraph "sym n=1"')
    code, out, _ = run(capsys, "graph", "--protocol", "asym", "--n", "1")
    assert code == 0 and out.startswith("digraph")


def test_props_catalog(capsys):
    code, out, _ = run(capsys, "props")
    assert code == 0
    for prop in ("mutex", "ext-mutex", "lockout-freedom", "turn-stable"):
        assert prop in out
    code, out, _ = run(capsys, "props", "--protocol", "asym")
    assert code == 0
    assert "ext-mutex" not in out and "mutex" in out


def test_usage_errors(capsys):
    code, _, _ = run(capsys, "frobnicate")
    assert code == 2
    code, _, _ = run(capsys, "check", "--protocol", "asym")  # missing --n
    assert code == 2
    code, _, _ = run(capsys, "check", "--protocol", "asym", "--n", "2",
                     "--frobnicate")
    assert code == 2
