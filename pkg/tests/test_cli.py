import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from chen_invariants import harness
from chen_invariants.cli import main, render, render_text
from chen_invariants.shapes import check_lagrangian_symmetry, shape_from_document

DATA = Path(__file__).parent / "data"


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def exit_code(argv):
    # argparse reports usage errors by raising SystemExit(2)
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


def write_shape(tmp_path, h, kind="real", c=0.0, m=None, name="shape.json"):
    h = np.asarray(h, dtype=float)
    amb = {"kind": kind, "c": c}
    if m is not None:
        amb["ambient_real_dim"] = m
    path = tmp_path / name
    path.write_text(json.dumps({"n": h.shape[1], "p": h.shape[0], "ambient": amb, "h": h.tolist()}))
    return str(path)


# ---------------------------------------------------------------- compute


def test_compute_totally_geodesic(tmp_path, capsys):
    path = write_shape(tmp_path, np.zeros((1, 3, 3)), c=1.0)
    code, out, _ = run(["compute", "--in", path, "--k", "3"], capsys)
    rep = json.loads(out)
    assert code == 0
    v = rep["results"][0]["verdicts"][0]
    assert v["delta"] == pytest.approx(2.0) and v["bound"] == 2.0 and v["equality"]


def test_compute_example_b(tmp_path, capsys):
    path = write_shape(tmp_path, np.diag([0.0, 1.0, 1.0])[None], m=4)
    code, out, _ = run(["compute", "--in", path], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["tau"] == 1.0 and rep["H_sq"] == pytest.approx(4 / 9)
    v = rep["results"][0]["verdicts"][0]
    assert v["delta"] == pytest.approx(1.0) and v["bound"] == pytest.approx(1.0) and v["equality"]
    assert rep["equality_form"]["found"]


def test_compute_k2_has_no_verdict(tmp_path, capsys):
    path = write_shape(tmp_path, np.diag([0.0, 1.0, 1.0])[None])
    code, out, _ = run(["compute", "--in", path, "--k", "2,3"], capsys)
    rep = json.loads(out)
    assert code == 0
    assert [r["k"] for r in rep["results"]] == [2, 3]
    assert rep["results"][0]["verdicts"] == [] and rep["results"][0]["theta"] == pytest.approx(0.0, abs=1e-12)


def test_compute_lagrangian_reports_both_bounds(tmp_path, capsys):
    doc, _ = harness.cmd_sample(3, seed=5, lagrangian=True)
    path = tmp_path / "lag.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(["compute", "--in", str(path), "--kind", "lagrangian"], capsys)
    rep = json.loads(out)
    assert code == 0
    kinds = [v["kind"] for v in rep["results"][-1]["verdicts"]]
    assert kinds == ["TotallyReal", "LagrangianOrderN"]


def test_compute_asymmetric_input_exit_2(tmp_path, capsys):
    h = np.zeros((1, 3, 3))
    h[0, 0, 1] = 1.0
    code, out, err = run(["compute", "--in", write_shape(tmp_path, h)], capsys)
    assert code == 2 and out == ""
    assert "r=1, i=1, j=2" in err or "r=1, i=2, j=1" in err


@pytest.mark.parametrize(
    "content",
    ["{not json", json.dumps({"n": 3}), json.dumps({"n": 3, "p": 1, "ambient": {"kind": "real", "c": 0}, "h": [[[1]]]})],
)
def test_compute_schema_errors_exit_2(tmp_path, capsys, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    assert run(["compute", "--in", str(path)], capsys)[0] == 2


def test_compute_missing_file_exit_2(tmp_path, capsys):
    assert run(["compute", "--in", str(tmp_path / "nope.json")], capsys)[0] == 2


def test_compute_bad_k_exit_2(tmp_path, capsys):
    path = write_shape(tmp_path, np.zeros((1, 3, 3)))
    assert exit_code(["compute", "--in", path, "--k", "4"]) == 2
    assert exit_code(["compute", "--in", path, "--k", "x"]) == 2


@pytest.mark.parametrize(
    "kind,ambient,h",
    [
        ("real", "complex", np.zeros((3, 3, 3))),
        ("totally-real", "real", np.zeros((3, 3, 3))),
        ("lagrangian", "complex", np.eye(3)[None].repeat(3, axis=0)),
        ("lagrangian", "complex", np.zeros((1, 3, 3))),
    ],
)
def test_compute_inconsistent_kind_exit_3(tmp_path, capsys, kind, ambient, h):
    path = write_shape(tmp_path, h, kind=ambient)
    assert run(["compute", "--in", path, "--kind", kind], capsys)[0] == 3


def test_compute_violation_exit_1(tmp_path, capsys, monkeypatch):
    # a negative tolerance turns the exact equality case into a reported violation
    monkeypatch.setattr(harness.Tolerances, "from_env", classmethod(lambda cls, env=None: cls(holds=-1.0)))
    path = write_shape(tmp_path, np.diag([0.0, 1.0, 1.0])[None])
    assert run(["compute", "--in", path], capsys)[0] == 1


def test_compute_reads_stdin(tmp_path, monkeypatch, capsys):
    import io

    text = Path(write_shape(tmp_path, np.zeros((1, 3, 3)), c=1.0)).read_text()
    monkeypatch.setattr(sys, "stdin", io.StringIO(text))
    code, out, _ = run(["compute", "--in", "-"], capsys)
    assert code == 0 and json.loads(out)["tau"] == 3.0


# ---------------------------------------------------------------- tolerance overrides


def test_env_tolerance_override(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(harness.ENV_HOLDS_TOL, "1e-3")
    monkeypatch.setenv(harness.ENV_EQUALITY_TOL, "0.5")
    path = write_shape(tmp_path, np.eye(3)[None])
    code, out, _ = run(["compute", "--in", path], capsys)
    rep = json.loads(out)
    assert rep["tolerances"] == {"holds": 1e-3, "equality": 0.5}
    assert rep["results"][0]["verdicts"][0]["equality"]


@pytest.mark.parametrize("value", ["abc", "-1", "nan"])
def test_env_tolerance_bad_value_exit_2(tmp_path, capsys, monkeypatch, value):
    monkeypatch.setenv(harness.ENV_HOLDS_TOL, value)
    assert run(["compute", "--in", write_shape(tmp_path, np.eye(3)[None])], capsys)[0] == 2


# ---------------------------------------------------------------- sweep


def test_sweep_empty(capsys):
    code, out, _ = run(["sweep", "--count", "0"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["samples"] == 0 and rep["violations"] == [] and rep["min_slack"] is None


def test_sweep_small_real(capsys):
    code, out, _ = run(["sweep", "--count", "30", "--seed", "42", "--n", "3,4,5"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["violations"] == []
    assert rep["min_slack"] >= -1e-7
    assert rep["kinds_tested"] == ["RealForm"]
    assert sum(v["count"] for v in rep["per_k"].values()) == rep["verdicts"]
    assert rep["min_slack"] == min(v["min_slack"] for v in rep["per_k"].values())


def test_sweep_lagrangian(capsys):
    code, out, _ = run(["sweep", "--kind", "lagrangian", "--n", "3,4", "--count", "40"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["kinds_tested"] == ["LagrangianOrderN"] and rep["p"] is None


def test_sweep_totally_real(capsys):
    code, out, _ = run(["sweep", "--kind", "totally-real", "--n", "3", "--p", "3,4", "--count", "10"], capsys)
    assert code == 0 and json.loads(out)["kinds_tested"] == ["TotallyReal"]


def test_sweep_is_byte_identical_and_worker_independent(capsys):
    args = ["sweep", "--count", "12", "--seed", "7", "--n", "3,4"]
    outs = [run(args, capsys)[1] for _ in range(2)]
    outs.append(run(args + ["--workers", "2"], capsys)[1])
    assert outs[0] == outs[1] == outs[2]


def test_sweep_seed_changes_output(capsys):
    a = run(["sweep", "--count", "5", "--seed", "1"], capsys)[1]
    b = run(["sweep", "--count", "5", "--seed", "2"], capsys)[1]
    assert a != b


def test_sweep_samples_are_order_independent():
    cfg = harness.SweepConfig("real", (3, 4, 5), (1, 2, 3), 10, 99)
    forward = [harness.sweep_sample(cfg, i)[0] for i in range(10)]
    backward = [harness.sweep_sample(cfg, i)[0] for i in reversed(range(10))][::-1]
    assert all(a == b for a, b in zip(forward, backward))


def test_sweep_violation_embeds_shape():
    cfg = harness.SweepConfig("real", (3,), (1,), 3, 0, tols=harness.Tolerances(holds=-100.0))
    rep, code = harness.cmd_sweep(cfg)
    assert code == 1 and len(rep["violations"]) == 3
    shape, amb = shape_from_document(rep["violations"][0]["shape"])
    expected, _ = harness.sweep_sample(cfg, 0)
    assert shape == expected


def test_sweep_timing_flag(capsys):
    rep = json.loads(run(["sweep", "--count", "1", "--timing"], capsys)[1])
    assert rep["wall_time"] >= 0


@pytest.mark.parametrize(
    "args",
    [
        ["--count", "-1"],
        ["--n", "2"],
        ["--p", "0"],
        ["--seed", "-5"],
        ["--scale", "0"],
        ["--workers", "0"],
        ["--kind", "hyperbolic"],
        ["--starts", "0"],
    ],
)
def test_sweep_bad_params_exit_2(capsys, args):
    assert exit_code(["sweep", "--count", "1"] + args) == 2


# ---------------------------------------------------------------- qp


def test_qp_all_methods(capsys):
    code, out, _ = run(["qp", "--label", "fr_real", "--n", "4", "--k-order", "3", "--trace", "6"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["agreement"]["agree"]
    assert [s["method"] for s in rep["solutions"]] == ["ClosedForm", "KKT", "NumericOracle"]
    assert rep["solutions"][0]["max_value"] == 12.0


def test_qp_from_document(tmp_path, capsys):
    path = tmp_path / "qp.json"
    path.write_text(json.dumps({"label": "fr_lagrangian", "n": 3, "k_order": None, "r": 2, "trace": 14}))
    code, out, _ = run(["qp", "--in", str(path), "--method", "kkt"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["solutions"][0]["point"] == pytest.approx([2, 9, 3])


@pytest.mark.parametrize(
    "args",
    [
        ["--label", "fr_real", "--n", "4", "--k-order", "2"],
        ["--label", "fr_real", "--n", "4"],
        ["--label", "fr_lagrangian", "--n", "4", "--r", "9"],
        ["--n", "4"],
        ["--label", "f1_lagrangian", "--n", "4", "--starts", "3"],
        ["--label", "nope", "--n", "4"],
    ],
)
def test_qp_bad_params_exit_2(capsys, args):
    assert exit_code(["qp"] + args) == 2


# ---------------------------------------------------------------- equality


def test_equality_round_trip(capsys):
    code, out, _ = run(["equality", "--n", "4", "--p", "2", "--a", "1,2", "--rotate-seed", "3"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["direction_recovered"]
    assert all(abs(v["slack"]) <= 1e-8 for v in rep["verdicts"])


def test_equality_length_mismatch_exit_2(capsys):
    assert run(["equality", "--n", "3", "--p", "2", "--a", "1"], capsys)[0] == 2


def test_equality_violation_exit_1(capsys, monkeypatch):
    monkeypatch.setattr(harness.Tolerances, "from_env", classmethod(lambda cls, env=None: cls(equality=-1.0)))
    assert run(["equality", "--n", "3", "--a", "1"], capsys)[0] == 1


# ---------------------------------------------------------------- sample


def test_sample_golden(capsys):
    code, out, _ = run(["sample", "--n", "3", "--p", "1", "--seed", "1"], capsys)
    assert code == 0
    assert out == (DATA / "sample_seed1_n3_p1.json").read_text()


def test_sample_lagrangian_symmetric(capsys):
    code, out, _ = run(["sample", "--n", "4", "--seed", "9", "--lagrangian"], capsys)
    shape, amb = shape_from_document(json.loads(out), lagrangian=True)
    assert code == 0 and check_lagrangian_symmetry(shape).ok and amb.kind == "complex"


def test_sample_repeatable_bytes(capsys):
    args = ["sample", "--n", "5", "--p", "3", "--seed", "123456789012345"]
    assert run(args, capsys)[1] == run(args, capsys)[1]


@pytest.mark.parametrize(
    "args",
    [["--n", "2"], ["--n", "3", "--p", "0"], ["--n", "3", "--scale", "-1"], ["--n", "3", "--lagrangian", "--p", "2"]],
)
def test_sample_bad_params_exit_2(capsys, args):
    assert exit_code(["sample"] + args) == 2


def test_sample_output_file(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert run(["sample", "--n", "3", "--seed", "1", "--p", "1", "--out", str(out)], capsys) == (0, "", "")
    assert out.read_text() == (DATA / "sample_seed1_n3_p1.json").read_text()


# ---------------------------------------------------------------- selfcheck


@pytest.fixture(scope="module")
def selfcheck_default():
    return harness.cmd_selfcheck(seed=0)


def test_selfcheck_passes(selfcheck_default):
    rep, code = selfcheck_default
    assert code == 0 and rep["passed"]
    assert all(c["passed"] for c in rep["checks"])


def test_selfcheck_fault_injection():
    rep, code = harness.cmd_selfcheck(seed=0, perturb=1e-3)
    failed = [c["name"] for c in rep["checks"] if not c["passed"]]
    assert code == 1 and failed == ["alpha_identity"]


def test_selfcheck_outcomes_do_not_depend_on_seed(selfcheck_default):
    rep, code = harness.cmd_selfcheck(seed=31337)
    assert code == selfcheck_default[1]
    assert [c["passed"] for c in rep["checks"]] == [c["passed"] for c in selfcheck_default[0]["checks"]]


# ---------------------------------------------------------------- rendering and entry points


def test_text_format_rounds_to_twelve_digits(tmp_path, capsys):
    path = write_shape(tmp_path, np.diag([0.0, 1.0, 1.0])[None])
    code, out, _ = run(["compute", "--in", path, "--format", "text"], capsys)
    assert code == 0
    assert "H_sq: 0.444444444444\n" in out


def test_render_text_nested():
    lines = render_text({"a": {"b": [1.0, 2.5]}, "c": [{"d": None}], "e": True})
    assert lines == ["a.b: [1, 2.5]", "c[0].d: null", "e: true"]


def test_json_round_trip_of_every_report(tmp_path):
    path = Path(write_shape(tmp_path, np.eye(3)[None]))
    from chen_invariants.shapes import load_shape

    reports = [
        harness.cmd_compute(*load_shape(path))[0],
        harness.cmd_sweep(harness.SweepConfig("real", (3,), (1,), 2, 0))[0],
        harness.cmd_equality(3, 1, [1.0])[0],
        harness.cmd_sample(3)[0],
    ]
    for rep in reports:
        text = render(rep)
        assert json.loads(text) == rep
        assert render(json.loads(text)) == text


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "chen_invariants", "sample", "--n", "3", "--p", "1", "--seed", "1"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout == (DATA / "sample_seed1_n3_p1.json").read_text()


def test_missing_command_exit_2():
    assert exit_code([]) == 2
