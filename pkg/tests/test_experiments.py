import json
import math
from dataclasses import replace

import pytest

from fracserrin.errors import DomainError
from fracserrin.experiments import (
    ANCHORS,
    FAULTS,
    SUITES,
    Check,
    Report,
    SuiteConfig,
    main,
    run_barrier_suite,
    run_identity_suite,
    run_maxprinciple_suite,
    run_solve_suite,
    run_stability_sweep,
    run_suite,
)

ANCHOR_SET = set(ANCHORS.values())


def small_barrier(**kw):
    cfg = SuiteConfig.default("barrier", params=((1, 0.5), (2, 0.25)))
    opts = dict(cfg.options, samples=1000, ratios=[0.25])
    return replace(cfg, options=opts, **kw)


def small_stability(**kw):
    cfg = SuiteConfig.default("stability", params=((2, 0.5),))
    return replace(cfg, options=dict(cfg.options, eps_grid=[0.0, 0.02, 0.08]), **kw)


def small_solve(**kw):
    return SuiteConfig.default("solve", resolutions=(128, 256, 512), **kw)


def interval_maxprinciple(**kw):
    return SuiteConfig.default("maxprinciple", params=((1, 0.5),), resolutions=(128, 256), **kw)


def assert_well_formed(rep: Report):
    for c in rep.checks:
        assert c.anchor in ANCHOR_SET
        assert c.passed == (c.margin >= 0)
    data = json.loads(rep.to_json())
    assert data["summary"]["total"] == len(rep.checks)


# configuration --------------------------------------------------------------


def test_config_validation():
    with pytest.raises(DomainError):
        SuiteConfig("nonsense")
    with pytest.raises(DomainError):
        SuiteConfig("solve", tolerances={"sup_error": 0.0})
    with pytest.raises(DomainError):
        SuiteConfig("solve", tolerances={"sup_error": -1.0})
    with pytest.raises(DomainError):
        SuiteConfig("solve", fault="melt")
    with pytest.raises(DomainError):
        SuiteConfig("solve", threads=0)


def test_config_defaults_and_round_trip():
    for suite in SUITES:
        cfg = SuiteConfig.default(suite)
        assert all(v > 0 for v in cfg.tolerances.values())
        back = SuiteConfig.from_dict(cfg.to_dict())
        assert back.to_dict() == cfg.to_dict()


def test_from_dict_merges_defaults():
    cfg = SuiteConfig.from_dict({"suite": "solve", "tolerances": {"sup_error": 0.5},
                                 "options": {"c0": 2.0}})
    assert cfg.tolerances["sup_error"] == 0.5
    assert cfg.tolerances["normal_derivative"] == 2e-2
    assert cfg.options["c0"] == 2.0 and cfg.options["interval"] == [-1.0, 1.0]


def test_scaled():
    cfg = SuiteConfig.default("barrier").scaled(10.0)
    assert cfg.tolerances["inequality"] == pytest.approx(1e-8)
    with pytest.raises(DomainError):
        SuiteConfig.default("barrier").scaled(0.0)


# reports ---------------------------------------------------------------------


def test_check_pass_iff_margin_nonnegative():
    assert Check("a", "x", {}, 1.0, 1.0, 0.0).passed
    assert not Check("a", "x", {}, 1.0, 1.0, -1e-300).passed


def test_report_failure_record_and_serialisation():
    rep = Report("solve", {})
    rep.add("ok", "dirichlet", {"n": 1}, 0.1, 0.2, 0.1)
    rep.fail("broken", "faber_krahn", {"n": 1}, DomainError("bad"))
    assert rep.summary() == {"total": 2, "passed": 1, "failed": 1}
    data = json.loads(rep.to_json())
    assert data["checks"][1]["margin"] == "-inf"
    assert data["checks"][1]["note"].startswith("DomainError")
    assert "timing" in data and "timing" not in json.loads(rep.canonical_json())
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("suite,check_id") and len(lines) == 3


def test_canonical_json_ignores_timing():
    a = Report("solve", {"x": 1}, runtime=1.0, timestamp="t1")
    b = Report("solve", {"x": 1}, runtime=2.0, timestamp="t2")
    assert a.canonical_json() == b.canonical_json()
    assert a.to_json() != b.to_json()


# suites ------------------------------------------------------------------------


def test_identity_suite_empty_params():
    rep = run_identity_suite(SuiteConfig.default("identities", params=()))
    assert rep.summary()["passed"] == 0
    checks = [c for c in rep.checks if "[n=" in c.check_id]
    assert checks == []


@pytest.fixture(scope="module")
def identity_report():
    return run_identity_suite(SuiteConfig.default("identities"))


def test_identity_suite_default_passes(identity_report):
    assert identity_report.ok
    assert_well_formed(identity_report)
    ids = {c.check_id.split("[")[0] for c in identity_report.checks}
    for key in ("interior_identity", "exterior_closed_form", "sphere_divergence", "lemma_signs",
                "euler_transformation", "gamma_recursion", "pluto_inequality", "tilde_torsion"):
        assert key in ids


def test_identity_fault_corrupt_gamma():
    rep = run_identity_suite(SuiteConfig.default("identities", fault="corrupt_gamma"))
    bad = [c for c in rep.checks if c.check_id.startswith("interior_identity")]
    assert bad and all(c.margin < 0 for c in bad)


def test_barrier_suite_and_fault():
    rep = run_barrier_suite(small_barrier())
    assert rep.ok
    assert_well_formed(rep)
    overlap = [c for c in rep.checks if c.check_id.startswith("overlap_equality")]
    assert overlap and all(c.measured <= 1e-12 for c in overlap)
    flipped = run_barrier_suite(small_barrier(fault="flip_barrier"))
    assert not flipped.ok


def test_barrier_threads_match_serial():
    one = run_barrier_suite(small_barrier())
    two = run_barrier_suite(small_barrier(threads=2))
    assert one.canonical_json() == two.canonical_json()


def test_maxprinciple_interval_vacuous_and_fault():
    rep = run_maxprinciple_suite(interval_maxprinciple())
    assert rep.ok and len(rep.checks) == 2
    assert all(c.inputs["L1"] == 0.0 for c in rep.checks)
    bad = run_maxprinciple_suite(interval_maxprinciple(fault="negate_v"))
    assert not bad.ok


def test_solve_suite_and_fault():
    rep = run_solve_suite(small_solve())
    assert rep.ok
    assert_well_formed(rep)
    assert [r["N"] for r in rep.tables["convergence"]] == [128, 256, 512]
    bad = run_solve_suite(small_solve(fault="perturb_solution"))
    assert not bad.ok


@pytest.mark.slow
def test_stability_small_grid_and_fault():
    rep = run_stability_sweep(small_stability())
    assert rep.ok, [c for c in rep.checks if not c.passed]
    assert_well_formed(rep)
    assert [r["eps"] for r in rep.tables["sweep"]] == [0.0, 0.02, 0.08]
    bad = run_stability_sweep(small_stability(fault="scramble_sweep"))
    assert not bad.ok


def test_every_fault_is_known():
    assert set(FAULTS) == {"corrupt_gamma", "flip_barrier", "negate_v", "scramble_sweep", "perturb_solution"}


def test_run_suite_stamps_timing():
    rep = run_suite(small_solve())
    assert rep.runtime > 0 and rep.timestamp


# command line ----------------------------------------------------------------------


def test_cli_json_and_report(tmp_path, capsys):
    cfg = tmp_path / "solve.json"
    cfg.write_text(json.dumps({"suite": "solve", "resolutions": [128, 256]}))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "solve.json").read_text())
    assert data["summary"]["failed"] == 0
    assert (tmp_path / "solve_convergence.csv").exists()
    assert main(["report", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "report.json").read_text())
    assert summary["checks"][0]["check_id"] == "suite_solve"
    assert "solve:" in capsys.readouterr().out


def test_cli_csv_format(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"suites": {"solve": {"resolutions": [128, 256]}}}))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path), "--format", "csv"]) == 0
    text = (tmp_path / "solve.csv").read_text()
    assert text.startswith("suite,check_id")


def test_cli_tol_scale_forces_failure(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"suite": "solve", "resolutions": [128, 256, 512]}))
    code = main(["solve", "--config", str(cfg), "--out", str(tmp_path), "--tol-scale", "1e-6"])
    assert code == 1


def test_cli_errors(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"suite": "barrier"}))
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path)]) == 2
    neg = tmp_path / "neg.json"
    neg.write_text(json.dumps({"suite": "solve", "tolerances": {"sup_error": -1}}))
    assert main(["solve", "--config", str(neg), "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["unknown"])


def test_cli_threads_flag(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"suite": "identities", "params": [[1, 0.5]]}))
    assert main(["identities", "--config", str(cfg), "--out", str(tmp_path), "--threads", "2"]) == 0
    assert not math.isnan(json.loads((tmp_path / "identities.json").read_text())["timing"]["runtime_s"])
