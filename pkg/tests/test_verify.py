import csv
import json
import os

import pytest

from nbesov.reports import FAIL, INCONCLUSIVE, PASS, EstimateReport
from nbesov.verify import DEFAULT_IDS, REGISTRY, resolve_ids, run_suite, suite_exit_code

NEG_IDS = [k for k in REGISTRY if k.startswith("neg_")]


def test_default_suite_passes(suite_reports):
    reports = suite_reports["reports"]
    assert set(reports) == set(DEFAULT_IDS)
    bad = {rid: r.verdict for rid, r in reports.items() if r.verdict != PASS}
    assert not bad, f"non-pass verdicts: {bad}"
    assert suite_exit_code(reports.values()) == 0


def test_every_experiment_gets_its_own_seed(suite_reports):
    reports = suite_reports["reports"]
    seeds = [reports[rid].seed for rid in DEFAULT_IDS]
    assert len(set(seeds)) == len(seeds)
    # Seeds derive from the registry position, not the request order.
    assert reports["duality"].seed == 101 * list(REGISTRY).index("duality")


def test_subset_rerun_reproduces_suite_reports(suite_reports):
    """A partial run must produce byte-identical canonical reports: seeding
    depends on registry position, never on which experiments ride along."""
    fresh = run_suite(ids=["duality", "reconstruction"], jobs=1)
    want = suite_reports["reports"]
    for rep in fresh:
        assert rep.to_json() == want[rep.id].to_json()


def test_saved_report_files(suite_reports):
    out = suite_reports["out_dir"]
    reports = suite_reports["reports"]
    for rid, rep in reports.items():
        with open(os.path.join(out, f"{rid}.json")) as fh:
            payload = json.load(fh)
        assert payload["id"] == rid
        assert payload["verdict"] == rep.verdict
        # Canonical payloads exclude wall-clock noise and figure arrays.
        assert "runtime" not in payload
        assert "figures" not in payload
        if rep.points:
            with open(os.path.join(out, f"{rid}.points.csv")) as fh:
                rows = list(csv.reader(fh))
            assert len(rows) == len(rep.points) + 1
        for name in rep.figures:
            fpath = os.path.join(out, f"{rid}.{name}.dat")
            assert os.path.getsize(fpath) > 0
    # At least these two are expected to ship plot-ready data.
    assert reports["amalgam"].figures
    assert reports["moment_decay"].figures


def test_negative_controls_fail_loudly():
    reports = run_suite(ids=NEG_IDS)
    for rep in reports:
        assert rep.verdict == FAIL, rep.id
        assert any("expected outcome" in n for n in rep.notes), rep.id
    assert suite_exit_code(reports) == 3


def test_resolve_ids_accepts_exp_prefix():
    assert resolve_ids(["exp_reconstruction", "duality"]) == ["reconstruction", "duality"]


def test_resolve_ids_rejects_unknown():
    with pytest.raises(ValueError, match="unknown experiment"):
        resolve_ids(["reconstructoin"])


def test_override_with_unknown_parameter_rejected():
    with pytest.raises(ValueError, match="unknown parameters"):
        run_suite(ids=["reconstruction"], overrides={"reconstruction": {"bogus": 1}})


def test_reduced_override_run():
    reports = run_suite(
        ids=["reconstruction"], overrides={"reconstruction": {"n_samples": 5}}
    )
    assert reports[0].verdict == PASS
    assert reports[0].params["n_samples"] == 5


def test_perturbed_variant_run():
    reports = run_suite(ids=["reconstruction"], pou_variant="perturbed")
    assert reports[0].verdict == PASS


def test_suite_exit_code_precedence():
    def rep(verdict):
        return EstimateReport(id="x", params={}, verdict=verdict)

    assert suite_exit_code([]) == 0
    assert suite_exit_code([rep(PASS), rep(PASS)]) == 0
    assert suite_exit_code([rep(PASS), rep(INCONCLUSIVE)]) == 2
    assert suite_exit_code([rep(FAIL), rep(INCONCLUSIVE), rep(PASS)]) == 3
