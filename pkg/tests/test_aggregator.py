from pathlib import Path
import json
import sys

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from engine.aggregator import VerifyReport


def _build_report():
    report = VerifyReport()
    report.add_check("J(1/2,1/2)", "closed-form", 0.663497, 0.66349667, 1e-5)
    report.add_check("E(1/2)", "coefficient", 0.4790, 0.4770, 5e-4)
    report.add_check("table monotone", "coefficient", None, None, None, passed=True)
    return report


def test_add_check_decides_pass_from_tolerance():
    report = _build_report()

    assert report.checks_count == 3
    assert [c.name for c in report.failed] == ["E(1/2)"]
    assert not report.all_passed


def test_errors_are_recorded_as_failures():
    report = VerifyReport()
    outcome = report.add_error("scatlen", "errors", RuntimeError("solver blew up"))

    assert not outcome.passed
    assert outcome.detail == "RuntimeError: solver blew up"
    assert report.failed == [outcome]


def test_report_groups_checks_and_serializes():
    payload = json.loads(_build_report().to_json())

    assert payload["total_checks"] == 3
    assert payload["failed"] == ["E(1/2)"]
    assert [c["name"] for c in payload["groups"]["coefficient"]] == ["E(1/2)", "table monotone"]


def test_table_marks_each_check():
    text = _build_report().table()

    assert "FAIL" in text
    assert text.count("PASS") == 2
    assert text.rstrip().endswith("2/3 checks passed")


def test_discrepancies_are_noted_without_failing_the_report():
    report = VerifyReport()
    report.add_check("table E(0.5)", "coefficient", 0.4770, 0.4770, 5e-3)
    noted = report.add_discrepancy("table E(0.85)", "coefficient", 1.333, 1.3228, 5e-3, detail="recomputed")

    assert noted.status == "NOTED"
    assert report.all_passed
    assert report.discrepancies == [noted]
    payload = json.loads(report.to_json())
    assert payload["discrepancies"] == ["table E(0.85)"]
    assert payload["groups"]["coefficient"][1]["status"] == "NOTED"
    text = report.table()
    assert "NOTED" in text and "recomputed" in text
    assert text.rstrip().endswith("2/2 checks passed")
