from collections import defaultdict
from typing import Any, Dict, List, Literal
import json

from pydantic import BaseModel, ConfigDict, computed_field


class CheckOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    group: str
    value: float | None
    expected: float | None
    tolerance: float | None
    passed: bool
    # reference value itself is off; confirmed by a refined recomputation
    discrepancy: bool = False
    detail: str = ""

    @computed_field
    @property
    def status(self) -> Literal["PASS", "FAIL", "NOTED"]:
        if not self.passed:
            return "FAIL"
        return "NOTED" if self.discrepancy else "PASS"


class VerifyReport:
    def __init__(self):
        # Structure: { group: [CheckOutcome, ...] }
        self.results: Dict[str, List[CheckOutcome]] = defaultdict(list)
        self.checks_count = 0

    def add_check(
        self,
        name: str,
        group: str,
        value: float | None,
        expected: float | None,
        tolerance: float | None,
        passed: bool | None = None,
        detail: str = "",
    ) -> CheckOutcome:
        """
        Records one check. When passed is not given it is decided as
        |value - expected| <= tolerance.
        """
        if passed is None:
            passed = value is not None and expected is not None and abs(value - expected) <= tolerance
        return self._record(
            CheckOutcome(
                name=name, group=group, value=value, expected=expected, tolerance=tolerance, passed=passed, detail=detail
            )
        )

    def add_discrepancy(
        self, name: str, group: str, value: float, expected: float, tolerance: float | None, detail: str
    ) -> CheckOutcome:
        """Records a reference value that a refined recomputation shows to be wrong. It does not fail the report."""
        return self._record(
            CheckOutcome(
                name=name,
                group=group,
                value=value,
                expected=expected,
                tolerance=tolerance,
                passed=True,
                discrepancy=True,
                detail=detail,
            )
        )

    def add_error(self, name: str, group: str, error: Exception) -> CheckOutcome:
        return self.add_check(name, group, None, None, None, passed=False, detail=f"{type(error).__name__}: {error}")

    def _record(self, outcome: CheckOutcome) -> CheckOutcome:
        self.results[outcome.group].append(outcome)
        self.checks_count += 1
        return outcome

    @property
    def failed(self) -> List[CheckOutcome]:
        return [c for checks in self.results.values() for c in checks if not c.passed]

    @property
    def discrepancies(self) -> List[CheckOutcome]:
        return [c for checks in self.results.values() for c in checks if c.discrepancy]

    @property
    def all_passed(self) -> bool:
        return not self.failed

    def get_report(self) -> Dict[str, Any]:
        return {
            "total_checks": self.checks_count,
            "failed": [c.name for c in self.failed],
            "discrepancies": [c.name for c in self.discrepancies],
            "groups": {group: [c.model_dump() for c in checks] for group, checks in self.results.items()},
        }

    def table(self) -> str:
        lines = [f"{'check':<34} {'status':<6} {'value':>16} {'expected':>16} {'tolerance':>10}"]
        for checks in self.results.values():
            for c in checks:
                value = "-" if c.value is None else f"{c.value:.10g}"
                expected = "-" if c.expected is None else f"{c.expected:.10g}"
                tolerance = "-" if c.tolerance is None else f"{c.tolerance:.1e}"
                lines.append(f"{c.name:<34} {c.status:<6} {value:>16} {expected:>16} {tolerance:>10}")
                if c.detail and c.status != "PASS":
                    lines.append(f"    {c.detail}")
        if self.discrepancies:
            lines.append(f"{len(self.discrepancies)} reference value(s) noted as published discrepancies")
        lines.append(f"{self.checks_count - len(self.failed)}/{self.checks_count} checks passed")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return json.dumps(self.get_report(), indent=2)
