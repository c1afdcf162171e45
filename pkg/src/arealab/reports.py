"""Inequality check records and deterministic JSON/CSV emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


def fmt(x):
    """Decimal with 12 significant digits; pass/fail is computed before rounding."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


@dataclass
class CheckRecord:
    """One verified inequality: measured value against its bound.

    `direction` is 'le' when the check asserts measured <= bound and 'ge'
    for measured >= bound.  `vacuous` marks bounds looser than the trivial
    a-priori bound, which hold without informational content.
    """

    check: str
    measured: float
    bound: float
    direction: str = "le"
    passed: bool = True
    vacuous: bool = False
    context: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, check, measured, bound, direction="le", slack=0.0,
                vacuous=False, **context):
        if direction == "le":
            passed = measured <= bound + slack
        elif direction == "ge":
            passed = measured >= bound - slack
        else:
            raise ValueError(f"unknown direction {direction!r}")
        return cls(check, float(measured), float(bound), direction, passed,
                   vacuous, dict(context))

    @property
    def margin(self):
        """Positive when the inequality holds strictly."""
        if self.direction == "le":
            return self.bound - self.measured
        return self.measured - self.bound

    def as_dict(self):
        d = {
            "check": self.check,
            "measured": fmt(self.measured),
            "bound": fmt(self.bound),
            "direction": self.direction,
            "pass": self.passed,
            "vacuous": self.vacuous,
        }
        if self.context:
            d["context"] = {k: fmt(v) for k, v in sorted(self.context.items())}
        return d


def records_to_json(records, extra=None):
    payload = {"checks": [r.as_dict() for r in records]}
    if extra:
        payload.update(extra)
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def table_to_csv(columns, rows):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"
