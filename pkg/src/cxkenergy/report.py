"""Structured check reports with CSV and JSON export."""
import csv
import io
import json
from dataclasses import asdict, dataclass, field

from . import __version__


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool

    @classmethod
    def at_most(cls, name, value, tolerance):
        value = float(value)
        return cls(name, value, float(tolerance), bool(value <= tolerance))

    @classmethod
    def at_least(cls, name, value, bound):
        value = float(value)
        return cls(name, value, float(bound), bool(value >= bound))

    @classmethod
    def within(cls, name, value, low, high):
        """Pass when low <= value <= high; the tolerance column records the width."""
        value = float(value)
        return cls(name, value, float(high - low), bool(low <= value <= high))


@dataclass
class Report:
    checks: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    version: str = __version__

    def add(self, check):
        self.checks.append(check)

    def extend(self, checks):
        self.checks.extend(checks)

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self):
        return 0 if self.all_passed else 1

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["check", "value", "tolerance", "pass"])
        for c in self.checks:
            writer.writerow([c.name, repr(c.value), repr(c.tolerance), "true" if c.passed else "false"])
        return buf.getvalue()

    def to_json(self):
        data = {"version": self.version, "config": self.config,
                "checks": [asdict(c) for c in self.checks]}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls([Check(**c) for c in data["checks"]], data.get("config", {}), data["version"])

    def export(self, path, fmt="csv"):
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w", newline="") as fh:
            fh.write(text)
