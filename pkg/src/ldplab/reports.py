"""Report rows persisted as CSV plus a JSON run summary."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


@dataclass
class ReportRow:
    epsilon: float
    estimate: float
    stderr: float
    eps_log_estimate: float
    threshold: float
    passed: bool
    zero_hit: bool = False
    cp_upper: float = math.nan


CSV_COLUMNS = ["epsilon", "estimate", "stderr", "eps_log_estimate",
               "threshold", "pass", "zero_hit", "cp_upper"]


@dataclass
class LDPReport:
    kind: str
    rows: list[ReportRow] = field(default_factory=list)
    seed: Optional[int] = None
    config: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.rows)

    def smallest_passing_epsilon(self) -> Optional[float]:
        passing = [r.epsilon for r in self.rows if r.passed]
        return min(passing) if passing else None

    def passes_persist_below(self) -> bool:
        """True when every row at or below the largest passing epsilon passes."""
        eps_pass = [r.epsilon for r in self.rows if r.passed]
        if not eps_pass:
            return False
        top = max(eps_pass)
        return all(r.passed for r in self.rows if r.epsilon <= top)

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow([
                    repr(r.epsilon), repr(r.estimate), repr(r.stderr),
                    repr(r.eps_log_estimate), repr(r.threshold),
                    "true" if r.passed else "false",
                    "true" if r.zero_hit else "false",
                    repr(r.cp_upper),
                ])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "config": self.config,
            "all_pass": self.all_pass,
            "pass_count": sum(r.passed for r in self.rows),
            "row_count": len(self.rows),
            "smallest_passing_epsilon": self.smallest_passing_epsilon(),
            "passes_persist_below": self.passes_persist_below(),
            "rows": [
                {
                    "epsilon": r.epsilon,
                    "estimate": r.estimate,
                    "stderr": r.stderr,
                    "eps_log_estimate": r.eps_log_estimate,
                    "threshold": r.threshold,
                    "pass": r.passed,
                    "zero_hit": r.zero_hit,
                    "cp_upper": None if math.isnan(r.cp_upper) else r.cp_upper,
                }
                for r in self.rows
            ],
        }


def write_summary(path, reports: list[LDPReport], extra: Optional[dict] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {
        "reports": [r.to_dict() for r in reports],
        "seeds": sorted({r.seed for r in reports if r.seed is not None}),
        "pass_counts": {r.kind: sum(row.passed for row in r.rows) for r in reports},
        "all_pass": all(r.all_pass for r in reports),
    }
    if extra:
        body.update(extra)
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
