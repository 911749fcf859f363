import json
import os
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List

import numpy as np

from ifs_experiment_utils.version import __version__

REPORT_FILE = "run_report.json"
RESULTS_FILE = "results.jsonl"


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class CheckResult:
    operation: str
    value: float
    tolerance: float
    parameters: Dict = field(default_factory=dict)
    passed: bool = None

    def __post_init__(self):
        if self.passed is None:
            self.passed = bool(self.value <= self.tolerance)

    def to_dict(self):
        return {
            "operation": self.operation,
            "parameters": _jsonable(self.parameters),
            "value": _jsonable(self.value),
            "tolerance": _jsonable(self.tolerance),
            "pass": bool(self.passed),
        }


@dataclass
class RunReport:
    task_name: str
    config: Dict
    checks: List[CheckResult] = field(default_factory=list)
    files: List[str] = field(default_factory=list)
    total_time: float = 0.0
    results: Dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add_check(self, check: CheckResult):
        self.checks.append(check)
        return check

    def add_file(self, path):
        print(f"Saved file {path}")
        self.files.append(str(path))

    def merge(self, other: "RunReport"):
        self.checks.extend(other.checks)
        self.files.extend(other.files)
        self.results[other.task_name] = other.results

    def to_dict(self):
        return {
            "task_name": self.task_name,
            "version": __version__,
            "pass": self.passed,
            "run_end_time": datetime.utcnow().strftime("%Y-%m-%d %H-%M-%S.%f")[:-3],
            "total_time": self.total_time,
            "files": list(self.files),
            "checks": [c.to_dict() for c in self.checks],
            "results": _jsonable(self.results),
            "exp_settings": _jsonable(self.config),
        }


def write_json_atomic(path, data):
    path = Path(path)
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "w") as f:
        f.write(json.dumps(data, indent=2) + "\n")
    os.replace(tmp_path, path)


def write_run_report(report: RunReport, out_dir):
    """run_report.json (atomic) plus one line appended to results.jsonl."""
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    out_job = report.to_dict()
    print(json.dumps(out_job, indent=2))
    write_json_atomic(out_dir / REPORT_FILE, out_job)
    with open(out_dir / RESULTS_FILE, "a+") as f:
        f.write(json.dumps(out_job) + "\n")
    return out_job


def write_csv(frame, path, report: RunReport = None):
    os.makedirs(Path(path).parent, exist_ok=True)
    frame.to_csv(path, index=False)
    if report is not None:
        report.add_file(path)
    return path
