# This file is part of desgn, distributed energy system design for LV feeders
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

"""Run products: the report document, its CSV tables and their checksums.

``report.json`` only holds quantities that are reproducible for a given
configuration and seed; wall-clock times go to ``timing.json``.
"""

from dataclasses import dataclass, field
import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

from desgn.core import DataNotFoundError, FileIOError, IllegalInputError, Msg
from desgn.drs.admm import Partition
from desgn.ui.frame import Frame, FrameSet

_COMPONENT = "report"

REPORT_KEYS = ("manifest", "config", "stages", "injections", "traces", "violations", "metrics")
COST_COLUMNS = ("stage", "technology", "season", "capex", "opex", "income")
TRACE_COLUMNS = ("stage", "iter", "max_primal_residual", "rho", "max_subproblem_time_s", "objective")
VIOLATION_COLUMNS = ("bus", "phase", "t", "v_pu", "upper_viol_pct", "lower_viol_pct")
# per-iteration fields that depend on the machine
_WALL_CLOCK = ("max_subproblem_time_s",)


@dataclass
class StageResult:
    """Serializable summary of one executed stage."""

    stage: str
    objective: float
    scaled_objective: float
    converged: bool
    iterations: int
    costs: dict
    counts: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    solve_time: float = 0.0

    @classmethod
    def from_breakdown(cls, stage, breakdown, *, scaled_objective, converged, iterations, counts=None, notes=None,
                       solve_time=0.0):
        costs = dict(breakdown.to_dict())
        costs["rows"] = breakdown.rows()
        return cls(
            stage, float(breakdown.tac), float(scaled_objective), bool(converged), int(iterations), costs,
            dict(counts or {}), dict(notes or {}), float(solve_time),
        )

    def to_dict(self):
        return {
            "stage": self.stage,
            "objective": self.objective,
            "scaled_objective": self.scaled_objective,
            "converged": self.converged,
            "iterations": self.iterations,
            "costs": self.costs,
            "counts": self.counts,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, doc, solve_time=0.0):
        try:
            return cls(
                doc["stage"], float(doc["objective"]), float(doc["scaled_objective"]), bool(doc["converged"]),
                int(doc["iterations"]), doc["costs"], doc.get("counts", {}), doc.get("notes", {}), solve_time,
            )
        except KeyError as err:
            raise IllegalInputError(f"report stage lacks field {err}") from None


@dataclass
class RunReport:
    """Everything a run produced.

    ``injections`` maps load ids to ``{"bus", "phase", "p", "q"}`` with the
    final stage's per-unit injections; ``traces`` maps stage names to the
    ADMM iteration records. ``partition`` is the partition document of a
    distributed run; it is written as its own product.
    """

    manifest: dict
    config: dict
    stages: list = field(default_factory=list)
    injections: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    violations: dict | None = None
    metrics: dict | None = None
    timing: dict = field(default_factory=dict)
    violation_rows: list = field(default_factory=list)
    partition: dict | None = None

    def stage(self, name):
        for s in self.stages:
            if s.stage == name:
                return s
        raise DataNotFoundError(f"report has no {name} stage")

    @property
    def final_stage(self):
        if not self.stages:
            raise DataNotFoundError("report has no executed stage")
        return self.stages[-1]

    def add_stage(self, result):
        self.stages.append(result)
        self.timing.setdefault("stages", {})[result.stage] = result.solve_time
        Msg.info(_COMPONENT, f"{result.stage}: TAC {result.objective:.4f}, converged {result.converged}")

    def to_dict(self):
        traces = {
            stage: [{k: v for k, v in rec.items() if k not in _WALL_CLOCK} for rec in records]
            for stage, records in self.traces.items()
        }
        doc = {
            "manifest": self.manifest,
            "config": self.config,
            "stages": [s.to_dict() for s in self.stages],
            "injections": self.injections,
            "traces": traces,
            "violations": self.violations,
            "metrics": self.metrics,
        }
        return {key: doc[key] for key in REPORT_KEYS}

    @classmethod
    def from_dict(cls, doc, timing=None):
        missing = [key for key in ("manifest", "config", "stages") if key not in doc]
        if missing:
            raise IllegalInputError(f"report lacks {', '.join(missing)}")
        # samples accumulate in the timing file itself, not per report
        timing = {k: v for k, v in (timing or {}).items() if k != "samples"}
        times = timing.get("stages", {})
        return cls(
            doc["manifest"],
            doc["config"],
            [StageResult.from_dict(s, float(times.get(s.get("stage"), 0.0))) for s in doc["stages"]],
            doc.get("injections") or {},
            doc.get("traces") or {},
            doc.get("violations"),
            doc.get("metrics"),
            dict(timing),
        )


def _clean(value):
    """JSON-safe copy: numpy scalars and arrays become Python, non-finite floats ``None``."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _write_json(doc, path):
    text = json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"
    path.write_text(text, encoding="utf-8")


def _read_json(path, what):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise FileIOError(f"cannot read {what} {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise IllegalInputError(f"{what} {path} is not valid JSON: {err}") from err


def _product(path, tag, kind):
    return Frame(
        str(path), tag=tag, group=Frame.FrameGroup.PRODUCT, level=Frame.FrameLevel.FINAL, frameType=kind
    )


def _prepare(directory):
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise FileIOError(f"cannot create output directory {directory}: {err}") from err
    return directory


def cost_table(report):
    rows = [{"stage": s.stage, **row} for s in report.stages for row in s.costs.get("rows", [])]
    return pd.DataFrame(rows, columns=list(COST_COLUMNS))


def trace_table(report):
    rows = [{"stage": stage, **rec} for stage, records in report.traces.items() for rec in records]
    return pd.DataFrame(rows, columns=list(TRACE_COLUMNS))


def emit_report(report, directory):
    """Write every product of ``report`` into ``directory``, signed.

    Samples already present in an existing ``timing.json`` are kept and the
    run's samples appended after them.
    """
    directory = _prepare(directory)
    products = FrameSet()
    try:
        path = directory / "report.json"
        _write_json(report.to_dict(), path)
        products.append(_product(path, "REPORT", Frame.FrameType.JSON))

        path = directory / "costs.csv"
        cost_table(report).to_csv(path, index=False)
        products.append(_product(path, "COSTS", Frame.FrameType.CSV))

        path = directory / "trace.csv"
        trace_table(report).to_csv(path, index=False)
        products.append(_product(path, "TRACE", Frame.FrameType.CSV))

        path = directory / "violations.csv"
        pd.DataFrame(report.violation_rows, columns=list(VIOLATION_COLUMNS)).to_csv(path, index=False)
        products.append(_product(path, "VIOLATIONS", Frame.FrameType.CSV))

        path = directory / "timing.json"
        timing = dict(report.timing)
        previous = _read_json(path, "timing file").get("samples", []) if path.is_file() else []
        timing["samples"] = [*previous, *timing.get("samples", [])]
        _write_json(timing, path)
        products.append(_product(path, "TIMING", Frame.FrameType.JSON))

        if report.partition is not None:
            path = directory / "partition.json"
            _write_json(report.partition, path)
            products.append(_product(path, "PARTITION", Frame.FrameType.JSON))
    except OSError as err:
        raise FileIOError(f"cannot write products into {directory}: {err}") from err
    products.append(sign_products(products, directory))
    Msg.info(_COMPONENT, f"wrote {len(products)} product(s) to {directory}")
    return products


def load_report(path):
    """Read ``report.json`` back, with wall times from a sibling ``timing.json``."""
    path = Path(path)
    doc = _read_json(path, "report")
    timing_path = path.with_name("timing.json")
    timing = _read_json(timing_path, "timing file") if timing_path.is_file() else {}
    return RunReport.from_dict(doc, timing)


def file_md5(path):
    """md5 of a file, or of every file below a directory in sorted order."""
    path = Path(path)
    digest = hashlib.md5()
    if path.is_dir():
        for item in sorted(p for p in path.rglob("*") if p.is_file()):
            digest.update(item.relative_to(path).as_posix().encode("utf-8"))
            digest.update(item.read_bytes())
    else:
        try:
            digest.update(path.read_bytes())
        except OSError as err:
            raise FileIOError(f"cannot read {path}: {err}") from err
    return digest.hexdigest()


def sign_products(products, directory):
    """Write ``checksums.md5`` over ``products`` and return its frame."""
    directory = Path(directory)
    lines = [f"{file_md5(f.file)}  {Path(f.file).name}\n" for f in sorted(products, key=lambda f: Path(f.file).name)]
    path = directory / "checksums.md5"
    path.write_text("".join(lines), encoding="utf-8")
    return _product(path, "CHECKSUMS", Frame.FrameType.TEXT)


def verify_checksums(path):
    """Names of files whose md5 no longer matches ``checksums.md5``."""
    path = Path(path)
    bad = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        digest, name = line.split(maxsplit=1)
        target = path.parent / name.strip()
        if not target.is_file() or file_md5(target) != digest:
            bad.append(name.strip())
    return bad


def partition_document(part, network):
    """``partition.json`` content of ``part``."""
    groups = []
    for index, buses in enumerate(part.groups):
        loads = [load.id for bus in buses for load in network.loads_at(bus)]
        predicted = part.predicted[index] if index < len(part.predicted) else None
        groups.append(
            {
                "index": index,
                "kind": "load" if part.load_groups[index] else "noload",
                "buses": list(buses),
                "loads": loads,
                "predicted_time_s": predicted,
            }
        )
    doc = {
        "k": part.k,
        "groups": groups,
        "tie_lines": [
            {"from": t.from_bus, "to": t.to_bus, "owner": t.owner, "neighbor": t.neighbor} for t in part.tie_lines
        ],
        "objective": part.objective,
    }
    return doc


def write_partition(part, network, path):
    """Write ``part`` as ``partition.json`` and return its product frame."""
    path = Path(path)
    _prepare(path.parent)
    _write_json(partition_document(part, network), path)
    return _product(path, "PARTITION", Frame.FrameType.JSON)


def load_partition(path, network):
    """Rebuild a :class:`Partition` of ``network`` from ``partition.json``.

    Tie lines are re-derived from the groups; listed ones must agree.
    """
    doc = _read_json(path, "partition")
    try:
        entries = sorted(doc["groups"], key=lambda g: int(g["index"]))
        groups = [[str(b) for b in g["buses"]] for g in entries]
    except (KeyError, TypeError, ValueError) as err:
        raise IllegalInputError(f"partition {path}: malformed groups ({err})") from None
    if [int(g["index"]) for g in entries] != list(range(len(entries))):
        raise IllegalInputError(f"partition {path}: group indices must run 0..k-1")
    if "k" in doc and int(doc["k"]) != len(groups):
        raise IllegalInputError(f"partition {path}: k={doc['k']} but {len(groups)} groups are listed")
    predicted = tuple(g.get("predicted_time_s") or 0.0 for g in entries)
    part = Partition.from_groups(network, groups, objective=float(doc.get("objective") or 0.0), predicted=predicted)
    listed = {frozenset((str(t["from"]), str(t["to"]))) for t in doc.get("tie_lines", [])}
    derived = {frozenset((t.from_bus, t.to_bus)) for t in part.tie_lines}
    if listed and listed != derived:
        raise IllegalInputError(f"partition {path}: listed tie lines do not match the groups")
    Msg.debug(_COMPONENT, f"partition {path}: k={part.k}, {len(part.tie_lines)} tie line(s)")
    return part
