"""Experiment plans, result sets and time-series aggregation."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .coverage import CoveringArray
from .model import FactorModel, ModelError, model_from_dict

log = logging.getLogger(__name__)

ELEVEN_HOURS = 11 * 3600.0
DEFAULT_METRIC = "dropped_packets"
DEFAULT_UNITS = "packets/s"


class PlanError(ValueError):
    pass


@dataclass
class ExperimentPlan:
    model: FactorModel
    experiments: list[tuple[int, dict[str, str]]]
    generation: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        names = self.model.names
        for pos, (eid, assign) in enumerate(self.experiments, start=1):
            if eid != pos:
                raise PlanError(f"experiment ids must be 1..N in order; found {eid} at position {pos}")
            if tuple(assign) != names:
                raise PlanError(f"experiment {eid}: factors {list(assign)} do not match model {list(names)}")
            for name, label in assign.items():
                if label not in self.model.factor(name).levels:
                    raise PlanError(f"experiment {eid}: {label!r} is not a level of {name!r}")

    def __len__(self) -> int:
        return len(self.experiments)

    @property
    def ids(self) -> list[int]:
        return [eid for eid, _ in self.experiments]

    def assignment(self, experiment_id: int) -> dict[str, str]:
        if not 1 <= experiment_id <= len(self.experiments):
            raise PlanError(f"unknown experiment id {experiment_id}")
        return self.experiments[experiment_id - 1][1]

    def rows(self) -> list[tuple[int, ...]]:
        """Level-index rows, inverse of :func:`label_plan`."""
        factors = self.model.factors
        return [
            tuple(f.index_of(assign[f.name]) for f in factors) for _, assign in self.experiments
        ]


def plan_from_rows(model: FactorModel, rows: Sequence[Sequence[int]], generation=None) -> ExperimentPlan:
    factors = model.factors
    experiments = [
        (i, {f.name: f.levels[lv] for f, lv in zip(factors, row)})
        for i, row in enumerate(rows, start=1)
    ]
    return ExperimentPlan(model, experiments, dict(generation or {}))


# wall time varies between runs; keep it out of files so outputs are reproducible
_UNSERIALIZED_METADATA = ("wall_time",)


def label_plan(array: CoveringArray) -> ExperimentPlan:
    if not array.verified:
        raise PlanError(
            f"refusing to label an array that is not verified-complete (status: {array.status.value})"
        )
    generation = {k: v for k, v in array.metadata.items() if k not in _UNSERIALIZED_METADATA}
    return plan_from_rows(array.model, array.rows, generation)


def export_plan(plan: ExperimentPlan, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["experiment_id", *plan.model.names])
        for eid, assign in plan.experiments:
            writer.writerow([eid, *assign.values()])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "model": plan.model.to_dict(),
            "generation": plan.generation,
            "experiments": [
                {"experiment_id": eid, "assignments": assign} for eid, assign in plan.experiments
            ],
        }
        return json.dumps(doc, indent=2) + "\n"
    raise PlanError(f"unknown plan format {fmt!r}")


def import_plan(text: str, model: FactorModel | None = None, fmt: str | None = None) -> ExperimentPlan:
    """Read a plan document; CSV plans need the model they were built from."""
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "csv"
    if fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PlanError(f"plan is not valid JSON: {exc}") from exc
        embedded = model_from_dict(doc["model"])
        if model is not None and model.to_dict()["factors"] != embedded.to_dict()["factors"]:
            raise PlanError("plan model does not match the supplied model")
        experiments = [
            (int(e["experiment_id"]), {str(k): str(v) for k, v in e["assignments"].items()})
            for e in doc.get("experiments", [])
        ]
        return ExperimentPlan(model or embedded, experiments, doc.get("generation") or {})
    if fmt != "csv":
        raise PlanError(f"unknown plan format {fmt!r}")
    if model is None:
        raise PlanError("a model is required to import a CSV plan")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise PlanError("plan CSV is empty (header required)") from None
    if header[:1] != ["experiment_id"] or tuple(header[1:]) != model.names:
        raise PlanError(
            f"plan header {header} does not match model factors {['experiment_id', *model.names]}"
        )
    experiments = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise PlanError(f"line {lineno}: expected {len(header)} fields, got {len(rec)}")
        try:
            eid = int(rec[0])
        except ValueError:
            raise PlanError(f"line {lineno}: bad experiment id {rec[0]!r}") from None
        experiments.append((eid, dict(zip(model.names, rec[1:]))))
    try:
        return ExperimentPlan(model, experiments)
    except ModelError as exc:
        raise PlanError(str(exc)) from exc


def load_plan(path, model: FactorModel | None = None) -> ExperimentPlan:
    return import_plan(Path(path).read_text(encoding="utf-8"), model)


@dataclass
class ResultSet:
    entries: dict[int, float]
    metric: str = DEFAULT_METRIC
    units: str = DEFAULT_UNITS
    window: float | None = ELEVEN_HOURS
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for eid, value in self.entries.items():
            if not math.isfinite(value):
                raise PlanError(f"experiment {eid}: metric value {value!r} is not finite")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> list[int]:
        return sorted(self.entries)

    def metadata(self) -> dict[str, Any]:
        return {"metric": self.metric, "units": self.units, "window_seconds": self.window}


def import_results(text: str, plan: ExperimentPlan, **metadata) -> ResultSet:
    """Bind a ``experiment_id,metric`` CSV to a plan.

    Unknown or duplicate ids and bad metrics are errors; plan ids absent from
    the file only produce a warning.
    """
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None or not {"experiment_id", "metric"} <= set(reader.fieldnames):
        raise PlanError("results CSV needs columns experiment_id,metric")
    valid = set(plan.ids)
    entries: dict[int, float] = {}
    for lineno, rec in enumerate(reader, start=2):
        raw_id, raw_metric = rec.get("experiment_id"), rec.get("metric")
        try:
            eid = int(raw_id)
        except (TypeError, ValueError):
            raise PlanError(f"line {lineno}: bad experiment id {raw_id!r}") from None
        if eid not in valid:
            raise PlanError(f"line {lineno}: unknown experiment id {eid} (plan has 1..{len(plan)})")
        if eid in entries:
            raise PlanError(f"line {lineno}: duplicate experiment id {eid}")
        try:
            value = float(raw_metric)
        except (TypeError, ValueError):
            raise PlanError(f"line {lineno}: experiment {eid} has non-numeric metric {raw_metric!r}") from None
        if not math.isfinite(value):
            raise PlanError(f"line {lineno}: experiment {eid} metric {value!r} is not finite")
        entries[eid] = value
    results = ResultSet(entries, **metadata)
    absent = sorted(valid - set(entries))
    if absent:
        msg = f"no results for experiments {absent}; analysis uses the remaining {len(entries)}"
        log.warning(msg)
        results.warnings.append(msg)
    return results


def export_results(results: ResultSet) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["experiment_id", "metric"])
    for eid in results.ids:
        writer.writerow([eid, repr(results.entries[eid])])
    return buf.getvalue()


@dataclass
class TimeSeries:
    timestamps: list[float]
    values: list[float]

    def __post_init__(self) -> None:
        if len(self.timestamps) != len(self.values):
            raise PlanError("timestamps and values differ in length")
        for a, b in zip(self.timestamps, self.timestamps[1:]):
            if not b > a:
                raise PlanError(f"timestamps must be strictly increasing ({a} then {b})")
        for v in self.values:
            if not math.isfinite(v) or v < 0:
                raise PlanError(f"series value {v!r} must be finite and non-negative")

    def __len__(self) -> int:
        return len(self.values)


def aggregate_series(series: TimeSeries, window: float = ELEVEN_HOURS, warnings: list | None = None) -> float:
    """Mean rate over the final ``window`` seconds.

    Each sample counts events in the interval ending at its timestamp, so the
    window is the half-open span ``(t_end - window, t_end]``.  A window longer
    than the series falls back to the full span (last minus first timestamp).
    """
    if not len(series):
        raise PlanError("cannot aggregate an empty series")
    if window <= 0:
        raise PlanError("window must be positive")
    t_end = series.timestamps[-1]
    span = t_end - series.timestamps[0]
    if window > span:
        if span <= 0:
            raise PlanError("series has a single sample; no span to aggregate over")
        msg = f"window {window}s exceeds series span {span}s; using full span"
        log.warning(msg)
        if warnings is not None:
            warnings.append(msg)
        window = span
    lo = t_end - window
    total = math.fsum(v for t, v in zip(series.timestamps, series.values) if t > lo)
    return total / window


def export_series(series: TimeSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t_seconds", "value"])
    for t, v in zip(series.timestamps, series.values):
        writer.writerow([repr(t), repr(v)])
    return buf.getvalue()


def import_series(text: str) -> TimeSeries:
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None or not {"t_seconds", "value"} <= set(reader.fieldnames):
        raise PlanError("series CSV needs columns t_seconds,value")
    ts, vs = [], []
    for lineno, rec in enumerate(reader, start=2):
        try:
            ts.append(float(rec["t_seconds"]))
            vs.append(float(rec["value"]))
        except (TypeError, ValueError):
            raise PlanError(f"series line {lineno}: non-numeric field") from None
    return TimeSeries(ts, vs)


_SERIES_NAME = re.compile(r"series_(\d+)\.csv$")


def results_from_series(directory, plan: ExperimentPlan, window: float = ELEVEN_HOURS) -> ResultSet:
    """Aggregate every ``series_<id>.csv`` in a directory into a result set."""
    rows = ["experiment_id,metric"]
    warnings: list[str] = []
    for path in sorted(Path(directory).iterdir()):
        m = _SERIES_NAME.match(path.name)
        if not m:
            continue
        value = aggregate_series(import_series(path.read_text(encoding="utf-8")), window, warnings)
        rows.append(f"{int(m.group(1))},{value!r}")
    results = import_results("\n".join(rows) + "\n", plan, window=window)
    results.warnings[:0] = warnings
    return results
