"""Performance grouping and factor-effect screening over experiment results."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .plan_io import ExperimentPlan, PlanError, ResultSet

log = logging.getLogger(__name__)

MAX_AUTO_GROUPS = 6


class AnalysisError(ValueError):
    pass


@dataclass
class Group:
    band: tuple[float, float]
    members: list[int]
    common_levels: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "band": list(self.band),
            "members": self.members,
            "common_levels": self.common_levels,
        }


@dataclass
class GroupingReport:
    """Groups ordered worst first when ``lower_is_better`` (metric descending)."""

    groups: list[Group]
    lower_is_better: bool = True
    method: str = "gap"

    @property
    def order(self) -> str:
        return "worst-to-best"

    @property
    def worst(self) -> Group:
        return self.groups[0]

    @property
    def best(self) -> Group:
        return self.groups[-1]

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "order": self.order,
            "lower_is_better": self.lower_is_better,
            "groups": [g.to_dict() for g in self.groups],
        }


def _auto_group_count(sorted_values: Sequence[float]) -> int:
    """Pick the count whose last split gap stands out most from the next one.

    Gaps are sorted descending as d1 >= d2 >= ...; choosing g groups keeps the
    g-1 largest gaps, scored by d[g-1] / d[g].  Identical values give 1 group.
    """
    gaps = sorted((b - a for a, b in zip(sorted_values, sorted_values[1:])), reverse=True)
    if not gaps or gaps[0] == 0:
        return 1
    best_g, best_score = 2, -1.0
    for g in range(2, min(MAX_AUTO_GROUPS, len(sorted_values)) + 1):
        kept = gaps[g - 2]
        if kept == 0:
            break
        nxt = gaps[g - 1] if g - 1 < len(gaps) else 0.0
        score = math.inf if nxt == 0 else kept / nxt
        if score > best_score:
            best_g, best_score = g, score
    return best_g


def _split_by_gaps(items: list[tuple[float, int]], g: int) -> list[list[tuple[float, int]]]:
    # items sorted ascending by (value, id); cut after the g-1 widest gaps, earliest on ties.
    # Equal values are never separated, so fewer than g groups may come back.
    gaps = [(items[i + 1][0] - items[i][0], i) for i in range(len(items) - 1)]
    gaps = [gp for gp in gaps if gp[0] > 0]
    cuts = sorted(i for _, i in sorted(gaps, key=lambda x: (-x[0], x[1]))[: g - 1])
    chunks, start = [], 0
    for c in cuts:
        chunks.append(items[start : c + 1])
        start = c + 1
    chunks.append(items[start:])
    return [c for c in chunks if c]


def _split_by_thresholds(items, thresholds: Sequence[float]):
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise AnalysisError(f"thresholds must be strictly increasing: {list(thresholds)}")
    bands: list[list[tuple[float, int]]] = [[] for _ in range(len(thresholds) + 1)]
    for value, eid in items:
        # a value equal to an edge belongs to the lower band
        band = sum(1 for edge in thresholds if value > edge)
        bands[band].append((value, eid))
    return [b for b in bands if b]


def group_experiments(
    results: ResultSet,
    method: str = "gap",
    *,
    groups: int | None = None,
    thresholds: Sequence[float] | None = None,
    lower_is_better: bool = True,
    plan: ExperimentPlan | None = None,
) -> GroupingReport:
    """Band experiments by metric value.

    ``method="gap"`` splits the sorted metrics at the widest gaps (``groups``
    of them, or an automatic count); ``method="threshold"`` assigns by the
    given band edges.  When ``plan`` is given each group carries the levels
    all of its members share.
    """
    if not len(results):
        raise AnalysisError("no results to group")
    items = sorted((v, eid) for eid, v in results.entries.items())
    if method == "gap":
        g = groups if groups is not None else _auto_group_count([v for v, _ in items])
        if g < 1:
            raise AnalysisError("group count must be >= 1")
        chunks = _split_by_gaps(items, min(g, len(items)))
    elif method == "threshold":
        if not thresholds:
            raise AnalysisError("threshold grouping needs at least one threshold")
        chunks = _split_by_thresholds(items, thresholds)
    else:
        raise AnalysisError(f"unknown grouping method {method!r}")
    if lower_is_better:
        chunks.reverse()
    out = []
    for chunk in chunks:
        members = sorted(eid for _, eid in chunk)
        common = common_levels(plan, members) if plan is not None else {}
        out.append(Group((chunk[0][0], chunk[-1][0]), members, common))
    return GroupingReport(out, lower_is_better, method)


def common_levels(plan: ExperimentPlan, members: Iterable[int]) -> dict[str, str]:
    """Factor levels shared by every listed experiment, in model order."""
    members = list(members)
    if not members:
        raise AnalysisError("common_levels needs at least one member")
    try:
        assigns = [plan.assignment(m) for m in members]
    except PlanError as exc:
        raise AnalysisError(str(exc)) from exc
    first = assigns[0]
    return {
        name: label for name, label in first.items() if all(a[name] == label for a in assigns[1:])
    }


@dataclass
class LevelEffect:
    mean: float | None
    count: int


@dataclass
class FactorEffect:
    name: str
    levels: dict[str, LevelEffect]
    effect_range: float
    best_level: str | None
    unsupported: list[str] = field(default_factory=list)


@dataclass
class EffectReport:
    factors: list[FactorEffect]
    ranking: list[str]
    warnings: list[str] = field(default_factory=list)

    def factor(self, name: str) -> FactorEffect:
        for f in self.factors:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "ranking": self.ranking,
            "factors": [
                {
                    "name": f.name,
                    "effect_range": f.effect_range,
                    "best_level": f.best_level,
                    "unsupported_levels": f.unsupported,
                    "levels": [
                        {"level": lv, "mean": e.mean, "count": e.count} for lv, e in f.levels.items()
                    ],
                }
                for f in self.factors
            ],
            "warnings": self.warnings,
        }

    def rows(self) -> list[tuple[str, str, float | None, int]]:
        return [(f.name, lv, e.mean, e.count) for f in self.factors for lv, e in f.levels.items()]


def main_effects(plan: ExperimentPlan, results: ResultSet, lower_is_better: bool = True) -> EffectReport:
    warnings: list[str] = []
    factors = []
    for factor in plan.model.factors:
        sums = {lv: [] for lv in factor.levels}
        for eid in results.ids:
            sums[plan.assignment(eid)[factor.name]].append(results.entries[eid])
        levels = {
            lv: LevelEffect(math.fsum(vals) / len(vals) if vals else None, len(vals))
            for lv, vals in sums.items()
        }
        supported = {lv: e.mean for lv, e in levels.items() if e.mean is not None}
        unsupported = [lv for lv, e in levels.items() if e.mean is None]
        if unsupported:
            msg = f"{factor.name}: no results for levels {unsupported}; range uses supported levels"
            log.warning(msg)
            warnings.append(msg)
        if supported:
            rng = max(supported.values()) - min(supported.values())
            pick = min if lower_is_better else max
            best = pick(supported, key=lambda lv: supported[lv])
        else:
            rng, best = 0.0, None
        factors.append(FactorEffect(factor.name, levels, rng, best, unsupported))
    # stable sort keeps model order among ties
    ranking = [f.name for f in sorted(factors, key=lambda f: -f.effect_range)]
    return EffectReport(factors, ranking, warnings)


@dataclass
class RankedConfiguration:
    experiment_id: int
    metric: float
    assignment: dict[str, str]

    def render(self) -> str:
        return "<" + ", ".join(self.assignment.values()) + ">"


def best_configurations(
    plan: ExperimentPlan,
    results: ResultSet,
    n: int = 3,
    lower_is_better: bool = True,
    warnings: list | None = None,
) -> list[RankedConfiguration]:
    if n < 1:
        raise AnalysisError("n must be >= 1")
    if n > len(results):
        msg = f"requested {n} configurations but only {len(results)} results exist"
        log.warning(msg)
        if warnings is not None:
            warnings.append(msg)
    sign = 1.0 if lower_is_better else -1.0
    order = sorted(results.entries, key=lambda eid: (sign * results.entries[eid], eid))
    return [
        RankedConfiguration(eid, results.entries[eid], dict(plan.assignment(eid)))
        for eid in order[:n]
    ]
