"""Synthetic response model standing in for a network simulator.

Responses are additive: a base rate, per-level offsets, optional pairwise
interaction offsets and seeded uniform noise.  The shipped profiles are
synthetic and make no claim about real network behaviour.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .plan_io import ELEVEN_HOURS, ExperimentPlan, ResultSet, TimeSeries


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class Interaction:
    factors: tuple[str, str]
    levels: tuple[str, str]
    offset: float

    def applies(self, assignment: dict[str, str]) -> bool:
        return all(assignment.get(f) == lv for f, lv in zip(self.factors, self.levels))


@dataclass
class ResponseModel:
    base: float = 0.0
    contributions: dict[str, dict[str, float]] = field(default_factory=dict)
    interactions: list[Interaction] = field(default_factory=list)
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.noise_scale >= 0:
            raise ProfileError(f"noise_scale must be >= 0, got {self.noise_scale}")
        offsets = [self.base, *(o for lv in self.contributions.values() for o in lv.values())]
        offsets += [i.offset for i in self.interactions]
        if not all(math.isfinite(o) for o in offsets):
            raise ProfileError("all offsets must be finite")

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ResponseModel:
        interactions = []
        for pos, entry in enumerate(doc.get("interactions", [])):
            try:
                f1, f2 = entry["factors"]
                l1, l2 = entry["levels"]
                interactions.append(Interaction((f1, f2), (str(l1), str(l2)), float(entry["offset"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise ProfileError(f"interaction {pos}: expected factors/levels pairs and offset") from exc
        contributions = {
            str(f): {str(lv): float(o) for lv, o in levels.items()}
            for f, levels in doc.get("contributions", {}).items()
        }
        return cls(
            base=float(doc.get("base", 0.0)),
            contributions=contributions,
            interactions=interactions,
            noise_scale=float(doc.get("noise_scale", 0.0)),
            seed=int(doc.get("seed", 0)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "base": self.base,
            "contributions": self.contributions,
            "interactions": [
                {"factors": list(i.factors), "levels": list(i.levels), "offset": i.offset}
                for i in self.interactions
            ],
            "noise_scale": self.noise_scale,
            "seed": self.seed,
        }

    def unit_noise(self, experiment_id: int) -> float:
        """Uniform draw on [-1, 1], a pure function of (seed, experiment_id)."""
        return random.Random(f"{self.seed}/{experiment_id}").uniform(-1.0, 1.0)

    def respond(self, experiment_id: int, assignment: dict[str, str]) -> float:
        value = self.base
        for name, label in assignment.items():
            value += self.contributions.get(name, {}).get(label, 0.0)
        value += sum(i.offset for i in self.interactions if i.applies(assignment))
        value += self.noise_scale * self.unit_noise(experiment_id)
        return max(0.0, value)


def load_profile(path) -> ResponseModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ProfileError(f"profile is not valid JSON: {exc}") from exc
    return ResponseModel.from_dict(doc)


def run_plan(plan: ExperimentPlan, rm: ResponseModel, window: float | None = ELEVEN_HOURS) -> ResultSet:
    entries = {eid: rm.respond(eid, assign) for eid, assign in plan.experiments}
    return ResultSet(entries, window=window)


def emit_series(
    plan: ExperimentPlan, rm: ResponseModel, duration: float = ELEVEN_HOURS, step: float = 60.0
) -> dict[int, TimeSeries]:
    """Per-experiment drop-count series whose windowed mean rate is the scalar response.

    Each series opens with a zero sample at t=0 followed by samples at
    ``step, 2*step, ...``; per-sample counts fluctuate around ``rate * step``
    and are rescaled so the total is exactly ``rate`` times the covered span.
    """
    if not (duration > step > 0):
        raise ProfileError(f"need duration > step > 0 (duration={duration}, step={step})")
    n = int(duration // step)
    timestamps = [step * i for i in range(n + 1)]
    out = {}
    for eid, rate in run_plan(plan, rm, window=duration).entries.items():
        rng = random.Random(f"series/{rm.seed}/{eid}")
        weights = [rng.uniform(0.5, 1.5) for _ in range(n)]
        scale = rate * step * n / math.fsum(weights)
        out[eid] = TimeSeries(list(timestamps), [0.0] + [w * scale for w in weights])
    return out
