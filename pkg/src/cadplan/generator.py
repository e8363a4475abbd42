"""Covering array construction.

``generate_greedy`` builds rows one at a time (AETG style); ``refine_anneal``
then shrinks the array towards the lower bound by deleting a row and
repairing coverage with simulated annealing over cell values.
"""

from __future__ import annotations

import logging
import math
import random
import time
from dataclasses import asdict, dataclass
from typing import Sequence

from .coverage import CoveringArray, TupleIndex, Verification, tuple_index
from .model import FactorModel, exhaustive_size, lower_bound

log = logging.getLogger(__name__)

ALGORITHMS = ("greedy", "anneal")

# annealing schedule; deltas are measured in uncovered tuples
_T_START = 1.0
_T_MIN = 0.02
_COOLING = 0.999
_STALL = 4000
_TARGETED_MOVE_P = 0.8


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    algorithm: str = "anneal"
    seed: int = 0
    candidate_pool: int = 50
    max_iterations: int = 100_000
    time_budget: float = 60.0
    target_size: int | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.candidate_pool < 1:
            raise ValueError("candidate_pool must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class _Tracker:
    """Occurrence counts plus the set of under-covered tuple ranks."""

    def __init__(self, index: TupleIndex, lam: int, rows: Sequence[Sequence[int]]):
        self.index = index
        self.lam = lam
        self.counts = [0] * index.total
        for row in rows:
            for r in index.row_ranks(row):
                self.counts[r] += 1
        self._missing: list[int] = []
        self._pos: dict[int, int] = {}
        for r, c in enumerate(self.counts):
            if c < lam:
                self._add(r)

    def _add(self, rank: int) -> None:
        self._pos[rank] = len(self._missing)
        self._missing.append(rank)

    def _discard(self, rank: int) -> None:
        i = self._pos.pop(rank)
        last = self._missing.pop()
        if i < len(self._missing):
            self._missing[i] = last
            self._pos[last] = i

    @property
    def uncovered(self) -> int:
        return len(self._missing)

    def random_missing(self, rng: random.Random) -> int:
        return self._missing[rng.randrange(len(self._missing))]

    def missing_ranks(self) -> list[int]:
        return sorted(self._missing)

    def inc(self, rank: int) -> None:
        self.counts[rank] += 1
        if self.counts[rank] == self.lam:
            self._discard(rank)

    def dec(self, rank: int) -> None:
        self.counts[rank] -= 1
        if self.counts[rank] == self.lam - 1:
            self._add(rank)

    def add_row(self, row: Sequence[int]) -> None:
        for r in self.index.row_ranks(row):
            self.inc(r)

    def remove_row(self, row: Sequence[int]) -> None:
        for r in self.index.row_ranks(row):
            self.dec(r)

    def gain(self, row: Sequence[int]) -> int:
        lam = self.lam
        return sum(1 for r in self.index.row_ranks(row) if self.counts[r] < lam)

    def loss(self, row: Sequence[int]) -> int:
        lam = self.lam
        return sum(1 for r in self.index.row_ranks(row) if self.counts[r] == lam)

    def set_cells(self, row: list[int], cols: Sequence[int], values: Sequence[int]) -> None:
        idx = self.index
        touched = sorted({s for c in cols for s in idx.by_column[c]})
        for s in touched:
            self.dec(idx.rank_in(s, row))
        for c, v in zip(cols, values):
            row[c] = v
        for s in touched:
            self.inc(idx.rank_in(s, row))


def _finish(model: FactorModel, rows, metadata: dict) -> CoveringArray:
    array = CoveringArray(model, rows, metadata=metadata)
    if not array.verify():
        raise GenerationError("internal error: emitted array does not cover the model")
    array.metadata["final_size"] = array.size
    array.metadata["verified"] = True
    return array


def _greedy_candidate(
    model: FactorModel, tracker: _Tracker, subset: int, rng: random.Random
) -> list[int]:
    idx = tracker.index
    cards = model.cardinalities
    # seed the row with a random uncovered tuple from the neediest subset
    start, size = idx.offsets[subset], idx.sizes[subset]
    options = [r for r in range(start, start + size) if tracker.counts[r] < tracker.lam]
    seed_tuple = idx.unrank(rng.choice(options))
    row = [-1] * model.k
    for p, lv in zip(seed_tuple.positions, seed_tuple.levels):
        row[p] = lv
    rest = [c for c in range(model.k) if row[c] < 0]
    rng.shuffle(rest)
    for c in rest:
        ready = [
            s for s in idx.by_column[c]
            if all(row[p] >= 0 for p in idx.subsets[s] if p != c)
        ]
        best_gain, best_levels = -1, []
        for v in range(cards[c]):
            row[c] = v
            g = sum(1 for s in ready if tracker.counts[idx.rank_in(s, row)] < tracker.lam)
            if g > best_gain:
                best_gain, best_levels = g, [v]
            elif g == best_gain:
                best_levels.append(v)
        row[c] = rng.choice(best_levels)
    return row


def generate_greedy(model: FactorModel, config: GenerationConfig | None = None) -> CoveringArray:
    """One-row-at-a-time greedy construction; always completes."""
    config = config or GenerationConfig(algorithm="greedy")
    started = time.perf_counter()
    rng = random.Random(config.seed)
    idx = tuple_index(model.cardinalities, model.strength)
    tracker = _Tracker(idx, model.multiplicity, [])
    rows: list[tuple[int, ...]] = []
    while tracker.uncovered:
        deficits = [
            sum(1 for r in range(o, o + n) if tracker.counts[r] < tracker.lam)
            for o, n in zip(idx.offsets, idx.sizes)
        ]
        subset = max(range(len(deficits)), key=lambda s: (deficits[s], -s))
        best_row, best_score = None, -1
        for _ in range(config.candidate_pool):
            cand = _greedy_candidate(model, tracker, subset, rng)
            score = tracker.gain(cand)
            if score > best_score:
                best_row, best_score = cand, score
        tracker.add_row(best_row)
        rows.append(tuple(best_row))
    meta = {
        "algorithm": "greedy",
        "seed": config.seed,
        "iterations": len(rows),
        "greedy_size": len(rows),
        "lower_bound": lower_bound(model),
        "exhaustive_size": exhaustive_size(model),
        "wall_time": time.perf_counter() - started,
    }
    return _finish(model, rows, meta)


def _anneal_fixed_size(
    model: FactorModel,
    rows: list[list[int]],
    tracker: _Tracker,
    rng: random.Random,
    max_iterations: int,
    deadline: float,
) -> int:
    """Mutate cells until coverage is complete; returns iterations used."""
    k = model.k
    cards = model.cardinalities
    mutable_cols = [c for c in range(k) if cards[c] > 1]
    idx = tracker.index
    temp = _T_START
    best_unc = tracker.uncovered
    since_best = 0
    it = 0
    while tracker.uncovered and it < max_iterations:
        if it % 256 == 0 and time.perf_counter() > deadline:
            break
        it += 1
        r = rng.randrange(len(rows))
        row = rows[r]
        if not mutable_cols or rng.random() < _TARGETED_MOVE_P:
            tup = idx.unrank(tracker.random_missing(rng))
            cols, vals = tup.positions, tup.levels
        else:
            c = rng.choice(mutable_cols)
            v = rng.randrange(cards[c] - 1)
            cols, vals = (c,), (v if v < row[c] else v + 1,)
        old_vals = [row[c] for c in cols]
        if list(vals) == old_vals:
            continue
        before = tracker.uncovered
        tracker.set_cells(row, cols, vals)
        delta = tracker.uncovered - before
        if delta > 0 and rng.random() >= math.exp(-delta / temp):
            tracker.set_cells(row, cols, old_vals)
        if tracker.uncovered < best_unc:
            best_unc, since_best = tracker.uncovered, 0
        else:
            since_best += 1
            if since_best >= _STALL:
                # restart the schedule from the current state
                temp, since_best, best_unc = _T_START, 0, tracker.uncovered
                continue
        temp = max(_T_MIN, temp * _COOLING)
    return it


def refine_anneal(array: CoveringArray, config: GenerationConfig | None = None) -> CoveringArray:
    """Shrink a complete covering array; never returns a larger one."""
    config = config or GenerationConfig()
    if array.status is Verification.UNVERIFIED:
        array.verify()
    if not array.verified:
        raise GenerationError("refine_anneal needs a verified-complete input array")
    model = array.model
    started = time.perf_counter()
    deadline = started + config.time_budget
    target = lower_bound(model)
    if config.target_size is not None:
        target = max(target, config.target_size)
    # distinct stream from the greedy stage sharing the same seed
    rng = random.Random(config.seed * 2_654_435_761 + 97)
    idx = tuple_index(model.cardinalities, model.strength)

    best = [tuple(r) for r in array.rows]
    used = 0
    exhausted = False
    while len(best) > target:
        remaining = config.max_iterations - used
        if remaining <= 0 or time.perf_counter() > deadline:
            exhausted = True
            break
        rows = [list(r) for r in best]
        tracker = _Tracker(idx, model.multiplicity, rows)
        drop = min(range(len(rows)), key=lambda i: (tracker.loss(rows[i]), i))
        tracker.remove_row(rows.pop(drop))
        if tracker.uncovered:
            used += _anneal_fixed_size(model, rows, tracker, rng, remaining, deadline)
        if tracker.uncovered:
            exhausted = True
            break
        best = [tuple(r) for r in rows]
        log.debug("anneal reached N=%d after %d iterations", len(best), used)

    meta = dict(array.metadata)
    meta.update(
        {
            "algorithm": "anneal",
            "seed": config.seed,
            "iterations": used,
            "greedy_size": array.metadata.get("greedy_size", array.size),
            "lower_bound": lower_bound(model),
            "exhaustive_size": exhaustive_size(model),
            "budget_exhausted": exhausted,
            "wall_time": array.metadata.get("wall_time", 0.0) + time.perf_counter() - started,
        }
    )
    return _finish(model, best, meta)


def generate(model: FactorModel, config: GenerationConfig | None = None) -> CoveringArray:
    config = config or GenerationConfig()
    array = generate_greedy(model, config)
    if config.algorithm == "anneal":
        array = refine_anneal(array, config)
    return array
