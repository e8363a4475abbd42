"""Interaction tuples and lambda-coverage measurement.

Every t-way tuple of a model gets a dense integer rank: t-subsets of factor
positions are taken in lexicographic order, and within a subset the levels
are read as a mixed-radix number (first position most significant).  Rank
order is therefore the canonical tuple order.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterator, Sequence

from .model import FactorModel, ModelError

Row = tuple[int, ...]


class CoverageError(ValueError):
    """Raised for rows that do not fit the model."""


@dataclass(frozen=True, order=True)
class InteractionTuple:
    positions: tuple[int, ...]
    levels: tuple[int, ...]

    def matches(self, row: Sequence[int]) -> bool:
        return all(row[p] == lv for p, lv in zip(self.positions, self.levels))

    def labels(self, model: FactorModel) -> dict[str, str]:
        return {
            model.factors[p].name: model.factors[p].levels[lv]
            for p, lv in zip(self.positions, self.levels)
        }

    def describe(self, model: FactorModel) -> str:
        return ", ".join(f"{k}={v}" for k, v in self.labels(model).items())


class TupleIndex:
    """Dense ranking of all t-way tuples for a tuple of cardinalities."""

    def __init__(self, cards: Sequence[int], t: int):
        k = len(cards)
        if not 1 <= t <= k:
            raise ModelError(f"strength {t} out of range 1..{k}")
        self.cards = tuple(cards)
        self.t = t
        self.subsets: list[tuple[int, ...]] = list(itertools.combinations(range(k), t))
        self.strides: list[tuple[int, ...]] = []
        self.offsets: list[int] = []
        self.sizes: list[int] = []
        total = 0
        for sub in self.subsets:
            strides = []
            acc = 1
            for p in reversed(sub):
                strides.append(acc)
                acc *= self.cards[p]
            self.strides.append(tuple(reversed(strides)))
            self.offsets.append(total)
            self.sizes.append(acc)
            total += acc
        self.total = total
        # subsets touching each column, used for incremental updates
        self.by_column: list[list[int]] = [
            [s for s, sub in enumerate(self.subsets) if c in sub] for c in range(k)
        ]

    def rank_in(self, s: int, row: Sequence[int]) -> int:
        r = self.offsets[s]
        for p, st in zip(self.subsets[s], self.strides[s]):
            r += row[p] * st
        return r

    def row_ranks(self, row: Sequence[int]) -> list[int]:
        return [self.rank_in(s, row) for s in range(len(self.subsets))]

    def rank(self, tup: InteractionTuple) -> int:
        s = self.subsets.index(tuple(tup.positions))
        r = self.offsets[s]
        for lv, st in zip(tup.levels, self.strides[s]):
            r += lv * st
        return r

    def subset_of_rank(self, rank: int) -> int:
        lo, hi = 0, len(self.offsets) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.offsets[mid] <= rank:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def unrank(self, rank: int) -> InteractionTuple:
        if not 0 <= rank < self.total:
            raise IndexError(rank)
        s = self.subset_of_rank(rank)
        rem = rank - self.offsets[s]
        levels = []
        for st in self.strides[s]:
            levels.append(rem // st)
            rem %= st
        return InteractionTuple(self.subsets[s], tuple(levels))


@lru_cache(maxsize=64)
def tuple_index(cards: tuple[int, ...], t: int) -> TupleIndex:
    return TupleIndex(cards, t)


def _strength(model: FactorModel, t: int | None) -> int:
    t = model.strength if t is None else t
    if not 1 <= t <= model.k:
        raise ModelError(f"strength {t} out of range 1..{model.k}")
    return t


def tuple_count(model: FactorModel, t: int | None = None) -> int:
    """Closed form: sum over t-subsets of factors of their cardinality product."""
    t = _strength(model, t)
    return sum(
        math.prod(sub) for sub in itertools.combinations(model.cardinalities, t)
    )


def enumerate_tuples(model: FactorModel, t: int | None = None) -> Iterator[InteractionTuple]:
    """Yield every t-way tuple exactly once, in canonical order."""
    t = _strength(model, t)
    cards = model.cardinalities
    for positions in itertools.combinations(range(model.k), t):
        for levels in itertools.product(*(range(cards[p]) for p in positions)):
            yield InteractionTuple(positions, levels)


def validate_rows(rows: Sequence[Sequence[int]], model: FactorModel) -> list[Row]:
    out = []
    cards = model.cardinalities
    for r, row in enumerate(rows, start=1):
        if len(row) != model.k:
            raise CoverageError(f"row {r}: expected {model.k} assignments, got {len(row)}")
        for c, lv in enumerate(row):
            if not (isinstance(lv, int) and 0 <= lv < cards[c]):
                raise CoverageError(
                    f"row {r}: level index {lv!r} out of range for factor "
                    f"{model.factors[c].name!r} (0..{cards[c] - 1})"
                )
        out.append(tuple(row))
    return out


@dataclass
class CoverageLedger:
    index: TupleIndex
    multiplicity: int
    counts: list[int]
    rows_seen: int = 0

    @classmethod
    def empty(cls, model: FactorModel, t: int | None = None) -> CoverageLedger:
        idx = tuple_index(model.cardinalities, _strength(model, t))
        return cls(idx, model.multiplicity, [0] * idx.total)

    def add_row(self, row: Sequence[int]) -> None:
        for r in self.index.row_ranks(row):
            self.counts[r] += 1
        self.rows_seen += 1

    def merge(self, other: CoverageLedger) -> CoverageLedger:
        """Sum two ledgers built over disjoint row partitions."""
        if self.index.cards != other.index.cards or self.index.t != other.index.t:
            raise CoverageError("cannot merge ledgers of different models")
        counts = [a + b for a, b in zip(self.counts, other.counts)]
        return CoverageLedger(self.index, self.multiplicity, counts, self.rows_seen + other.rows_seen)

    @property
    def total(self) -> int:
        return self.index.total

    @property
    def covered(self) -> int:
        lam = self.multiplicity
        return sum(1 for c in self.counts if c >= lam)

    @property
    def fraction(self) -> float:
        return self.covered / self.total

    @property
    def complete(self) -> bool:
        return self.covered == self.total

    def count(self, tup: InteractionTuple) -> int:
        return self.counts[self.index.rank(tup)]

    def missing(self) -> list[InteractionTuple]:
        lam = self.multiplicity
        return [self.index.unrank(r) for r, c in enumerate(self.counts) if c < lam]


def coverage_of(
    rows: Sequence[Sequence[int]], model: FactorModel, t: int | None = None
) -> CoverageLedger:
    ledger = CoverageLedger.empty(model, t)
    for row in validate_rows(rows, model):
        ledger.add_row(row)
    return ledger


def missing_tuples(
    rows: Sequence[Sequence[int]], model: FactorModel, t: int | None = None
) -> list[InteractionTuple]:
    return coverage_of(rows, model, t).missing()


class Verification(enum.Enum):
    UNVERIFIED = "unverified"
    COMPLETE = "verified-complete"
    INCOMPLETE = "verified-incomplete"


@dataclass
class CoveringArray:
    model: FactorModel
    rows: list[Row]
    status: Verification = Verification.UNVERIFIED
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.rows = [tuple(r) for r in self.rows]

    @property
    def size(self) -> int:
        return len(self.rows)

    @property
    def verified(self) -> bool:
        return self.status is Verification.COMPLETE

    def verify(self) -> bool:
        ok = coverage_of(self.rows, self.model).complete
        self.status = Verification.COMPLETE if ok else Verification.INCOMPLETE
        return ok


def is_covering_array(rows, model: FactorModel | None = None) -> bool:
    """True iff every tuple occurs at least ``multiplicity`` times.

    Accepts either a :class:`CoveringArray` (whose status is updated) or a
    plain row list together with its model.
    """
    if isinstance(rows, CoveringArray):
        return rows.verify()
    if model is None:
        raise TypeError("model is required when passing plain rows")
    return coverage_of(rows, model).complete


def full_factorial(model: FactorModel) -> list[Row]:
    return list(itertools.product(*(range(c) for c in model.cardinalities)))
