"""Factor/level models: parsing, validation and size arithmetic."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Iterable


class ModelError(ValueError):
    """Raised when a model document or model value is invalid."""


@dataclass(frozen=True)
class Factor:
    name: str
    levels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(str(lv) for lv in self.levels))
        if not self.name:
            raise ModelError("factor name must be non-empty")
        if not self.levels:
            raise ModelError(f"factor {self.name!r}: empty level list")
        seen: set[str] = set()
        for pos, label in enumerate(self.levels):
            if label in seen:
                raise ModelError(
                    f"factor {self.name!r}: duplicate level label {label!r} at position {pos}"
                )
            seen.add(label)

    @property
    def cardinality(self) -> int:
        return len(self.levels)

    def index_of(self, label: str) -> int:
        try:
            return self.levels.index(str(label))
        except ValueError:
            raise ModelError(f"factor {self.name!r} has no level {label!r}") from None


@dataclass(frozen=True)
class FactorModel:
    """Ordered factors plus the interaction strength and coverage multiplicity.

    Levels are addressed by zero-based index everywhere except at I/O
    boundaries, where labels are used.
    """

    factors: tuple[Factor, ...]
    strength: int = 2
    multiplicity: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        names: set[str] = set()
        for pos, f in enumerate(self.factors):
            if f.name in names:
                raise ModelError(f"duplicate factor name {f.name!r} at position {pos}")
            names.add(f.name)
        k = len(self.factors)
        if self.strength < 1:
            raise ModelError(f"t < 1 (strength={self.strength})")
        if self.strength > k:
            raise ModelError(f"t > k (strength={self.strength}, k={k})")
        if self.multiplicity < 1:
            raise ModelError(f"multiplicity < 1 (multiplicity={self.multiplicity})")

    @property
    def k(self) -> int:
        return len(self.factors)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(f.cardinality for f in self.factors)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def factor(self, name: str) -> Factor:
        for f in self.factors:
            if f.name == name:
                return f
        raise ModelError(f"unknown factor {name!r}")

    def factor_index(self, name: str) -> int:
        for i, f in enumerate(self.factors):
            if f.name == name:
                return i
        raise ModelError(f"unknown factor {name!r}")

    def with_strength(self, strength: int, multiplicity: int | None = None) -> FactorModel:
        return FactorModel(
            self.factors,
            strength=strength,
            multiplicity=self.multiplicity if multiplicity is None else multiplicity,
        )

    @classmethod
    def from_cardinalities(
        cls, cards: Iterable[int], strength: int = 2, multiplicity: int = 1
    ) -> FactorModel:
        """Build an anonymous model with factors ``F0, F1, ...`` and levels ``0, 1, ...``."""
        factors = tuple(
            Factor(f"F{i}", tuple(str(v) for v in range(c))) for i, c in enumerate(cards)
        )
        return cls(factors, strength=strength, multiplicity=multiplicity)

    def to_dict(self) -> dict[str, Any]:
        return {
            "strength": self.strength,
            "multiplicity": self.multiplicity,
            "factors": [{"name": f.name, "levels": list(f.levels)} for f in self.factors],
        }


def model_from_dict(doc: Any) -> FactorModel:
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")
    if "factors" not in doc or not isinstance(doc["factors"], list):
        raise ModelError("model document needs a 'factors' array")
    strength = doc.get("strength", 2)
    multiplicity = doc.get("multiplicity", 1)
    for key, val in (("strength", strength), ("multiplicity", multiplicity)):
        if not isinstance(val, int) or isinstance(val, bool):
            raise ModelError(f"{key} must be an integer, got {val!r}")
    factors = []
    for pos, entry in enumerate(doc["factors"]):
        if not isinstance(entry, dict) or "name" not in entry or "levels" not in entry:
            raise ModelError(f"factor at position {pos} needs 'name' and 'levels'")
        if not isinstance(entry["levels"], list):
            raise ModelError(f"factor {entry['name']!r}: 'levels' must be an array")
        factors.append(Factor(str(entry["name"]), tuple(entry["levels"])))
    return FactorModel(tuple(factors), strength=strength, multiplicity=multiplicity)


def parse_model(text: str) -> FactorModel:
    """Parse a JSON model document, preserving factor and level order."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"model document is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def serialize_model(model: FactorModel) -> str:
    return json.dumps(model.to_dict(), indent=2) + "\n"


def load_model(path) -> FactorModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def exhaustive_size(model: FactorModel) -> int:
    return math.prod(model.cardinalities)


def lower_bound(model: FactorModel, t: int | None = None) -> int:
    """Multiplicity times the product of the ``t`` largest cardinalities.

    No covering array of strength ``t`` for the model can have fewer rows.
    """
    t = model.strength if t is None else t
    if not 1 <= t <= model.k:
        raise ModelError(f"strength {t} out of range 1..{model.k}")
    largest = sorted(model.cardinalities, reverse=True)[:t]
    return model.multiplicity * math.prod(largest)
