"""Core domain types shared by every other module.

Levels are 0-based indices internally; display labels live on the design.
Counts that can carry tie fractions are exact rationals, never floats.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Union

DESIGN_SCHEMA_VERSION = 1


class DesignError(ValueError):
    """A survey design or one of its inputs is structurally invalid."""


@dataclass(frozen=True)
class Attribute:
    label: str
    levels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(self.levels))
        if len(self.levels) < 2:
            raise DesignError(f"attribute {self.label!r} needs at least 2 levels")
        if len(set(self.levels)) != len(self.levels):
            raise DesignError(f"attribute {self.label!r} repeats a level label")


@dataclass(frozen=True)
class SurveyDesign:
    """Attributes with ordered levels plus the tournament shape (a, t).

    ``k`` is the attribute count and ``c`` the largest level count; both
    are derived, not stored.
    """

    attributes: tuple[Attribute, ...]
    alternatives_per_task: int = 2
    choice_tasks: int = 15

    def __post_init__(self) -> None:
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if len(self.attributes) < 2:
            raise DesignError("a design needs at least 2 attributes")
        labels = [a.label for a in self.attributes]
        if len(set(labels)) != len(labels):
            raise DesignError("attribute labels must be unique")
        if self.choice_tasks < 1:
            raise DesignError("choice_tasks must be positive")

    @property
    def k(self) -> int:
        return len(self.attributes)

    @property
    def c(self) -> int:
        return max(len(a.levels) for a in self.attributes)

    @property
    def level_counts(self) -> tuple[int, ...]:
        return tuple(len(a.levels) for a in self.attributes)

    @property
    def field_size(self) -> int:
        # single elimination: t binary tasks admit exactly t+1 entrants
        return self.choice_tasks + 1

    def check_profile(self, profile: "Profile") -> None:
        if len(profile.levels) != self.k:
            raise DesignError(
                f"profile has {len(profile.levels)} levels, design has {self.k} attributes"
            )
        for i, lev in enumerate(profile.levels):
            if not 0 <= lev < len(self.attributes[i].levels):
                raise DesignError(
                    f"level index {lev} out of range for attribute "
                    f"{self.attributes[i].label!r}"
                )

    def describe(self, profile: "Profile") -> dict[str, str]:
        """Map a profile to display labels, attribute label to level label."""
        self.check_profile(profile)
        return {
            a.label: a.levels[lev]
            for a, lev in zip(self.attributes, profile.levels)
        }


@dataclass(frozen=True)
class Profile:
    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))

    def to_list(self) -> list[int]:
        return list(self.levels)

    @classmethod
    def from_list(cls, values: Iterable[int]) -> "Profile":
        return cls(tuple(values))


@dataclass(frozen=True)
class ChoiceTask:
    left: Profile
    right: Profile
    winner: Optional[str] = None  # "left" | "right" | None while pending

    def __post_init__(self) -> None:
        if self.left == self.right:
            raise DesignError("choice task profiles must differ in at least one attribute")
        if self.winner not in (None, "left", "right"):
            raise DesignError(f"winner must be 'left' or 'right', got {self.winner!r}")

    @property
    def winning_profile(self) -> Profile:
        if self.winner is None:
            raise DesignError("task has no recorded winner")
        return self.left if self.winner == "left" else self.right

    @property
    def losing_profile(self) -> Profile:
        if self.winner is None:
            raise DesignError("task has no recorded winner")
        return self.right if self.winner == "left" else self.left


@dataclass(frozen=True)
class RespondentRecord:
    """One respondent's raw data: BYO answer plus the played tournament.

    The tournament is stored as the ordered field and the winner side of
    each completed task; the task list itself is reconstructed by replay
    (see ``engine.replay``), which keeps the record format minimal and
    guarantees the stored winners fully determine the bracket.
    """

    id: str
    population_tag: str
    byo: Profile
    field: tuple[Profile, ...]
    winners: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "field", tuple(self.field))
        object.__setattr__(self, "winners", tuple(self.winners))
        for w in self.winners:
            if w not in ("left", "right"):
                raise DesignError(f"winner entries must be 'left'/'right', got {w!r}")
        if len(self.winners) > max(len(self.field) - 1, 0):
            raise DesignError("more winners recorded than a bracket of this size allows")


@dataclass(frozen=True)
class FrequencyDistribution:
    """Per-level sample counts for one attribute.

    ``kind`` distinguishes the three Table-style sections: raw BYO tallies
    ("MT"), part-worth most-ideal tallies ("MI-partworth") and
    feasible-ranking most-ideal tallies ("MI-paprika"). Counts may be
    fractional (ties are split) and are exact rationals.
    """

    attribute: int
    counts: tuple[Fraction, ...]
    kind: str

    _KINDS = ("MT", "MI-partworth", "MI-paprika")

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", tuple(Fraction(c) for c in self.counts))
        if self.kind not in self._KINDS:
            raise DesignError(f"kind must be one of {self._KINDS}, got {self.kind!r}")
        if any(c < 0 for c in self.counts):
            raise DesignError("counts must be non-negative")

    @property
    def n(self) -> Fraction:
        return sum(self.counts, Fraction(0))


@dataclass(frozen=True)
class PopulationEstimate:
    """An estimated population count vector with its method tag.

    ``wmae`` is None when the admissible ensemble was too large to
    evaluate the estimator's weighted error.
    """

    counts: tuple[int, ...]
    N: int
    method: str  # "MLE" | "WMAE-min"
    wmae: Optional[Fraction] = None
    non_unique: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if sum(self.counts) != self.N:
            raise DesignError("estimate counts must sum to N")
        if any(c < 0 for c in self.counts):
            raise DesignError("estimate counts must be non-negative")
        if self.method not in ("MLE", "WMAE-min"):
            raise DesignError(f"unknown estimation method {self.method!r}")


@dataclass(frozen=True)
class ValidationReport:
    small_study: bool
    bound: Fraction
    n: int
    N: int
    messages: tuple[str, ...] = field(default_factory=tuple)

    def __str__(self) -> str:
        verdict = "holds" if self.small_study else "does not hold"
        lines = [
            f"small-study condition {verdict}: "
            f"n={self.n} < N={self.N} < {float(self.bound):g} required",
        ]
        lines.extend(self.messages)
        return "\n".join(lines)


def validate_design(design: SurveyDesign, n: int, N: int) -> ValidationReport:
    """Check the structural rules and the small-study condition n < N < (c/(a*t))*10^3."""
    if n < 1:
        raise DesignError("n must be at least 1")
    if N < n:
        raise DesignError("N must be at least n")
    if design.alternatives_per_task != 2:
        raise DesignError(
            f"this engine requires binary choice tasks, got a={design.alternatives_per_task}"
        )
    if design.field_size & (design.field_size - 1) != 0:
        raise DesignError(
            f"tournament field size must be a power of two, got {design.field_size} "
            f"(t={design.choice_tasks})"
        )
    bound = Fraction(design.c, design.alternatives_per_task * design.choice_tasks) * 1000
    small = n < N < bound
    messages = []
    if not n < N:
        messages.append(f"requires n < N strictly, got n={n}, N={N}")
    if not N < bound:
        messages.append(f"requires N < {float(bound):g}, got N={N}")
    return ValidationReport(small_study=small, bound=bound, n=n, N=N, messages=tuple(messages))


def design_to_dict(design: SurveyDesign) -> dict:
    return {
        "schemaVersion": DESIGN_SCHEMA_VERSION,
        "attributes": [
            {"label": a.label, "levels": list(a.levels)} for a in design.attributes
        ],
        "alternativesPerTask": design.alternatives_per_task,
        "choiceTasks": design.choice_tasks,
    }


def design_from_dict(data: dict) -> SurveyDesign:
    version = data.get("schemaVersion")
    if version != DESIGN_SCHEMA_VERSION:
        raise DesignError(
            f"unsupported design schemaVersion {version!r}, expected {DESIGN_SCHEMA_VERSION}"
        )
    try:
        attributes = tuple(
            Attribute(label=a["label"], levels=tuple(a["levels"]))
            for a in data["attributes"]
        )
    except (KeyError, TypeError) as exc:
        raise DesignError(f"malformed design document: {exc}") from exc
    return SurveyDesign(
        attributes=attributes,
        alternatives_per_task=int(data.get("alternativesPerTask", 2)),
        choice_tasks=int(data.get("choiceTasks", 15)),
    )


def load_design(path: Union[str, Path]) -> SurveyDesign:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DesignError(f"design file {path} is not valid JSON: {exc}") from exc
    return design_from_dict(data)


def save_design(design: SurveyDesign, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(design_to_dict(design), fh, indent=2)
        fh.write("\n")


def default_design() -> SurveyDesign:
    """The 4-attribute, 3-level generic design used throughout the tests."""
    return SurveyDesign(
        attributes=tuple(
            Attribute(label=lab, levels=(f"{lab}1", f"{lab}2", f"{lab}3"))
            for lab in ("A", "B", "C", "D")
        )
    )
