"""Feasible-ranking filter: enumerate level rankings, eliminate those that
contradict recorded choices, and extract most-ideal levels.

The full ranking universe for a design is packed into a single big integer,
one bit per ranking, with mixed-radix strides per attribute. Constraint
violation masks are built once per design from periodic bit patterns, so
filtering a respondent is a handful of bitwise ANDs regardless of how many
rankings exist. The explicit per-ranking check (``ranking_violates``) is
implemented independently of the bitmask path and the two are
cross-validated in the tests.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Iterator, Optional, Sequence, Union

from acbckit.model import (
    ChoiceTask,
    DesignError,
    FrequencyDistribution,
    Profile,
    SurveyDesign,
)

ENUMERATION_CAP = 10_000_000


class InconsistentRespondentError(ValueError):
    """The respondent's choices leave no feasible ranking (footnote-* removal)."""

    def __init__(self, message: str, respondent_id: Optional[str] = None):
        super().__init__(message)
        self.respondent_id = respondent_id


@dataclass(frozen=True)
class Ranking:
    """One permutation of level indices per attribute, least to most preferred."""

    orders: tuple[tuple[int, ...], ...]

    def top(self, attribute: int) -> int:
        return self.orders[attribute][-1]

    def position(self, attribute: int, level: int) -> int:
        return self.orders[attribute].index(level)

    def as_string(self, design: SurveyDesign) -> str:
        parts = []
        for attr, order in zip(design.attributes, self.orders):
            parts.append("".join(attr.levels[lev] for lev in order))
        return " | ".join(parts)


@dataclass(frozen=True)
class Constraint:
    """Ordinal record of one choice: winner level vs loser level where the
    profiles differ, shared levels cancelled."""

    terms: frozenset[tuple[int, int, int]]  # (attribute, winnerLevel, loserLevel)

    def __post_init__(self) -> None:
        if not self.terms:
            raise DesignError("a constraint needs at least one term")
        for _, w, l in self.terms:
            if w == l:
                raise DesignError("constraint term must compare two different levels")


def constraint_from_choice(task: ChoiceTask) -> Constraint:
    winner, loser = task.winning_profile, task.losing_profile
    terms = frozenset(
        (a, w, l)
        for a, (w, l) in enumerate(zip(winner.levels, loser.levels))
        if w != l
    )
    return Constraint(terms=terms)


def ranking_violates(ranking: Ranking, constraint: Constraint) -> bool:
    """True iff every differing term puts the winner's level strictly below
    the loser's, which ordinally forces the summed comparison the wrong way.
    Mixed-direction rankings are retained (conservative rule)."""
    return all(
        ranking.position(a, w) < ranking.position(a, l) for a, w, l in constraint.terms
    )


class RankingUniverse:
    """Bit-packed enumeration of all rankings for one design shape.

    Bit ``r`` stands for the ranking whose attribute-``a`` ordering is
    ``perms[a][digit_a(r)]`` in the mixed-radix decomposition of ``r``.
    """

    def __init__(self, level_counts: Sequence[int], cap: int = ENUMERATION_CAP):
        self.level_counts = tuple(level_counts)
        self.perms = [
            tuple(itertools.permutations(range(lc))) for lc in self.level_counts
        ]
        self.radices = [len(p) for p in self.perms]
        size = 1
        for radix in self.radices:
            size *= radix
        if size > cap:
            raise DesignError(
                f"ranking enumeration would have {size} members, above the cap "
                f"of {cap}; eliminate with constraints attribute-by-attribute "
                f"or raise the cap explicitly"
            )
        self.size = size
        k = len(self.radices)
        self.strides = [
            math.prod(self.radices[a + 1 :]) for a in range(k)
        ]
        self.full_mask = (1 << size) - 1
        self._term_masks: dict[tuple[int, int, int], int] = {}
        self._top_masks = [
            [self._pattern(a, [p for p, perm in enumerate(self.perms[a]) if perm[-1] == lev])
             for lev in range(self.level_counts[a])]
            for a in range(k)
        ]

    def _pattern(self, attribute: int, selected: Iterable[int]) -> int:
        """Mask of rankings whose attribute digit is in ``selected``."""
        stride = self.strides[attribute]
        cycle = stride * self.radices[attribute]
        block = (1 << stride) - 1
        one_cycle = 0
        for p in selected:
            one_cycle |= block << (p * stride)
        replication = ((1 << self.size) - 1) // ((1 << cycle) - 1)
        return one_cycle * replication

    def term_mask(self, attribute: int, winner: int, loser: int) -> int:
        """Mask of rankings placing ``winner`` strictly below ``loser``."""
        key = (attribute, winner, loser)
        mask = self._term_masks.get(key)
        if mask is None:
            below = [
                p
                for p, perm in enumerate(self.perms[attribute])
                if perm.index(winner) < perm.index(loser)
            ]
            mask = self._pattern(attribute, below)
            self._term_masks[key] = mask
        return mask

    def violation_mask(self, constraint: Constraint) -> int:
        mask = self.full_mask
        for a, w, l in constraint.terms:
            mask &= self.term_mask(a, w, l)
        return mask

    def filter(self, mask: int, constraints: Iterable[Constraint]) -> int:
        for c in constraints:
            mask &= ~self.violation_mask(c)
        return mask

    def top_count(self, mask: int, attribute: int, level: int) -> int:
        return (mask & self._top_masks[attribute][level]).bit_count()

    def top_counts(self, mask: int) -> list[list[int]]:
        return [
            [self.top_count(mask, a, lev) for lev in range(lc)]
            for a, lc in enumerate(self.level_counts)
        ]

    def ranking_at(self, index: int) -> Ranking:
        orders = []
        for a, stride in enumerate(self.strides):
            digit = (index // stride) % self.radices[a]
            orders.append(self.perms[a][digit])
        return Ranking(orders=tuple(orders))

    def index_of(self, ranking: Ranking) -> int:
        index = 0
        for a, stride in enumerate(self.strides):
            index += self.perms[a].index(ranking.orders[a]) * stride
        return index

    def members(self, mask: int) -> Iterator[Ranking]:
        while mask:
            low = mask & -mask
            yield self.ranking_at(low.bit_length() - 1)
            mask ^= low


_universes: dict[tuple[int, ...], RankingUniverse] = {}


def universe_for(design: SurveyDesign, cap: int = ENUMERATION_CAP) -> RankingUniverse:
    key = design.level_counts
    uni = _universes.get(key)
    if uni is None or uni.size > cap:
        uni = RankingUniverse(key, cap=cap)
        _universes[key] = uni
    return uni


def enumerate_rankings(design: SurveyDesign, cap: int = ENUMERATION_CAP) -> list[Ranking]:
    uni = universe_for(design, cap=cap)
    return [uni.ranking_at(i) for i in range(uni.size)]


@dataclass(frozen=True)
class FeasibleRankingSet:
    """Rankings surviving a respondent's constraints, with provenance."""

    design: SurveyDesign
    mask: int
    constraints: tuple[Constraint, ...]
    members: tuple[Ranking, ...]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def empty(self) -> bool:
        return not self.members


def _linear_feasible(
    ranking: Ranking, constraints: Sequence[Constraint], level_counts: Sequence[int]
) -> bool:
    """Do real utilities exist that respect the ranking's orders and make
    every constraint's summed comparison strictly favor the winner?

    Strictness is encoded as a fixed margin of 1, which is without loss of
    generality because the system is scale-invariant.
    """
    from scipy.optimize import linprog

    offsets = [0]
    for lc in level_counts:
        offsets.append(offsets[-1] + lc)
    nv = offsets[-1]
    rows, rhs = [], []
    for a, order in enumerate(ranking.orders):
        for lower, upper in zip(order, order[1:]):
            row = [0.0] * nv
            row[offsets[a] + lower] = 1.0
            row[offsets[a] + upper] = -1.0
            rows.append(row)
            rhs.append(-1.0)
    for c in constraints:
        row = [0.0] * nv
        for a, w, l in c.terms:
            row[offsets[a] + l] += 1.0
            row[offsets[a] + w] -= 1.0
        rows.append(row)
        rhs.append(-1.0)
    result = linprog(
        [0.0] * nv, A_ub=rows, b_ub=rhs, bounds=[(None, None)] * nv, method="highs"
    )
    return result.status == 0


def feasible_set(
    design: SurveyDesign,
    constraints: Iterable[Constraint],
    linear: bool = False,
    cap: int = ENUMERATION_CAP,
) -> FeasibleRankingSet:
    """All rankings violating no constraint; order of application is
    irrelevant. ``linear=True`` additionally requires an exact
    utility-assignment witness per ranking (strict mode, never mixed in)."""
    constraints = tuple(constraints)
    uni = universe_for(design, cap=cap)
    mask = uni.filter(uni.full_mask, constraints)
    members = tuple(uni.members(mask))
    if linear:
        members = tuple(
            r for r in members
            if _linear_feasible(r, constraints, design.level_counts)
        )
        mask = 0
        for r in members:
            mask |= 1 << uni.index_of(r)
    return FeasibleRankingSet(
        design=design, mask=mask, constraints=constraints, members=members
    )


def modal_credit(
    frs: FeasibleRankingSet, place_from_top: int = 0
) -> tuple[tuple[Fraction, ...], ...]:
    """Per-attribute credit for the level(s) appearing most often at the
    given rank (0 = most preferred). The modal level scores 1; an m-way
    modal tie scores 1/m each. Exact rationals throughout."""
    if frs.empty:
        raise InconsistentRespondentError(
            "empty feasible set: choices are mutually contradictory"
        )
    out = []
    for a, lc in enumerate(frs.design.level_counts):
        if not 0 <= place_from_top < lc:
            raise DesignError(
                f"rank {place_from_top} out of range for attribute "
                f"{frs.design.attributes[a].label!r}"
            )
        counts = [0] * lc
        for r in frs.members:
            counts[r.orders[a][lc - 1 - place_from_top]] += 1
        peak = max(counts)
        modal = [lev for lev, cnt in enumerate(counts) if cnt == peak]
        share = Fraction(1, len(modal))
        out.append(
            tuple(share if lev in modal else Fraction(0) for lev in range(lc))
        )
    return tuple(out)


def mi_counts(frs: FeasibleRankingSet) -> tuple[tuple[Fraction, ...], ...]:
    """Most-ideal credit per attribute: modal top level scores 1, ties split."""
    return modal_credit(frs, place_from_top=0)


def top_level_counts(frs: FeasibleRankingSet) -> list[list[int]]:
    """Raw count, per attribute, of rankings placing each level on top."""
    if frs.empty:
        raise InconsistentRespondentError(
            "empty feasible set: choices are mutually contradictory"
        )
    counts = []
    for a, lc in enumerate(frs.design.level_counts):
        row = [0] * lc
        for r in frs.members:
            row[r.top(a)] += 1
        counts.append(row)
    return counts


@dataclass(frozen=True)
class RoundingCase:
    counts: tuple[int, ...]
    note: str


@dataclass(frozen=True)
class CompiledDistribution:
    """Summed most-ideal credits across respondents, one block per attribute."""

    distributions: tuple[FrequencyDistribution, ...]
    removed: tuple[str, ...]
    effective_n: int
    rounding: tuple[tuple[RoundingCase, ...], ...]  # per attribute, 1 or 2 cases


def _round_preserving_sum(counts: Sequence[Fraction]) -> tuple[tuple[RoundingCase, ...], bool]:
    """Integer-ize fractional counts without changing the column sum.

    When exactly two entries end in .5 the split is genuinely ambiguous and
    both assignments are reported; otherwise largest-remainder rounding.
    """
    if all(c.denominator == 1 for c in counts):
        return (RoundingCase(tuple(int(c) for c in counts), "exact"),), False
    halves = [i for i, c in enumerate(counts) if c - int(c) == Fraction(1, 2)]
    others_whole = all(
        c.denominator == 1 for i, c in enumerate(counts) if i not in halves
    )
    if len(halves) == 2 and others_whole:
        i, j = halves
        base = [int(c) for c in counts]
        case_a = list(base)
        case_a[i] += 1
        case_b = list(base)
        case_b[j] += 1
        labels = (f"level {i + 1} rounded up", f"level {j + 1} rounded up")
        return (
            RoundingCase(tuple(case_a), labels[0]),
            RoundingCase(tuple(case_b), labels[1]),
        ), True
    floors = [int(c) for c in counts]
    remainders = sorted(
        range(len(counts)), key=lambda i: (counts[i] - floors[i], -i), reverse=True
    )
    deficit = int(sum(counts)) - sum(floors)
    for i in remainders[:deficit]:
        floors[i] += 1
    return (RoundingCase(tuple(floors), "largest remainder"),), False


def compile_mi_distribution(
    results: Sequence[tuple[tuple[Fraction, ...], ...]],
    design: SurveyDesign,
    kind: str = "MI-paprika",
    removed_ids: Sequence[str] = (),
) -> CompiledDistribution:
    """Sum per-respondent credits into per-attribute distributions.

    ``results`` holds one ``mi_counts`` output per retained respondent;
    respondents removed for empty feasible sets are listed by id only and
    reduce the effective n.
    """
    n_eff = len(results)
    sums = [
        [Fraction(0)] * lc for lc in design.level_counts
    ]
    for res in results:
        if len(res) != design.k:
            raise DesignError("result does not match the design's attribute count")
        for a, credits in enumerate(res):
            if sum(credits, Fraction(0)) != 1:
                raise DesignError("per-respondent credits must sum to 1 per attribute")
            for lev, c in enumerate(credits):
                sums[a][lev] += c
    dists = tuple(
        FrequencyDistribution(attribute=a, counts=tuple(sums[a]), kind=kind)
        for a in range(design.k)
    )
    rounding = tuple(_round_preserving_sum(sums[a])[0] for a in range(design.k))
    return CompiledDistribution(
        distributions=dists,
        removed=tuple(removed_ids),
        effective_n=n_eff,
        rounding=rounding,
    )


def export_feasible_csv(
    frs: FeasibleRankingSet, out: Union[str, IO[str]]
) -> None:
    """Audit export: one row per feasible ranking with its top levels."""
    own = isinstance(out, str)
    fh = open(out, "w", newline="", encoding="utf-8") if own else out
    try:
        writer = csv.writer(fh)
        header = ["ranking"] + [
            f"top_{attr.label}" for attr in frs.design.attributes
        ]
        writer.writerow(header)
        for r in frs.members:
            writer.writerow(
                [r.as_string(frs.design)]
                + [
                    frs.design.attributes[a].levels[r.top(a)]
                    for a in range(frs.design.k)
                ]
            )
    finally:
        if own:
            fh.close()
