"""Candidate profile generation and the single-elimination tournament.

A bracket is an immutable value: recording a choice returns a new bracket.
The field order fully determines all pairings, so a record of the field
plus the winner sides replays to an identical bracket.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from acbckit.model import ChoiceTask, DesignError, Profile, RespondentRecord, SurveyDesign

CANDIDATE_VARIANTS = 24  # distance-2 variants generated alongside the BYO


def distance(p: Profile, q: Profile) -> int:
    return sum(1 for a, b in zip(p.levels, q.levels) if a != b)


def _all_distance2_variants(byo: Profile, design: SurveyDesign) -> list[Profile]:
    out = []
    for i, j in itertools.combinations(range(design.k), 2):
        for li in range(len(design.attributes[i].levels)):
            if li == byo.levels[i]:
                continue
            for lj in range(len(design.attributes[j].levels)):
                if lj == byo.levels[j]:
                    continue
                levels = list(byo.levels)
                levels[i], levels[j] = li, lj
                out.append(Profile(tuple(levels)))
    return out


def generate_candidate_profiles(
    byo: Profile, design: SurveyDesign, rng: random.Random
) -> list[Profile]:
    """Return the BYO plus 24 distinct profiles at Hamming distance exactly 2.

    For a 4x3 design the 24 variants are the complete distance-2
    enumeration, so the rng only shuffles their order; larger designs get a
    uniform 24-subset. Designs that cannot produce 24 distinct variants are
    rejected by name.
    """
    design.check_profile(byo)
    variants = _all_distance2_variants(byo, design)
    if len(variants) < CANDIDATE_VARIANTS:
        shape = "x".join(str(len(a.levels)) for a in design.attributes)
        raise DesignError(
            f"design shape {shape} yields only {len(variants)} distinct "
            f"distance-2 variants; {CANDIDATE_VARIANTS} required"
        )
    if len(variants) > CANDIDATE_VARIANTS:
        variants = rng.sample(variants, CANDIDATE_VARIANTS)
    else:
        rng.shuffle(variants)
    return [byo] + variants


def select_tournament_field(
    candidates: Sequence[Profile],
    rng: random.Random,
    size: int = 16,
    force: Optional[Profile] = None,
) -> list[Profile]:
    """Draw a uniformly random ``size``-subset and shuffle it for seeding.

    ``force`` reserves a slot for one candidate (the BYO, when the
    force-byo option is on); the remaining slots are drawn uniformly from
    the rest.
    """
    pool = list(candidates)
    if len(set(pool)) != len(pool):
        raise DesignError("candidates must be distinct")
    if len(pool) < size:
        raise DesignError(
            f"need at least {size} candidates to fill the field, got {len(pool)}"
        )
    if force is not None:
        if force not in pool:
            raise DesignError("forced profile is not among the candidates")
        rest = [p for p in pool if p != force]
        field = [force] + rng.sample(rest, size - 1)
    else:
        field = rng.sample(pool, size)
    rng.shuffle(field)
    return field


@dataclass(frozen=True)
class Bracket:
    """Single-elimination bracket over a power-of-two field.

    Round 1 pairs the field in order: (0 vs 1), (2 vs 3), ...; each later
    round pairs the previous round's winners in order. ``winners`` holds
    the side chosen in each completed task, in task order.
    """

    field: tuple[Profile, ...]
    winners: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "field", tuple(self.field))
        object.__setattr__(self, "winners", tuple(self.winners))
        n = len(self.field)
        if n < 2 or n & (n - 1) != 0:
            raise DesignError(f"field size must be a power of two >= 2, got {n}")
        if len(set(self.field)) != n:
            raise DesignError("field profiles must be distinct")
        if len(self.winners) > self.total_tasks:
            raise DesignError("more winners than tasks in this bracket")

    @property
    def total_tasks(self) -> int:
        return len(self.field) - 1

    @property
    def complete(self) -> bool:
        return len(self.winners) == self.total_tasks

    def _pairings(self) -> list[tuple[Profile, Profile]]:
        """All pairings decided so far plus the pending one, in task order."""
        pairs: list[tuple[Profile, Profile]] = []
        entrants = list(self.field)
        decided = iter(self.winners)
        while len(entrants) > 1:
            nxt: list[Profile] = []
            for i in range(0, len(entrants), 2):
                left, right = entrants[i], entrants[i + 1]
                pairs.append((left, right))
                side = next(decided, None)
                if side is None:
                    return pairs
                nxt.append(left if side == "left" else right)
            entrants = nxt
        return pairs

    @property
    def pending(self) -> Optional[ChoiceTask]:
        if self.complete:
            return None
        left, right = self._pairings()[len(self.winners)]
        return ChoiceTask(left=left, right=right)

    @property
    def tasks(self) -> tuple[ChoiceTask, ...]:
        """Completed tasks with winners, in the order they were asked."""
        pairs = self._pairings()
        return tuple(
            ChoiceTask(left=l, right=r, winner=w)
            for (l, r), w in zip(pairs, self.winners)
        )

    def rounds(self) -> list[list[ChoiceTask]]:
        """Completed tasks grouped by round."""
        out: list[list[ChoiceTask]] = []
        tasks = list(self.tasks)
        size = len(self.field) // 2
        while tasks and size >= 1:
            out.append(tasks[:size])
            tasks = tasks[size:]
            size //= 2
        return out

    @property
    def champion(self) -> Profile:
        if not self.complete:
            raise DesignError("bracket is not complete yet")
        entrants = list(self.field)
        it = iter(self.winners)
        while len(entrants) > 1:
            entrants = [
                (entrants[i] if next(it) == "left" else entrants[i + 1])
                for i in range(0, len(entrants), 2)
            ]
        return entrants[0]


def init_bracket(field: Sequence[Profile]) -> Bracket:
    return Bracket(field=tuple(field))


def record_choice(bracket: Bracket, winner: str) -> Bracket:
    if bracket.complete:
        raise DesignError("cannot record a choice on a completed bracket")
    if winner not in ("left", "right"):
        raise DesignError(f"winner must be 'left' or 'right', got {winner!r}")
    return Bracket(field=bracket.field, winners=bracket.winners + (winner,))


def replay(record: RespondentRecord) -> Bracket:
    """Rebuild the bracket a record describes, validating as it goes."""
    bracket = init_bracket(record.field)
    for side in record.winners:
        bracket = record_choice(bracket, side)
    return bracket


def run_tournament(field: Sequence[Profile], choose) -> Bracket:
    """Play a bracket to completion using ``choose(task) -> side``."""
    bracket = init_bracket(field)
    while not bracket.complete:
        task = bracket.pending
        assert task is not None
        bracket = record_choice(bracket, choose(task))
    return bracket
