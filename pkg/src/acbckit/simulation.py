"""Monte Carlo sensitivity analysis: how often does the feasible-ranking
pipeline recover a simulated respondent's true most-ideal levels when the
build-your-own anchor is ideal, typical, or random?

Each trial derives its own random stream from (master seed, trial index),
so results are identical regardless of batching or parallel scheduling.
"""
from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from acbckit.engine import (
    generate_candidate_profiles,
    run_tournament,
    select_tournament_field,
)
from acbckit.model import ChoiceTask, DesignError, Profile, RespondentRecord, SurveyDesign
from acbckit.paprika import (
    InconsistentRespondentError,
    constraint_from_choice,
    universe_for,
)

BYO_MODES = ("ideal", "typical", "random")


def derive_seed(master: int, *parts) -> int:
    """Stable 64-bit stream seed for (master, parts), identical across
    platforms and processes."""
    digest = hashlib.sha256(repr((master,) + parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class SimulatedRespondent:
    """Deterministic chooser with strictly decreasing level utilities.

    Level index 0 is the true most-ideal level of every attribute. Exact
    utility ties between profiles resolve lexicographically: the first
    attribute (in design order) where the profiles differ awards the win
    to the higher-utility level.
    """

    utilities: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "utilities", tuple(tuple(u) for u in self.utilities)
        )
        for u in self.utilities:
            if any(a <= b for a, b in zip(u, u[1:])):
                raise DesignError(
                    "utilities must strictly decrease with the level index"
                )

    @classmethod
    def for_design(
        cls, design: SurveyDesign, levels: Optional[Sequence[float]] = None
    ) -> "SimulatedRespondent":
        """Default utilities count down to 0 (2,1,0 for three levels); a
        shared per-level override may be supplied."""
        rows = []
        for lc in design.level_counts:
            if levels is None:
                rows.append(tuple(float(lc - 1 - i) for i in range(lc)))
            else:
                if len(levels) != lc:
                    raise DesignError(
                        f"utility override has {len(levels)} values, attribute has {lc} levels"
                    )
                rows.append(tuple(float(v) for v in levels))
        return cls(utilities=tuple(rows))

    def total(self, profile: Profile) -> float:
        return sum(u[lev] for u, lev in zip(self.utilities, profile.levels))


def simulate_choice(respondent: SimulatedRespondent, task: ChoiceTask) -> str:
    left, right = task.left, task.right
    ul, ur = respondent.total(left), respondent.total(right)
    if ul != ur:
        return "left" if ul > ur else "right"
    for a, (ll, rl) in enumerate(zip(left.levels, right.levels)):
        if ll != rl:
            u = respondent.utilities[a]
            return "left" if u[ll] > u[rl] else "right"
    raise DesignError("identical profiles cannot be compared")


def byo_for_mode(design: SurveyDesign, mode: str, rng: random.Random) -> Profile:
    if mode == "ideal":
        return Profile(tuple(0 for _ in design.level_counts))
    if mode in ("typical", "typical-fixed"):
        return Profile(tuple((lc - 1) // 2 for lc in design.level_counts))
    if mode == "random":
        return Profile(tuple(rng.randrange(lc) for lc in design.level_counts))
    raise DesignError(f"unknown BYO mode {mode!r}; expected one of {BYO_MODES}")


@dataclass(frozen=True)
class TrialResult:
    """Per-attribute recovery credit in [0, 1] (fractional under ties)."""

    credits: tuple[Fraction, ...]
    champion: Profile
    feasible_size: int


def run_trial(
    design: SurveyDesign,
    byo_mode: str,
    rng: random.Random,
    utilities: Optional[Sequence[float]] = None,
    force_byo: bool = False,
) -> TrialResult:
    """One simulated survey: BYO anchor, candidate generation, field draw,
    full tournament, ranking filter, then credit each attribute by the true
    top level's share of the modal top (1 when uniquely modal)."""
    respondent = SimulatedRespondent.for_design(design, utilities)
    byo = byo_for_mode(design, byo_mode, rng)
    candidates = generate_candidate_profiles(byo, design, rng)
    field = select_tournament_field(
        candidates, rng, size=design.field_size, force=byo if force_byo else None
    )
    bracket = run_tournament(field, lambda task: simulate_choice(respondent, task))
    uni = universe_for(design)
    mask = uni.full_mask
    for task in bracket.tasks:
        mask &= ~uni.violation_mask(constraint_from_choice(task))
    if mask == 0:
        # cannot happen for a consistent utility chooser; guard regardless
        raise InconsistentRespondentError(
            "simulated respondent produced an empty feasible set"
        )
    credits = []
    for a, counts in enumerate(uni.top_counts(mask)):
        peak = max(counts)
        modal = [lev for lev, cnt in enumerate(counts) if cnt == peak]
        credits.append(Fraction(1, len(modal)) if 0 in modal else Fraction(0))
    return TrialResult(
        credits=tuple(credits),
        champion=bracket.champion,
        feasible_size=mask.bit_count(),
    )


@dataclass(frozen=True)
class HitProbabilities:
    mode: str
    trials: int
    probabilities: tuple[float, ...]
    standard_errors: tuple[float, ...]


def estimate_hit_probabilities(
    design: SurveyDesign,
    byo_mode: str,
    trials: int,
    master_seed: int,
    utilities: Optional[Sequence[float]] = None,
    force_byo: bool = False,
) -> HitProbabilities:
    """Mean per-attribute recovery credit over seeded independent trials,
    with binomial-style standard errors."""
    if trials < 1:
        raise DesignError("trials must be at least 1")
    totals = [Fraction(0)] * design.k
    for t in range(trials):
        rng = random.Random(derive_seed(master_seed, t))
        result = run_trial(design, byo_mode, rng, utilities, force_byo)
        for a, credit in enumerate(result.credits):
            totals[a] += credit
    probs = tuple(float(tot / trials) for tot in totals)
    ses = tuple(math.sqrt(p * (1.0 - p) / trials) for p in probs)
    return HitProbabilities(
        mode=byo_mode, trials=trials, probabilities=probs, standard_errors=ses
    )


def simulate_respondent_record(
    design: SurveyDesign,
    respondent_id: str,
    population_tag: str,
    byo: Profile,
    rng: random.Random,
    utilities: Optional[Sequence[Sequence[float]]] = None,
    force_byo: bool = False,
) -> RespondentRecord:
    """Produce a complete respondent record from a deterministic chooser;
    used by fixtures and the demo data path."""
    if utilities is None:
        respondent = SimulatedRespondent.for_design(design)
    else:
        respondent = SimulatedRespondent(
            utilities=tuple(tuple(u) for u in utilities)
        )
    candidates = generate_candidate_profiles(byo, design, rng)
    field = select_tournament_field(
        candidates, rng, size=design.field_size, force=byo if force_byo else None
    )
    bracket = run_tournament(field, lambda task: simulate_choice(respondent, task))
    return RespondentRecord(
        id=respondent_id,
        population_tag=population_tag,
        byo=byo,
        field=bracket.field,
        winners=bracket.winners,
    )
