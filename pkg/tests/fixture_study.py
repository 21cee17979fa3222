"""Deterministic two-population study fixture.

13 respondents tagged FBO and 6 tagged NFBO, with build-your-own answers
arranged to hit fixed per-attribute tallies:

    FBO:  A (0,6,7)   B (0,11,2)  C (6,7,0)   D (0,12,1)
    NFBO: A (1,2,3)   B (3,2,1)   C (5,1,0)   D (2,3,1)

One FBO respondent (INCONSISTENT_ID) carries a hand-built tournament whose
first three tasks order attribute-A levels in a cycle, so their feasible
ranking set is empty and the analysis drops them. Everyone else is a seeded
utility-consistent simulated respondent.
"""
from __future__ import annotations

import random

from acbckit.model import Profile, RespondentRecord, SurveyDesign
from acbckit.simulation import derive_seed, simulate_respondent_record

FIXTURE_SEED = 20240817
INCONSISTENT_ID = "fbo-12"

FBO_BYOS = (
    [(1, 1, 0, 1)] * 6      # rows 0-5
    + [(2, 1, 1, 1)] * 5    # rows 6-10
    + [(2, 2, 1, 1)]        # row 11
    + [(2, 2, 1, 2)]        # row 12: the inconsistent respondent
)
NFBO_BYOS = [
    (0, 0, 0, 0),
    (1, 0, 0, 0),
    (1, 0, 0, 1),
    (2, 1, 0, 1),
    (2, 1, 0, 1),
    (2, 2, 1, 2),
]

FBO_MT = ((0, 6, 7), (0, 11, 2), (6, 7, 0), (0, 12, 1))
NFBO_MT = ((1, 2, 3), (3, 2, 1), (5, 1, 0), (2, 3, 1))


def _inconsistent_record(byo: Profile) -> RespondentRecord:
    # round-1 pairs 1..3 differ only in attribute A and the recorded winners
    # form the cycle A1>A2, A2>A3, A3>A1; no ranking of A survives that
    field = [
        Profile((0, 0, 0, 0)), Profile((1, 0, 0, 0)),
        Profile((1, 1, 0, 0)), Profile((2, 1, 0, 0)),
        Profile((2, 0, 1, 0)), Profile((0, 0, 1, 0)),
        Profile((0, 2, 2, 2)), Profile((1, 2, 2, 2)),
        Profile((0, 1, 1, 1)), Profile((1, 1, 1, 1)),
        Profile((2, 2, 0, 1)), Profile((2, 0, 2, 1)),
        Profile((0, 2, 0, 2)), Profile((1, 0, 2, 2)),
        Profile((2, 1, 2, 0)), Profile((1, 2, 1, 2)),
    ]
    return RespondentRecord(
        id=INCONSISTENT_ID,
        population_tag="FBO",
        byo=byo,
        field=tuple(field),
        winners=("left",) * 15,
    )


def build_study_records(design: SurveyDesign) -> list[RespondentRecord]:
    records = []
    for i, levels in enumerate(FBO_BYOS):
        rid = f"fbo-{i:02d}"
        byo = Profile(levels)
        if rid == INCONSISTENT_ID:
            records.append(_inconsistent_record(byo))
            continue
        rng = random.Random(derive_seed(FIXTURE_SEED, rid))
        records.append(
            simulate_respondent_record(design, rid, "FBO", byo, rng)
        )
    for i, levels in enumerate(NFBO_BYOS):
        rid = f"nfbo-{i:02d}"
        rng = random.Random(derive_seed(FIXTURE_SEED, rid))
        records.append(
            simulate_respondent_record(design, rid, "NFBO", Profile(levels), rng)
        )
    return records
