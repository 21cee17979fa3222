import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acbckit.engine import (
    Bracket,
    distance,
    generate_candidate_profiles,
    init_bracket,
    record_choice,
    replay,
    run_tournament,
    select_tournament_field,
)
from acbckit.model import Attribute, DesignError, Profile, RespondentRecord, SurveyDesign


def test_candidate_pool_is_byo_plus_24_distance2(design):
    byo = Profile((0, 1, 2, 0))
    pool = generate_candidate_profiles(byo, design, random.Random(1))
    assert len(pool) == 25
    assert pool[0] == byo
    assert len(set(pool)) == 25
    assert all(distance(byo, p) == 2 for p in pool[1:])


def test_candidate_pool_covers_every_distance2_profile(design):
    # for the 4x3 shape the 24 variants are the whole distance-2 sphere
    byo = Profile((1, 1, 1, 1))
    pool = set(generate_candidate_profiles(byo, design, random.Random(2)))
    sphere = {
        Profile(p)
        for p in itertools.product(range(3), repeat=4)
        if distance(byo, Profile(p)) == 2
    }
    assert sphere < pool
    assert len(sphere) == 24


def test_candidate_pool_rejects_small_designs():
    small = SurveyDesign(
        attributes=(
            Attribute(label="A", levels=("1", "2")),
            Attribute(label="B", levels=("1", "2")),
        ),
        choice_tasks=3,
    )
    with pytest.raises(DesignError, match="2x2"):
        generate_candidate_profiles(Profile((0, 0)), small, random.Random(0))


def test_field_selection_size_and_distinctness(design):
    pool = generate_candidate_profiles(Profile((0, 0, 0, 0)), design, random.Random(3))
    field = select_tournament_field(pool, random.Random(4))
    assert len(field) == 16
    assert len(set(field)) == 16
    assert set(field) <= set(pool)


def test_field_selection_can_force_the_anchor(design):
    byo = Profile((0, 0, 0, 0))
    pool = generate_candidate_profiles(byo, design, random.Random(5))
    forced = select_tournament_field(pool, random.Random(6), force=byo)
    assert byo in forced
    with pytest.raises(DesignError):
        select_tournament_field(pool, random.Random(7), force=Profile((2, 2, 2, 2)))


def test_field_selection_without_force_sometimes_drops_byo(design):
    byo = Profile((0, 0, 0, 0))
    pool = generate_candidate_profiles(byo, design, random.Random(8))
    dropped = sum(
        byo not in select_tournament_field(pool, random.Random(seed))
        for seed in range(200)
    )
    # 9 of 25 candidates are left out, so the anchor misses ~36% of draws
    assert 30 <= dropped <= 130


def test_field_selection_needs_enough_candidates():
    profiles = [Profile((i,)) for i in range(10)]
    with pytest.raises(DesignError):
        select_tournament_field(profiles, random.Random(0), size=16)
    with pytest.raises(DesignError):
        select_tournament_field([profiles[0], profiles[0]], random.Random(0), size=2)


def _field16():
    return [Profile((i % 3, i // 3 % 3, i // 9 % 3, i % 2)) for i in range(16)]


def test_bracket_task_count_and_rounds():
    field = _field16()
    assert len(set(field)) == 16
    bracket = run_tournament(field, lambda t: "left")
    assert bracket.total_tasks == 15
    assert len(bracket.tasks) == 15
    sizes = [len(r) for r in bracket.rounds()]
    assert sizes == [8, 4, 2, 1]
    assert bracket.champion == field[0]  # all-left keeps the first seed


def test_round1_pairs_follow_field_order():
    field = _field16()
    bracket = init_bracket(field)
    first = bracket.pending
    assert (first.left, first.right) == (field[0], field[1])
    bracket = record_choice(bracket, "right")
    second = bracket.pending
    assert (second.left, second.right) == (field[2], field[3])


def test_later_rounds_pair_winners_in_order():
    field = _field16()
    bracket = init_bracket(field)
    for _ in range(8):
        bracket = record_choice(bracket, "right")
    task9 = bracket.pending
    assert (task9.left, task9.right) == (field[1], field[3])


def test_bracket_field_must_be_power_of_two_and_distinct():
    with pytest.raises(DesignError):
        init_bracket(_field16()[:6])
    with pytest.raises(DesignError):
        init_bracket(_field16()[:1])
    dup = _field16()
    dup[3] = dup[0]
    with pytest.raises(DesignError):
        init_bracket(dup)


def test_record_choice_validation():
    bracket = init_bracket(_field16())
    with pytest.raises(DesignError):
        record_choice(bracket, "middle")
    done = run_tournament(_field16(), lambda t: "right")
    with pytest.raises(DesignError):
        record_choice(done, "left")
    with pytest.raises(DesignError):
        init_bracket(_field16()[:2]).champion  # incomplete


def test_replay_reproduces_the_bracket():
    field = _field16()
    rng = random.Random(11)
    bracket = run_tournament(field, lambda t: rng.choice(["left", "right"]))
    record = RespondentRecord(
        id="x",
        population_tag="t",
        byo=field[0],
        field=bracket.field,
        winners=bracket.winners,
    )
    again = replay(record)
    assert again == bracket
    assert again.champion == bracket.champion
    assert again.tasks == bracket.tasks


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_any_choice_sequence_gives_15_tasks_and_a_field_champion(seed):
    rng = random.Random(seed)
    field = _field16()
    bracket = run_tournament(field, lambda t: rng.choice(["left", "right"]))
    assert bracket.complete
    assert len(bracket.winners) == 15
    assert bracket.champion in field
    # the champion won every task it appeared in
    for task in bracket.tasks:
        assert task.losing_profile != bracket.champion


def test_pending_is_none_when_complete():
    done = run_tournament(_field16(), lambda t: "left")
    assert done.pending is None
    assert Bracket(field=tuple(_field16())).pending is not None
