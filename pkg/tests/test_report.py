from fractions import Fraction

import pytest

from acbckit.model import DesignError, default_design
from acbckit.records import write_records
from acbckit.report import build_report, run_report, write_report
from acbckit.model import save_design

from fixture_study import (
    FBO_MT,
    INCONSISTENT_ID,
    NFBO_MT,
    build_study_records,
)

POP_SIZES = {"FBO": 49, "NFBO": 12}

# printed two-decimal proportion blocks the estimation pipeline reproduces
FBO_PROPS = [
    ((0.04, 0.45, 0.51), 0.07),
    ((0.04, 0.80, 0.16), 0.06),
    ((0.45, 0.51, 0.04), 0.07),
    ((0.04, 0.86, 0.10), 0.05),
]
NFBO_PROPS = [
    ((0.17, 0.33, 0.50), 0.09),
    ((0.50, 0.33, 0.17), 0.09),
    ((0.75, 0.17, 0.08), 0.08),
    ((0.33, 0.50, 0.17), 0.09),
]


@pytest.fixture(scope="module")
def study_report():
    design = default_design()
    return build_report(design, build_study_records(design), POP_SIZES)


def test_population_order_follows_first_appearance(study_report):
    assert [p.tag for p in study_report.populations] == ["FBO", "NFBO"]
    assert study_report.population("FBO").N == 49
    with pytest.raises(KeyError):
        study_report.population("ghost")


def test_typical_level_tallies(study_report):
    fbo = study_report.population("FBO")
    nfbo = study_report.population("NFBO")
    assert tuple(tuple(int(c) for c in d.counts) for d in fbo.mt) == FBO_MT
    assert tuple(tuple(int(c) for c in d.counts) for d in nfbo.mt) == NFBO_MT


def test_one_respondent_dropped_from_ranking_block(study_report):
    fbo = study_report.population("FBO")
    assert fbo.n_recruited == 13
    assert fbo.n_retained == 12
    assert fbo.paprika.removed == (INCONSISTENT_ID,)
    nfbo = study_report.population("NFBO")
    assert nfbo.n_recruited == nfbo.n_retained == 6
    assert nfbo.paprika.removed == ()


def test_block_sums_match_population_sizes(study_report):
    for pop in study_report.populations:
        for dist in pop.mt:
            assert sum(dist.counts) == pop.n_recruited
        for dist in pop.partworth_mi:
            assert sum(dist.counts) == pop.n_recruited
        for dist in pop.paprika.distributions:
            assert sum(dist.counts) == pop.n_retained
        for cases in pop.paprika.rounding:
            for case in cases:
                assert sum(case.counts) == pop.n_retained


def test_proportion_rows(study_report):
    for pop, goldens in (
        (study_report.population("FBO"), FBO_PROPS),
        (study_report.population("NFBO"), NFBO_PROPS),
    ):
        for prop, (values, err) in zip(pop.proportions, goldens):
            assert tuple(float(p) for p in prop.proportions) == pytest.approx(
                values, abs=1e-9
            )
            assert float(prop.error) == pytest.approx(err, abs=1e-9)
            assert sum(prop.proportions) == pytest.approx(1.0, abs=0.011)


def test_fixture_respondents_rank_first_levels_top(study_report):
    # consistent respondents are strict first-level maximizers, so every
    # ranking-method block concentrates its credit on level 0
    for pop in study_report.populations:
        for dist in pop.paprika.distributions:
            assert dist.counts[0] == max(dist.counts)


def test_unknown_tag_requires_size(design):
    records = build_study_records(design)
    with pytest.raises(DesignError, match="NFBO"):
        build_report(design, records, {"FBO": 49})


def test_empty_records_rejected(design):
    with pytest.raises(DesignError):
        build_report(design, [], POP_SIZES)


def test_write_report_files(study_report, tmp_path):
    paths = write_report(study_report, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == [
        "section_a.csv",
        "section_a.txt",
        "section_b.csv",
        "section_b.txt",
        "section_c.csv",
        "section_c.txt",
        "summary.txt",
    ]
    a_csv = (tmp_path / "section_a.csv").read_text().splitlines()
    assert a_csv[0] == "population,attribute,level,byo_mt,partworth_mi"
    # 2 populations x 4 attributes x 3 levels
    assert len(a_csv) == 1 + 24
    c_csv = (tmp_path / "section_c.csv").read_text().splitlines()
    fbo_rows = [r for r in c_csv if r.startswith("FBO,")]
    assert fbo_rows[0].endswith("0.04,0.07")
    summary = (tmp_path / "summary.txt").read_text()
    assert "FBO" in summary and "NFBO" in summary
    assert INCONSISTENT_ID in (tmp_path / "section_b.txt").read_text()


def test_write_report_is_deterministic(study_report, tmp_path):
    first = tmp_path / "one"
    second = tmp_path / "two"
    write_report(study_report, first)
    write_report(study_report, second)
    for path in sorted(first.iterdir()):
        assert path.read_bytes() == (second / path.name).read_bytes()


def test_run_report_end_to_end(design, tmp_path):
    design_file = tmp_path / "design.json"
    records_file = tmp_path / "records.jsonl"
    save_design(design, design_file)
    write_records(records_file, build_study_records(design))
    outdir = tmp_path / "out"
    report, paths = run_report(design_file, records_file, POP_SIZES, outdir)
    assert [p.tag for p in report.populations] == ["FBO", "NFBO"]
    assert all(p.exists() for p in paths)
    report_text = (outdir / "section_c.txt").read_text()
    assert "0.86" in report_text
