"""Study-level reporting: tally build-your-own answers, compile most-ideal
level distributions by two methods, and estimate population-wide proportions
of the typical levels.

Outputs are deterministic functions of the input records, so reruns are
byte-identical; each section is written as a text table and a CSV.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence, Union

from acbckit.engine import replay
from acbckit.estimation import (
    ProportionReport,
    population_proportions,
    round_half_away,
)
from acbckit.model import (
    DesignError,
    FrequencyDistribution,
    RespondentRecord,
    SurveyDesign,
    load_design,
)
from acbckit.paprika import (
    CompiledDistribution,
    InconsistentRespondentError,
    compile_mi_distribution,
    constraint_from_choice,
    feasible_set,
    mi_counts,
)
from acbckit.partworth import estimate_partworths, mi_from_partworths
from acbckit.records import read_records


@dataclass(frozen=True)
class PopulationReport:
    """All report blocks for one population tag."""

    tag: str
    N: int
    n_recruited: int
    n_retained: int
    mt: tuple[FrequencyDistribution, ...]
    partworth_mi: tuple[FrequencyDistribution, ...]
    partworth_notes: tuple[str, ...]
    paprika: CompiledDistribution
    proportions: tuple[ProportionReport, ...]


@dataclass(frozen=True)
class StudyReport:
    design: SurveyDesign
    populations: tuple[PopulationReport, ...]

    def population(self, tag: str) -> PopulationReport:
        for pop in self.populations:
            if pop.tag == tag:
                return pop
        raise KeyError(tag)


def build_report(
    design: SurveyDesign,
    records: Sequence[RespondentRecord],
    population_sizes: Mapping[str, int],
    linear: bool = False,
) -> StudyReport:
    """Full pipeline over validated records.

    Typical-level tallies and part-worth fits cover every respondent;
    the ranking-based block drops respondents whose choices admit no
    feasible ranking and says so in the removal log. Proportions are
    estimated from the typical-level tallies.
    """
    if not records:
        raise DesignError("no respondent records to report on")
    tags: list[str] = []
    grouped: dict[str, list[RespondentRecord]] = {}
    for record in records:
        if record.population_tag not in grouped:
            tags.append(record.population_tag)
            grouped[record.population_tag] = []
        grouped[record.population_tag].append(record)
    populations = []
    for tag in tags:
        size = population_sizes.get(tag)
        if size is None:
            raise DesignError(f"no population size supplied for tag {tag!r}")
        populations.append(
            _population_report(design, tag, grouped[tag], size, linear)
        )
    return StudyReport(design=design, populations=tuple(populations))


def _population_report(
    design: SurveyDesign,
    tag: str,
    records: Sequence[RespondentRecord],
    N: int,
    linear: bool,
) -> PopulationReport:
    mt_counts = [[0] * lc for lc in design.level_counts]
    pw_counts = [[0] * lc for lc in design.level_counts]
    pw_notes: list[str] = []
    credits = []
    removed: list[str] = []
    for record in records:
        for a, lev in enumerate(record.byo.levels):
            mt_counts[a][lev] += 1
        tasks = replay(record).tasks
        mi = mi_from_partworths(estimate_partworths(design, tasks))
        for a, lev in enumerate(mi.levels):
            pw_counts[a][lev] += 1
            if mi.tied[a]:
                pw_notes.append(
                    f"{record.id}: tied utility maximum in "
                    f"{design.attributes[a].label}, lowest level reported"
                )
        constraints = [constraint_from_choice(t) for t in tasks]
        frs = feasible_set(design, constraints, linear=linear)
        try:
            credits.append(mi_counts(frs))
        except InconsistentRespondentError:
            removed.append(record.id)
    compiled = compile_mi_distribution(credits, design, removed_ids=removed)
    mt = tuple(
        FrequencyDistribution(
            attribute=a, counts=tuple(Fraction(c) for c in row), kind="MT"
        )
        for a, row in enumerate(mt_counts)
    )
    pw = tuple(
        FrequencyDistribution(
            attribute=a, counts=tuple(Fraction(c) for c in row), kind="MI-partworth"
        )
        for a, row in enumerate(pw_counts)
    )
    proportions = tuple(
        population_proportions(row, N) for row in mt_counts
    )
    return PopulationReport(
        tag=tag,
        N=N,
        n_recruited=len(records),
        n_retained=compiled.effective_n,
        mt=mt,
        partworth_mi=pw,
        partworth_notes=tuple(pw_notes),
        paprika=compiled,
        proportions=proportions,
    )


def _decimal(x: Fraction, places: int = 2) -> str:
    """Exact fixed-point rendering of a fraction already rounded to
    ``places`` decimals."""
    scaled = x * 10**places
    if scaled.denominator != 1:
        raise ValueError(f"{x} is not a {places}-decimal value")
    q = int(scaled)
    sign = "-" if q < 0 else ""
    q = abs(q)
    return f"{sign}{q // 10**places}.{q % 10**places:0{places}d}"


def _count_str(x: Fraction) -> str:
    if x.denominator == 1:
        return str(int(x))
    if x.denominator == 2:
        return f"{x.numerator // 2}.5" if x >= 0 else f"-{-x.numerator // 2}.5"
    return f"{x.numerator}/{x.denominator}"


def write_report(report: StudyReport, outdir: Union[str, Path]) -> list[Path]:
    """One text table and one CSV per section, plus a summary; returns the
    paths written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text, csv in (
        ("section_a", *_section_a(report)),
        ("section_b", *_section_b(report)),
        ("section_c", *_section_c(report)),
    ):
        txt_path = outdir / f"{name}.txt"
        csv_path = outdir / f"{name}.csv"
        txt_path.write_text(text, encoding="utf-8")
        csv_path.write_text(csv, encoding="utf-8")
        written.extend([txt_path, csv_path])
    summary = outdir / "summary.txt"
    summary.write_text(_summary(report), encoding="utf-8")
    written.append(summary)
    return written


def _rows(design: SurveyDesign):
    for a, attr in enumerate(design.attributes):
        for lev, label in enumerate(attr.levels):
            yield a, lev, attr.label, label


def _section_a(report: StudyReport) -> tuple[str, str]:
    text = ["Typical (build-your-own) vs part-worth most-ideal counts", ""]
    csv = ["population,attribute,level,byo_mt,partworth_mi"]
    for pop in report.populations:
        text.append(f"Population {pop.tag}  (n={pop.n_recruited}, N={pop.N})")
        text.append(f"  {'Attribute':<22}{'Level':<16}{'BYO MT':>8}{'PW MI':>8}")
        for a, lev, attr, label in _rows(report.design):
            mt = _count_str(pop.mt[a].counts[lev])
            pw = _count_str(pop.partworth_mi[a].counts[lev])
            text.append(f"  {attr:<22}{label:<16}{mt:>8}{pw:>8}")
            csv.append(f"{pop.tag},{attr},{label},{mt},{pw}")
        text.append("")
    return "\n".join(text) + "\n", "\n".join(csv) + "\n"


def _section_b(report: StudyReport) -> tuple[str, str]:
    text = ["Most-ideal counts: part-worth vs feasible-ranking method", ""]
    csv = [
        "population,attribute,level,partworth_mi,ranking_mi,"
        "rounded_case_1,rounded_case_2"
    ]
    for pop in report.populations:
        text.append(
            f"Population {pop.tag}  (part-worth n={pop.n_recruited}, "
            f"ranking n={pop.n_retained})"
        )
        text.append(f"  {'Attribute':<22}{'Level':<16}{'PW MI':>8}{'Rank MI':>9}")
        for a, lev, attr, label in _rows(report.design):
            pw = _count_str(pop.partworth_mi[a].counts[lev])
            pk = _count_str(pop.paprika.distributions[a].counts[lev])
            cases = pop.paprika.rounding[a]
            c1 = str(cases[0].counts[lev])
            c2 = str(cases[1].counts[lev]) if len(cases) > 1 else ""
            text.append(f"  {attr:<22}{label:<16}{pw:>8}{pk:>9}")
            csv.append(f"{pop.tag},{attr},{label},{pw},{pk},{c1},{c2}")
        for a, attr in enumerate(report.design.attributes):
            for case in pop.paprika.rounding[a]:
                if case.note != "exact":
                    text.append(
                        f"  note: {attr.label} rounded "
                        f"({case.note}) -> {case.counts}"
                    )
        if pop.paprika.removed:
            for rid in pop.paprika.removed:
                text.append(
                    f"  removed: {rid} (no feasible ranking; "
                    f"n reduced to {pop.n_retained})"
                )
        else:
            text.append("  removed: none")
        for note in pop.partworth_notes:
            text.append(f"  note: {note}")
        text.append("")
    return "\n".join(text) + "\n", "\n".join(csv) + "\n"


def _section_c(report: StudyReport) -> tuple[str, str]:
    text = ["Typical-level proportions: sample vs estimated population", ""]
    csv = ["population,attribute,level,sample_mt,population_mt,error"]
    for pop in report.populations:
        text.append(f"Population {pop.tag}  (n={pop.n_recruited}, N={pop.N})")
        text.append(
            f"  {'Attribute':<22}{'Level':<16}{'Sample':>8}{'Estimate':>10}{'+/-':>6}"
        )
        for a, lev, attr, label in _rows(report.design):
            prop = pop.proportions[a]
            sample = _decimal(
                round_sample(pop.mt[a].counts[lev], pop.n_recruited)
            )
            est = _decimal(prop.proportions[lev])
            err = _decimal(prop.error)
            text.append(f"  {attr:<22}{label:<16}{sample:>8}{est:>10}{err:>6}")
            csv.append(f"{pop.tag},{attr},{label},{sample},{est},{err}")
        text.append("")
    return "\n".join(text) + "\n", "\n".join(csv) + "\n"


def round_sample(count: Fraction, n: int) -> Fraction:
    return round_half_away(Fraction(count, n))


def _summary(report: StudyReport) -> str:
    lines = ["Study report", ""]
    for pop in report.populations:
        lines.append(
            f"{pop.tag}: {pop.n_recruited} respondents recruited, "
            f"{pop.n_retained} retained, population size {pop.N}"
        )
        for rid in pop.paprika.removed:
            lines.append(f"  removed {rid}: choices admit no feasible ranking")
    lines.append("")
    return "\n".join(lines) + "\n"


def run_report(
    design_file: Union[str, Path],
    records_file: Union[str, Path],
    population_sizes: Mapping[str, int],
    output_dir: Union[str, Path],
    linear: bool = False,
) -> tuple[StudyReport, list[Path]]:
    design = load_design(design_file)
    records = read_records(records_file, design)
    report = build_report(design, records, population_sizes, linear=linear)
    return report, write_report(report, output_dir)
