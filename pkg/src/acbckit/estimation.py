"""Population frequency estimation from a small sample with known N.

The sample counts S = (n_1..n_m) are modeled as a multivariate
hypergeometric draw from an unknown population P = (N_1..N_m) with
Σ N_i = N. Two estimators are provided: the greedy factor-table maximum
likelihood estimate, and the estimator minimizing the weighted mean
absolute error over the full admissible ensemble.

All ensemble weights are exact integers (the shared denominator C(N, n)
cancels), so ties and comparisons are decided exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from acbckit.model import DesignError, PopulationEstimate

ENSEMBLE_CAP = 10_000_000


def _basic_sample(S: Sequence[int], N: int) -> tuple[tuple[int, ...], int]:
    counts = tuple(int(v) for v in S)
    if any(c < 0 for c in counts):
        raise DesignError("sample counts must be non-negative")
    if len(counts) < 1:
        raise DesignError("sample must have at least one level")
    n = sum(counts)
    if n > N:
        raise DesignError(f"sample total {n} exceeds population size {N}")
    return counts, n


def _check_sample(S: Sequence[int], N: int) -> tuple[tuple[int, ...], int]:
    counts, n = _basic_sample(S, N)
    # a one-level sample forces the whole population; nothing to estimate
    if len(counts) < 2:
        raise DesignError("estimation needs at least two levels")
    return counts, n


@dataclass(frozen=True)
class FactorTable:
    """Probability factors f_ij = 1 + n_i/j for i = 1..m, j = 1..N-n.

    The running product down column i equals C(n_i + x, n_i), so choosing
    the N-n largest factors maximizes the sample's likelihood.
    """

    counts: tuple[int, ...]
    N: int

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def m(self) -> int:
        return len(self.counts)

    @property
    def rows(self) -> int:
        return self.N - self.n

    def factor(self, level: int, j: int) -> Fraction:
        if not 0 <= level < self.m:
            raise DesignError(f"level index {level} out of range 0..{self.m - 1}")
        if not 1 <= j <= self.rows:
            raise DesignError(f"row index {j} out of range 1..{self.rows}")
        return 1 + Fraction(self.counts[level], j)

    def column(self, level: int) -> tuple[Fraction, ...]:
        return tuple(self.factor(level, j) for j in range(1, self.rows + 1))


def factor_table(S: Sequence[int], N: int) -> FactorTable:
    counts, _ = _basic_sample(S, N)
    return FactorTable(counts=counts, N=N)


def sample_probability(P: Sequence[int], S: Sequence[int]) -> Fraction:
    """Exact hypergeometric probability of drawing S from P: Π C(N_i,n_i) / C(N,n).

    Zero when the population cannot have produced the sample, i.e. some
    level has fewer members than were observed.
    """
    pop = tuple(int(v) for v in P)
    counts = tuple(int(v) for v in S)
    if len(pop) != len(counts):
        raise DesignError("population and sample must have the same number of levels")
    if any(p < 0 for p in pop) or sum(pop) < sum(counts):
        raise DesignError(f"invalid population {pop!r} for sample {counts!r}")
    num = math.prod(math.comb(p, c) for p, c in zip(pop, counts))
    return Fraction(num, math.comb(sum(pop), sum(counts)))


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All ways to split ``total`` into ``parts`` non-negative integers,
    lexicographically ascending."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


@dataclass(frozen=True)
class AdmissibleEnsemble:
    """Every population dominating the sample and summing to N, with its
    (unnormalized, exact-integer) probability of producing the sample.

    IDs are 1-based positions in the lexicographic enumeration of the
    population vectors, which is a stable public ordering.
    """

    S: tuple[int, ...]
    N: int
    populations: tuple[tuple[int, ...], ...]
    weights: tuple[int, ...]

    @property
    def n(self) -> int:
        return sum(self.S)

    @property
    def size(self) -> int:
        return len(self.populations)

    @property
    def total_weight(self) -> int:
        return sum(self.weights)

    def id_of(self, population: Sequence[int]) -> int:
        return self.populations.index(tuple(population)) + 1

    def normalized_weight(self, member_id: int) -> Fraction:
        return Fraction(self.weights[member_id - 1], self.total_weight)


def ensemble_size(S: Sequence[int], N: int) -> int:
    counts, n = _check_sample(S, N)
    return math.comb(N - n + len(counts) - 1, len(counts) - 1)


def admissible_populations(
    S: Sequence[int], N: int, cap: int = ENSEMBLE_CAP
) -> AdmissibleEnsemble:
    counts, n = _check_sample(S, N)
    m = len(counts)
    size = math.comb(N - n + m - 1, m - 1)
    if size > cap:
        raise DesignError(
            f"admissible ensemble has {size} members, above the cap of {cap}"
        )
    populations = []
    weights = []
    for x in _compositions(N - n, m):
        pop = tuple(c + extra for c, extra in zip(counts, x))
        populations.append(pop)
        weights.append(math.prod(math.comb(p, c) for p, c in zip(pop, counts)))
    return AdmissibleEnsemble(
        S=counts, N=N, populations=tuple(populations), weights=tuple(weights)
    )


def mle_estimate(S: Sequence[int], N: int) -> PopulationEstimate:
    """Greedy maximum likelihood: hand the N-n units to the largest factors.

    Factors within a column strictly decrease, so the greedy selection is
    optimal; a tie between the last unit taken and the best unit left (in
    different columns) makes the maximizer non-unique and is flagged.
    Levels unseen in the sample keep factor 1 and never receive a unit.
    """
    counts, n = _check_sample(S, N)
    m = len(counts)
    x = [0] * m
    # next factor for column i is 1 + counts[i]/(x[i]+1); compare a/j vs b/k as a*k vs b*j
    last_taken: Optional[tuple[int, int]] = None  # (numerator, denominator) of final pick
    tie = False
    for _ in range(N - n):
        best = None
        best_i = -1
        for i in range(m):
            cand = (counts[i], x[i] + 1)
            if best is None or cand[0] * best[1] > best[0] * cand[1]:
                best = cand
                best_i = i
        assert best is not None
        x[best_i] += 1
        last_taken = best
    if last_taken is not None:
        for i in range(m):
            cand = (counts[i], x[i] + 1)
            if cand[0] * last_taken[1] == last_taken[0] * cand[1]:
                tie = True
                break
    estimate = tuple(c + extra for c, extra in zip(counts, x))
    wmae_value = None
    if math.comb(N - n + m - 1, m - 1) <= ENSEMBLE_CAP:
        wmae_value = wmae(estimate, admissible_populations(counts, N))
    return PopulationEstimate(
        counts=estimate, N=N, method="MLE", wmae=wmae_value, non_unique=tie
    )


def mean_absolute_error(P: Sequence[int], P_hat: Sequence[int]) -> Fraction:
    a = tuple(int(v) for v in P)
    b = tuple(int(v) for v in P_hat)
    if len(a) != len(b):
        raise DesignError("vectors must have the same number of levels")
    return Fraction(sum(abs(x - y) for x, y in zip(a, b)), len(a))


def mae_bound(S: Sequence[int], N: int) -> Fraction:
    """Upper bound (2/m)(N - n) on the error between admissible vectors."""
    counts, n = _check_sample(S, N)
    return Fraction(2 * (N - n), len(counts))


def wmae(P_hat: Sequence[int], ensemble: AdmissibleEnsemble) -> Fraction:
    """Probability-weighted mean absolute error of P_hat over the ensemble."""
    target = tuple(int(v) for v in P_hat)
    if len(target) != len(ensemble.S):
        raise DesignError("estimate and ensemble level counts differ")
    total = ensemble.total_weight
    acc = 0
    for pop, w in zip(ensemble.populations, ensemble.weights):
        acc += w * sum(abs(p - t) for p, t in zip(pop, target))
    return Fraction(acc, total * len(target))


def _marginal_deviation_tables(ensemble: AdmissibleEnsemble) -> list[dict[int, int]]:
    """Per component i, g_i(v) = Σ_k w_k |P_k,i - v| for every value v that
    component takes, via prefix sums over the marginal weight histogram."""
    m = len(ensemble.S)
    n = ensemble.n
    spread = ensemble.N - n
    tables: list[dict[int, int]] = []
    for i in range(m):
        lo = ensemble.S[i]
        hist = [0] * (spread + 1)
        for pop, w in zip(ensemble.populations, ensemble.weights):
            hist[pop[i] - lo] += w
        g = {}
        below_w = below_s = 0  # weight and weighted sum of values < v
        above_w = sum(hist)
        above_s = sum(idx * h for idx, h in enumerate(hist))
        for off in range(spread + 1):
            here = hist[off]
            above_w -= here
            above_s -= off * here
            g[lo + off] = (off * below_w - below_s) + (above_s - off * above_w)
            below_w += here
            below_s += off * here
        tables.append(g)
    return tables


def wmae_curve(ensemble: AdmissibleEnsemble) -> tuple[Fraction, ...]:
    """Ē(P_k) for every admissible population in enumeration order; the
    argmin of this curve is the minimize_wmae estimate."""
    tables = _marginal_deviation_tables(ensemble)
    denom = ensemble.total_weight * len(ensemble.S)
    return tuple(
        Fraction(sum(table[v] for table, v in zip(tables, pop)), denom)
        for pop in ensemble.populations
    )


def minimize_wmae(
    S: Sequence[int], N: int, cap: int = ENSEMBLE_CAP
) -> PopulationEstimate:
    """Exhaustive argmin of the weighted mean absolute error over the
    admissible ensemble; ties resolve to the lowest enumeration ID and are
    flagged. Uses exact per-component deviation tables so each candidate
    costs O(m)."""
    ensemble = admissible_populations(S, N, cap=cap)
    tables = _marginal_deviation_tables(ensemble)
    best_num = None
    best_pop = None
    tie = False
    for pop in ensemble.populations:
        num = sum(table[v] for table, v in zip(tables, pop))
        if best_num is None or num < best_num:
            best_num, best_pop, tie = num, pop, False
        elif num == best_num:
            tie = True
    assert best_pop is not None and best_num is not None
    value = Fraction(best_num, ensemble.total_weight * len(ensemble.S))
    return PopulationEstimate(
        counts=best_pop, N=N, method="WMAE-min", wmae=value, non_unique=tie
    )


def round_half_away(x: Fraction, places: int = 2) -> Fraction:
    """Round to ``places`` decimals, halves away from zero, exactly."""
    scale = 10 ** places
    scaled = x * scale
    if scaled >= 0:
        q = (2 * scaled.numerator + scaled.denominator) // (2 * scaled.denominator)
    else:
        q = -((-2 * scaled.numerator + scaled.denominator) // (2 * scaled.denominator))
    return Fraction(q, scale)


@dataclass(frozen=True)
class ProportionReport:
    """Estimated population proportions with a symmetric error band."""

    S: tuple[int, ...]
    N: int
    estimate: PopulationEstimate
    proportions: tuple[Fraction, ...]  # rounded to 2 decimals
    error: Fraction  # rounded to 2 decimals
    exact_proportions: tuple[Fraction, ...]
    exact_error: Fraction


def population_proportions(S: Sequence[int], N: int) -> ProportionReport:
    """Report N-hat/N for the WMAE-minimizing estimator with an error band
    of its WMAE divided by N, both rounded to two decimals."""
    counts, _ = _check_sample(S, N)
    est = minimize_wmae(counts, N)
    exact_props = tuple(Fraction(c, N) for c in est.counts)
    exact_err = est.wmae / N
    return ProportionReport(
        S=counts,
        N=N,
        estimate=est,
        proportions=tuple(round_half_away(p) for p in exact_props),
        error=round_half_away(exact_err),
        exact_proportions=exact_props,
        exact_error=exact_err,
    )
