"""Per-respondent part-worth utilities from binary tournament choices.

A penalized pairwise-logit maximum likelihood stands in for the usual
hierarchical Bayes fit: each answered task is a Bernoulli observation whose
log-odds equal the utility difference between the two profiles. Fits are
independent per respondent; there is no pooling.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from acbckit.model import ChoiceTask, DesignError, Profile, SurveyDesign

GRADIENT_TOL = 1e-8
ITERATION_CAP = 500


class ConvergenceError(RuntimeError):
    """Raised when Newton iteration hits the cap; carries the last iterate."""

    def __init__(self, last: "PartworthVector", gradient_norm: float):
        super().__init__(
            f"no convergence after {ITERATION_CAP} iterations "
            f"(gradient norm {gradient_norm:.3e})"
        )
        self.last = last
        self.gradient_norm = gradient_norm


@dataclass(frozen=True)
class PartworthVector:
    """One utility per level, effects-coded: each attribute's utilities sum
    to zero (within 1e-9)."""

    utilities: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "utilities", tuple(tuple(float(v) for v in u) for u in self.utilities)
        )
        for a, u in enumerate(self.utilities):
            if abs(sum(u)) > 1e-9:
                raise DesignError(
                    f"attribute {a} utilities sum to {sum(u)!r}, expected 0"
                )

    def total(self, profile: Profile) -> float:
        return sum(u[lev] for u, lev in zip(self.utilities, profile.levels))


@dataclass(frozen=True)
class MostIdealLevels:
    """Argmax level per attribute; `tied` marks attributes whose maximum was
    shared and resolved to the lowest level index."""

    levels: tuple[int, ...]
    tied: tuple[bool, ...]

    @property
    def any_tied(self) -> bool:
        return any(self.tied)


def _design_offsets(design: SurveyDesign) -> tuple[list[int], int]:
    offsets, pos = [], 0
    for lc in design.level_counts:
        offsets.append(pos)
        pos += lc
    return offsets, pos


def _contrast_rows(
    design: SurveyDesign, tasks: Sequence[ChoiceTask]
) -> np.ndarray:
    """Signed indicator matrix: +1 at winner levels, -1 at loser levels,
    rows summing to 0 per attribute (shared levels cancel)."""
    offsets, width = _design_offsets(design)
    rows = np.zeros((len(tasks), width))
    for t, task in enumerate(tasks):
        if task.winner is None:
            raise DesignError("every task must have a recorded winner")
        win, lose = task.winning_profile, task.losing_profile
        design.check_profile(win)
        design.check_profile(lose)
        for a, off in enumerate(offsets):
            rows[t, off + win.levels[a]] += 1.0
            rows[t, off + lose.levels[a]] -= 1.0
    return rows


def _basis(design: SurveyDesign) -> np.ndarray:
    """Maps free coordinates (all but the last level of each attribute) to
    the full sum-zero utility vector."""
    offsets, width = _design_offsets(design)
    free = sum(lc - 1 for lc in design.level_counts)
    basis = np.zeros((width, free))
    col = 0
    for off, lc in zip(offsets, design.level_counts):
        for i in range(lc - 1):
            basis[off + i, col] = 1.0
            basis[off + lc - 1, col] = -1.0
            col += 1
    return basis


def estimate_partworths(
    design: SurveyDesign,
    tasks: Sequence[ChoiceTask],
    ridge: float = 0.1,
) -> PartworthVector:
    """Damped-Newton maximizer of the ridge-penalized choice likelihood.

    The penalty applies to the full utility vector, so levels that never
    appear in any contrast are pulled to 0. Deterministic for given data
    and ridge. Raises ConvergenceError carrying the last iterate if the
    gradient norm is still above 1e-8 after 500 iterations.
    """
    if not tasks:
        raise DesignError("at least one answered task is required")
    if ridge < 0:
        raise DesignError("ridge must be non-negative")
    contrasts = _contrast_rows(design, tasks)
    basis = _basis(design)
    reduced = contrasts @ basis

    def objective(theta: np.ndarray) -> float:
        full = basis @ theta
        margins = reduced @ theta
        return float(
            np.logaddexp(0.0, -margins).sum() + 0.5 * ridge * full @ full
        )

    def grad_hess(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        margins = reduced @ theta
        p_lose = expit(-margins)
        grad = -reduced.T @ p_lose + ridge * (basis.T @ (basis @ theta))
        weights = p_lose * expit(margins)
        hess = (reduced.T * weights) @ reduced + ridge * (basis.T @ basis)
        return grad, hess

    theta = np.zeros(basis.shape[1])
    value = objective(theta)
    for _ in range(ITERATION_CAP):
        grad, hess = grad_hess(theta)
        norm = float(np.linalg.norm(grad))
        if norm < GRADIENT_TOL:
            return _vector_from_theta(design, basis, theta)
        step = np.linalg.solve(hess, -grad)
        slope = float(grad @ step)
        if abs(slope) < 1e-12 * max(1.0, abs(value)):
            # the predicted decrease is below float resolution, so the
            # backtracking test cannot discriminate; the problem is strongly
            # convex, take the plain Newton step
            theta = theta + step
            value = objective(theta)
            continue
        scale = 1.0
        while scale > 2**-40:
            trial = theta + scale * step
            trial_value = objective(trial)
            if trial_value <= value + 1e-4 * scale * slope:
                break
            scale /= 2.0
        theta = theta + scale * step
        value = objective(theta)
    grad, _ = grad_hess(theta)
    raise ConvergenceError(
        _vector_from_theta(design, basis, theta), float(np.linalg.norm(grad))
    )


def _vector_from_theta(
    design: SurveyDesign, basis: np.ndarray, theta: np.ndarray
) -> PartworthVector:
    full = basis @ theta
    rows, pos = [], 0
    for lc in design.level_counts:
        seg = full[pos : pos + lc]
        # re-center to absorb float drift before the sum-zero check
        rows.append(tuple(float(v) for v in seg - seg.mean()))
        pos += lc
    return PartworthVector(utilities=tuple(rows))


def gradient(
    design: SurveyDesign,
    tasks: Sequence[ChoiceTask],
    pw: PartworthVector,
    ridge: float = 0.1,
) -> np.ndarray:
    """Objective gradient in the free coordinates at a given utility vector;
    exposed for finite-difference checks."""
    contrasts = _contrast_rows(design, tasks)
    basis = _basis(design)
    full = np.concatenate([np.asarray(u) for u in pw.utilities])
    theta = np.concatenate(
        [np.asarray(u[:-1]) for u in pw.utilities]
    )
    margins = (contrasts @ basis) @ theta
    return -(contrasts @ basis).T @ expit(-margins) + ridge * (basis.T @ full)


def mi_from_partworths(pw: PartworthVector) -> MostIdealLevels:
    """Highest-utility level per attribute; exact float ties resolve to the
    lowest level index and set that attribute's tie flag."""
    levels, tied = [], []
    for u in pw.utilities:
        best = max(u)
        winners = [i for i, v in enumerate(u) if v == best]
        levels.append(winners[0])
        tied.append(len(winners) > 1)
    return MostIdealLevels(levels=tuple(levels), tied=tuple(tied))


def hit_rate(pw: PartworthVector, tasks: Sequence[ChoiceTask]) -> float:
    """In-sample share of tasks whose higher-utility profile is the recorded
    winner; exact utility ties score one half."""
    if not tasks:
        raise DesignError("at least one task is required")
    score = 0.0
    for task in tasks:
        if task.winner is None:
            raise DesignError("every task must have a recorded winner")
        diff = pw.total(task.winning_profile) - pw.total(task.losing_profile)
        if diff > 0:
            score += 1.0
        elif diff == 0:
            score += 0.5
    return score / len(tasks)
