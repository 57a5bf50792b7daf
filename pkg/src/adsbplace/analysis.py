"""Post-hoc evaluation of placements: coverage grids, GDOP threshold
distributions, jammer-impact reports and Pareto-front summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .evaluator import Diagnostics, PlacementEvaluator
from .nsga2 import Chromosome, ParetoFront
from .objectives import ObjectiveScores, RunningBounds, of3_combined
from .scenario import PlacementProblem


class NoFeasibleSolutionError(ValueError):
    pass


@dataclass
class CoverageGrid:
    """Per-point coverage diagnostics on the evaluation grid."""

    lat_deg: np.ndarray
    lon_deg: np.ndarray
    alt_m: np.ndarray
    k_visible: np.ndarray
    best_gdop: np.ndarray
    second_range_km: np.ndarray


@dataclass
class JamReport:
    """Per-jammer impact of a placement."""

    jammer_lat: np.ndarray
    jammer_lon: np.ndarray
    jammer_alt: np.ndarray
    affected_count: np.ndarray
    min_distance_km: np.ndarray

    @property
    def max_affected(self) -> int:
        return int(self.affected_count.max()) if self.affected_count.size else 0

    @property
    def mean_affected(self) -> float:
        return float(self.affected_count.mean()) if self.affected_count.size else 0.0


@dataclass
class GdopDistribution:
    thresholds: np.ndarray
    fraction_above: np.ndarray


def evaluate_placement(
    problem: PlacementProblem,
    chromosome: Chromosome,
    of3_weights: Sequence[float] = (1 / 3, 1 / 3, 1 / 3),
    bounds: RunningBounds | None = None,
    gdop_subset_cap: int = 12,
) -> tuple[ObjectiveScores, CoverageGrid, JamReport]:
    """Score a placement and derive its diagnostic grids.

    Uses the same evaluator the optimizer runs, so the scores equal the
    GA-internal fitness for the same chromosome. ``bounds`` supplies the
    frozen normalization of an archived run; without it the combined
    anti-jamming score falls back to the raw weighted sum.
    """
    if chromosome.genes.size != problem.n_candidates:
        raise ValueError("chromosome length does not match the problem")
    evaluator = PlacementEvaluator(problem, gdop_subset_cap=gdop_subset_cap)
    raw, diag = evaluator.evaluate(chromosome.genes, diagnostics=True)
    if bounds is not None:
        d1n = bounds.normalize("d1", raw.d1)
        d2n = bounds.normalize("d2", raw.d2)
        d3n = bounds.normalize("d3", raw.d3)
        of3 = of3_combined(d1n, d2n, d3n, of3_weights)
        normalized = {
            "of1": bounds.normalize("of1", raw.of1),
            "of2": bounds.normalize("of2", raw.of2),
            "of3": bounds.normalize("of3", of3),
        }
    else:
        w = list(of3_weights)
        of3 = w[0] * raw.d1 + w[1] * raw.d2 + w[2] * raw.d3
        normalized = {}
    scores = ObjectiveScores(
        of1=raw.of1,
        of2=raw.of2,
        of3=of3,
        of3_components=(raw.d1, raw.d2, raw.d3),
        penalty=raw.penalty,
        normalized=normalized,
    )
    grid = problem.grid
    coverage = CoverageGrid(
        lat_deg=grid.lat_deg,
        lon_deg=grid.lon_deg,
        alt_m=grid.alt_m,
        k_visible=diag.k_visible,
        best_gdop=diag.best_gdop,
        second_range_km=diag.second_range_km,
    )
    report = _jam_report(problem, diag)
    return scores, coverage, report


def _jam_report(problem: PlacementProblem, diag: Diagnostics) -> JamReport:
    jams = problem.jammers
    return JamReport(
        jammer_lat=np.array([j.position.latitude_deg for j in jams]),
        jammer_lon=np.array([j.position.longitude_deg for j in jams]),
        jammer_alt=np.array([j.position.altitude_m for j in jams]),
        affected_count=diag.affected_per_jammer,
        min_distance_km=diag.min_jam_distance_km,
    )


def gdop_distribution(coverage: CoverageGrid, thresholds: Sequence[float]) -> GdopDistribution:
    """Fraction of grid points whose best GDOP exceeds each threshold.

    Points with unevaluable (infinite) GDOP exceed every threshold.
    """
    t = np.asarray(sorted(thresholds), dtype=float)
    gd = coverage.best_gdop
    fractions = np.array([float(np.mean(gd > thr)) for thr in t])
    return GdopDistribution(thresholds=t, fraction_above=fractions)


def fraction_gdop_above(coverage: CoverageGrid, threshold: float) -> float:
    return float(np.mean(coverage.best_gdop > threshold))


def pareto_summary(front: ParetoFront, of3_weights: Sequence[float] = (1 / 3, 1 / 3, 1 / 3)) -> list[dict]:
    """One row per archived solution with raw and normalized scores.

    The combined anti-jamming score is recomputed with the run's frozen
    normalization bounds so all rows are mutually comparable.
    """
    if not front.members:
        raise ValueError("empty pareto front")
    rows = []
    for sol_id, member in enumerate(front.members):
        raw = member.raw
        of3 = of3_combined(
            front.bounds.normalize("d1", raw.d1),
            front.bounds.normalize("d2", raw.d2),
            front.bounds.normalize("d3", raw.d3),
            of3_weights,
        )
        rows.append(
            {
                "solution_id": sol_id,
                "n_sensors": raw.n_selected,
                "n_forced": int(member.chromosome.forced_mask.sum()),
                "of1": raw.of1,
                "of2": raw.of2,
                "of3": of3,
                "of1_norm": front.bounds.normalize("of1", raw.of1),
                "of2_norm": front.bounds.normalize("of2", raw.of2),
                "of3_norm": front.bounds.normalize("of3", of3),
                "d1": raw.d1,
                "d2": raw.d2,
                "d3": raw.d3,
                "penalty": raw.penalty,
            }
        )
    return rows


def select_solution(
    front: ParetoFront,
    budget_cap: int | None = None,
    weights: Sequence[float] = (1 / 3, 1 / 3, 1 / 3),
    of3_weights: Sequence[float] = (1 / 3, 1 / 3, 1 / 3),
) -> int:
    """Pick the front member minimizing the weighted normalized score.

    Only members within the sensor budget qualify; ties break toward
    fewer sensors, then the lower solution id.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (3,) or np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError("preference weights must be non-negative and sum to 1")
    rows = pareto_summary(front, of3_weights)
    best: tuple | None = None
    for row in rows:
        if budget_cap is not None and row["n_sensors"] > budget_cap:
            continue
        score = (
            w[0] * row["of1_norm"] + w[1] * row["of2_norm"] + w[2] * row["of3_norm"]
        )
        cand = (score, row["n_sensors"], row["solution_id"])
        if best is None or cand < best:
            best = cand
    if best is None:
        raise NoFeasibleSolutionError("no front member satisfies the sensor budget")
    return best[2]
