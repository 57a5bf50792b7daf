"""Elitist non-dominated sorting genetic algorithm over binary
site-selection chromosomes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .evaluator import PlacementEvaluator, RawScores
from .objectives import InvalidConfigError, RunningBounds, of3_combined, weighted_fitness
from .scenario import PlacementProblem


@dataclass(frozen=True)
class Chromosome:
    """Binary selection vector over candidate sites."""

    genes: np.ndarray
    forced_mask: np.ndarray

    def __post_init__(self):
        genes = np.asarray(self.genes, dtype=bool)
        forced = np.asarray(self.forced_mask, dtype=bool)
        object.__setattr__(self, "genes", genes)
        object.__setattr__(self, "forced_mask", forced)
        if genes.shape != forced.shape:
            raise ValueError("genes and forced mask lengths differ")
        if not np.all(genes[forced]):
            raise ValueError("forced sites must always be selected")

    def key(self) -> bytes:
        return np.packbits(self.genes).tobytes()

    def popcount(self) -> int:
        return int(self.genes.sum())


@dataclass
class Individual:
    chromosome: Chromosome
    raw: RawScores
    objectives: np.ndarray  # 3 minimized values used for dominance
    rank: int = -1
    crowding: float = 0.0


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 100
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None: 1 / chromosome length
    tournament_size: int = 2
    rng_seed: int = 0
    n_max: int | None = None
    pareto_weight_a: float = 0.1
    gdop_subset_cap: int = 12

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise InvalidConfigError("population_size must be even and >= 4")
        if self.generations < 0:
            raise InvalidConfigError("generations must be >= 0")
        for name in ("crossover_rate", "pareto_weight_a"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidConfigError(f"{name} must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise InvalidConfigError("mutation_rate must lie in [0, 1]")
        if self.tournament_size < 1:
            raise InvalidConfigError("tournament_size must be >= 1")


@dataclass
class FrontMember:
    chromosome: Chromosome
    raw: RawScores
    objectives: np.ndarray


@dataclass
class ParetoFront:
    """Archive of non-dominated solutions plus run metadata."""

    members: list[FrontMember]
    seed: int
    bounds: RunningBounds
    config_hash: str = ""


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Pareto dominance for minimization."""
    if len(a) != len(b):
        raise ValueError("objective vectors differ in length")
    better = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            better = True
    return better


def non_dominated_sort(objectives: Sequence[Sequence[float]]) -> list[list[int]]:
    """Partition indices into successive non-dominated fronts."""
    n = len(objectives)
    if n == 0:
        raise ValueError("empty population")
    vecs = [np.asarray(o, dtype=float) for o in objectives]
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    dom_count = [0] * n
    for p in range(n):
        for q in range(p + 1, n):
            if dominates(vecs[p], vecs[q]):
                dominated_by[p].append(q)
                dom_count[q] += 1
            elif dominates(vecs[q], vecs[p]):
                dominated_by[q].append(p)
                dom_count[p] += 1
    fronts = [[i for i in range(n) if dom_count[i] == 0]]
    while True:
        nxt = []
        for p in fronts[-1]:
            for q in dominated_by[p]:
                dom_count[q] -= 1
                if dom_count[q] == 0:
                    nxt.append(q)
        if not nxt:
            return fronts
        fronts.append(sorted(nxt))


def crowding_distance(objectives: Sequence[Sequence[float]]) -> np.ndarray:
    """NSGA-II crowding distance within one front."""
    vecs = np.asarray(objectives, dtype=float)
    n = vecs.shape[0]
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = math.inf
        return dist
    for m in range(vecs.shape[1]):
        order = np.argsort(vecs[:, m], kind="stable")
        lo, hi = vecs[order[0], m], vecs[order[-1], m]
        dist[order[0]] = dist[order[-1]] = math.inf
        spread = hi - lo
        if spread <= 0 or not math.isfinite(spread):
            continue
        gaps = (vecs[order[2:], m] - vecs[order[:-2], m]) / spread
        for i, g in zip(order[1:-1], gaps):
            if math.isfinite(dist[i]):
                dist[i] += g
    return dist


def tournament_select(population: list[Individual], rng: np.random.Generator, k: int = 2) -> Individual:
    """Binary (or k-ary) tournament: lower rank, then higher crowding,
    then lower index for determinism."""
    idx = rng.integers(0, len(population), size=k)
    best = None
    for i in idx:
        i = int(i)
        cand = (population[i].rank, -population[i].crowding, i)
        if best is None or cand < best:
            best = cand
    return population[best[2]]


def crossover(
    p1: Chromosome, p2: Chromosome, rate: float, rng: np.random.Generator
) -> tuple[Chromosome, Chromosome]:
    """Uniform crossover with probability ``rate``, else clones."""
    if p1.genes.shape != p2.genes.shape or not np.array_equal(p1.forced_mask, p2.forced_mask):
        raise ValueError("parents must share length and forced mask")
    if rng.random() >= rate:
        return Chromosome(p1.genes.copy(), p1.forced_mask), Chromosome(p2.genes.copy(), p2.forced_mask)
    take_first = rng.random(p1.genes.size) < 0.5
    c1 = np.where(take_first, p1.genes, p2.genes)
    c2 = np.where(take_first, p2.genes, p1.genes)
    forced = p1.forced_mask
    c1 |= forced
    c2 |= forced
    return Chromosome(c1, forced), Chromosome(c2, forced)


def mutate(
    c: Chromosome,
    per_bit_rate: float,
    rng: np.random.Generator,
    n_max: int | None = None,
) -> Chromosome:
    """Independent per-bit flips on non-forced bits, with cap repair."""
    if not 0.0 <= per_bit_rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    flips = (rng.random(c.genes.size) < per_bit_rate) & ~c.forced_mask
    genes = c.genes ^ flips
    genes |= c.forced_mask
    if n_max is not None:
        excess = int(genes.sum()) - n_max
        if excess > 0:
            droppable = np.flatnonzero(genes & ~c.forced_mask)
            drop = rng.choice(droppable, size=excess, replace=False)
            genes[drop] = False
    return Chromosome(genes, c.forced_mask)


class _Evaluation:
    """Shared evaluation cache with frozen-at-evaluation objectives.

    Each chromosome is scored once; its dominance vector never changes
    afterwards, which keeps the archive monotone across generations.
    """

    def __init__(self, evaluator: PlacementEvaluator, config: GaConfig, of3_weights, threads: int = 1):
        self.evaluator = evaluator
        self.config = config
        self.of3_weights = tuple(of3_weights)
        self.threads = max(1, int(threads))
        self.bounds = RunningBounds()
        self.cache: dict[bytes, tuple[RawScores, np.ndarray]] = {}

    def evaluate_batch(self, chromosomes: list[Chromosome]) -> list[Individual]:
        todo: dict[bytes, Chromosome] = {}
        for chrom in chromosomes:
            key = chrom.key()
            if key not in self.cache and key not in todo:
                todo[key] = chrom
        new_raw: dict[bytes, RawScores] = {}
        if self.threads > 1 and len(todo) > 1:
            from concurrent.futures import ThreadPoolExecutor

            keys = list(todo)
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = pool.map(lambda k: self.evaluator.evaluate(todo[k].genes), keys)
            new_raw = dict(zip(keys, results))
        else:
            for key, chrom in todo.items():
                new_raw[key] = self.evaluator.evaluate(chrom.genes)
        # Widen the normalization bounds with the whole batch first so
        # results do not depend on in-batch ordering.
        for raw in new_raw.values():
            for name, value in (("of1", raw.of1), ("of2", raw.of2),
                                ("d1", raw.d1), ("d2", raw.d2), ("d3", raw.d3)):
                self.bounds.update(name, value)
        a = self.config.pareto_weight_a
        for key, raw in new_raw.items():
            of3 = of3_combined(
                self.bounds.normalize("d1", raw.d1),
                self.bounds.normalize("d2", raw.d2),
                self.bounds.normalize("d3", raw.d3),
                self.of3_weights,
            )
            self.bounds.update("of3", of3)
            vec = np.array(
                [
                    weighted_fitness(raw.of1, raw.penalty, a),
                    weighted_fitness(raw.of2, raw.penalty, a),
                    weighted_fitness(of3, raw.penalty, a),
                ]
            )
            self.cache[key] = (raw, vec)
        out = []
        for chrom in chromosomes:
            raw, vec = self.cache[chrom.key()]
            out.append(Individual(chromosome=chrom, raw=raw, objectives=vec.copy()))
        return out


def _assign_ranks(population: list[Individual]) -> None:
    fronts = non_dominated_sort([ind.objectives for ind in population])
    for rank, front in enumerate(fronts):
        dists = crowding_distance([population[i].objectives for i in front])
        for i, d in zip(front, dists):
            population[i].rank = rank
            population[i].crowding = float(d)


def _update_archive(archive: dict[bytes, Individual], population: list[Individual]) -> None:
    for ind in population:
        archive.setdefault(ind.chromosome.key(), ind)
    items = list(archive.items())
    keep: dict[bytes, Individual] = {}
    for i, (key, ind) in enumerate(items):
        if any(
            dominates(other.objectives, ind.objectives)
            for j, (_, other) in enumerate(items)
            if j != i
        ):
            continue
        keep[key] = ind
    archive.clear()
    archive.update(keep)


def evolve(
    problem: PlacementProblem,
    config: GaConfig,
    of3_weights: Sequence[float] = (1 / 3, 1 / 3, 1 / 3),
    progress: Callable[[dict], None] | None = None,
    threads: int = 1,
) -> ParetoFront:
    """Run the elitist generational loop and return the final archive."""
    n = problem.n_candidates
    forced = problem.forced_mask
    forced_count = int(forced.sum())
    n_max = config.n_max
    if n_max is not None and n_max < forced_count:
        raise InvalidConfigError("n_max is below the number of forced sensors")
    mutation_rate = config.mutation_rate if config.mutation_rate is not None else 1.0 / n
    rng = np.random.default_rng(config.rng_seed)
    evaluator = PlacementEvaluator(problem, gdop_subset_cap=config.gdop_subset_cap)
    evaluation = _Evaluation(evaluator, config, of3_weights, threads=threads)

    high = min(n_max if n_max is not None else n, n)
    population: list[Individual] = []
    chroms = []
    non_forced = np.flatnonzero(~forced)
    for _ in range(config.population_size):
        total = int(rng.integers(forced_count, high + 1))
        genes = forced.copy()
        extra = total - forced_count
        if extra > 0:
            genes[rng.choice(non_forced, size=extra, replace=False)] = True
        chroms.append(Chromosome(genes, forced))
    population = evaluation.evaluate_batch(chroms)

    archive: dict[bytes, Individual] = {}
    _update_archive(archive, population)
    _emit(progress, 0, archive)

    for gen in range(1, config.generations + 1):
        _assign_ranks(population)
        offspring: list[Chromosome] = []
        while len(offspring) < config.population_size:
            p1 = tournament_select(population, rng, config.tournament_size)
            p2 = tournament_select(population, rng, config.tournament_size)
            c1, c2 = crossover(p1.chromosome, p2.chromosome, config.crossover_rate, rng)
            offspring.append(mutate(c1, mutation_rate, rng, n_max))
            if len(offspring) < config.population_size:
                offspring.append(mutate(c2, mutation_rate, rng, n_max))
        children = evaluation.evaluate_batch(offspring)
        merged = population + children
        _assign_ranks(merged)
        fronts = non_dominated_sort([ind.objectives for ind in merged])
        nxt: list[Individual] = []
        for front in fronts:
            if len(nxt) + len(front) <= config.population_size:
                nxt.extend(merged[i] for i in front)
            else:
                dists = crowding_distance([merged[i].objectives for i in front])
                order = sorted(
                    range(len(front)), key=lambda i: (-dists[i], front[i])
                )
                room = config.population_size - len(nxt)
                nxt.extend(merged[front[i]] for i in order[:room])
                break
        population = nxt
        _update_archive(archive, children)
        _emit(progress, gen, archive)

    members = [
        FrontMember(ind.chromosome, ind.raw, ind.objectives.copy())
        for ind in sorted(archive.values(), key=lambda i: i.chromosome.key())
    ]
    return ParetoFront(members=members, seed=config.rng_seed, bounds=evaluation.bounds)


def _emit(progress, gen: int, archive: dict[bytes, Individual]) -> None:
    if progress is None:
        return
    vectors = sorted(
        [ind.objectives.tolist() for ind in archive.values()]
    )
    best = [min(v[i] for v in vectors) for i in range(3)] if vectors else []
    progress({"gen": gen, "front_size": len(vectors), "best": best, "front": vectors})
