"""Sequential first-fit heuristics.

* MSF (most slices first) for RSA over k shortest paths.
* First-fit RWA decoded from a demand ordering, with a permutation genetic
  algorithm searching over orderings.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from .rng import Xoshiro256
from .spectrum import (
    Channel,
    SpectrumAssignment,
    SpectrumGrid,
    first_fit_mask,
    rsa_grid,
    rwa_grid,
)
from .topology import Path, Topology, yen_k_shortest_paths
from .traffic import TrafficMatrix


class CapacityExhaustedError(RuntimeError):
    def __init__(self, demand_id: int):
        super().__init__(f"demand {demand_id} fits on none of its candidate paths")
        self.demand_id = demand_id


def _grid_from(value) -> SpectrumGrid:
    if isinstance(value, SpectrumGrid):
        return value
    return SpectrumGrid(int(value["slot_count"]), float(value["slot_width_ghz"]))


@dataclass(frozen=True)
class MsfConfig:
    k_paths: int = 3
    grid: SpectrumGrid = field(default_factory=rsa_grid)

    def __post_init__(self):
        if self.k_paths < 1:
            raise ValueError("k_paths must be >= 1")
        object.__setattr__(self, "grid", _grid_from(self.grid))

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "MsfConfig":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class GaConfig:
    k_paths: int = 10
    population: int = 50
    generations: int = 200
    tournament_size: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    elitism: int = 2
    seed: int = 0
    grid: SpectrumGrid = field(default_factory=rwa_grid)

    def __post_init__(self):
        object.__setattr__(self, "grid", _grid_from(self.grid))
        if self.k_paths < 1 or self.population < 1 or self.tournament_size < 1:
            raise ValueError("k_paths, population and tournament_size must be >= 1")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not (0.0 <= self.crossover_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise ValueError("rates must lie in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ValueError("need 0 <= elitism < population")
        if self.tournament_size > self.population:
            raise ValueError("tournament_size cannot exceed population")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "GaConfig":
        return cls(**json.loads(text))


def candidate_paths(topo: Topology, tm: TrafficMatrix, k: int) -> list[list[Path]]:
    """k shortest paths per demand, computed once per endpoint pair."""
    cache: dict[tuple[int, int], list[Path]] = {}
    out = []
    for d in tm.demands:
        key = (d.src, d.dst)
        if key not in cache:
            cache[key] = yen_k_shortest_paths(topo, d.src, d.dst, k)
        out.append(cache[key])
    return out


def msf_order(tm: TrafficMatrix) -> list[int]:
    return [d.id for d in sorted(tm.demands, key=lambda d: (-d.slices, d.id))]


def _serve(order, tm, paths, grid, occ) -> dict[int, tuple[Path, Channel]]:
    # Serve demands in order on the lowest first-fit start; ties go to path rank.
    full = grid.full_mask
    size = grid.slot_count
    routes = {}
    for did in order:
        width = tm.demands[did].slices
        best = None
        for path in paths[did]:
            free = full
            for lid in path.links:
                free &= ~occ[lid]
            start = first_fit_mask(free, width, size)
            if start is not None and (best is None or start < best[1]):
                best = (path, start)
                if start == 1:
                    break
        if best is None:
            raise CapacityExhaustedError(did)
        path, start = best
        ch = Channel(start, width)
        m = ch.mask
        for lid in path.links:
            occ[lid] |= m
        routes[did] = (path, ch)
    return routes


def msf_solve(topo: Topology, tm: TrafficMatrix, cfg: MsfConfig = MsfConfig()) -> SpectrumAssignment:
    paths = candidate_paths(topo, tm, cfg.k_paths)
    occ = [0] * topo.n_links
    routes = _serve(msf_order(tm), tm, paths, cfg.grid, occ)
    return SpectrumAssignment(cfg.grid, routes, topo.n_links)


def _check_unit(tm: TrafficMatrix):
    if any(d.slices != 1 for d in tm.demands):
        raise ValueError("RWA expects unit-width demands; convert with to_rwa_demands")


def _check_order(order, n):
    if sorted(order) != list(range(n)):
        raise ValueError("ordering must be a permutation of the demand ids")


def first_fit_rwa(
    topo: Topology,
    tm: TrafficMatrix,
    order,
    k_paths: int = 10,
    grid: Optional[SpectrumGrid] = None,
) -> SpectrumAssignment:
    _check_unit(tm)
    _check_order(order, len(tm))
    grid = grid or rwa_grid()
    paths = candidate_paths(topo, tm, k_paths)
    occ = [0] * topo.n_links
    routes = _serve(order, tm, paths, grid, occ)
    return SpectrumAssignment(grid, routes, topo.n_links)


def _wavelength_count(occ) -> int:
    union = 0
    for m in occ:
        union |= m
    return bin(union).count("1")


def order_crossover(p1, p2, a: int, b: int) -> list[int]:
    """OX1: keep ``p1[a:b]``, fill the rest in ``p2`` order starting after ``b``."""
    n = len(p1)
    child = [None] * n
    child[a:b] = p1[a:b]
    kept = set(p1[a:b])
    fill = [g for g in p2[b:] + p2[:b] if g not in kept]
    positions = list(range(b, n)) + list(range(0, a))
    for pos, gene in zip(positions, fill):
        child[pos] = gene
    return child


@dataclass
class GaResult:
    assignment: SpectrumAssignment
    ordering: tuple[int, ...]
    log: list[int]

    def log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["generation", "best_fitness"])
        for g, f in enumerate(self.log):
            w.writerow([g, f])
        return buf.getvalue()


def ga_rwa_solve(topo: Topology, tm: TrafficMatrix, cfg: GaConfig = GaConfig()) -> GaResult:
    """Search demand orderings; fitness is the wavelength count of the decode.

    Every random draw comes from one xoshiro256** stream in a fixed order, so
    a seed fully determines the run.
    """
    _check_unit(tm)
    n = len(tm)
    grid = cfg.grid
    paths = candidate_paths(topo, tm, cfg.k_paths)
    rng = Xoshiro256(cfg.seed)
    cache: dict[tuple[int, ...], tuple[int, dict]] = {}

    def evaluate(order: tuple[int, ...]) -> int:
        hit = cache.get(order)
        if hit is None:
            occ = [0] * topo.n_links
            routes = _serve(order, tm, paths, grid, occ)
            hit = cache[order] = (_wavelength_count(occ), routes)
        return hit[0]

    identity = tuple(range(n))
    hop_first = tuple(sorted(range(n), key=lambda i: (-paths[i][0].hops, i)))
    population = [identity]
    if cfg.population > 1:
        population.append(hop_first)
    while len(population) < cfg.population:
        perm = list(identity)
        rng.shuffle(perm)
        population.append(tuple(perm))
    scores = [evaluate(p) for p in population]

    def best_index(idx):
        return min(idx, key=lambda i: (scores[i], i))

    top = best_index(range(len(population)))
    best_order, best_fit = population[top], scores[top]
    log = [best_fit]
    for _ in range(cfg.generations):
        ranked = sorted(range(len(population)), key=lambda i: (scores[i], i))
        nxt = [population[i] for i in ranked[: cfg.elitism]]
        while len(nxt) < cfg.population:
            p1 = population[best_index([rng.below(len(population)) for _ in range(cfg.tournament_size)])]
            p2 = population[best_index([rng.below(len(population)) for _ in range(cfg.tournament_size)])]
            if n > 1 and rng.random() < cfg.crossover_rate:
                a, b = sorted((rng.below(n + 1), rng.below(n + 1)))
                child = order_crossover(list(p1), list(p2), a, b)
            else:
                child = list(p1)
            if n > 1 and rng.random() < cfg.mutation_rate:
                i, j = rng.below(n), rng.below(n)
                child[i], child[j] = child[j], child[i]
            nxt.append(tuple(child))
        population = nxt
        scores = [evaluate(p) for p in population]
        top = best_index(range(len(population)))
        if scores[top] < best_fit:
            best_order, best_fit = population[top], scores[top]
        log.append(best_fit)
    routes = cache[best_order][1]
    return GaResult(SpectrumAssignment(grid, dict(routes), topo.n_links), best_order, log)
