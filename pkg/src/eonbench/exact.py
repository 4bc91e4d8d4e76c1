"""Exact RSA/RWA solving: branch-and-bound, lower bounds and a brute-force oracle.

Search-space notes
------------------
Compaction. If slice index ``s`` is unused on every link, shifting every
channel that lies above ``s`` down by one keeps contiguity, continuity and
non-overlap, and leaves the paths unchanged. Repeating this maps any
solution using ``v`` distinct slice indices onto one using exactly slices
``1..v``. So the minimum count of used indices equals the minimum highest
used index, and a search for a solution better than an incumbent ``v`` may
restrict every channel to slices ``1..v-1``.

Simple paths. A route containing a cycle can drop the cycle: fewer links
are occupied and every constraint still holds. Searching simple paths
therefore loses no optimal solution. When the per-demand path list is
truncated at ``path_cap`` the search no longer covers the whole space, and
only a matching lower bound can prove optimality.

Symmetry. Mirroring every channel inside the window ``1..K`` maps solutions
onto solutions, so the first demand only tries the lower half of its
starts. With unit widths (RWA) wavelengths are interchangeable, so a demand
may open at most one new wavelength beyond those already in use.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .heuristics import CapacityExhaustedError, MsfConfig, msf_solve
from .spectrum import (
    Channel,
    SpectrumAssignment,
    SpectrumGrid,
    rsa_grid,
    run_starts,
    rwa_grid,
    used_slice_count,
)
from .topology import Path, Topology, enumerate_simple_paths
from .traffic import TrafficMatrix

CUT_ENUMERATION_MAX_NODES = 16


class Status(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE_BOUND = "FeasibleBound"
    INFEASIBLE = "Infeasible"
    TIMED_OUT = "TimedOut"


@dataclass(frozen=True)
class SolverLimits:
    time_limit_s: float = 60.0
    node_limit: int = 1_000_000
    path_cap: int = 64

    def __post_init__(self):
        if self.time_limit_s <= 0 or self.node_limit < 1 or self.path_cap < 1:
            raise ValueError("solver limits must be positive")


@dataclass
class SolveStats:
    nodes: int = 0
    wall_time_s: float = 0.0
    path_space: int = 0
    truncated: bool = False
    limit_hit: Optional[str] = None


@dataclass
class SolveOutcome:
    status: Status
    objective: Optional[int]
    lower_bound: int
    solution: Optional[SpectrumAssignment]
    stats: SolveStats = field(default_factory=SolveStats)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "lower_bound": self.lower_bound,
            "stats": {
                "nodes": self.stats.nodes,
                "wall_time_s": round(self.stats.wall_time_s, 6),
                "path_space": self.stats.path_space,
                "truncated": self.stats.truncated,
                "limit_hit": self.stats.limit_hit,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def lower_bound(topo: Topology, tm: TrafficMatrix) -> int:
    """Largest demand, and per-node add/drop load over node degree."""
    if not tm.demands:
        return 0
    best = max(d.slices for d in tm.demands)
    out_load = [0] * topo.n_nodes
    in_load = [0] * topo.n_nodes
    for d in tm.demands:
        out_load[d.src] += d.slices
        in_load[d.dst] += d.slices
    for v in range(topo.n_nodes):
        deg_out, deg_in = topo.out_degree(v), topo.in_degree(v)
        if out_load[v] and deg_out:
            best = max(best, -(-out_load[v] // deg_out))
        if in_load[v] and deg_in:
            best = max(best, -(-in_load[v] // deg_in))
    return best


def _min_hops(topo: Topology, src: int) -> list[float]:
    dist = [math.inf] * topo.n_nodes
    dist[src] = 0
    frontier = [src]
    while frontier:
        nxt = []
        for v in frontier:
            for link in topo.out_links(v):
                if dist[link.dst] == math.inf:
                    dist[link.dst] = dist[v] + 1
                    nxt.append(link.dst)
        frontier = nxt
    return dist


def cut_lower_bound(topo: Topology, tm: TrafficMatrix) -> int:
    """Directed-cut and link-load bounds on the number of used slices.

    For a node set X, every demand leaving X crosses one of the links
    leaving X with all of its slices, so ``sum(n_d) <= K * |links out of X|``.
    Every demand also occupies ``n_d`` slices on at least ``minhops(d)``
    links, and each used slice index is available once per link.
    """
    if not tm.demands:
        return 0
    n = topo.n_nodes
    best = 0
    hops = {}
    for d in tm.demands:
        if d.src not in hops:
            hops[d.src] = _min_hops(topo, d.src)
    load = sum(d.slices * hops[d.src][d.dst] for d in tm.demands)
    if load < math.inf:
        best = -(-int(load) // topo.n_links)
    if n <= CUT_ENUMERATION_MAX_NODES:
        subsets = range(1, (1 << n) - 1)
    else:
        subsets = [1 << v for v in range(n)] + [((1 << n) - 1) ^ (1 << v) for v in range(n)]
    for x in subsets:
        crossing = sum(d.slices for d in tm.demands if (x >> d.src) & 1 and not (x >> d.dst) & 1)
        if not crossing:
            continue
        cut = sum(1 for link in topo.links if (x >> link.src) & 1 and not (x >> link.dst) & 1)
        if cut:
            best = max(best, -(-crossing // cut))
    return best


def strong_lower_bound(topo: Topology, tm: TrafficMatrix) -> int:
    return max(lower_bound(topo, tm), cut_lower_bound(topo, tm))


def compact(assignment: SpectrumAssignment) -> SpectrumAssignment:
    """Renumber used slice indices to 1..v, keeping paths and relative order."""
    union = 0
    for m in assignment.occupied.values():
        union |= m
    remap = {}
    rank = 0
    for s in range(1, union.bit_length() + 1):
        if (union >> (s - 1)) & 1:
            rank += 1
            remap[s] = rank
    routes = {
        d: (path, Channel(remap[ch.start], ch.width))
        for d, (path, ch) in assignment.routes.items()
    }
    return SpectrumAssignment(assignment.grid, routes, assignment.n_links)


class _Stop(Exception):
    pass


def _solve(
    topo: Topology,
    tm: TrafficMatrix,
    grid: SpectrumGrid,
    limits: SolverLimits,
    unit: bool,
) -> SolveOutcome:
    t0 = time.perf_counter()
    stats = SolveStats()

    def finish(status, objective, bound, solution):
        stats.wall_time_s = time.perf_counter() - t0
        return SolveOutcome(status, objective, bound, solution, stats)

    if not tm.demands:
        return finish(Status.OPTIMAL, 0, 0, SpectrumAssignment(grid, {}, topo.n_links))

    paths: list[list[Path]] = []
    for d in tm.demands:
        ps, truncated = enumerate_simple_paths(topo, d.src, d.dst, limits.path_cap)
        stats.truncated |= truncated
        stats.path_space += len(ps)
        paths.append(ps)
    bound = strong_lower_bound(topo, tm)
    if any(not ps for ps in paths) or bound > grid.slot_count:
        return finish(Status.INFEASIBLE, None, bound, None)

    best: Optional[SpectrumAssignment] = None
    best_value = grid.slot_count + 1
    try:
        warm = msf_solve(topo, tm, MsfConfig(3, grid))
        best = compact(warm)
        best_value = used_slice_count(best)
    except CapacityExhaustedError:
        pass
    if best is not None and best_value <= bound:
        return finish(Status.OPTIMAL, best_value, best_value, best)

    order = sorted(range(len(tm)), key=lambda i: (-tm.demands[i].slices, i))
    widths = [tm.demands[i].slices for i in order]
    link_lists = [[p.links for p in paths[i]] for i in order]
    occ = [0] * topo.n_links
    chosen: list = [None] * len(order)
    limit_k = best_value - 1
    deadline = t0 + limits.time_limit_s

    def feasible_ahead(depth, k):
        window = (1 << k) - 1
        for j in range(depth, len(order)):
            w = widths[j]
            start_mask = (1 << (k - w + 1)) - 1 if k >= w else 0
            for links in link_lists[j]:
                free = window
                for lid in links:
                    free &= ~occ[lid]
                if run_starts(free, w) & start_mask:
                    break
            else:
                return False
        return True

    def record(union):
        nonlocal best, best_value, limit_k
        routes = {}
        for pos, (links, start) in enumerate(chosen):
            did = order[pos]
            d = tm.demands[did]
            routes[did] = (Path(links, d.src, d.dst), Channel(start, widths[pos]))
        best = compact(SpectrumAssignment(grid, routes, topo.n_links))
        best_value = bin(union).count("1")
        limit_k = best_value - 1

    def dfs(depth, union):
        stats.nodes += 1
        if stats.nodes >= limits.node_limit:
            stats.limit_hit = "nodes"
            raise _Stop
        if stats.nodes & 255 == 0 and time.perf_counter() > deadline:
            stats.limit_hit = "time"
            raise _Stop
        if depth == len(order):
            record(union)
            return
        w = widths[depth]
        for links in link_lists[depth]:
            k = limit_k
            if union.bit_length() > k or k < bound:
                return
            free = (1 << k) - 1
            for lid in links:
                free &= ~occ[lid]
            top = k - w + 1
            if unit:
                top = min(top, union.bit_length() + 1)
            elif depth == 0:
                top = min(top, (k + 2 - w) // 2)
            starts = run_starts(free, w) & ((1 << max(top, 0)) - 1)
            while starts:
                low = starts & -starts
                starts ^= low
                start = low.bit_length()
                if start + w - 1 > limit_k:
                    break
                m = ((1 << w) - 1) << (start - 1)
                for lid in links:
                    occ[lid] |= m
                chosen[depth] = (links, start)
                if feasible_ahead(depth + 1, limit_k):
                    dfs(depth + 1, union | m)
                for lid in links:
                    occ[lid] ^= m
                if limit_k < bound:
                    return

    try:
        if limit_k >= bound:
            dfs(0, 0)
        exhausted = True
    except _Stop:
        exhausted = False

    if best is not None and best_value <= bound:
        return finish(Status.OPTIMAL, best_value, best_value, best)
    if exhausted and not stats.truncated:
        if best is None:
            return finish(Status.INFEASIBLE, None, bound, None)
        return finish(Status.OPTIMAL, best_value, best_value, best)
    if best is None:
        return finish(Status.TIMED_OUT, None, bound, None)
    return finish(Status.FEASIBLE_BOUND, best_value, bound, best)


def solve_rsa_exact(
    topo: Topology,
    tm: TrafficMatrix,
    grid: Optional[SpectrumGrid] = None,
    limits: SolverLimits = SolverLimits(),
) -> SolveOutcome:
    return _solve(topo, tm, grid or rsa_grid(), limits, unit=False)


def solve_rwa_exact(
    topo: Topology,
    tm: TrafficMatrix,
    limits: SolverLimits = SolverLimits(),
    grid: Optional[SpectrumGrid] = None,
) -> SolveOutcome:
    if any(d.slices != 1 for d in tm.demands):
        raise ValueError("RWA expects unit-width demands; convert with to_rwa_demands")
    return _solve(topo, tm, grid or rwa_grid(), limits, unit=True)


class InstanceTooLargeError(ValueError):
    pass


ORACLE_CAP = 20_000_000


def _all_simple_paths(topo: Topology, src: int, dst: int) -> list[tuple[int, ...]]:
    found = []

    def walk(v, visited, links):
        if v == dst:
            found.append(tuple(links))
            return
        for link in topo.out_links(v):
            if link.dst not in visited:
                visited.add(link.dst)
                links.append(link.id)
                walk(link.dst, visited, links)
                links.pop()
                visited.discard(link.dst)

    walk(src, {src}, [])
    return found


def brute_force_oracle(
    topo: Topology, tm: TrafficMatrix, grid: SpectrumGrid, cap: int = ORACLE_CAP
) -> Optional[int]:
    """Minimum count of used slice indices by full enumeration; None if infeasible.

    Tries every simple path and every channel for every demand. Partial
    combinations are abandoned only when two demands already collide.
    """
    options = []
    for d in tm.demands:
        ps = _all_simple_paths(topo, d.src, d.dst)
        starts = range(1, grid.slot_count - d.slices + 2)
        options.append([(links, ((1 << d.slices) - 1) << (s - 1)) for links in ps for s in starts])
    space = math.prod(len(o) for o in options)
    if space > cap:
        raise InstanceTooLargeError(f"{space} combinations exceed the oracle cap {cap}")
    if not options:
        return 0
    best = None
    occ: dict[int, int] = {}

    def walk(i, union):
        nonlocal best
        if i == len(options):
            value = bin(union).count("1")
            if best is None or value < best:
                best = value
            return
        for links, m in options[i]:
            if any(occ.get(lid, 0) & m for lid in links):
                continue
            for lid in links:
                occ[lid] = occ.get(lid, 0) | m
            walk(i + 1, union | m)
            for lid in links:
                occ[lid] ^= m

    walk(0, 0)
    return best


def brute_force_count(topo: Topology, tm: TrafficMatrix, grid: SpectrumGrid) -> int:
    """Size of the oracle's unpruned search space."""
    total = 1
    for d in tm.demands:
        total *= len(_all_simple_paths(topo, d.src, d.dst)) * max(grid.slot_count - d.slices + 1, 0)
    return total

