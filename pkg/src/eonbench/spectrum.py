"""Spectrum primitives: grids, channels, availability vectors and validation.

Slices are 1-based. Internally a link's occupancy is a Python int used as a
bit set: bit ``s - 1`` is set when slice ``s`` is occupied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .topology import Path, Topology
from .traffic import TrafficMatrix

RSA_SLOT_WIDTH_GHZ = 12.5
RWA_SLOT_WIDTH_GHZ = 50.0
DEFAULT_RSA_SLOTS = 80
DEFAULT_RWA_SLOTS = 40


class UnknownLinkError(KeyError):
    pass


@dataclass(frozen=True)
class SpectrumGrid:
    slot_count: int = DEFAULT_RSA_SLOTS
    slot_width_ghz: float = RSA_SLOT_WIDTH_GHZ

    def __post_init__(self):
        if self.slot_count < 1:
            raise ValueError("slot_count must be >= 1")
        if self.slot_width_ghz <= 0:
            raise ValueError("slot_width_ghz must be positive")

    @property
    def full_mask(self) -> int:
        return (1 << self.slot_count) - 1

    def to_dict(self) -> dict:
        return {"slot_count": self.slot_count, "slot_width_ghz": self.slot_width_ghz}


def rsa_grid(slot_count: int = DEFAULT_RSA_SLOTS) -> SpectrumGrid:
    return SpectrumGrid(slot_count, RSA_SLOT_WIDTH_GHZ)


def rwa_grid(slot_count: int = DEFAULT_RWA_SLOTS) -> SpectrumGrid:
    return SpectrumGrid(slot_count, RWA_SLOT_WIDTH_GHZ)


@dataclass(frozen=True)
class Channel:
    start: int
    width: int

    @property
    def end(self) -> int:
        return self.start + self.width - 1

    @property
    def mask(self) -> int:
        return ((1 << self.width) - 1) << (self.start - 1)

    def contains(self, s: int) -> bool:
        return self.start <= s <= self.end

    def fits(self, grid: SpectrumGrid) -> bool:
        return self.width >= 1 and self.start >= 1 and self.end <= grid.slot_count


def channel_count(grid: SpectrumGrid, width: int) -> int:
    """Number of placements of a ``width``-slice channel on the grid."""
    return max(grid.slot_count - width + 1, 0)


@dataclass(frozen=True)
class AvailabilityVector:
    """Bit ``i`` (1-based) is 1 iff slice ``i`` is free."""

    free: int
    size: int

    @classmethod
    def from_bits(cls, bits) -> "AvailabilityVector":
        free = 0
        for i, b in enumerate(bits):
            if b:
                free |= 1 << i
        return cls(free, len(bits))

    @classmethod
    def all_free(cls, size: int) -> "AvailabilityVector":
        return cls((1 << size) - 1, size)

    @property
    def bits(self) -> list[int]:
        return [(self.free >> i) & 1 for i in range(self.size)]

    def __and__(self, other: "AvailabilityVector") -> "AvailabilityVector":
        if self.size != other.size:
            raise ValueError("availability vectors differ in length")
        return AvailabilityVector(self.free & other.free, self.size)


def run_starts(free: int, width: int) -> int:
    """Bit set of positions where ``width`` consecutive free bits begin."""
    m = free
    for k in range(1, width):
        m &= free >> k
    return m


def first_fit_mask(free: int, width: int, size: int) -> Optional[int]:
    starts = run_starts(free, width) & ((1 << max(size - width + 1, 0)) - 1)
    if not starts:
        return None
    return (starts & -starts).bit_length()


def first_fit_channel(avail: AvailabilityVector, width: int) -> Optional[int]:
    if width < 1:
        raise ValueError("width must be >= 1")
    return first_fit_mask(avail.free, width, avail.size)


@dataclass
class SpectrumAssignment:
    grid: SpectrumGrid
    routes: dict[int, tuple[Path, Channel]] = field(default_factory=dict)
    n_links: Optional[int] = None

    @property
    def occupied(self) -> dict[int, int]:
        """Link id -> occupied-slice bit set (union over routes)."""
        occ: dict[int, int] = {}
        for path, ch in self.routes.values():
            m = ch.mask
            for lid in path.links:
                occ[lid] = occ.get(lid, 0) | m
        return occ

    @property
    def link_occupancy(self) -> dict[int, AvailabilityVector]:
        full = self.grid.full_mask
        occ = self.occupied
        links = range(self.n_links) if self.n_links is not None else sorted(occ)
        return {
            lid: AvailabilityVector(full & ~occ.get(lid, 0), self.grid.slot_count)
            for lid in links
        }

    def to_json(self) -> str:
        routes = [
            {"demand": d, "links": list(path.links), "start": ch.start, "width": ch.width}
            for d, (path, ch) in sorted(self.routes.items())
        ]
        return json.dumps({"grid": self.grid.to_dict(), "routes": routes}, indent=2)


def assignment_from_json(text: str, topo: Topology, tm: TrafficMatrix) -> SpectrumAssignment:
    doc = json.loads(text)
    grid = SpectrumGrid(int(doc["grid"]["slot_count"]), float(doc["grid"]["slot_width_ghz"]))
    routes = {}
    for r in doc["routes"]:
        d = int(r["demand"])
        links = tuple(int(x) for x in r["links"])
        # endpoints come from the demand when known, so the validator can flag mismatches
        if 0 <= d < len(tm.demands):
            src, dst = tm.demands[d].src, tm.demands[d].dst
        elif links and all(0 <= x < topo.n_links for x in (links[0], links[-1])):
            src, dst = topo.links[links[0]].src, topo.links[links[-1]].dst
        else:
            src = dst = -1
        routes[d] = (Path(links, src, dst), Channel(int(r["start"]), int(r["width"])))
    return SpectrumAssignment(grid, routes, topo.n_links)


def path_availability(assignment: SpectrumAssignment, path: Path) -> AvailabilityVector:
    occ = assignment.occupied
    free = assignment.grid.full_mask
    for lid in path.links:
        if lid < 0 or (assignment.n_links is not None and lid >= assignment.n_links):
            raise UnknownLinkError(lid)
        free &= ~occ.get(lid, 0)
    return AvailabilityVector(free, assignment.grid.slot_count)


def fitness(assignment: SpectrumAssignment) -> int:
    """Highest occupied slice index over all links (0 when empty)."""
    return max((m.bit_length() for m in assignment.occupied.values()), default=0)


def used_slice_count(assignment: SpectrumAssignment) -> int:
    """Number of slice indices occupied on at least one link."""
    union = 0
    for m in assignment.occupied.values():
        union |= m
    return bin(union).count("1")


@dataclass(frozen=True)
class Violation:
    kind: str
    demand: Optional[int]
    detail: str = ""


UNSERVED = "unserved-demand"
UNKNOWN_DEMAND = "unknown-demand"
WRONG_WIDTH = "wrong-channel-width"
BROKEN_PATH = "broken-path"
ENDPOINT_MISMATCH = "endpoint-mismatch"
COLLISION = "slice-collision"
OUTSIDE_GRID = "channel-outside-grid"


def _chain_ok(topo: Topology, links) -> bool:
    if not links:
        return False
    at = None
    visited = set()
    for lid in links:
        if not 0 <= lid < topo.n_links:
            return False
        link = topo.links[lid]
        if at is None:
            at = link.src
            visited.add(at)
        if link.src != at or link.dst in visited:
            return False
        visited.add(link.dst)
        at = link.dst
    return True


def validate_assignment(
    topo: Topology, tm: TrafficMatrix, assignment: SpectrumAssignment
) -> list[Violation]:
    """Every way the assignment breaks the RSA model; empty means feasible."""
    out: list[Violation] = []
    grid = assignment.grid
    demand_ids = {d.id for d in tm.demands}
    for d in tm.demands:
        if d.id not in assignment.routes:
            out.append(Violation(UNSERVED, d.id))
    for did in sorted(assignment.routes):
        if did not in demand_ids:
            out.append(Violation(UNKNOWN_DEMAND, did))
    owners: dict[tuple[int, int], int] = {}
    for did in sorted(assignment.routes):
        path, ch = assignment.routes[did]
        demand = tm.demands[did] if did in demand_ids else None
        if demand is not None and ch.width != demand.slices:
            out.append(
                Violation(WRONG_WIDTH, did, f"width {ch.width}, requested {demand.slices}")
            )
        if not ch.fits(grid):
            out.append(Violation(OUTSIDE_GRID, did, f"slices {ch.start}..{ch.end}"))
        if not _chain_ok(topo, path.links):
            out.append(Violation(BROKEN_PATH, did, f"links {list(path.links)}"))
            continue
        first, last = topo.links[path.links[0]], topo.links[path.links[-1]]
        if demand is not None and (first.src != demand.src or last.dst != demand.dst):
            out.append(Violation(ENDPOINT_MISMATCH, did))
        for lid in path.links:
            for s in range(max(ch.start, 1), min(ch.end, grid.slot_count) + 1):
                other = owners.setdefault((lid, s), did)
                if other != did:
                    out.append(
                        Violation(COLLISION, did, f"slice {s} on link {lid} also used by {other}")
                    )
    return out
