"""Traffic demands: generation, rate mapping, RWA conversion and CSV I/O."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

from .rng import Xoshiro256
from .topology import Topology

GBPS_PER_SLICE = 25.0
CSV_HEADER = ["id", "src", "dst", "slices", "rate_gbps"]


class TrafficError(ValueError):
    pass


@dataclass(frozen=True)
class Demand:
    id: int
    src: int
    dst: int
    slices: int
    rate_gbps: float

    def __post_init__(self):
        if self.src == self.dst:
            raise TrafficError(f"demand {self.id}: source equals destination")
        if self.slices < 1:
            raise TrafficError(f"demand {self.id}: slices must be >= 1")
        if self.rate_gbps <= 0:
            raise TrafficError(f"demand {self.id}: rate must be positive")


@dataclass(frozen=True)
class TrafficMatrix:
    demands: tuple[Demand, ...]
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        if [d.id for d in self.demands] != list(range(len(self.demands))):
            raise TrafficError("demand ids must be unique, dense from 0 and in order")

    def __len__(self):
        return len(self.demands)

    def by_id(self, demand_id: int) -> Demand:
        return self.demands[demand_id]

    @property
    def total_slices(self) -> int:
        return sum(d.slices for d in self.demands)


def rate_to_slices(rate_gbps: float) -> int:
    if rate_gbps <= 0:
        raise TrafficError("rate must be positive")
    n = round(rate_gbps / GBPS_PER_SLICE)
    if n < 1 or not math.isclose(n * GBPS_PER_SLICE, rate_gbps, rel_tol=0, abs_tol=1e-9):
        raise TrafficError(f"{rate_gbps} Gbps is not a multiple of {GBPS_PER_SLICE:g} Gbps")
    return n


def generate_traffic(
    topo: Topology,
    n_demands: int,
    slice_min: int,
    slice_max: int,
    seed: int,
    label: str = "",
) -> TrafficMatrix:
    """Random demands from a seeded xoshiro256** stream.

    Per demand, two draws in this order: ``k = below(V*(V-1))`` picks the
    ordered pair (``src = k // (V-1)``, ``dst`` the ``k % (V-1)``-th node
    other than ``src``), then ``slices = slice_min + below(span)``.
    """
    if n_demands < 1:
        raise TrafficError("need at least one demand")
    if not 1 <= slice_min <= slice_max:
        raise TrafficError(f"invalid slice range {slice_min}:{slice_max}")
    n = topo.n_nodes
    if n < 2:
        raise TrafficError("topology needs at least two nodes")
    rng = Xoshiro256(seed)
    span = slice_max - slice_min + 1
    demands = []
    for i in range(n_demands):
        k = rng.below(n * (n - 1))
        src, j = divmod(k, n - 1)
        dst = j if j < src else j + 1
        slices = slice_min + rng.below(span)
        demands.append(Demand(i, src, dst, slices, slices * GBPS_PER_SLICE))
    return TrafficMatrix(tuple(demands), seed, label)


def to_rwa_demands(tm: TrafficMatrix) -> TrafficMatrix:
    """One wavelength per demand, whatever its rate."""
    return replace(tm, demands=tuple(replace(d, slices=1) for d in tm.demands))


def save_traffic(tm: TrafficMatrix, topo: Topology) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for d in tm.demands:
        writer.writerow([d.id, topo.nodes[d.src], topo.nodes[d.dst], d.slices, f"{d.rate_gbps:g}"])
    return buf.getvalue()


def load_traffic(text: str, topo: Topology, seed: int = 0, label: str = "") -> TrafficMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    if rows and [c.strip() for c in rows[0]] == CSV_HEADER:
        rows = rows[1:]
    demands = []
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise TrafficError(f"line {lineno}: expected 5 fields, got {len(row)}")
        try:
            did, slices, rate = int(row[0]), int(row[3]), float(row[4])
        except ValueError:
            raise TrafficError(f"line {lineno}: non-numeric field") from None
        src = topo.node_index(row[1].strip())
        dst = topo.node_index(row[2].strip())
        demands.append(Demand(did, src, dst, slices, rate))
    demands.sort(key=lambda d: d.id)
    return TrafficMatrix(tuple(demands), seed, label)
