"""Physical network topologies and path services.

Topologies are directed multigraphs. Undirected entries in a topology file
expand into two directed links, so demands and spectrum occupancy are always
per direction.

All path-producing functions share one canonical total order: hop count,
then total length, then the lexicographic sequence of link ids. This keeps
every solver deterministic.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

BUILTINS = ("six_node", "cost239")


class TopologyError(ValueError):
    """Malformed or inconsistent topology document."""


class NoPathError(LookupError):
    pass


@dataclass(frozen=True)
class Link:
    id: int
    src: int
    dst: int
    length_km: float = 0.0
    parallel: bool = False


@dataclass(frozen=True)
class Path:
    links: tuple[int, ...]
    src: int
    dst: int

    @property
    def hops(self) -> int:
        return len(self.links)


@dataclass(frozen=True)
class Topology:
    nodes: tuple[str, ...]
    links: tuple[Link, ...]
    name: str = ""
    _index: dict = field(default=None, compare=False, repr=False)
    _out: tuple = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        index = {}
        for i, n in enumerate(self.nodes):
            if n in index:
                raise TopologyError(f"duplicate node {n!r}")
            index[n] = i
        out = [[] for _ in self.nodes]
        seen = set()
        for pos, link in enumerate(self.links):
            if link.id != pos:
                raise TopologyError(f"link ids must be dense, got {link.id} at {pos}")
            if not (0 <= link.src < len(self.nodes) and 0 <= link.dst < len(self.nodes)):
                raise TopologyError(f"link {link.id} has a dangling endpoint")
            if link.src == link.dst:
                raise TopologyError(f"link {link.id} is a self-loop")
            if link.length_km < 0:
                raise TopologyError(f"link {link.id} has negative length")
            pair = (link.src, link.dst)
            if pair in seen and not link.parallel:
                raise TopologyError(
                    f"duplicate link {self.nodes[link.src]}->{self.nodes[link.dst]}"
                )
            seen.add(pair)
            out[link.src].append(link)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_out", tuple(tuple(o) for o in out))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def node_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise TopologyError(f"unknown node {name!r}") from None

    def out_links(self, v: int) -> tuple[Link, ...]:
        return self._out[v]

    def out_degree(self, v: int) -> int:
        return len(self._out[v])

    def in_degree(self, v: int) -> int:
        return sum(1 for link in self.links if link.dst == v)

    def path_nodes(self, path: Path) -> list[int]:
        nodes = [path.src]
        for lid in path.links:
            nodes.append(self.links[lid].dst)
        return nodes

    def path_key(self, links) -> tuple:
        """Sort key of the canonical path order."""
        length = sum((Fraction(self.links[i].length_km) for i in links), Fraction(0))
        return (len(links), length, tuple(links))

    def is_valid_path(self, path: Path) -> bool:
        if not path.links:
            return False
        at = path.src
        visited = {at}
        for lid in path.links:
            if not 0 <= lid < len(self.links):
                return False
            link = self.links[lid]
            if link.src != at or link.dst in visited:
                return False
            visited.add(link.dst)
            at = link.dst
        return at == path.dst


def _from_document(doc: dict) -> Topology:
    if not isinstance(doc, dict):
        raise TopologyError("topology document must be a JSON object")
    try:
        names = [str(n) for n in doc["nodes"]]
        raw_links = doc["links"]
    except (KeyError, TypeError) as exc:
        raise TopologyError(f"missing field: {exc}") from None
    index = {n: i for i, n in enumerate(names)}
    links: list[Link] = []
    for entry in raw_links:
        try:
            a, b = str(entry["a"]), str(entry["b"])
        except (KeyError, TypeError):
            raise TopologyError(f"link entry needs 'a' and 'b': {entry!r}") from None
        for end in (a, b):
            if end not in index:
                raise TopologyError(f"link references unknown node {end!r}")
        length = float(entry.get("length_km", 0.0))
        parallel = bool(entry.get("parallel", False))
        pairs = [(a, b)] if entry.get("directed", False) else [(a, b), (b, a)]
        for u, v in pairs:
            links.append(Link(len(links), index[u], index[v], length, parallel))
    return Topology(tuple(names), tuple(links), str(doc.get("name", "")))


def load_topology(text: str) -> Topology:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TopologyError(f"malformed topology JSON: {exc}") from None
    return _from_document(doc)


def save_topology(topo: Topology) -> str:
    """Serialize with every link written as a directed entry.

    Reloading the result reproduces the same link ids and order.
    """
    links = []
    for link in topo.links:
        entry = {
            "a": topo.nodes[link.src],
            "b": topo.nodes[link.dst],
            "length_km": link.length_km,
            "directed": True,
        }
        if link.parallel:
            entry["parallel"] = True
        links.append(entry)
    doc = {"name": topo.name, "nodes": list(topo.nodes), "links": links}
    return json.dumps(doc, indent=2)


def builtin_topology(name: str) -> Topology:
    if name not in BUILTINS:
        raise KeyError(f"unknown builtin topology {name!r}; choose from {BUILTINS}")
    text = resources.files("eonbench.data").joinpath(f"{name}.json").read_text()
    return load_topology(text)


def resolve_topology(spec: str) -> Topology:
    """Builtin name or path to a topology JSON file."""
    if spec in BUILTINS:
        return builtin_topology(spec)
    with open(spec) as fh:
        return load_topology(fh.read())


def _best_path(topo, src, dst, banned_nodes, banned_links):
    # Dijkstra under the canonical key; the key is monotone under extension.
    heap = [(0, Fraction(0), (), src)]
    done = set()
    while heap:
        hops, length, links, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == dst:
            return links
        for link in topo.out_links(v):
            if link.id in banned_links or link.dst in banned_nodes or link.dst in done:
                continue
            heapq.heappush(
                heap,
                (hops + 1, length + Fraction(link.length_km), links + (link.id,), link.dst),
            )
    return None


def yen_k_shortest_paths(topo: Topology, src: int, dst: int, k: int) -> list[Path]:
    if src == dst:
        raise ValueError("source and destination must differ")
    if k < 1:
        raise ValueError("k must be positive")
    first = _best_path(topo, src, dst, frozenset(), frozenset())
    if first is None:
        raise NoPathError(f"{topo.nodes[dst]} unreachable from {topo.nodes[src]}")
    found = [first]
    candidates: list = []
    queued = {first}
    while len(found) < k:
        last = found[-1]
        nodes = topo.path_nodes(Path(last, src, dst))
        for i in range(len(last)):
            root = last[:i]
            banned_links = {p[i] for p in found if len(p) > i and p[:i] == root}
            banned_nodes = set(nodes[:i])
            spur = _best_path(topo, nodes[i], dst, banned_nodes, banned_links)
            if spur is None:
                continue
            total = root + spur
            if total not in queued:
                queued.add(total)
                heapq.heappush(candidates, topo.path_key(total))
        if not candidates:
            break
        found.append(heapq.heappop(candidates)[2])
    return [Path(p, src, dst) for p in found]


def enumerate_simple_paths(
    topo: Topology, src: int, dst: int, cap: int
) -> tuple[list[Path], bool]:
    """All simple paths in canonical order, truncated at ``cap``.

    Returns ``(paths, truncated)``. Partial paths are expanded best-first, so
    complete paths come out already sorted and the search can stop at the cap.
    """
    if src == dst:
        raise ValueError("source and destination must differ")
    if cap < 1:
        raise ValueError("cap must be positive")
    heap = [(0, Fraction(0), (), src, frozenset((src,)))]
    paths: list[Path] = []
    while heap:
        hops, length, links, v, visited = heapq.heappop(heap)
        if v == dst:
            if len(paths) == cap:
                return paths, True
            paths.append(Path(links, src, dst))
            continue
        for link in topo.out_links(v):
            if link.dst in visited:
                continue
            heapq.heappush(
                heap,
                (
                    hops + 1,
                    length + Fraction(link.length_km),
                    links + (link.id,),
                    link.dst,
                    visited | {link.dst},
                ),
            )
    return paths, False
