"""CPLEX LP-format export of the RSA model, and a reader for the same subset.

Variables (all binary)::

    x_d{D}_e{E}_c{C}   demand D uses channel C on link E
    alpha_d{D}_c{C}    demand D uses channel C
    gamma_e{E}_s{S}    slice S is occupied on link E
    delta_s{S}         slice S is occupied somewhere in the network

Channel ``C`` of a demand of width ``n`` covers slices ``C..C+n-1``, so a
demand has ``|S| - n + 1`` channels.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .spectrum import SpectrumGrid, channel_count
from .topology import Topology
from .traffic import TrafficMatrix

MAX_LINE = 200


def _wrap(head: str, terms: list[str], tail: str) -> list[str]:
    lines = []
    cur = head
    for t in terms:
        if len(cur) + len(t) + 1 > MAX_LINE:
            lines.append(cur)
            cur = "   "
        cur += " " + t
    if len(cur) + len(tail) + 1 > MAX_LINE:
        lines.append(cur)
        cur = "   "
    lines.append(cur + " " + tail if tail else cur)
    return lines


def _signed(coef: int, var: str, first: bool) -> str:
    sign = "-" if coef < 0 else ("" if first else "+")
    mag = abs(coef)
    body = var if mag == 1 else f"{mag} {var}"
    return f"{sign} {body}".strip() if sign else body


def _expr(pairs) -> list[str]:
    return [_signed(c, v, i == 0) for i, (c, v) in enumerate(pairs)]


def emit_lp(topo: Topology, tm: TrafficMatrix, grid: SpectrumGrid) -> str:
    S = grid.slot_count
    E = topo.n_links
    chans = {d.id: channel_count(grid, d.slices) for d in tm.demands}
    n_x = E * sum(chans.values())
    n_alpha = sum(chans.values())
    n_gamma = E * S
    n_delta = S

    body: list[str] = ["Subject To"]
    n_cons = 0

    for d in tm.demands:
        pairs = [(1, f"alpha_d{d.id}_c{c}") for c in range(1, chans[d.id] + 1)]
        if pairs:
            body += _wrap(f" chan_d{d.id}:", _expr(pairs), "= 1")
        else:
            # no channel fits: keep the model infeasible rather than dropping the demand
            body.append(f" chan_d{d.id}: 0 alpha_none_d{d.id} = 1")
        n_cons += 1

    for d in tm.demands:
        for c in range(1, chans[d.id] + 1):
            for v in range(topo.n_nodes):
                pairs = [(1, f"x_d{d.id}_e{link.id}_c{c}") for link in topo.out_links(v)]
                pairs += [(-1, f"x_d{d.id}_e{link.id}_c{c}") for link in topo.links if link.dst == v]
                if v == d.src:
                    pairs.append((-1, f"alpha_d{d.id}_c{c}"))
                elif v == d.dst:
                    pairs.append((1, f"alpha_d{d.id}_c{c}"))
                if pairs:
                    body += _wrap(f" flow_d{d.id}_c{c}_v{v}:", _expr(pairs), "= 0")
                    n_cons += 1

    for link in topo.links:
        for s in range(1, S + 1):
            pairs = []
            for d in tm.demands:
                lo = max(1, s - d.slices + 1)
                hi = min(s, chans[d.id])
                pairs += [(1, f"x_d{d.id}_e{link.id}_c{c}") for c in range(lo, hi + 1)]
            pairs.append((-1, f"gamma_e{link.id}_s{s}"))
            body += _wrap(f" uniq_e{link.id}_s{s}:", _expr(pairs), "= 0")
            n_cons += 1

    for s in range(1, S + 1):
        pairs = [(1, f"gamma_e{e}_s{s}") for e in range(E)] + [(-E, f"delta_s{s}")]
        body += _wrap(f" used_s{s}:", _expr(pairs), "<= 0")
        n_cons += 1

    header = [
        f"\\ RSA model: {topo.n_nodes} nodes, {E} links, {len(tm)} demands, {S} slices",
        f"\\ variables: {n_x + n_alpha + n_gamma + n_delta}"
        f" (x {n_x}, alpha {n_alpha}, gamma {n_gamma}, delta {n_delta})",
        f"\\ constraints: {n_cons}",
    ]
    header += [f"\\ demand {d.id}: {chans[d.id]} channels" for d in tm.demands]

    out = header + ["Minimize"]
    out += _wrap(" obj:", _expr([(1, f"delta_s{s}") for s in range(1, S + 1)]), "")
    out += body
    out.append("Binary")
    names = []
    for d in tm.demands:
        for link in topo.links:
            names += [f"x_d{d.id}_e{link.id}_c{c}" for c in range(1, chans[d.id] + 1)]
    for d in tm.demands:
        names += [f"alpha_d{d.id}_c{c}" for c in range(1, chans[d.id] + 1)]
        if not chans[d.id]:
            names.append(f"alpha_none_d{d.id}")
    for link in topo.links:
        names += [f"gamma_e{link.id}_s{s}" for s in range(1, S + 1)]
    names += [f"delta_s{s}" for s in range(1, S + 1)]
    for i in range(0, len(names), 8):
        out.append(" " + " ".join(names[i : i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


class LpSyntaxError(ValueError):
    pass


@dataclass
class LpModel:
    sense: str
    objective: dict[str, float]
    constraints: list[tuple[str, dict[str, float], str, float]] = field(default_factory=list)
    binaries: list[str] = field(default_factory=list)

    @property
    def variables(self) -> list[str]:
        seen = dict.fromkeys(self.objective)
        for _, coefs, _, _ in self.constraints:
            seen.update(dict.fromkeys(coefs))
        seen.update(dict.fromkeys(self.binaries))
        return list(seen)


_NAME = r"[A-Za-z_][A-Za-z0-9_\[\].]*"
_TERM = re.compile(rf"\s*([+-])?\s*(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)?\s*({_NAME})")
_SECTIONS = {
    "minimize": "min", "minimise": "min", "min": "min",
    "maximize": "max", "maximise": "max", "max": "max",
    "subject to": "st", "st": "st", "s.t.": "st", "such that": "st",
    "binary": "bin", "binaries": "bin", "bin": "bin",
    "end": "end",
}


def _parse_linear(text: str, where: str) -> dict[str, float]:
    coefs: dict[str, float] = {}
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise LpSyntaxError(f"{where}: cannot parse {text[pos:]!r}")
        sign, num, name = m.groups()
        value = float(num) if num else 1.0
        if sign == "-":
            value = -value
        coefs[name] = coefs.get(name, 0.0) + value
        pos = m.end()
        if pos < len(text) and text[pos] not in " +-":
            raise LpSyntaxError(f"{where}: unexpected {text[pos]!r}")
    return coefs


def parse_lp(text: str) -> LpModel:
    """Read the LP subset written by :func:`emit_lp`; raise on anything else."""
    section = None
    statements: dict[str, list[str]] = {"min": [], "max": [], "st": [], "bin": []}
    ended = False
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "end":
                ended = True
            continue
        if ended:
            raise LpSyntaxError("content after End")
        if section is None:
            raise LpSyntaxError(f"statement outside any section: {line!r}")
        if section == "bin":
            statements["bin"].extend(line.split())
        elif line.startswith((" ", "\t")) and statements[section] and not re.match(
            rf"\s+{_NAME}\s*:", line
        ):
            statements[section][-1] += " " + line.strip()
        else:
            statements[section].append(line.strip())
    if not ended:
        raise LpSyntaxError("missing End")
    objs = statements["min"] + statements["max"]
    if len(objs) != 1:
        raise LpSyntaxError("expected exactly one objective")
    sense = "min" if statements["min"] else "max"
    obj = objs[0]
    if ":" in obj:
        obj = obj.split(":", 1)[1]
    model = LpModel(sense, _parse_linear(obj, "objective"))
    names = set()
    for stmt in statements["st"]:
        m = re.fullmatch(rf"({_NAME})\s*:\s*(.*?)\s*(<=|>=|=<|=>|=|<|>)\s*([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)", stmt)
        if not m:
            raise LpSyntaxError(f"malformed constraint {stmt!r}")
        name, lhs, op, rhs = m.groups()
        if name in names:
            raise LpSyntaxError(f"duplicate constraint name {name}")
        names.add(name)
        op = {"=<": "<=", "<": "<=", "=>": ">=", ">": ">="}.get(op, op)
        model.constraints.append((name, _parse_linear(lhs, name), op, float(rhs)))
    model.binaries = statements["bin"]
    for b in model.binaries:
        if not re.fullmatch(_NAME, b):
            raise LpSyntaxError(f"bad variable name {b!r}")
    return model
