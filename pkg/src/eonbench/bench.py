"""Experiment harness: small-scale verification, extrapolation audit and
comparison distortion.

Every experiment runs the same per-instance pipeline (exact and heuristic
RSA, exact and heuristic RWA) and differs only in how the report is read.
Instances are independent; with ``threads > 1`` they run in worker
processes and are reassembled by instance index, so reports do not depend
on the thread hint. Exact runs stop on a node budget, which keeps results
reproducible; the time limit is only a safety net.
"""

from __future__ import annotations

import csv
import io
import json
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from importlib import resources
from typing import Optional

from .exact import SolverLimits, Status, lower_bound, solve_rsa_exact, solve_rwa_exact
from .heuristics import GaConfig, MsfConfig, ga_rwa_solve, msf_solve
from .spectrum import SpectrumGrid, fitness, rsa_grid, rwa_grid, used_slice_count, validate_assignment
from .topology import resolve_topology
from .traffic import generate_traffic, to_rwa_demands


class GapError(ValueError):
    """Heuristic beat a proven optimum or bound: a solver bug."""


def gap_percent(optimal: int, heuristic: int) -> float:
    if optimal < 1:
        raise GapError("reference value must be >= 1")
    if heuristic < optimal:
        raise GapError(f"heuristic {heuristic} below reference {optimal}")
    return 100.0 * (heuristic - optimal) / optimal


def _gap_exact(optimal: int, heuristic: int) -> Fraction:
    gap_percent(optimal, heuristic)
    return Fraction(100 * (heuristic - optimal), optimal)


def bandwidth_ghz(objective: int, grid: SpectrumGrid) -> float:
    if objective < 0:
        raise ValueError("objective must be >= 0")
    return objective * grid.slot_width_ghz


def spectral_saving_percent(rsa_bw: float, rwa_bw: float) -> float:
    """Saving of the flexible grid relative to the fixed grid; may be negative."""
    if rsa_bw <= 0 or rwa_bw <= 0:
        raise ValueError("bandwidths must be positive")
    return 100.0 * (rwa_bw - rsa_bw) / rwa_bw


def _saving_exact(rsa_bw: Fraction, rwa_bw: Fraction) -> Fraction:
    return 100 * (rwa_bw - rsa_bw) / rwa_bw


@dataclass(frozen=True)
class ExperimentConfig:
    topology: str = "six_node"
    instance_count: int = 10
    demands_per_instance: int = 8
    slice_min: int = 1
    slice_max: int = 4
    base_seed: int = 0
    rsa_slots: int = 80
    rwa_slots: int = 40
    limits: SolverLimits = field(default_factory=SolverLimits)
    msf_k_paths: int = 3
    ga: GaConfig = field(default_factory=GaConfig)
    gap_metric: str = "used"
    threads: int = 1

    def __post_init__(self):
        if self.instance_count < 1:
            raise ValueError("instance_count must be >= 1")
        if self.gap_metric not in ("used", "fitness"):
            raise ValueError("gap_metric is 'used' or 'fitness'")
        if isinstance(self.limits, dict):
            object.__setattr__(self, "limits", SolverLimits(**self.limits))
        if isinstance(self.ga, dict):
            object.__setattr__(self, "ga", GaConfig(**self.ga))

    def seed(self, index: int) -> int:
        return self.base_seed + index

    @property
    def rsa_grid(self) -> SpectrumGrid:
        return rsa_grid(self.rsa_slots)

    @property
    def rwa_grid(self) -> SpectrumGrid:
        return rwa_grid(self.rwa_slots)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))


def default_config(name: str) -> ExperimentConfig:
    """Shipped configs: ``small`` (six_node) and ``audit`` (cost239)."""
    text = resources.files("eonbench.data").joinpath(f"{name}.json").read_text()
    return ExperimentConfig.from_json(text)


@dataclass
class InstanceResult:
    index: int
    seed: int
    demands: int = 0
    total_slices: int = 0
    rsa_status: str = ""
    rsa_exact: Optional[int] = None
    rsa_bound: int = 0
    rsa_lb: int = 0
    rsa_nodes: int = 0
    msf_used: int = 0
    msf_fitness: int = 0
    rwa_status: str = ""
    rwa_exact: Optional[int] = None
    rwa_bound: int = 0
    rwa_lb: int = 0
    rwa_nodes: int = 0
    ga_wavelengths: int = 0
    violations: int = 0
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    @property
    def rsa_proven(self) -> bool:
        return self.rsa_status == Status.OPTIMAL.value

    @property
    def rwa_proven(self) -> bool:
        return self.rwa_status == Status.OPTIMAL.value


def run_instance(cfg: ExperimentConfig, index: int) -> InstanceResult:
    seed = cfg.seed(index)
    row = InstanceResult(index, seed)
    try:
        topo = resolve_topology(cfg.topology)
        tm = generate_traffic(
            topo, cfg.demands_per_instance, cfg.slice_min, cfg.slice_max, seed, f"{cfg.topology}-{seed}"
        )
        rw = to_rwa_demands(tm)
        row.demands, row.total_slices = len(tm), tm.total_slices

        rsa = solve_rsa_exact(topo, tm, cfg.rsa_grid, cfg.limits)
        row.rsa_status, row.rsa_exact = rsa.status.value, rsa.objective
        row.rsa_bound, row.rsa_lb, row.rsa_nodes = rsa.lower_bound, lower_bound(topo, tm), rsa.stats.nodes

        msf = msf_solve(topo, tm, MsfConfig(cfg.msf_k_paths, cfg.rsa_grid))
        row.msf_used, row.msf_fitness = used_slice_count(msf), fitness(msf)

        rwa = solve_rwa_exact(topo, rw, cfg.limits, cfg.rwa_grid)
        row.rwa_status, row.rwa_exact = rwa.status.value, rwa.objective
        row.rwa_bound, row.rwa_lb, row.rwa_nodes = rwa.lower_bound, lower_bound(topo, rw), rwa.stats.nodes

        ga = ga_rwa_solve(topo, rw, replace(cfg.ga, seed=cfg.ga.seed + index, grid=cfg.rwa_grid))
        row.ga_wavelengths = used_slice_count(ga.assignment)

        checks = [(tm, msf), (rw, ga.assignment)]
        checks += [(tm, rsa.solution)] if rsa.solution else []
        checks += [(rw, rwa.solution)] if rwa.solution else []
        row.violations = sum(len(validate_assignment(topo, t, a)) for t, a in checks)
    except Exception as exc:  # one failing instance must not sink the experiment
        row.error = f"{type(exc).__name__}: {exc}"
        row.error += " | " + traceback.format_exc(limit=1).strip().splitlines()[-1]
    return row


def run_instances(cfg: ExperimentConfig) -> list[InstanceResult]:
    indices = range(cfg.instance_count)
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(run_instance, [cfg] * cfg.instance_count, indices))
    else:
        rows = [run_instance(cfg, i) for i in indices]
    return sorted(rows, key=lambda r: r.index)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, Fraction):
        den = value.denominator
        for p in (2, 5):
            while den % p == 0:
                den //= p
        if den == 1:
            text = f"{float(value):.10f}".rstrip("0").rstrip(".")
            return text if text not in ("-0", "") else "0"
        # Non-terminating decimals stay exact as p/q.
        return f"{value.numerator}/{value.denominator}"
    return str(value)


def _short(value) -> str:
    text = _fmt(value)
    return f"{float(value):.2f}" if "/" in text else text


@dataclass
class Row:
    """One report line, with every derived quantity in exact arithmetic."""

    result: InstanceResult
    heuristic_rsa: int
    rsa_reference: Optional[int]
    rsa_basis: str
    gap_rsa: Optional[Fraction]
    rwa_reference: Optional[int]
    rwa_basis: str
    gap_rwa: Optional[Fraction]
    bw_rsa_heuristic: Fraction
    bw_rwa_heuristic: Fraction
    bw_rsa_optimal: Optional[Fraction]
    bw_rwa_optimal: Optional[Fraction]
    saving_heuristic: Optional[Fraction]
    saving_optimal: Optional[Fraction]

    @property
    def distortion(self) -> Optional[Fraction]:
        if self.saving_heuristic is None or self.saving_optimal is None:
            return None
        return self.saving_optimal - self.saving_heuristic

    @property
    def negative_heuristic_saving(self) -> bool:
        return self.saving_heuristic is not None and self.saving_heuristic < 0

    @property
    def sign_flip(self) -> bool:
        return self.negative_heuristic_saving and self.saving_optimal is not None and self.saving_optimal > 0


def _reference(proven: bool, exact: Optional[int], bound: int):
    if proven:
        return exact, "optimal"
    return bound, "bound"


def build_row(r: InstanceResult, cfg: ExperimentConfig) -> Row:
    rsa_w = Fraction(cfg.rsa_grid.slot_width_ghz)
    rwa_w = Fraction(cfg.rwa_grid.slot_width_ghz)
    heur_rsa = r.msf_fitness if cfg.gap_metric == "fitness" else r.msf_used
    rsa_ref, rsa_basis = _reference(r.rsa_proven, r.rsa_exact, r.rsa_bound)
    rwa_ref, rwa_basis = _reference(r.rwa_proven, r.rwa_exact, r.rwa_bound)
    bw_rsa_h, bw_rwa_h = heur_rsa * rsa_w, r.ga_wavelengths * rwa_w
    bw_rsa_o = r.rsa_exact * rsa_w if r.rsa_proven else None
    bw_rwa_o = r.rwa_exact * rwa_w if r.rwa_proven else None
    sav_h = _saving_exact(bw_rsa_h, bw_rwa_h) if bw_rsa_h > 0 and bw_rwa_h > 0 else None
    sav_o = _saving_exact(bw_rsa_o, bw_rwa_o) if bw_rsa_o and bw_rwa_o else None
    return Row(
        r, heur_rsa,
        rsa_ref, rsa_basis, _gap_exact(rsa_ref, heur_rsa) if rsa_ref else None,
        rwa_ref, rwa_basis, _gap_exact(rwa_ref, r.ga_wavelengths) if rwa_ref else None,
        bw_rsa_h, bw_rwa_h, bw_rsa_o, bw_rwa_o, sav_h, sav_o,
    )


CSV_COLUMNS = [
    "instance", "seed", "demands", "total_slices",
    "rsa_status", "optimal_rsa", "rsa_bound", "rsa_lower_bound", "rsa_nodes",
    "heuristic_rsa", "msf_used", "msf_fitness", "rsa_gap_basis", "gap_rsa",
    "rwa_status", "optimal_rwa", "rwa_bound", "rwa_lower_bound", "rwa_nodes",
    "heuristic_rwa", "rwa_gap_basis", "gap_rwa",
    "bw_rsa_heuristic_ghz", "bw_rwa_heuristic_ghz", "bw_rsa_optimal_ghz", "bw_rwa_optimal_ghz",
    "saving_heuristic", "saving_optimal", "distortion", "negative_heuristic_saving", "sign_flip",
    "violations", "error",
]


def _gap_summary(gaps, bases):
    values = [g for g in gaps if g is not None]
    out = {
        "mean_gap": sum(values, Fraction(0)) / len(values) if values else None,
        "max_gap": max(values) if values else None,
        "proven_instances": sum(1 for b in bases if b == "optimal"),
        "bound_based_instances": sum(1 for b in bases if b == "bound"),
    }
    proven = [g for g, b in zip(gaps, bases) if b == "optimal" and g is not None]
    bound = [g for g, b in zip(gaps, bases) if b == "bound" and g is not None]
    out["mean_gap_proven"] = sum(proven, Fraction(0)) / len(proven) if proven else None
    out["mean_gap_bound_based"] = sum(bound, Fraction(0)) / len(bound) if bound else None
    out["optimal_hits"] = sum(1 for g, b in zip(gaps, bases) if b == "optimal" and g == 0)
    return out


@dataclass
class ExperimentReport:
    experiment: str
    config: ExperimentConfig
    rows: list[Row]
    violations: list[str] = field(default_factory=list)

    @property
    def aggregates(self) -> dict:
        ok = [r for r in self.rows if r.result.ok]
        rsa = _gap_summary([r.gap_rsa for r in ok], [r.rsa_basis for r in ok])
        rwa = _gap_summary([r.gap_rwa for r in ok], [r.rwa_basis for r in ok])
        savings_h = [r.saving_heuristic for r in ok if r.saving_heuristic is not None]
        distortions = [r.distortion for r in ok if r.distortion is not None]
        return {
            "instances": len(self.rows),
            "failed": len(self.rows) - len(ok),
            "rsa": rsa,
            "rwa": rwa,
            "mean_saving_heuristic": sum(savings_h, Fraction(0)) / len(savings_h) if savings_h else None,
            "mean_distortion": sum(distortions, Fraction(0)) / len(distortions) if distortions else None,
            "negative_heuristic_savings": sum(1 for r in ok if r.negative_heuristic_saving),
            "sign_flips": sum(1 for r in ok if r.sign_flip),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            r = row.result
            values = [
                r.index + 1, r.seed, r.demands, r.total_slices,
                r.rsa_status, r.rsa_exact if r.rsa_proven else None, r.rsa_bound, r.rsa_lb, r.rsa_nodes,
                row.heuristic_rsa, r.msf_used, r.msf_fitness, row.rsa_basis, row.gap_rsa,
                r.rwa_status, r.rwa_exact if r.rwa_proven else None, r.rwa_bound, r.rwa_lb, r.rwa_nodes,
                r.ga_wavelengths, row.rwa_basis, row.gap_rwa,
                row.bw_rsa_heuristic, row.bw_rwa_heuristic, row.bw_rsa_optimal, row.bw_rwa_optimal,
                row.saving_heuristic, row.saving_optimal, row.distortion,
                row.negative_heuristic_saving, row.sign_flip,
                r.violations, r.error,
            ]
            w.writerow([_fmt(v) for v in values])
        return buf.getvalue()

    def to_markdown(self) -> str:
        def cell(proven, exact, bound):
            return str(exact) if proven else f">={bound} ({'no solution' if exact is None else exact})"

        lines = [f"### {self.experiment}: {self.config.topology}, "
                 f"{self.config.instance_count} x {self.config.demands_per_instance} demands", ""]
        if self.experiment == "distortion":
            lines += [
                "| Traffic Instance | Heuristic saving (%) | Optimal saving (%) | Distortion (pp) | Sign flip |",
                "|---|---|---|---|---|",
            ]
            for row in self.rows:
                lines.append(
                    f"| {row.result.index + 1} | {_short(row.saving_heuristic) or '-'} | "
                    f"{_short(row.saving_optimal) or '-'} | {_short(row.distortion) or '-'} | "
                    f"{'yes' if row.sign_flip else 'no'} |"
                )
        else:
            lines += [
                "| Traffic Instance | Optimal RSA | Heuristic RSA | Optimal RWA | Heuristic RWA |",
                "|---|---|---|---|---|",
            ]
            for row in self.rows:
                r = row.result
                if not r.ok:
                    lines.append(f"| {r.index + 1} | error | error | error | error |")
                    continue
                lines.append(
                    f"| {r.index + 1} | {cell(r.rsa_proven, r.rsa_exact, r.rsa_bound)} | {row.heuristic_rsa} | "
                    f"{cell(r.rwa_proven, r.rwa_exact, r.rwa_bound)} | {r.ga_wavelengths} |"
                )
        agg = self.aggregates
        lines += [
            "",
            f"RSA mean gap {_short(agg['rsa']['mean_gap'])}% (proven {agg['rsa']['proven_instances']}, "
            f"bound-based {agg['rsa']['bound_based_instances']}), optimal hits {agg['rsa']['optimal_hits']}",
            f"RWA mean gap {_short(agg['rwa']['mean_gap'])}% (proven {agg['rwa']['proven_instances']}, "
            f"bound-based {agg['rwa']['bound_based_instances']}), optimal hits {agg['rwa']['optimal_hits']}",
        ]
        return "\n".join(lines) + "\n"


def chain_violations(rows: list[Row]) -> list[str]:
    """lower_bound <= proven optimum <= heuristic, per instance and problem."""
    out = []
    for row in rows:
        r = row.result
        if not r.ok:
            continue
        n = r.index + 1
        for name, lb, bound, proven, exact, heur in (
            ("rsa", r.rsa_lb, r.rsa_bound, r.rsa_proven, r.rsa_exact, row.heuristic_rsa),
            ("rwa", r.rwa_lb, r.rwa_bound, r.rwa_proven, r.rwa_exact, r.ga_wavelengths),
        ):
            if lb > bound:
                out.append(f"instance {n} {name}: lower_bound {lb} > solver bound {bound}")
            if bound > heur:
                out.append(f"instance {n} {name}: bound {bound} > heuristic {heur}")
            if proven and not lb <= exact <= heur:
                out.append(f"instance {n} {name}: chain broken {lb} <= {exact} <= {heur}")
            if exact is not None and bound > exact:
                out.append(f"instance {n} {name}: bound {bound} > exact {exact}")
        if r.violations:
            out.append(f"instance {n}: {r.violations} validator violations")
    return out


def _report(name: str, cfg: ExperimentConfig) -> ExperimentReport:
    results = run_instances(cfg)
    rows = []
    violations = []
    for res in results:
        try:
            rows.append(build_row(res, cfg))
        except GapError as exc:
            res.error = f"GapError: {exc}"
            violations.append(f"instance {res.index + 1}: {exc}")
            rows.append(_error_row(res))
    violations += chain_violations(rows)
    return ExperimentReport(name, cfg, rows, violations)


def _error_row(res: InstanceResult) -> Row:
    zero = Fraction(0)
    return Row(res, 0, None, "", None, None, "", None, zero, zero, None, None, None, None)


def run_small_scale(cfg: ExperimentConfig) -> ExperimentReport:
    return _report("small", cfg)


def run_extrapolation_audit(cfg: ExperimentConfig) -> ExperimentReport:
    return _report("audit", cfg)


def run_comparison_distortion(cfg: ExperimentConfig) -> ExperimentReport:
    return _report("distortion", cfg)


EXPERIMENTS = {
    "small": run_small_scale,
    "audit": run_extrapolation_audit,
    "distortion": run_comparison_distortion,
}
