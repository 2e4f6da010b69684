"""
commands.py

Command-line front end: argument parsing, the run configuration, and the four subcommands
(solve, export, analyze-sparsity, sweep-h). Every command returns a process exit code; failures are
reported as one JSON object on stderr.
"""

# Standard Library Imports
import argparse
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

# Third-Party Library Imports
import numpy as np
import pandas as pd

# Local Application Imports
from src.common import (
    AlgorithmSettings,
    CommandName,
    Config,
    CostForm,
    Hierarchy,
    ObjectiveMode,
    SolverChoice,
    SolverSettings,
    SweepRow,
    complex_basis_size,
    logger,
    real_basis_size,
    to_json,
    write_text,
)
from src.common.constants import (
    EXIT_BOUND_ONLY,
    EXIT_ERROR,
    EXIT_GLOBAL_OPTIMAL,
    EXIT_INFEASIBLE,
    EXIT_USAGE,
    HIERARCHIES,
    MAX_RELAXATION_ORDER,
)
from src.core import (
    AlgorithmError,
    BoundOnly,
    GlobalSolution,
    InfeasibleRelaxation,
    run_algorithm1,
    solve_local,
)
from src.integrations import ExternalSolverConfig, ExternalSolverError
from src.network import CaseError, InfeasibleCaseError, NetworkCase, load_case, preprocess_low_impedance
from src.relaxation import RelaxationOptions, assemble_complex, assemble_real, sparsity_structure
from src.sdp import SDPError, export_sdpa
from src.sparsity import predicted_block_sizes


class UsageError(Exception):
    """Invalid command-line usage: bad flag combinations or missing inputs."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


@dataclass(frozen=True)
class RunConfig:
    """
    Resolved options of one CLI invocation.

    Attributes:
        command (CommandName): Subcommand.
        case_path (Path): MATPOWER case file.
        hierarchy (Union[Hierarchy, str]): "real", "complex", or "both" for sweep-h.
        objective (ObjectiveMode): Generation cost or losses.
        h (Optional[int]): Buses incremented per iteration; None selects the hierarchy default.
        h_values (Tuple[int, ...]): Values of h for sweep-h.
        eps_mva (float): Mismatch tolerance in MVA.
        low_z_threshold (float): Impedance below which buses are merged; 0 disables merging.
        sphere (bool): Add the norm equality to the complex hierarchy.
        solver (SolverChoice): SDP backend.
        max_gamma (int): Order cap.
        max_iter (int): Iteration cap of the escalation loop.
        out (Optional[Path]): Output file; a default under the output directory when omitted.
        orders (int): Uniform relaxation order for export.
        workers (int): Parallel runs for sweep-h.
        cost_form (CostForm): Form of quartic terms.
        merge_cliques (bool): Coarsen the clique tree.
        local_check (bool): Compare with a multi-start local solution.
    """

    command: CommandName
    case_path: Path
    hierarchy: Union[Hierarchy, str] = "complex"
    objective: ObjectiveMode = "cost"
    h: Optional[int] = None
    h_values: Tuple[int, ...] = tuple(range(1, 9))
    eps_mva: float = 1.0
    low_z_threshold: float = 0.0
    sphere: bool = False
    solver: SolverChoice = "embedded"
    max_gamma: int = 3
    max_iter: int = 15
    out: Optional[Path] = None
    orders: int = 1
    workers: int = 1
    cost_form: CostForm = "auto"
    merge_cliques: bool = False
    local_check: bool = False

    def __post_init__(self) -> None:
        if self.h is not None and self.h < 1:
            raise UsageError(f"--h must be at least 1, got {self.h}.")
        if not self.h_values or min(self.h_values) < 1:
            raise UsageError("--h-values must list at least one value, all at least 1.")
        if self.eps_mva <= 0:
            raise UsageError(f"--eps-mva must be positive, got {self.eps_mva}.")
        if self.low_z_threshold < 0:
            raise UsageError(f"--low-z-threshold must be nonnegative, got {self.low_z_threshold}.")
        if not 1 <= self.max_gamma <= MAX_RELAXATION_ORDER:
            raise UsageError(f"--max-gamma must lie in [1, {MAX_RELAXATION_ORDER}], got {self.max_gamma}.")
        if not 1 <= self.orders <= MAX_RELAXATION_ORDER:
            raise UsageError(f"--orders must lie in [1, {MAX_RELAXATION_ORDER}], got {self.orders}.")
        if self.max_iter < 1 or self.workers < 1:
            raise UsageError("--max-iter and --workers must be positive.")
        if not self.case_path.is_file():
            raise UsageError(f"Case file {self.case_path} does not exist.")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            command=args.command,
            case_path=Path(args.case),
            hierarchy=args.hierarchy,
            objective=args.objective,
            h=getattr(args, "h", None),
            h_values=tuple(getattr(args, "h_values", None) or range(1, 9)),
            eps_mva=args.eps_mva,
            low_z_threshold=args.low_z_threshold,
            sphere=args.sphere,
            solver=getattr(args, "solver", "embedded"),
            max_gamma=getattr(args, "max_gamma", 3),
            max_iter=getattr(args, "max_iter", 15),
            out=Path(args.out) if args.out else None,
            orders=getattr(args, "orders", 1),
            workers=getattr(args, "workers", 1),
            cost_form=args.cost_form,
            merge_cliques=args.merge_cliques,
            local_check=getattr(args, "local_check", False),
        )

    def relaxation_options(self) -> RelaxationOptions:
        return RelaxationOptions(
            objective=self.objective,
            cost_form=self.cost_form,
            sphere=self.sphere,
            merge_cliques=self.merge_cliques,
        )

    def algorithm_settings(self, config: Config) -> AlgorithmSettings:
        return replace(
            config.algorithm_settings, eps_mva=self.eps_mva, max_gamma=self.max_gamma, max_iterations=self.max_iter
        )

    def output_path(self, config: Config, suffix: str) -> Path:
        if self.out is not None:
            return self.out
        return config.output_dir / f"{self.case_path.stem}_{suffix}"


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="moment-opf",
        description="Global AC optimal power flow through sparse moment relaxations.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser, hierarchies: Sequence[str]) -> None:
        sub.add_argument("case", help="MATPOWER case file")
        sub.add_argument("--hierarchy", choices=hierarchies, default=hierarchies[-1])
        sub.add_argument("--objective", choices=("cost", "loss"), default="cost")
        sub.add_argument("--eps-mva", type=float, default=1.0, help="mismatch tolerance in MVA")
        sub.add_argument("--low-z-threshold", type=float, default=0.0, help="merge lines below this impedance (pu)")
        sub.add_argument("--sphere", action="store_true", help="add the norm equality (complex hierarchy)")
        sub.add_argument("--cost-form", choices=("auto", "schur", "direct", "both"), default="auto")
        sub.add_argument("--merge-cliques", action="store_true")
        sub.add_argument("--out", help="output file")

    def escalation(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--solver", choices=("embedded", "external"), default="embedded")
        sub.add_argument("--max-gamma", type=int, default=3)
        sub.add_argument("--max-iter", type=int, default=15, help="iteration cap of the escalation loop")

    solve_parser = subparsers.add_parser("solve", help="run the order-escalation loop on a case")
    common(solve_parser, HIERARCHIES)
    escalation(solve_parser)
    solve_parser.add_argument("--h", type=int, default=None, help="buses incremented per iteration")
    solve_parser.add_argument("--local-check", action="store_true", help="compare with a local solver")

    export_parser = subparsers.add_parser("export", help="write the relaxation in SDPA sparse format")
    common(export_parser, HIERARCHIES)
    export_parser.add_argument("--orders", type=int, default=1, help="uniform relaxation order")

    analyze_parser = subparsers.add_parser("analyze-sparsity", help="report cliques and predicted block sizes")
    common(analyze_parser, HIERARCHIES)

    sweep_parser = subparsers.add_parser("sweep-h", help="iterations and solver time against h")
    common(sweep_parser, (*HIERARCHIES, "both"))
    escalation(sweep_parser)
    sweep_parser.add_argument("--h-values", type=int, nargs="+", default=None)
    sweep_parser.add_argument("--workers", type=int, default=1)
    return parser


def _error(exc: Exception) -> str:
    message = getattr(exc, "message", None) or str(exc)
    return to_json({"error": type(exc).__name__, "message": message})


def _load(cfg: RunConfig, case: Optional[NetworkCase] = None) -> Tuple[NetworkCase, Tuple[int, ...]]:
    case = case or load_case(cfg.case_path)
    if cfg.low_z_threshold > 0:
        merged = preprocess_low_impedance(case, cfg.low_z_threshold)
        return merged.case, merged.bus_map
    return case, tuple(range(case.n))


def _external(cfg: RunConfig, config: Config) -> Optional[ExternalSolverConfig]:
    if cfg.solver != "external":
        return None
    if config.external_solver_config is None:
        raise UsageError("--solver external needs MOMENT_OPF_SDPA_SOLVER to name a solver binary.")
    return config.external_solver_config


def _voltage_table(original: NetworkCase, bus_map: Sequence[int], voltages: np.ndarray) -> List[Dict[str, float]]:
    rows = []
    for k, bus in enumerate(original.buses):
        v = complex(voltages[bus_map[k]])
        rows.append(
            {
                "bus": bus.bus_id,
                "vm": abs(v),
                "va_deg": float(np.degrees(np.angle(v))),
                "re": v.real,
                "im": v.imag,
            }
        )
    return rows


def cmd_solve(cfg: RunConfig, config: Config) -> int:
    """
    Run the escalation loop and write the JSON report.

    Returns:
        int: 0 for a certified global optimum, 3 when only a bound was obtained.
    """
    original = load_case(cfg.case_path)
    case, bus_map = _load(cfg, original)
    options = cfg.relaxation_options()
    result = run_algorithm1(
        case,
        cfg.hierarchy,  # type: ignore[arg-type]
        settings=cfg.algorithm_settings(config),
        h=cfg.h,
        options=options,
        solver_settings=config.solver_settings,
        external=_external(cfg, config),
    )

    report: Dict[str, Any] = {
        "case": case.name,
        "hierarchy": cfg.hierarchy,
        "objective_mode": cfg.objective,
        "buses": case.n,
        "max_clique_size": sparsity_structure(case, options).max_clique_size,
        "bound": result.bound,
        "iterations": list(result.state.log),
        "orders": list(result.state.orders),
    }
    if isinstance(result, GlobalSolution):
        report.update(
            status="global_optimal",
            objective=result.objective,
            gap=result.gap,
            max_violation=result.feasibility.summary(),
            voltages=_voltage_table(original, bus_map, result.voltages),
        )
        exit_code = EXIT_GLOBAL_OPTIMAL
    else:
        report.update(status="bound_only", reason=result.reason, objective=None, gap=None)
        if result.mismatch is not None:
            report["max_mismatch_mva"] = result.mismatch.max_mismatch
        exit_code = EXIT_BOUND_ONLY

    if cfg.local_check:
        local = solve_local(case, cfg.objective, eps_mva=cfg.eps_mva)
        report["local_objective"] = local.objective if local is not None else None
        if local is not None and isinstance(result, GlobalSolution):
            report["local_gap"] = (local.objective - result.objective) / max(1.0, abs(local.objective))

    path = write_text(cfg.output_path(config, f"{cfg.hierarchy}.json"), to_json(report))
    sys.stdout.write(_summary(report, result) + "\n")
    logger.info(f"Solution report written to {path}")
    return exit_code


def _summary(report: Dict[str, Any], result: Union[GlobalSolution, BoundOnly]) -> str:
    log = pd.DataFrame(report["iterations"])
    lines = [
        f"case {report['case']} ({report['hierarchy']} hierarchy): {report['status']}",
        f"  bound      {report['bound']:.10g}",
    ]
    if isinstance(result, GlobalSolution):
        lines.append(f"  objective  {result.objective:.10g}")
        lines.append(f"  gap        {result.gap:.3e}")
    else:
        lines.append(f"  reason     {result.reason}")
    lines.append(f"  iterations {len(log)}, largest clique {report['max_clique_size']}")
    if not log.empty:
        columns = ["iteration", "gamma_max", "status", "objective", "max_mismatch_mva", "solver_time", "max_block_dim"]
        lines.append(log[columns].to_string(index=False))
    return "\n".join(lines)


def cmd_export(cfg: RunConfig, config: Config) -> int:
    """Assemble the relaxation at a uniform order and write it as SDPA text."""
    case, _ = _load(cfg)
    options = cfg.relaxation_options()
    assemble = assemble_real if cfg.hierarchy == "real" else assemble_complex
    relaxation = assemble(case, sparsity_structure(case, options), [cfg.orders] * case.n, options)
    path = write_text(
        cfg.output_path(config, f"{cfg.hierarchy}_g{cfg.orders}.dat-s"), export_sdpa(relaxation.to_sdp_problem())
    )
    census = relaxation.census()
    sys.stdout.write(
        to_json(
            {
                "file": str(path),
                "variables": census.num_variables,
                "blocks": sum(census.num_blocks.values()),
                "blocks_by_kind": census.num_blocks,
                "max_block_dim": census.max_block_dim,
                "linear_constraints": census.num_linear,
                "equalities": census.num_equalities,
            }
        )
        + "\n"
    )
    return EXIT_GLOBAL_OPTIMAL


def sparsity_report(case: NetworkCase, options: RelaxationOptions) -> Dict[str, Any]:
    """Clique statistics with sparse and dense block dimensions at orders 1 to 3 (real representation)."""
    structure = sparsity_structure(case, options)
    sizes = Counter(len(clique) for clique in structure.cliques)
    predicted: Dict[str, Dict[str, Any]] = {}
    for order in range(1, MAX_RELAXATION_ORDER + 1):
        real = predicted_block_sizes(structure, order, "real", case.ref_bus)
        complex_ = [2 * d for d in predicted_block_sizes(structure, order, "complex", case.ref_bus)]
        predicted[str(order)] = {
            "real_max": max(real),
            "complex_max": max(complex_),
            "real_dense": real_basis_size(case.n, order),
            "complex_dense": 2 * complex_basis_size(case.n, order),
        }
    return {
        "case": case.name,
        "buses": case.n,
        "lines": len(case.lines),
        "cliques": len(structure.cliques),
        "max_clique_size": structure.max_clique_size,
        "clique_histogram": {str(size): count for size, count in sorted(sizes.items())},
        "fill_edges": [list(edge) for edge in structure.fill_edges],
        "predicted_block_dims": predicted,
    }


def cmd_analyze(cfg: RunConfig, config: Config) -> int:
    """Write the sparsity report as JSON, or a per-clique CSV when --out ends in .csv."""
    case, _ = _load(cfg)
    options = cfg.relaxation_options()
    report = sparsity_report(case, options)
    if cfg.out is not None and cfg.out.suffix == ".csv":
        structure = sparsity_structure(case, options)
        table = pd.DataFrame(
            {
                "clique": range(len(structure.cliques)),
                "size": [len(c) for c in structure.cliques],
                "buses": [" ".join(str(case.buses[k].bus_id) for k in c) for c in structure.cliques],
                **{
                    f"real_dim_g{order}": predicted_block_sizes(structure, order, "real", case.ref_bus)
                    for order in range(1, MAX_RELAXATION_ORDER + 1)
                },
                **{
                    f"complex_dim_g{order}": [
                        2 * d for d in predicted_block_sizes(structure, order, "complex", case.ref_bus)
                    ]
                    for order in range(1, MAX_RELAXATION_ORDER + 1)
                },
            }
        )
        write_text(cfg.out, table.to_csv(index=False))
    elif cfg.out is not None:
        write_text(cfg.out, to_json(report))
    sys.stdout.write(to_json(report) + "\n")
    return EXIT_GLOBAL_OPTIMAL


def _sweep_run(
    case: NetworkCase,
    hierarchy: Hierarchy,
    h: int,
    settings: AlgorithmSettings,
    options: RelaxationOptions,
    solver_settings: SolverSettings,
    external: Optional[ExternalSolverConfig],
) -> SweepRow:
    started = time.time()
    try:
        result = run_algorithm1(case, hierarchy, settings, h, options, solver_settings, external)
    except InfeasibleRelaxation:
        status, iterations, solver_time, gap, gamma_max = "infeasible", 0, 0.0, None, 0
    except (AlgorithmError, SDPError, ExternalSolverError) as e:
        logger.error(f"Sweep run {hierarchy} h={h} failed after {time.time() - started:.1f}s: {e}")
        status, iterations, solver_time, gap, gamma_max = f"error:{type(e).__name__}", 0, 0.0, None, 0
    else:
        log = result.state.log
        iterations = len(log)
        solver_time = float(sum(entry["solver_time"] for entry in log))
        gamma_max = max((entry["gamma_max"] for entry in log), default=0)
        if isinstance(result, GlobalSolution):
            status, gap = "global_optimal", result.gap
        else:
            status, gap = f"bound_only:{result.reason}", None
    return SweepRow(
        case=case.name,
        hierarchy=hierarchy,
        h=h,
        status=status,
        iterations=iterations,
        solver_time=solver_time,
        final_gap=gap,
        gamma_max=gamma_max,
        normalized_time=None,
    )


def normalize_sweep(rows: List[SweepRow]) -> pd.DataFrame:
    """Sweep table with solver times relative to the real hierarchy at h = 2, when that run exists."""
    table = pd.DataFrame(rows, columns=list(SweepRow.__annotations__))
    table = table.sort_values(["hierarchy", "h"], kind="stable").reset_index(drop=True)
    baseline = table[(table["hierarchy"] == "real") & (table["h"] == 2)]["solver_time"]
    if not baseline.empty and float(baseline.iloc[0]) > 0:
        table["normalized_time"] = table["solver_time"] / float(baseline.iloc[0])
    else:
        table["normalized_time"] = None
    return table


def cmd_sweep_h(cfg: RunConfig, config: Config) -> int:
    """Run the escalation loop for every (hierarchy, h) pair and write one CSV at the end."""
    case, _ = _load(cfg)
    hierarchies = HIERARCHIES if cfg.hierarchy == "both" else (cfg.hierarchy,)
    settings = cfg.algorithm_settings(config)
    options = cfg.relaxation_options()
    external = _external(cfg, config)
    jobs = [
        (case, hierarchy, h, settings, options, config.solver_settings, external)
        for hierarchy in hierarchies
        for h in cfg.h_values
    ]
    logger.info(f"Sweeping h over {list(cfg.h_values)} for {list(hierarchies)} with {cfg.workers} worker(s).")

    if cfg.workers == 1:
        rows = [_sweep_run(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
            rows = list(executor.map(_sweep_run, *zip(*jobs)))

    table = normalize_sweep(rows)
    path = write_text(cfg.output_path(config, "sweep_h.csv"), table.to_csv(index=False))
    sys.stdout.write(table.to_string(index=False) + "\n")
    logger.info(f"Sweep table written to {path}")
    return EXIT_GLOBAL_OPTIMAL


COMMANDS = {
    "solve": cmd_solve,
    "export": cmd_export,
    "analyze-sparsity": cmd_analyze,
    "sweep-h": cmd_sweep_h,
}


def run_command(args: argparse.Namespace, config: Config) -> int:
    """
    Dispatch a parsed command and map failures to exit codes.

    Returns:
        int: 0 success, 1 error, 2 usage, 3 bound only, 4 infeasible.
    """
    try:
        cfg = RunConfig.from_args(args)
        return COMMANDS[cfg.command](cfg, config)
    except UsageError as e:
        sys.stderr.write(_error(e) + "\n")
        return EXIT_USAGE
    except (InfeasibleCaseError, InfeasibleRelaxation) as e:
        logger.error(f"Infeasible: {e}")
        sys.stderr.write(_error(e) + "\n")
        return EXIT_INFEASIBLE
    except (CaseError, AlgorithmError, SDPError, ExternalSolverError, OSError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.stderr.write(_error(e) + "\n")
        return EXIT_ERROR
