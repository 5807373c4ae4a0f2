"""Command-line interface for retroptics.

Sub-commands:

* ``design``    engineer a retrodictive state for a target and a multiport
* ``decompose`` factorize a multiport into beam splitters
* ``simulate``  sample photocounts for an experiment configuration
* ``analyze``   estimate P(theta), moments or matrix elements from counts

Exit codes are 0 on success, 2 for user errors (bad input, missing files,
missing phase settings) and 1 for anything else.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from retroptics.config.presets import get_preset, list_presets, preset_kind
from retroptics.config.settings import DEFAULT_GRID_SIZE, get_log_level
from retroptics.logging_config import log_command, log_design_event, setup_logging
from retroptics.schemas import CommandResult, CountsFile, ExperimentConfig
from retroptics.tools.engineer import (
    DetectionPattern,
    characteristic_roots,
    design_target,
    optimize_first_column,
)
from retroptics.tools.experiments import (
    SimulationResult,
    analyze_element,
    analyze_moments,
    analyze_phase_distribution,
    monte_carlo,
)
from retroptics.tools.fock import FockVector
from retroptics.tools.multiport import (
    MultiportPlan,
    dft_matrix,
    realize,
    reck_decompose,
    two_bs_cascade,
    unitary_with_first_column,
    verify_plan,
)
from retroptics.tools.persistence import (
    _sanitize_filename,
    load_record,
    save_record,
    write_csv,
)
from retroptics.tools.phase import distribution_rows

logger = logging.getLogger(__name__)

NETLIST_HEADER = ["index", "p", "q", "theta", "phi", "reflectivity"]
COUNTS_HEADER = ["setting", "phase", "pattern", "count", "analytic_prob"]
HISTOGRAM_HEADER = ["theta", "density", "stderr", "analytic_density"]
DISTRIBUTION_HEADER = ["theta", "density"]

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2

USER_ERRORS = (ValueError, FileNotFoundError, ValidationError)


# --- input parsing ------------------------------------------------------------------


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ValueError(f"invalid amplitude '{text}'") from exc


def parse_target(text: str) -> FockVector:
    """
    Target state from a JSON file or an inline amplitude list.

    Inline lists are comma separated, lowest photon number first, and may hold
    complex entries such as ``1,0,-1`` or ``1,0.5+0.5j``. Files hold a
    FockVector document ``{"cutoff", "re", "im"}``, either bare or as the
    ``psi`` of a saved design record.

    Raises:
        FileNotFoundError: If TEXT names a JSON file that does not exist
        ValueError: If the amplitudes cannot be parsed
    """
    if text.endswith(".json") or Path(text).is_file():
        content = load_record(text)["content"]
        if "psi" in content:
            content = content["psi"]
        return FockVector.from_dict(content)
    parts = [part for part in text.split(",") if part.strip()]
    if not parts:
        raise ValueError("target needs at least one amplitude")
    return FockVector(np.array([_parse_complex(part) for part in parts]))


def _unitary_from_file(path: str) -> np.ndarray:
    content = load_record(path)["content"]
    if "elements" in content:
        return realize(MultiportPlan.from_dict(content))
    if "unitary" in content:
        content = content["unitary"]
    if "dim" not in content or "entries" not in content:
        raise ValueError(f"{path} holds neither a matrix nor a multiport plan")
    dim = int(content["dim"])
    entries = np.array([complex(re, im) for re, im in content["entries"]])
    if entries.size != dim * dim:
        raise ValueError(f"expected {dim * dim} matrix entries, got {entries.size}")
    return entries.reshape(dim, dim)


def resolve_unitary(choice: str, dim: int) -> np.ndarray:
    """
    Multiport matrix for ``dft``, ``dft:D``, ``two_bs`` or a JSON file.

    Args:
        choice: Multiport description
        dim: Number of modes used by a bare ``dft``

    Returns:
        np.ndarray: Unitary matrix
    """
    if choice == "dft":
        return dft_matrix(dim)
    if choice.startswith("dft:"):
        try:
            size = int(choice.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"invalid multiport '{choice}'") from exc
        return dft_matrix(size)
    if choice == "two_bs":
        return two_bs_cascade()
    return _unitary_from_file(choice)


def _preset_for(name: str, command: str) -> Dict[str, Any]:
    if preset_kind(name) != command:
        valid = [p for p in list_presets() if preset_kind(p) == command]
        raise ValueError(
            f"preset '{name}' is not a {command} preset; choose one of: {', '.join(valid)}"
        )
    return get_preset(name)


def _write_netlist(path: str, plan: MultiportPlan) -> str:
    return write_csv(path, NETLIST_HEADER, plan.netlist_rows())


# --- commands -----------------------------------------------------------------------


def run_design(args: argparse.Namespace) -> CommandResult:
    """Engineer the measurement that makes a target the retrodictive state."""
    preset: Dict[str, Any] = {}
    if args.preset:
        preset = _preset_for(args.preset, "design")
    if args.target:
        psi = parse_target(args.target)
    elif preset:
        psi = FockVector(np.asarray(preset["target"], dtype=complex))
    else:
        raise ValueError("design needs a TARGET or --preset")

    try:
        roots = characteristic_roots(psi)
    except ValueError as exc:
        if str(exc).startswith("no roots"):
            logger.info("Target has no photons; nothing to engineer")
            return CommandResult(status="ok", command="design", summary=str(exc))
        raise

    if args.pattern:
        pattern = DetectionPattern.parse(args.pattern)
    elif "pattern" in preset:
        pattern = DetectionPattern(tuple(preset["pattern"]))
    else:
        pattern = DetectionPattern.canonical(len(roots) + 1)
    if pattern.degree != len(roots):
        raise ValueError(
            f"pattern {pattern.counts} registers {pattern.degree} photons "
            f"but the target has degree {len(roots)}"
        )

    choice = args.unitary or preset.get("unitary", "dft")
    log_design_event(logger, len(roots), choice)
    if choice == "optimize":
        weights, _ = optimize_first_column(roots, pattern)
        U = unitary_with_first_column(np.sqrt(weights))
    else:
        U = resolve_unitary(choice, pattern.modes)

    target = design_target(psi, U, pattern)
    log_design_event(logger, len(roots), choice, target.efficiency)
    record = target.to_dict()

    paths: Dict[str, str] = {}
    if args.out:
        name = _sanitize_filename(args.preset or Path(args.out).stem)
        paths["target"] = save_record(args.out, "engineered_target", record, name)["filepath"]
    if args.netlist:
        plan = reck_decompose(target.unitary)
        verify_plan(plan, target.unitary)
        paths["netlist"] = _write_netlist(args.netlist, plan)

    summary = (
        f"P_psi = {target.efficiency:.6g}, "
        f"|kappa_bar|^2 = {record['kappa_bar_abs2']:.6g} "
        f"({pattern.modes} ports, pattern {','.join(map(str, pattern.counts))})"
    )
    return CommandResult(
        status="ok", command="design", paths=paths, summary=summary, data=record
    )


def run_decompose(args: argparse.Namespace) -> CommandResult:
    """Factorize a multiport into an ordered beam-splitter plan."""
    U = resolve_unitary(args.unitary, 3)
    plan = reck_decompose(U)
    if not verify_plan(plan, U):
        raise RuntimeError("decomposition does not reproduce the multiport")

    paths: Dict[str, str] = {}
    if args.out:
        paths["plan"] = save_record(args.out, "multiport_plan", plan.to_dict())["filepath"]
    if args.netlist:
        paths["netlist"] = _write_netlist(args.netlist, plan)
    summary = f"{len(plan.elements)} beam splitter(s) over {plan.dim} modes"
    return CommandResult(
        status="ok", command="decompose", paths=paths, summary=summary, data=plan.to_dict()
    )


def load_experiment_config(
    source: Optional[str], preset: Optional[str], overrides: Dict[str, Any]
) -> ExperimentConfig:
    """
    Experiment configuration from a JSON file or a simulate preset.

    Args:
        source: Path to a config document (bare or inside a record)
        preset: Simulate preset name, used when no source is given
        overrides: Field values that replace the loaded ones (None is skipped)

    Returns:
        ExperimentConfig: Validated configuration

    Raises:
        ValueError: If neither source nor preset is given
        ValidationError: If the merged document is invalid
    """
    if source:
        content = load_record(source)["content"]
        document = dict(content.get("config", content))
    elif preset:
        document = dict(_preset_for(preset, "simulate")["config"])
    else:
        raise ValueError("simulate needs a CONFIG file or --preset")
    document.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.model_validate(document)


def write_simulation(result: SimulationResult, out_dir: Path) -> Dict[str, str]:
    """
    Write counts, histogram and analytic summaries of one run.

    Returns:
        dict: Output kind -> path written
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    config = result.config.model_copy(update={"seed": result.seed})
    paths = {
        "counts_csv": write_csv(
            out_dir / "counts.csv", COUNTS_HEADER, [r.to_row() for r in result.records]
        )
    }
    counts = CountsFile(
        config=config,
        trials=config.trials,
        records=[r.to_dict() for r in result.records],  # type: ignore[misc]
    )
    paths["counts_json"] = save_record(
        out_dir / "counts.json", "counts", counts.model_dump(mode="json")
    )["filepath"]
    if result.histogram:
        paths["histogram"] = write_csv(
            out_dir / "histogram.csv",
            HISTOGRAM_HEADER,
            [row.to_row() for row in result.histogram],
        )
    analytic = dict(result.analytic, seed=result.seed)
    paths["analytic"] = save_record(out_dir / "analytic.json", "analytic", analytic)[
        "filepath"
    ]
    return paths


def run_simulate(args: argparse.Namespace) -> CommandResult:
    """Sample photocounts for a configured experiment."""
    overrides = {
        "trials": args.trials,
        "seed": args.seed,
        "detector_efficiency": args.eta,
        "workers": args.workers,
        "correct_efficiency": True if args.correct_efficiency else None,
    }
    config = load_experiment_config(args.config, args.preset, overrides)
    result = monte_carlo(config)
    paths = write_simulation(result, Path(args.out))

    summary = (
        f"{config.experiment}: {config.trials} trials per setting over "
        f"{len(config.phase_settings)} setting(s), seed {result.seed}"
    )
    data = {
        "experiment": config.experiment,
        "trials": config.trials,
        "seed": result.seed,
        "records": len(result.records),
    }
    return CommandResult(
        status="ok", command="simulate", paths=paths, summary=summary, data=data
    )


def run_analyze(args: argparse.Namespace) -> CommandResult:
    """Estimate phase properties of the signal from saved counts."""
    counts_file = CountsFile.model_validate(load_record(args.counts, "counts")["content"])
    paths: Dict[str, str] = {}

    if args.mode == "phase-dist":
        dist = analyze_phase_distribution(counts_file, args.source, args.grid_size)
        if args.out:
            paths["distribution"] = write_csv(
                args.out, DISTRIBUTION_HEADER, distribution_rows(dist)
            )
        data: Dict[str, Any] = {
            "grid_size": int(dist.grid.size),
            "integral": dist.integral(),
            "fourier": {
                str(q): [float(a.real), float(a.imag)]
                for q, a in sorted(dist.fourier.items())
            },
        }
        summary = f"P(theta) on {dist.grid.size} points, integral {dist.integral():.6g}"
    elif args.mode == "moments":
        data = analyze_moments(counts_file, args.lam, args.source)
        summary = (
            f"<cos {data['lam']} theta> = {data['cos']:.6g}, "
            f"<sin {data['lam']} theta> = {data['sin']:.6g}"
        )
    else:
        if args.photon_number is None:
            raise ValueError("dmelem needs --photon-number N")
        data = analyze_element(counts_file, args.photon_number, args.lam, args.source)
        summary = (
            f"rho_({data['N']},{data['N'] + data['lam']}) = "
            f"{data['re']:.6g} + {data['im']:.6g}i"
        )

    if args.out and args.mode != "phase-dist":
        paths["analysis"] = save_record(args.out, "analysis", data)["filepath"]
    return CommandResult(
        status="ok", command="analyze", paths=paths, summary=summary, data=data
    )


COMMANDS: Dict[str, Callable[[argparse.Namespace], CommandResult]] = {
    "design": run_design,
    "decompose": run_decompose,
    "simulate": run_simulate,
    "analyze": run_analyze,
}


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retroptics",
        description="Retrodictive state engineering and phase measurement in the Fock basis.",
    )
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Logging level (default: RETROPTICS_LOG_LEVEL or INFO)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--json", action="store_true", help="Print a JSON result on stdout")

    design = sub.add_parser("design", help="Engineer a retrodictive target state")
    design.add_argument(
        "target", nargs="?", help="Inline amplitudes (e.g. 1,1,1) or a FockVector JSON file"
    )
    design.add_argument("--preset", help="Design preset name")
    design.add_argument(
        "--unitary", help="dft, dft:D, two_bs, optimize or a matrix/plan JSON file"
    )
    design.add_argument("--pattern", help="Detection pattern, e.g. 0,1,1")
    design.add_argument("--out", help="Engineered-target JSON output")
    design.add_argument("--netlist", help="Reck netlist CSV output")
    add_common(design)

    decompose = sub.add_parser("decompose", help="Factorize a multiport into beam splitters")
    decompose.add_argument(
        "--unitary", default="dft:3", help="dft:D, two_bs or a matrix JSON file"
    )
    decompose.add_argument("--out", help="Multiport plan JSON output")
    decompose.add_argument("--netlist", help="Netlist CSV output")
    add_common(decompose)

    simulate = sub.add_parser("simulate", help="Monte Carlo photocount simulation")
    simulate.add_argument("config", nargs="?", help="Experiment configuration JSON")
    simulate.add_argument("--preset", help="Simulate preset name")
    simulate.add_argument("--trials", type=int, help="Trials per phase setting")
    simulate.add_argument("--seed", type=int, help="Base seed (default: RETROPTICS_SEED)")
    simulate.add_argument("--eta", type=float, help="Detector efficiency in (0, 1]")
    simulate.add_argument(
        "--correct-efficiency",
        action="store_true",
        help="Correct the histogram for detector efficiency",
    )
    simulate.add_argument("--workers", type=int, help="Sampling threads")
    simulate.add_argument("--out", required=True, help="Output directory")
    add_common(simulate)

    analyze = sub.add_parser("analyze", help="Estimate phase properties from counts")
    analyze.add_argument("counts", help="counts.json written by simulate")
    analyze.add_argument(
        "--mode", required=True, choices=["phase-dist", "moments", "dmelem"]
    )
    analyze.add_argument("--lam", type=int, help="Moment order / element offset")
    analyze.add_argument("--photon-number", type=int, help="N of rho_(N, N+lam)")
    analyze.add_argument("--source", default="counts", choices=["counts", "analytic"])
    analyze.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    analyze.add_argument("--out", help="CSV (phase-dist) or JSON output")
    add_common(analyze)

    return parser


def _parameters(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k not in ("command", "json")}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one CLI command.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        int: Process exit code
    """
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    setup_logging(log_level=args.log_level or get_log_level())
    parameters = _parameters(args)
    log_command(logger, args.command, parameters)

    code = EXIT_OK
    try:
        result = COMMANDS[args.command](args)
        log_command(logger, args.command, parameters, result=result.summary or "ok")
    except USER_ERRORS as exc:
        log_command(logger, args.command, parameters, error=exc)
        result = CommandResult(status="error", command=args.command, summary=str(exc))
        code = EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        logger.exception(f"Unexpected failure in {args.command}")
        log_command(logger, args.command, parameters, error=exc)
        result = CommandResult(status="error", command=args.command, summary=str(exc))
        code = EXIT_INTERNAL

    if args.json:
        print(result.model_dump_json(indent=2))
    elif code == EXIT_OK:
        print(result.summary)
        for kind, path in result.paths.items():
            print(f"  {kind}: {path}")
    else:
        print(f"error: {result.summary}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
