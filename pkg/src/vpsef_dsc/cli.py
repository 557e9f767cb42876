"""Command-line front end: run, validate, and compare scenarios.

Outputs are toolchain-neutral: trajectories as CSV (17 significant digits,
bit-exact round trip), metric and comparison reports as JSON, diagnostic
figures as PNG.  Exit codes: 0 success, 2 configuration error, 3
simulation failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .dsc import GainSingularityError
from .errors import ConfigError
from .model import check_gain_nonzero, check_monotone_assumption
from .scenarios import (
    BUILTIN_NAMES,
    ComparisonReport,
    Scenario,
    builtin,
    compare,
    load_scenario,
    run_scenario,
)
from .sim import SimulationError, Trajectory, compute_metrics

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_IO = 4

SEED_ENV_VAR = "VPSEF_DSC_SEED"
DEFAULT_VALIDATION_BOX = (-2.0, 2.0)


# ---------------------------------------------------------------------------
# Trajectory / report I/O
# ---------------------------------------------------------------------------


def _fmt_cell(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    """Write the dense trajectory; numeric cells carry 17 significant digits."""
    path = Path(path)
    cols = traj.columns()
    names = [name for name, _ in cols]
    arrays = [arr for _, arr in cols]
    with path.open("w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for k in range(len(traj)):
            fh.write(",".join(_fmt_cell(arr[k]) for arr in arrays) + "\n")
    return path


def read_trajectory_csv(path: str | Path) -> Trajectory:
    """Read a trajectory written by write_trajectory_csv (bit-exact)."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    n = sum(1 for name in header if name.startswith("x"))
    col = {name: i for i, name in enumerate(header)}

    def numeric(name: str) -> np.ndarray:
        return np.array([float(r[col[name]]) for r in rows])

    def group(prefix: str, indices) -> np.ndarray:
        names = [f"{prefix}{i}" for i in indices]
        out = np.empty((len(rows), len(names)))
        for j, name in enumerate(names):
            out[:, j] = numeric(name)
        return out

    branch = np.empty((len(rows), n), dtype="<U8")
    for j in range(n):
        i = col[f"branch{j + 1}"]
        branch[:, j] = [r[i] for r in rows]

    x = group("x", range(1, n + 1))
    yr = numeric("yr")
    return Trajectory(
        n=n,
        t=numeric("t"),
        x=x,
        a=group("a", range(2, n + 1)),
        psi=group("psi", range(1, n + 1)),
        beta=group("beta", range(2, n + 1)),
        u=numeric("u"),
        yr=yr,
        e=numeric("e"),
        branch=branch,
    )


def _write_json(data: dict, path: Path) -> Path:
    with path.open("w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# Scenario loading and overrides
# ---------------------------------------------------------------------------


def _load_scenario(args) -> tuple[Scenario, str]:
    if getattr(args, "builtin", None):
        return builtin(args.builtin), f"builtin:{args.builtin}"
    return load_scenario(args.config), str(args.config)


def _apply_overrides(scn: Scenario, args) -> tuple[Scenario, dict]:
    overrides = {}
    sim = scn.sim
    if args.h is not None:
        overrides["h"] = args.h
        sim = dataclasses.replace(sim, h=args.h)
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
        sim = dataclasses.replace(sim, t_end=args.t_end)
    controller, baseline = scn.controller, scn.baseline
    if args.threshold is not None:
        overrides["threshold"] = args.threshold
        controller = controller.with_vpsef(
            dataclasses.replace(controller.vpsef, threshold=args.threshold)
        )
        if baseline is not None:
            baseline = baseline.with_vpsef(
                dataclasses.replace(baseline.vpsef, threshold=args.threshold)
            )
    scn = dataclasses.replace(
        scn, sim=sim, controller=controller, baseline=baseline
    )
    return scn, overrides


def _provenance(source: str, scn: Scenario, overrides: dict) -> dict:
    return {
        "source": source,
        "overrides": overrides,
        "h": scn.sim.h,
        "t_end": scn.sim.t_end,
        "threshold": scn.controller.vpsef.threshold,
    }


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    scn, source = _load_scenario(args)
    scn, overrides = _apply_overrides(scn, args)
    out = _out_dir(args)
    traj = run_scenario(scn)
    metrics = compute_metrics(traj, band=args.band, window=args.window)

    csv_path = write_trajectory_csv(traj, out / "trajectory.csv")
    report = {"scenario": scn.name, **metrics.as_dict(),
              "provenance": _provenance(source, scn, overrides)}
    json_path = _write_json(report, out / "metrics.json")
    written = [csv_path, json_path]

    if not args.no_plot:
        from . import plots

        written += plots.render_run_figures(traj, out)

    print(
        f"{scn.name}: settled={metrics.settled} "
        f"settling_time={metrics.settling_time:.3f}s "
        f"ss_error={metrics.ss_error:.3e} ise={metrics.ise:.4f}"
    )
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_compare(args) -> int:
    scn, source = _load_scenario(args)
    scn, overrides = _apply_overrides(scn, args)
    if scn.baseline is None:
        raise ConfigError("no baseline configured")
    out = _out_dir(args)
    report: ComparisonReport = compare(
        scn, band=args.band, window=args.window
    )

    written = [
        write_trajectory_csv(
            report.vpsef_trajectory, out / "trajectory_vpsef.csv"
        ),
        write_trajectory_csv(
            report.baseline_trajectory, out / "trajectory_baseline.csv"
        ),
        _write_json(
            {**report.as_dict(),
             "provenance": _provenance(source, scn, overrides)},
            out / "comparison.json",
        ),
    ]
    if not args.no_plot:
        from . import plots

        written.append(plots.render_comparison_figure(report, out))

    v, b = report.vpsef_metrics, report.baseline_metrics
    print(
        f"{scn.name}: ise vpsef={v.ise:.4f} baseline={b.ise:.4f} "
        f"delta={v.ise - b.ise:+.4f}"
    )
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scn = load_scenario(args.config)
    seed = int(os.environ.get(SEED_ENV_VAR, "0"))
    box = [DEFAULT_VALIDATION_BOX] * scn.system.n

    print(
        f"structural: OK (name={scn.name}, n={scn.system.n}, "
        f"baseline={'yes' if scn.baseline is not None else 'no'})"
    )
    if scn.system.uses_time():
        print(
            "note: plant functions depend explicitly on t "
            "(time-varying plant)"
        )

    warnings = 0
    gain = check_gain_nonzero(
        scn.system, box, samples=args.samples, seed=seed
    )
    print(
        f"gain check: min |gn| = {gain.min_abs_gain:.6g} over "
        f"{gain.samples} samples in {DEFAULT_VALIDATION_BOX}^n"
    )
    if not gain.ok:
        warnings += 1
        t, x = gain.violations[0]
        print(
            f"warning: |gn| < {gain.guard} at {gain.violation_count} "
            f"sampled point(s), e.g. t={t:.4g}, x={x} -- the input gain "
            "must stay away from zero"
        )

    mono = check_monotone_assumption(
        scn.system, box, samples=args.samples, seed=seed
    )
    for stage in mono.stages:
        print(
            f"input-direction slope, stage {stage.stage}: "
            f"min d(fstar_{stage.stage})/d(x{stage.stage + 1}) = "
            f"{stage.min_estimate:.6g}"
        )
        if not stage.ok:
            warnings += 1
            t, x = stage.violations[0]
            print(
                f"warning: monotone-slope assumption "
                f"(d fstar_i/d x_(i+1) >= 0) violated at stage "
                f"{stage.stage}: {stage.violation_count} sampled point(s) "
                f"below -{mono.tolerance}, e.g. t={t:.4g}, x={x}"
            )

    print(f"validation finished with {warnings} warning(s)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_source_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument(
        "--builtin", choices=BUILTIN_NAMES, help="bundled scenario name"
    )
    src.add_argument("--config", type=Path, help="scenario config JSON file")


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=Path("out"),
                   help="output directory (default: ./out)")
    p.add_argument("--h", type=float, default=None,
                   help="override integration step [s]")
    p.add_argument("--t-end", type=float, default=None,
                   help="override simulation horizon [s]")
    p.add_argument("--threshold", type=float, default=None,
                   help="override the error-shaping switch threshold")
    p.add_argument("--band", type=float, default=0.01,
                   help="settling band for metrics (default 0.01)")
    p.add_argument("--window", type=float, default=0.3,
                   help="steady-state window fraction (default 0.3)")
    p.add_argument("--no-plot", action="store_true",
                   help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vpsef-dsc",
        description=(
            "Synthesize and simulate variable-power surface-error "
            "backstepping controllers with dynamic-surface filtering."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser(
        "run", help="simulate a scenario, write trajectory.csv + metrics.json"
    )
    _add_source_args(run_p)
    _add_run_args(run_p)
    run_p.set_defaults(func=cmd_run)

    cmp_p = sub.add_parser(
        "compare",
        help="run controller and baseline, write both trajectories + "
             "comparison.json",
    )
    _add_source_args(cmp_p)
    _add_run_args(cmp_p)
    cmp_p.set_defaults(func=cmd_compare)

    val_p = sub.add_parser(
        "validate",
        help="check a config file structurally and sample the plant "
             "assumptions",
    )
    val_p.add_argument("--config", type=Path, required=True,
                       help="scenario config JSON file")
    val_p.add_argument("--samples", type=int, default=1000,
                       help="assumption sampler size (default 1000); seed "
                            f"comes from ${SEED_ENV_VAR}")
    val_p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, GainSingularityError) as err:
        print(f"simulation error: {err}", file=sys.stderr)
        return EXIT_SIMULATION
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
