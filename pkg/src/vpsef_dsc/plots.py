"""Figure rendering for run and comparison reports.

Renders the standard diagnostic figures (output tracking, tracking error,
control input, states, filter signals, error comparison) to PNG files next
to the CSV/JSON outputs.  Uses the Agg backend; safe in headless runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .scenarios import ComparisonReport  # noqa: E402
from .sim import Trajectory  # noqa: E402

_FIGSIZE = (7.0, 3.5)
_DPI = 150


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_run_figures(traj: Trajectory, out_dir: str | Path,
                       prefix: str = "fig") -> list[Path]:
    """Write the per-run figures into ``out_dir``; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(traj.t, traj.yr, "k--", label="reference")
    ax.plot(traj.t, traj.x[:, 0], label="output x1")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("output")
    ax.legend()
    ax.grid(alpha=0.3)
    paths.append(_save(fig, out_dir / f"{prefix}_tracking.png"))

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(traj.t, traj.e)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("tracking error e")
    ax.grid(alpha=0.3)
    paths.append(_save(fig, out_dir / f"{prefix}_error.png"))

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(traj.t, traj.u)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("control input u")
    ax.grid(alpha=0.3)
    paths.append(_save(fig, out_dir / f"{prefix}_control.png"))

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for i in range(traj.n):
        ax.plot(traj.t, traj.x[:, i], label=f"x{i + 1}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("states")
    ax.legend()
    ax.grid(alpha=0.3)
    paths.append(_save(fig, out_dir / f"{prefix}_states.png"))

    if traj.n > 1:
        fig, axes = plt.subplots(
            traj.n - 1, 1, figsize=(7.0, 2.5 * (traj.n - 1)), sharex=True,
            squeeze=False,
        )
        for i, ax in enumerate(axes[:, 0]):
            ax.plot(traj.t, traj.beta[:, i], label=f"beta{i + 2} (filter in)")
            ax.plot(traj.t, traj.a[:, i], "--", label=f"a{i + 2} (filter out)")
            ax.set_ylabel("virtual control")
            ax.legend()
            ax.grid(alpha=0.3)
        axes[-1, 0].set_xlabel("t [s]")
        paths.append(_save(fig, out_dir / f"{prefix}_filters.png"))

    return paths


def render_comparison_figure(report: ComparisonReport, out_dir: str | Path,
                             prefix: str = "fig") -> Path:
    """Overlay |e| of the shaped controller and its baseline."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tv, tb = report.vpsef_trajectory, report.baseline_trajectory
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(tv.t, abs(tv.e), label="vpsef |e|")
    ax.plot(tb.t, abs(tb.e), "--", label="baseline |e|")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|tracking error|")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(alpha=0.3, which="both")
    return _save(fig, out_dir / f"{prefix}_error_comparison.png")
