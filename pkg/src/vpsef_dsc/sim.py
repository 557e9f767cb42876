"""Fixed-step closed-loop integration and tracking metrics.

The integrator is classical RK4 with a fixed step: the switched error
shaping makes the right-hand side piecewise smooth, and a fixed step keeps
branch flips simple and runs bit-reproducible.  Every step is recorded;
at desk scale a trajectory is ~10^4 rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsc import ClosedLoop, ControllerConfig, GainSingularityError, StageError
from .errors import ConfigError
from .model import ReferenceSpec, SystemSpec


class SimulationError(RuntimeError):
    """A run aborted; ``t`` is the simulation time of the failure."""

    def __init__(self, t: float, message: str):
        super().__init__(f"t = {t:.6g}: {message}")
        self.t = t


class DivergenceError(SimulationError):
    """States or derivatives left the finite range."""


@dataclass(frozen=True)
class SimConfig:
    """Integration setup: step, horizon, initial plant and filter states."""

    h: float = 1e-3
    t_end: float = 10.0
    x0: tuple[float, ...] = (0.0,)
    a0: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.h > 0.0):
            raise ConfigError(f"sim.h must be > 0, got {self.h}")
        if not (self.t_end > 0.0):
            raise ConfigError(f"sim.t_end must be > 0, got {self.t_end}")
        if self.h > self.t_end:
            raise ConfigError(
                f"sim.h = {self.h} must not exceed sim.t_end = {self.t_end}"
            )
        if not all(math.isfinite(v) for v in self.x0):
            raise ConfigError(f"sim.x0 must be finite, got {self.x0}")
        if not all(math.isfinite(v) for v in self.a0):
            raise ConfigError(f"sim.a0 must be finite, got {self.a0}")
        if len(self.a0) != len(self.x0) - 1:
            raise ConfigError(
                f"sim.a0 needs {len(self.x0) - 1} entries for "
                f"{len(self.x0)} states, got {len(self.a0)}"
            )


@dataclass
class Trajectory:
    """Dense per-step record of a closed-loop run.

    ``psi`` holds shaped surface values, ``branch`` the branch tag of each
    stage ("large", "small", or "identity"), ``e`` the output tracking
    error x1 - yr.  Rows are uniformly spaced by the integration step.
    """

    n: int
    t: np.ndarray
    x: np.ndarray
    a: np.ndarray
    psi: np.ndarray
    beta: np.ndarray
    u: np.ndarray
    yr: np.ndarray
    e: np.ndarray
    branch: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def columns(self) -> list[tuple[str, np.ndarray]]:
        """Ordered (name, column) pairs matching the CSV layout."""
        n = self.n
        cols: list[tuple[str, np.ndarray]] = [("t", self.t)]
        cols += [(f"x{i + 1}", self.x[:, i]) for i in range(n)]
        cols += [(f"a{i + 2}", self.a[:, i]) for i in range(n - 1)]
        cols += [(f"psi{i + 1}", self.psi[:, i]) for i in range(n)]
        cols += [(f"beta{i + 2}", self.beta[:, i]) for i in range(n - 1)]
        cols += [("u", self.u), ("yr", self.yr), ("e", self.e)]
        cols += [(f"branch{i + 1}", self.branch[:, i]) for i in range(n)]
        return cols


def rk4_step(deriv, state, t: float, h: float) -> np.ndarray:
    """One classical RK4 update; ``deriv`` is called as deriv(t, y).

    Stage times are t, t + h/2, t + h/2, t + h.  A non-finite stage
    derivative aborts with the stage id.
    """
    if not (h > 0.0):
        raise ValueError(f"step size must be > 0, got {h}")
    y = np.asarray(state, dtype=float)
    half = 0.5 * h
    k1 = np.asarray(deriv(t, y), dtype=float)
    _check_stage(k1, 1, t)
    k2 = np.asarray(deriv(t + half, y + half * k1), dtype=float)
    _check_stage(k2, 2, t)
    k3 = np.asarray(deriv(t + half, y + half * k2), dtype=float)
    _check_stage(k3, 3, t)
    k4 = np.asarray(deriv(t + h, y + h * k3), dtype=float)
    _check_stage(k4, 4, t)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_stage(k: np.ndarray, stage: int, t: float) -> None:
    if not np.isfinite(k).all():
        raise DivergenceError(t, f"non-finite derivative at RK4 stage {stage}")


def step_count(sim: SimConfig) -> int:
    """Number of integration steps: floor(t_end / h) in real arithmetic."""
    return int(math.floor(sim.t_end / sim.h + 1e-9))


def simulate(
    spec: SystemSpec,
    ref: ReferenceSpec,
    cfg: ControllerConfig,
    sim: SimConfig,
) -> Trajectory:
    """Integrate the 2n-1 dimensional closed loop and record every step.

    Deterministic: identical inputs produce bit-identical trajectories.
    Divergence (non-finite states or derivatives) raises DivergenceError
    with the failure time instead of recording NaNs.
    """
    if len(sim.x0) != spec.n:
        raise ConfigError(
            f"sim.x0 has {len(sim.x0)} entries but system order is {spec.n}"
        )
    loop = ClosedLoop(spec, ref, cfg)
    n = spec.n
    h = sim.h
    steps = step_count(sim)
    count = steps + 1

    t_arr = np.empty(count)
    x_arr = np.empty((count, n))
    a_arr = np.empty((count, n - 1))
    psi_arr = np.empty((count, n))
    beta_arr = np.empty((count, n - 1))
    u_arr = np.empty(count)
    yr_arr = np.empty(count)
    branch_arr = np.empty((count, n), dtype="<U8")

    def deriv(t, y):
        return loop.derivative(t, y)[0]

    z = np.array(sim.x0 + sim.a0, dtype=float)
    for k in range(count):
        t = k * h
        try:
            _, trace = loop.derivative(t, z)
        except OverflowError as err:
            raise DivergenceError(t, f"numeric overflow: {err}") from err
        except StageError as err:
            raise SimulationError(t, str(err)) from err
        t_arr[k] = t
        x_arr[k] = z[:n]
        a_arr[k] = z[n:]
        psi_arr[k] = [sv.shaped for sv in trace.psi]
        beta_arr[k] = trace.beta
        u_arr[k] = trace.u
        yr_arr[k] = loop.reference(t)
        branch_arr[k] = [sv.branch.value for sv in trace.psi]
        if k < steps:
            try:
                z = rk4_step(deriv, z, t, h)
            except OverflowError as err:
                raise DivergenceError(t, f"numeric overflow: {err}") from err
            except StageError as err:
                raise SimulationError(t, str(err)) from err
            if not np.isfinite(z).all():
                raise DivergenceError(t + h, "state left the finite range")

    return Trajectory(
        n=n,
        t=t_arr,
        x=x_arr,
        a=a_arr,
        psi=psi_arr,
        beta=beta_arr,
        u=u_arr,
        yr=yr_arr,
        e=x_arr[:, 0] - yr_arr,
        branch=branch_arr,
    )


@dataclass(frozen=True)
class Metrics:
    """Tracking-quality summary of a completed run.

    ``settling_time`` is the first time after which |e| stays inside the
    band through the end of the record; when the error never settles it is
    reported as the horizon with ``settled`` False.  ``ss_error`` is the
    peak |e| over the trailing ``window`` fraction of the horizon.
    """

    settling_time: float
    settled: bool
    ss_error: float
    ise: float
    peak_overshoot: float
    control_effort: float
    band: float
    window: float

    def as_dict(self) -> dict:
        return {
            "settled": self.settled,
            "settling_time": self.settling_time,
            "ss_error": self.ss_error,
            "ise": self.ise,
            "peak_overshoot": self.peak_overshoot,
            "control_effort": self.control_effort,
            "band": self.band,
            "window": self.window,
        }


def compute_metrics(
    traj: Trajectory, band: float = 0.01, window: float = 0.3
) -> Metrics:
    """Settling time, steady-state error, ISE, overshoot, control effort."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if not (band > 0.0):
        raise ValueError(f"band must be > 0, got {band}")
    if not (0.0 < window <= 1.0):
        raise ValueError(f"window must be in (0, 1], got {window}")

    t = traj.t
    abs_e = np.abs(traj.e)
    t_end = float(t[-1])

    outside = np.flatnonzero(abs_e > band)
    if outside.size == 0:
        settled, settling = True, float(t[0])
    elif outside[-1] == len(t) - 1:
        settled, settling = False, t_end
    else:
        settled, settling = True, float(t[outside[-1] + 1])

    ss_mask = t >= t_end - window * t_end
    ss_error = float(abs_e[ss_mask].max())

    inside = np.flatnonzero(abs_e <= band)
    peak_overshoot = float(abs_e[inside[0]:].max()) if inside.size else 0.0

    return Metrics(
        settling_time=settling,
        settled=settled,
        ss_error=ss_error,
        ise=float(np.trapezoid(traj.e**2, t)),
        peak_overshoot=peak_overshoot,
        control_effort=float(np.trapezoid(traj.u**2, t)),
        band=band,
        window=window,
    )
