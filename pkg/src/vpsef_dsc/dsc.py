"""Switched backstepping controller with dynamic-surface filtering.

Stage 1 shapes the output tracking error and produces the first virtual
control; every intermediate stage shapes x_i - a_i against the low-pass
filtered previous virtual control a_i and produces the next one; the last
stage divides by the input gain to produce the actual control u.  Filter
derivatives are always the algebraic form (beta - a) / sigma(t), never a
numerical derivative: that is what breaks the circular dependence of the
virtual laws on u for plants whose cascade functions touch every state.

Stage evaluation order is fixed: psi_1, beta_2, a_dot_2, psi_2, beta_3,
..., a_dot_n, psi_n, u.  beta_{i+1} therefore never reads a_j or a_dot_j
for j > i+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import ConfigError
from .model import ReferenceSpec, SystemSpec, to_strict_form
from .vpsef import SurfaceValue, VpsefConfig, surface_error

DEFAULT_GAIN_GUARD = 1e-8


class StageError(RuntimeError):
    """A controller stage failed to evaluate; ``stage`` is 1-based."""

    def __init__(self, stage: int, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


class GainSingularityError(RuntimeError):
    """|gn| fell below the singularity guard; the run must abort."""

    def __init__(self, t: float, state: tuple[float, ...], value: float,
                 guard: float):
        super().__init__(
            f"input gain gn = {value!r} within guard {guard} "
            f"at t = {t}, x = {state}"
        )
        self.t = t
        self.state = state
        self.value = value
        self.guard = guard


@dataclass(frozen=True)
class ConstantSigma:
    """Constant filter time 'constant' sigma(t) = value."""

    value: float

    def __post_init__(self):
        if not (self.value > 0.0):
            raise ConfigError(f"sigma constant must be > 0, got {self.value}")

    def __call__(self, t: float) -> float:
        return self.value


@dataclass(frozen=True)
class ExpDecaySigma:
    """Decaying filter schedule sigma(t) = scale * exp(-t) + floor.

    Starts slow to keep early virtual-control signals tame, then tightens
    toward the floor so the filter output tracks its input closely.
    """

    floor: float
    scale: float

    def __post_init__(self):
        if not (self.floor > 0.0):
            raise ConfigError(f"sigma floor must be > 0, got {self.floor}")
        if not (self.scale > 0.0):
            raise ConfigError(f"sigma scale must be > 0, got {self.scale}")

    def __call__(self, t: float) -> float:
        return self.scale * math.exp(-t) + self.floor


SigmaSchedule = ConstantSigma | ExpDecaySigma


@dataclass(frozen=True)
class ControllerConfig:
    """Everything the controller recursion needs: gains, shaping, filters.

    ``gains`` has one entry per stage (length n); ``sigma`` one schedule per
    filter (length n-1).
    """

    gains: tuple[float, ...]
    vpsef: VpsefConfig
    sigma: tuple[SigmaSchedule, ...]

    def __post_init__(self):
        if len(self.gains) < 1:
            raise ConfigError("controller.gains must not be empty")
        for i, k in enumerate(self.gains):
            if not (k > 0.0):
                raise ConfigError(
                    f"controller.gains[{i}] must be > 0, got {k}"
                )
        if len(self.sigma) != len(self.gains) - 1:
            raise ConfigError(
                f"controller.sigma needs {len(self.gains) - 1} schedules "
                f"for {len(self.gains)} gains, got {len(self.sigma)}"
            )

    @property
    def n(self) -> int:
        return len(self.gains)

    def with_vpsef(self, vpsef: VpsefConfig) -> "ControllerConfig":
        return ControllerConfig(gains=self.gains, vpsef=vpsef,
                                sigma=self.sigma)


@dataclass(frozen=True)
class FilterState:
    """Low-pass filter outputs a_2..a_n."""

    a: tuple[float, ...]

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.a):
            raise ConfigError(f"filter state must be finite, got {self.a}")


@dataclass(frozen=True)
class ControlTrace:
    """Per-evaluation controller internals.

    psi holds the n shaped surface values, beta the n-1 virtual controls
    (beta_2..beta_n), a_dot the n-1 filter derivatives, u the actual
    control.
    """

    psi: tuple[SurfaceValue, ...]
    beta: tuple[float, ...]
    a_dot: tuple[float, ...]
    u: float


# ---------------------------------------------------------------------------
# Stage laws (AST-evaluating form)
# ---------------------------------------------------------------------------


def _env(t: float, state) -> ex.Env:
    return ex.Env(t=t, x=tuple(float(v) for v in state))


def virtual_law_first(
    state,
    t: float,
    ref: ReferenceSpec,
    f1: ex.Expr,
    cfg: ControllerConfig,
) -> tuple[SurfaceValue, float]:
    """First virtual control: beta_2 = -k_1 psi_1 - f_1(x) + yr_dot(t)."""
    env = _env(t, state)
    e1 = env.x[0] - ex.evaluate(ref.yr, env)
    psi1 = surface_error(e1, cfg.vpsef)
    beta2 = (
        -cfg.gains[0] * psi1.shaped
        - ex.evaluate(f1, env)
        + ex.evaluate(ref.yr_dot, env)
    )
    return psi1, beta2


def filter_derivative(beta: float, a: float, sigma_t: float) -> float:
    """Algebraic filter derivative (beta - a) / sigma_t."""
    if not (sigma_t > 0.0):
        raise ValueError(f"filter constant must be > 0, got {sigma_t}")
    return (beta - a) / sigma_t


def virtual_law_mid(
    i: int,
    state,
    t: float,
    a_i: float,
    a_dot_i: float,
    f_i: ex.Expr,
    cfg: ControllerConfig,
) -> tuple[SurfaceValue, float]:
    """Stage i in 2..n-1: beta_{i+1} = -k_i psi_i - f_i(x) + a_dot_i."""
    if not 2 <= i <= cfg.n - 1:
        raise ValueError(f"intermediate stage must be in 2..{cfg.n - 1}, got {i}")
    env = _env(t, state)
    e_i = env.x[i - 1] - a_i
    psi_i = surface_error(e_i, cfg.vpsef)
    beta_next = -cfg.gains[i - 1] * psi_i.shaped - ex.evaluate(f_i, env) + a_dot_i
    return psi_i, beta_next


def actual_law(
    state,
    t: float,
    a_n: float,
    a_dot_n: float,
    fn: ex.Expr,
    gn: ex.Expr,
    cfg: ControllerConfig,
    gain_guard: float = DEFAULT_GAIN_GUARD,
) -> tuple[SurfaceValue, float]:
    """Actual control: u = (-k_n psi_n - fn(x) + a_dot_n) / gn(x)."""
    env = _env(t, state)
    n = cfg.n
    e_n = env.x[n - 1] - a_n
    psi_n = surface_error(e_n, cfg.vpsef)
    g = ex.evaluate(gn, env)
    if abs(g) < gain_guard:
        raise GainSingularityError(t, env.x, g, gain_guard)
    u = (-cfg.gains[n - 1] * psi_n.shaped - ex.evaluate(fn, env) + a_dot_n) / g
    return psi_n, u


# ---------------------------------------------------------------------------
# Closed loop
# ---------------------------------------------------------------------------


class ClosedLoop:
    """Precompiled closed-loop right-hand side for one (plant, ref, cfg).

    State layout: z = [x_1..x_n, a_2..a_n] (length 2n-1).  ``derivative``
    is a pure function of (t, z) and returns the stacked derivative with
    the full control trace.
    """

    def __init__(
        self,
        spec: SystemSpec,
        ref: ReferenceSpec,
        cfg: ControllerConfig,
        gain_guard: float = DEFAULT_GAIN_GUARD,
    ):
        if cfg.n != spec.n:
            raise ConfigError(
                f"controller has {cfg.n} gains but system order is {spec.n}"
            )
        self.spec = spec
        self.ref = ref
        self.cfg = cfg
        self.gain_guard = gain_guard
        self.n = spec.n
        self.dim = 2 * spec.n - 1
        self._fstar = [ex.compile_expr(f) for f in spec.fstar]
        self._fn = ex.compile_expr(spec.fn)
        self._gn = ex.compile_expr(spec.gn)
        self._yr = ex.compile_expr(ref.yr)
        self._yr_dot = ex.compile_expr(ref.yr_dot)

    def reference(self, t: float) -> float:
        return self._yr(t, ())

    def derivative(self, t: float, z) -> tuple[np.ndarray, ControlTrace]:
        n = self.n
        zs = [float(v) for v in z]
        if len(zs) != self.dim:
            raise ValueError(
                f"state vector must have length {self.dim}, got {len(zs)}"
            )
        x = zs[:n]
        a = zs[n:]
        k = self.cfg.gains
        vps = self.cfg.vpsef

        try:
            yr = self._yr(t, x)
            yr_dot = self._yr_dot(t, x)
        except (ValueError, ZeroDivisionError) as err:
            raise StageError(1, f"reference evaluation failed: {err}") from err

        fstar_vals = []
        for i, f in enumerate(self._fstar, start=1):
            try:
                fstar_vals.append(f(t, x))
            except (ValueError, ZeroDivisionError) as err:
                raise StageError(i, f"cascade function failed: {err}") from err

        psis: list[SurfaceValue] = []
        betas: list[float] = []
        a_dots: list[float] = []

        if n == 1:
            # degenerate single-stage loop: the reference itself plays the
            # role of the filtered command, a_1 := yr, a_dot_1 := yr_dot
            psis.append(surface_error(x[0] - yr, vps))
            a_dot_n = yr_dot
        else:
            psi1 = surface_error(x[0] - yr, vps)
            psis.append(psi1)
            f1 = fstar_vals[0] - x[1]
            beta = -k[0] * psi1.shaped - f1 + yr_dot
            betas.append(beta)
            a_dots.append((beta - a[0]) / self.cfg.sigma[0](t))

            for i in range(2, n):
                psi_i = surface_error(x[i - 1] - a[i - 2], vps)
                psis.append(psi_i)
                f_i = fstar_vals[i - 1] - x[i]
                beta = -k[i - 1] * psi_i.shaped - f_i + a_dots[i - 2]
                betas.append(beta)
                a_dots.append((beta - a[i - 1]) / self.cfg.sigma[i - 1](t))

            psis.append(surface_error(x[n - 1] - a[n - 2], vps))
            a_dot_n = a_dots[n - 2]

        try:
            g = self._gn(t, x)
            fn_val = self._fn(t, x)
        except (ValueError, ZeroDivisionError) as err:
            raise StageError(n, f"plant evaluation failed: {err}") from err
        if abs(g) < self.gain_guard:
            raise GainSingularityError(t, tuple(x), g, self.gain_guard)
        u = (-k[n - 1] * psis[-1].shaped - fn_val + a_dot_n) / g

        dz = fstar_vals + [g * u + fn_val] + a_dots
        return np.array(dz), ControlTrace(
            psi=tuple(psis), beta=tuple(betas), a_dot=tuple(a_dots), u=u
        )


def closed_loop_derivative(
    state,
    t: float,
    spec: SystemSpec,
    ref: ReferenceSpec,
    cfg: ControllerConfig,
    gain_guard: float = DEFAULT_GAIN_GUARD,
) -> tuple[np.ndarray, ControlTrace]:
    """One-shot closed-loop derivative; see ClosedLoop for the state layout."""
    return ClosedLoop(spec, ref, cfg, gain_guard).derivative(t, state)
