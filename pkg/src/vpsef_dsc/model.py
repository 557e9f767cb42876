"""Plant and reference-signal specifications.

A plant is given in the non-lower-triangular form

    dx_i = fstar_i(x1..xn, t),   i = 1..n-1
    dx_n = gn(x1..xn, t) * u + fn(x1..xn, t)
    y    = x1

``to_strict_form`` rewrites the cascade as dx_i = x_{i+1} + f_i with
f_i = fstar_i - x_{i+1}, which is the shape the controller recursion
consumes.  The assumption checks are advisory samplers: they report
evidence of a vanishing control gain or of a negative input-direction
slope, but never block a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .errors import ConfigError

_MAX_STORED_VIOLATIONS = 10


def _check_vars(e: ex.Expr, n: int, label: str) -> None:
    allowed = {"t"} | {f"x{k}" for k in range(1, n + 1)}
    extra = ex.free_vars(e) - allowed
    if extra:
        raise ConfigError(
            f"{label}: unknown variable(s) {sorted(extra)} for order n={n}"
        )


@dataclass(frozen=True)
class SystemSpec:
    """Order-n plant: n-1 cascade functions, drift fn, and input gain gn.

    n = 1 is accepted as a degenerate single-integrator-style plant with an
    empty cascade; it exists for controller oracle tests.
    """

    n: int
    fstar: tuple[ex.Expr, ...]
    fn: ex.Expr
    gn: ex.Expr

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"system order must be >= 1, got {self.n}")
        if len(self.fstar) != self.n - 1:
            raise ConfigError(
                f"expected {self.n - 1} cascade functions for n={self.n}, "
                f"got {len(self.fstar)}"
            )
        for i, e in enumerate(self.fstar, start=1):
            _check_vars(e, self.n, f"system.fstar[{i - 1}]")
        _check_vars(self.fn, self.n, "system.fn")
        _check_vars(self.gn, self.n, "system.gn")

    @classmethod
    def from_strings(
        cls, n: int, fstar: Sequence[str], fn: str, gn: str
    ) -> "SystemSpec":
        if n < 1:
            raise ConfigError(f"system order must be >= 1, got {n}")
        return cls(
            n=n,
            fstar=tuple(ex.parse(s, n) for s in fstar),
            fn=ex.parse(fn, n),
            gn=ex.parse(gn, n),
        )

    def uses_time(self) -> bool:
        """True if any plant function depends explicitly on t."""
        exprs = self.fstar + (self.fn, self.gn)
        return any("t" in ex.free_vars(e) for e in exprs)


@dataclass(frozen=True)
class ReferenceSpec:
    """Reference signal with its first two analytic time derivatives."""

    yr: ex.Expr
    yr_dot: ex.Expr = field(init=False)
    yr_ddot: ex.Expr = field(init=False)

    def __post_init__(self):
        extra = ex.free_vars(self.yr) - {"t"}
        if extra:
            raise ConfigError(
                f"reference.yr must depend on t only, found {sorted(extra)}"
            )
        object.__setattr__(self, "yr_dot", ex.differentiate(self.yr, "t"))
        object.__setattr__(
            self, "yr_ddot", ex.differentiate(self.yr_dot, "t")
        )

    @classmethod
    def from_string(cls, yr: str) -> "ReferenceSpec":
        return cls(yr=ex.parse(yr, 1))


def to_strict_form(spec: SystemSpec) -> list[ex.Expr]:
    """Cascade rewrite: f_i = fstar_i - x_{i+1} as ASTs, i = 1..n-1."""
    return [
        ex.Binary("sub", f, ex.Var(f"x{i + 2}"))
        for i, f in enumerate(spec.fstar)
    ]


def _sample_points(
    box: Sequence[tuple[float, float]],
    samples: int,
    rng: np.random.Generator,
    with_time: bool,
    t_range: tuple[float, float],
) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
        raise ConfigError("sample box bounds must be finite")
    if (lo > hi).any():
        raise ConfigError("sample box lower bounds must not exceed upper")
    xs = rng.uniform(lo, hi, size=(samples, len(box)))
    if with_time:
        ts = rng.uniform(t_range[0], t_range[1], size=samples)
    else:
        ts = np.zeros(samples)
    return ts, xs


@dataclass(frozen=True)
class GainCheckReport:
    """Sampled evidence about |gn| over a state box (advisory)."""

    samples: int
    guard: float
    min_abs_gain: float
    min_point: tuple[float, tuple[float, ...]]
    violation_count: int
    violations: tuple[tuple[float, tuple[float, ...]], ...]

    @property
    def ok(self) -> bool:
        return self.violation_count == 0


def check_gain_nonzero(
    spec: SystemSpec,
    sample_box: Sequence[tuple[float, float]],
    samples: int = 1000,
    seed: int = 0,
    guard: float = 1e-8,
    t_range: tuple[float, float] = (0.0, 10.0),
) -> GainCheckReport:
    """Sample |gn| uniformly over the box and report the minimum found.

    Sampling cannot prove the gain never vanishes; the report is advisory.
    """
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    if len(sample_box) != spec.n:
        raise ConfigError(
            f"sample box needs {spec.n} intervals, got {len(sample_box)}"
        )
    rng = np.random.default_rng(seed)
    with_time = "t" in ex.free_vars(spec.gn)
    ts, xs = _sample_points(sample_box, samples, rng, with_time, t_range)
    gn = ex.compile_expr(spec.gn)

    min_abs = float("inf")
    min_point = (0.0, tuple(float(v) for v in xs[0]))
    violations: list[tuple[float, tuple[float, ...]]] = []
    count = 0
    for t, row in zip(ts, xs):
        x = row.tolist()
        g = abs(gn(t, x))
        if g < min_abs:
            min_abs = g
            min_point = (float(t), tuple(x))
        if g < guard:
            count += 1
            if len(violations) < _MAX_STORED_VIOLATIONS:
                violations.append((float(t), tuple(x)))
    return GainCheckReport(
        samples=samples,
        guard=guard,
        min_abs_gain=min_abs,
        min_point=min_point,
        violation_count=count,
        violations=tuple(violations),
    )


@dataclass(frozen=True)
class StageMonotoneReport:
    stage: int
    min_estimate: float
    min_point: tuple[float, tuple[float, ...]]
    violation_count: int
    violations: tuple[tuple[float, tuple[float, ...]], ...]

    @property
    def ok(self) -> bool:
        return self.violation_count == 0


@dataclass(frozen=True)
class MonotoneCheckReport:
    """Finite-difference slopes of fstar_i along x_{i+1} (advisory)."""

    samples: int
    fd_step: float
    tolerance: float
    stages: tuple[StageMonotoneReport, ...]

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.stages)


def check_monotone_assumption(
    spec: SystemSpec,
    sample_box: Sequence[tuple[float, float]],
    samples: int = 1000,
    seed: int = 0,
    fd_step: float = 1e-5,
    tolerance: float = 1e-6,
    t_range: tuple[float, float] = (0.0, 10.0),
) -> MonotoneCheckReport:
    """Estimate d(fstar_i)/d(x_{i+1}) at random points, flagging negatives.

    A point counts as a violation when the central-difference estimate
    drops below -tolerance.
    """
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    if len(sample_box) != spec.n:
        raise ConfigError(
            f"sample box needs {spec.n} intervals, got {len(sample_box)}"
        )
    rng = np.random.default_rng(seed)
    with_time = spec.uses_time()
    ts, xs = _sample_points(sample_box, samples, rng, with_time, t_range)

    stages = []
    for i, f in enumerate(spec.fstar, start=1):
        fn = ex.compile_expr(f)
        j = i  # x_{i+1} is x[j] 0-based
        min_est = float("inf")
        min_point = (0.0, tuple(float(v) for v in xs[0]))
        violations: list[tuple[float, tuple[float, ...]]] = []
        count = 0
        for t, row in zip(ts, xs):
            x_hi = row.tolist()
            x_lo = row.tolist()
            x_hi[j] += fd_step
            x_lo[j] -= fd_step
            est = (fn(t, x_hi) - fn(t, x_lo)) / (2.0 * fd_step)
            if est < min_est:
                min_est = est
                min_point = (float(t), tuple(row.tolist()))
            if est < -tolerance:
                count += 1
                if len(violations) < _MAX_STORED_VIOLATIONS:
                    violations.append((float(t), tuple(row.tolist())))
        stages.append(
            StageMonotoneReport(
                stage=i,
                min_estimate=min_est,
                min_point=min_point,
                violation_count=count,
                violations=tuple(violations),
            )
        )
    return MonotoneCheckReport(
        samples=samples,
        fd_step=fd_step,
        tolerance=tolerance,
        stages=tuple(stages),
    )
