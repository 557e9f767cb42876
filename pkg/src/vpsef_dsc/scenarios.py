"""Built-in and user-defined simulation scenarios.

A scenario bundles a plant, a reference signal, a controller, and the
integration setup, optionally with a second controller configuration used
as the comparison baseline.  The two built-ins exercise a third-order
non-lower-triangular benchmark plant tracking sin(t) and 1 - exp(-t); the
baseline in both is the same controller with identity (p = q) error
shaping, isolating the effect of the variable-power switching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import expr as ex
from .dsc import (
    ConstantSigma,
    ControllerConfig,
    ExpDecaySigma,
    GainSingularityError,
    SigmaSchedule,
)
from .errors import ConfigError
from .model import ReferenceSpec, SystemSpec
from .sim import Metrics, SimConfig, SimulationError, Trajectory, compute_metrics, simulate
from .vpsef import VpsefConfig

BUILTIN_NAMES = ("paper_sin", "paper_exp")


@dataclass(frozen=True)
class Scenario:
    """A complete simulation setup, optionally with a comparison baseline."""

    name: str
    system: SystemSpec
    reference: ReferenceSpec
    controller: ControllerConfig
    sim: SimConfig
    baseline: ControllerConfig | None = None

    def __post_init__(self):
        if self.controller.n != self.system.n:
            raise ConfigError(
                f"controller.gains has {self.controller.n} entries but "
                f"system order is {self.system.n}"
            )
        if self.baseline is not None and self.baseline.n != self.system.n:
            raise ConfigError(
                f"baseline.gains has {self.baseline.n} entries but "
                f"system order is {self.system.n}"
            )
        if len(self.sim.x0) != self.system.n:
            raise ConfigError(
                f"sim.x0 has {len(self.sim.x0)} entries but system order "
                f"is {self.system.n}"
            )


def builtin(name: str) -> Scenario:
    """Return one of the bundled scenarios: paper_sin or paper_exp."""
    if name not in BUILTIN_NAMES:
        raise ConfigError(
            f"unknown builtin scenario {name!r}; available: "
            f"{', '.join(BUILTIN_NAMES)}"
        )
    system = SystemSpec.from_strings(
        n=3,
        fstar=("x1^2 + x2^3 + x3", "x1^2*x2 + x3^5"),
        fn="x1*x2*x3^2",
        gn="1",
    )
    yr = "sin(t)" if name == "paper_sin" else "1 - exp(-t)"
    controller = ControllerConfig(
        gains=(3.0, 3.0, 3.0),
        vpsef=VpsefConfig(threshold=0.1),
        sigma=(ExpDecaySigma(floor=0.05, scale=1.0),
               ExpDecaySigma(floor=0.05, scale=1.0)),
    )
    return Scenario(
        name=name,
        system=system,
        reference=ReferenceSpec.from_string(yr),
        controller=controller,
        sim=SimConfig(h=1e-3, t_end=10.0, x0=(0.0, -1.0, 1.0), a0=(0.0, 0.0)),
        baseline=controller.with_vpsef(VpsefConfig.identity(threshold=0.1)),
    )


def run_scenario(
    scn: Scenario, controller: ControllerConfig | None = None
) -> Trajectory:
    """Simulate the scenario, optionally under a substitute controller."""
    return simulate(
        scn.system, scn.reference, controller or scn.controller, scn.sim
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Paired run of the configured controller against its baseline."""

    scenario: str
    vpsef_metrics: Metrics
    baseline_metrics: Metrics
    vpsef_trajectory: Trajectory
    baseline_trajectory: Trajectory
    error_diff: np.ndarray  # |e_vpsef| - |e_baseline| per sample
    early_window: float
    vpsef_peak_abs_error: float
    baseline_peak_abs_error: float
    vpsef_early_peak: float
    baseline_early_peak: float

    def deltas(self) -> dict:
        v, b = self.vpsef_metrics, self.baseline_metrics
        out = {
            key: getattr(v, key) - getattr(b, key)
            for key in (
                "settling_time",
                "ss_error",
                "ise",
                "peak_overshoot",
                "control_effort",
            )
        }
        out["peak_abs_error"] = (
            self.vpsef_peak_abs_error - self.baseline_peak_abs_error
        )
        out["early_peak_abs_error"] = (
            self.vpsef_early_peak - self.baseline_early_peak
        )
        return out

    def as_dict(self) -> dict:
        def side(metrics: Metrics, peak: float, early: float) -> dict:
            d = metrics.as_dict()
            d["peak_abs_error"] = peak
            d["early_peak_abs_error"] = early
            return d

        return {
            "scenario": self.scenario,
            "early_window": self.early_window,
            "vpsef": side(
                self.vpsef_metrics,
                self.vpsef_peak_abs_error,
                self.vpsef_early_peak,
            ),
            "baseline": side(
                self.baseline_metrics,
                self.baseline_peak_abs_error,
                self.baseline_early_peak,
            ),
            "deltas": self.deltas(),
        }


def _run_labeled(scn: Scenario, cfg: ControllerConfig, label: str) -> Trajectory:
    try:
        return run_scenario(scn, cfg)
    except (SimulationError, GainSingularityError) as err:
        raise SimulationError(
            getattr(err, "t", 0.0), f"{label} controller failed: {err}"
        ) from err


def compare(
    scn: Scenario,
    band: float = 0.01,
    window: float = 0.3,
    early_window: float = 2.0,
) -> ComparisonReport:
    """Run controller and baseline on identical conditions and pair metrics."""
    if scn.baseline is None:
        raise ConfigError("no baseline configured")
    traj_v = _run_labeled(scn, scn.controller, "vpsef")
    traj_b = _run_labeled(scn, scn.baseline, "baseline")
    abs_v, abs_b = np.abs(traj_v.e), np.abs(traj_b.e)
    early = traj_v.t <= early_window
    return ComparisonReport(
        scenario=scn.name,
        vpsef_metrics=compute_metrics(traj_v, band, window),
        baseline_metrics=compute_metrics(traj_b, band, window),
        vpsef_trajectory=traj_v,
        baseline_trajectory=traj_b,
        error_diff=abs_v - abs_b,
        early_window=early_window,
        vpsef_peak_abs_error=float(abs_v.max()),
        baseline_peak_abs_error=float(abs_b.max()),
        vpsef_early_peak=float(abs_v[early].max()),
        baseline_early_peak=float(abs_b[early].max()),
    )


# ---------------------------------------------------------------------------
# Config file schema
# ---------------------------------------------------------------------------


def _check_keys(d: dict, path: str, required: tuple, optional: tuple = ()):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object, got {type(d).__name__}")
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = set(required) - set(d)
    if missing:
        raise ConfigError(f"{path}: missing key(s) {sorted(missing)}")


def _as_float(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    return float(v)


def _as_int(v, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    return v


def _as_str(v, path: str) -> str:
    if not isinstance(v, str):
        raise ConfigError(f"{path}: expected a string, got {v!r}")
    return v


def _as_float_tuple(v, path: str) -> tuple[float, ...]:
    if not isinstance(v, list):
        raise ConfigError(f"{path}: expected a list of numbers, got {v!r}")
    return tuple(_as_float(item, f"{path}[{i}]") for i, item in enumerate(v))


def _parse_expr(source, n: int, path: str) -> ex.Expr:
    text = _as_str(source, path)
    try:
        return ex.parse(text, n)
    except ConfigError as err:
        raise ConfigError(f"{path} = {text!r}: {err}") from err


def _sigma_from_dict(d, path: str) -> SigmaSchedule:
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError(f"{path}: expected an object with a 'type' key")
    kind = d["type"]
    if kind == "constant":
        _check_keys(d, path, required=("type", "value"))
        return ConstantSigma(value=_as_float(d["value"], f"{path}.value"))
    if kind == "exp_decay":
        _check_keys(d, path, required=("type", "floor", "scale"))
        return ExpDecaySigma(
            floor=_as_float(d["floor"], f"{path}.floor"),
            scale=_as_float(d["scale"], f"{path}.scale"),
        )
    raise ConfigError(
        f"{path}.type: expected 'constant' or 'exp_decay', got {kind!r}"
    )


def _sigma_to_dict(s: SigmaSchedule) -> dict:
    if isinstance(s, ConstantSigma):
        return {"type": "constant", "value": s.value}
    return {"type": "exp_decay", "floor": s.floor, "scale": s.scale}


def _vpsef_from_dict(d, path: str) -> VpsefConfig:
    _check_keys(
        d,
        path,
        required=(),
        optional=("threshold", "p_hi", "q_hi", "p_lo", "q_lo", "hysteresis"),
    )
    kwargs = {}
    for key in ("threshold", "hysteresis"):
        if key in d:
            kwargs[key] = _as_float(d[key], f"{path}.{key}")
    for key in ("p_hi", "q_hi", "p_lo", "q_lo"):
        if key in d:
            kwargs[key] = _as_int(d[key], f"{path}.{key}")
    return VpsefConfig(**kwargs)


def _controller_from_dict(d, path: str) -> ControllerConfig:
    _check_keys(d, path, required=("gains", "sigma"), optional=("vpsef",))
    gains = _as_float_tuple(d["gains"], f"{path}.gains")
    for i, k in enumerate(gains):
        if not k > 0.0:
            raise ConfigError(f"{path}.gains[{i}] must be > 0, got {k}")
    sigma_raw = d["sigma"]
    if not isinstance(sigma_raw, list):
        raise ConfigError(f"{path}.sigma: expected a list of schedules")
    sigma = tuple(
        _sigma_from_dict(item, f"{path}.sigma[{i}]")
        for i, item in enumerate(sigma_raw)
    )
    vpsef = (
        _vpsef_from_dict(d["vpsef"], f"{path}.vpsef")
        if "vpsef" in d
        else VpsefConfig()
    )
    return ControllerConfig(gains=gains, vpsef=vpsef, sigma=sigma)


def scenario_from_dict(data: dict, name: str = "custom") -> Scenario:
    """Build a Scenario from a parsed config document; unknown keys fail."""
    _check_keys(
        data,
        "config",
        required=("system", "reference", "controller", "sim"),
        optional=("name", "baseline"),
    )
    if "name" in data:
        name = _as_str(data["name"], "name")

    sys_d = data["system"]
    _check_keys(sys_d, "system", required=("n", "fstar", "fn", "gn"))
    n = _as_int(sys_d["n"], "system.n")
    if n < 1:
        raise ConfigError(f"system.n must be >= 1, got {n}")
    fstar_raw = sys_d["fstar"]
    if not isinstance(fstar_raw, list):
        raise ConfigError("system.fstar: expected a list of expressions")
    system = SystemSpec(
        n=n,
        fstar=tuple(
            _parse_expr(s, n, f"system.fstar[{i}]")
            for i, s in enumerate(fstar_raw)
        ),
        fn=_parse_expr(sys_d["fn"], n, "system.fn"),
        gn=_parse_expr(sys_d["gn"], n, "system.gn"),
    )

    ref_d = data["reference"]
    _check_keys(ref_d, "reference", required=("yr",))
    try:
        reference = ReferenceSpec(yr=_parse_expr(ref_d["yr"], n, "reference.yr"))
    except ex.DifferentiationError as err:
        raise ConfigError(f"reference.yr: {err}") from err

    controller = _controller_from_dict(data["controller"], "controller")

    sim_d = data["sim"]
    _check_keys(
        sim_d, "sim", required=("x0",), optional=("h", "t_end", "a0")
    )
    x0 = _as_float_tuple(sim_d["x0"], "sim.x0")
    a0 = (
        _as_float_tuple(sim_d["a0"], "sim.a0")
        if "a0" in sim_d
        else (0.0,) * (len(x0) - 1)
    )
    sim_kwargs = {"x0": x0, "a0": a0}
    if "h" in sim_d:
        sim_kwargs["h"] = _as_float(sim_d["h"], "sim.h")
    if "t_end" in sim_d:
        sim_kwargs["t_end"] = _as_float(sim_d["t_end"], "sim.t_end")
    sim = SimConfig(**sim_kwargs)

    baseline = (
        _controller_from_dict(data["baseline"], "baseline")
        if "baseline" in data
        else None
    )
    return Scenario(
        name=name,
        system=system,
        reference=reference,
        controller=controller,
        sim=sim,
        baseline=baseline,
    )


def scenario_to_dict(scn: Scenario) -> dict:
    """Serialize a Scenario to the config-file schema (round-trips)."""

    def controller_dict(cfg: ControllerConfig) -> dict:
        v = cfg.vpsef
        return {
            "gains": list(cfg.gains),
            "sigma": [_sigma_to_dict(s) for s in cfg.sigma],
            "vpsef": {
                "threshold": v.threshold,
                "p_hi": v.p_hi,
                "q_hi": v.q_hi,
                "p_lo": v.p_lo,
                "q_lo": v.q_lo,
                "hysteresis": v.hysteresis,
            },
        }

    out = {
        "name": scn.name,
        "system": {
            "n": scn.system.n,
            "fstar": [ex.to_source(f) for f in scn.system.fstar],
            "fn": ex.to_source(scn.system.fn),
            "gn": ex.to_source(scn.system.gn),
        },
        "reference": {"yr": ex.to_source(scn.reference.yr)},
        "controller": controller_dict(scn.controller),
        "sim": {
            "h": scn.sim.h,
            "t_end": scn.sim.t_end,
            "x0": list(scn.sim.x0),
            "a0": list(scn.sim.a0),
        },
    }
    if scn.baseline is not None:
        out["baseline"] = controller_dict(scn.baseline)
    return out


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a JSON scenario config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"{path}:{err.lineno}:{err.colno}: {err.msg}"
        ) from err
    return scenario_from_dict(data, name=path.stem)
