"""Variable-power shaping of surface errors.

The surface error e feeding each controller stage is reshaped to
sign(e) * |e|^(p/q), with the exponent pair switched on the raw error
magnitude: p_hi/q_hi > 1 while |e| is above the threshold (large-error
correction), p_lo/q_lo < 1 at or below it (small-error amplification).
A branch whose exponents satisfy p = q leaves the error untouched, which
is the plain-backstepping baseline.

The signed-magnitude power keeps the map odd and real for negative
errors, where a literal e^(p/q) with even q would turn complex.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConfigError


class Branch(enum.Enum):
    LARGE = "large"
    SMALL = "small"
    IDENTITY = "identity"


@dataclass(frozen=True)
class VpsefConfig:
    """Threshold and exponent pairs for the switched error shaping.

    p = q is allowed in either branch and reduces that branch to the
    identity map (the baseline controller uses it in both).  The optional
    hysteresis band (full width, centered on the threshold) only matters
    when a caller feeds the previous branch back into surface_error; the
    closed-loop simulator re-evaluates the branch fresh every call.
    """

    threshold: float = 0.1
    p_hi: int = 5
    q_hi: int = 3
    p_lo: int = 1
    q_lo: int = 2
    hysteresis: float = 0.0

    def __post_init__(self):
        if not (self.threshold > 0.0):
            raise ConfigError(
                f"vpsef.threshold must be > 0, got {self.threshold}"
            )
        for name in ("p_hi", "q_hi", "p_lo", "q_lo"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ConfigError(
                    f"vpsef.{name} must be a positive integer, got {v!r}"
                )
        if self.p_hi < self.q_hi:
            raise ConfigError(
                "vpsef large-error exponent must satisfy p_hi >= q_hi, got "
                f"{self.p_hi}/{self.q_hi}"
            )
        if self.p_lo > self.q_lo:
            raise ConfigError(
                "vpsef small-error exponent must satisfy p_lo <= q_lo, got "
                f"{self.p_lo}/{self.q_lo}"
            )
        if self.hysteresis < 0.0:
            raise ConfigError(
                f"vpsef.hysteresis must be >= 0, got {self.hysteresis}"
            )

    @classmethod
    def identity(cls, threshold: float = 0.1) -> "VpsefConfig":
        """Config that shapes nothing: the p = q baseline in both branches."""
        return cls(threshold=threshold, p_hi=1, q_hi=1, p_lo=1, q_lo=1)

    def is_identity(self) -> bool:
        return self.p_hi == self.q_hi and self.p_lo == self.q_lo


@dataclass(frozen=True)
class SurfaceValue:
    """Raw error e alongside its shaped value and the branch that made it."""

    raw: float
    shaped: float
    branch: Branch


def _pick_branch(
    e_abs: float, cfg: VpsefConfig, prev: Branch | None
) -> bool:
    """True for the large-error branch (strict comparison at the threshold)."""
    if cfg.hysteresis > 0.0 and prev in (Branch.LARGE, Branch.SMALL):
        half = 0.5 * cfg.hysteresis
        if abs(e_abs - cfg.threshold) <= half:
            return prev is Branch.LARGE
    return e_abs > cfg.threshold


def surface_error(
    e: float, cfg: VpsefConfig, prev_branch: Branch | None = None
) -> SurfaceValue:
    """Shape a raw surface error through the magnitude-switched power law.

    Total on the reals; odd in e; the branch with p = q returns e exactly
    and is tagged Branch.IDENTITY.
    """
    large = _pick_branch(abs(e), cfg, prev_branch)
    p, q = (cfg.p_hi, cfg.q_hi) if large else (cfg.p_lo, cfg.q_lo)
    if p == q:
        return SurfaceValue(raw=e, shaped=e, branch=Branch.IDENTITY)
    shaped = math.copysign(math.pow(abs(e), p / q), e)
    return SurfaceValue(
        raw=e, shaped=shaped, branch=Branch.LARGE if large else Branch.SMALL
    )
