"""Variable-power surface error shaping."""

import numpy as np
import pytest

from vpsef_dsc.errors import ConfigError
from vpsef_dsc.vpsef import Branch, VpsefConfig, surface_error

DEFAULT = VpsefConfig(threshold=0.1, p_hi=5, q_hi=3, p_lo=3, q_lo=5)


class TestExamples:
    def test_zero_error(self):
        sv = surface_error(0.0, DEFAULT)
        assert sv.shaped == 0.0
        assert sv.branch is Branch.SMALL

    def test_unit_magnitude_fixed_point(self):
        assert surface_error(1.0, DEFAULT).shaped == 1.0
        assert surface_error(-1.0, DEFAULT).shaped == -1.0

    def test_large_branch_power(self):
        # high-precision oracle: 0.5^(5/3) = 0.31498026247371829...
        sv = surface_error(-0.5, DEFAULT)
        assert sv.branch is Branch.LARGE
        assert sv.shaped == pytest.approx(-0.31498, abs=1e-5)
        assert sv.shaped == pytest.approx(-0.3149802624737183, abs=1e-12)

    def test_small_branch_power(self):
        # high-precision oracle: 0.04^(3/5) = 0.14495593273553911...
        sv = surface_error(0.04, DEFAULT)
        assert sv.branch is Branch.SMALL
        assert sv.shaped == pytest.approx(0.14495, abs=1e-5)
        assert sv.shaped == pytest.approx(0.1449559327355391, abs=1e-12)

    def test_identity_reduction_large_branch(self):
        cfg = VpsefConfig(threshold=0.1, p_hi=1, q_hi=1, p_lo=3, q_lo=5)
        sv = surface_error(0.2, cfg)
        assert sv.shaped == 0.2
        assert sv.branch is Branch.IDENTITY

    def test_boundary_uses_small_branch(self):
        sv = surface_error(0.1, DEFAULT)
        assert sv.branch is Branch.SMALL
        assert surface_error(np.nextafter(0.1, 1.0), DEFAULT).branch is Branch.LARGE

    def test_raw_preserved(self):
        sv = surface_error(-0.03, DEFAULT)
        assert sv.raw == -0.03


class TestConfigValidation:
    def test_threshold_positive(self):
        with pytest.raises(ConfigError, match="threshold"):
            VpsefConfig(threshold=0.0)

    def test_large_branch_orientation(self):
        with pytest.raises(ConfigError, match="p_hi >= q_hi"):
            VpsefConfig(p_hi=3, q_hi=5)

    def test_small_branch_orientation(self):
        with pytest.raises(ConfigError, match="p_lo <= q_lo"):
            VpsefConfig(p_lo=5, q_lo=3)

    def test_integer_exponents_required(self):
        with pytest.raises(ConfigError, match="positive integer"):
            VpsefConfig(p_hi=1.5)

    def test_negative_hysteresis_rejected(self):
        with pytest.raises(ConfigError, match="hysteresis"):
            VpsefConfig(hysteresis=-0.1)

    def test_equal_exponents_allowed(self):
        cfg = VpsefConfig.identity()
        assert cfg.is_identity()


class TestProperties:
    def test_odd_symmetry(self):
        rng = np.random.default_rng(21)
        for e in rng.uniform(-3.0, 3.0, size=1500):
            pos, neg = surface_error(float(e), DEFAULT), surface_error(float(-e), DEFAULT)
            assert neg.shaped == -pos.shaped
            assert neg.branch is pos.branch

    def test_sign_matches_raw(self):
        rng = np.random.default_rng(22)
        for e in rng.uniform(-2.0, 2.0, size=1500):
            sv = surface_error(float(e), DEFAULT)
            assert np.sign(sv.shaped) == np.sign(sv.raw)
            assert (sv.shaped == 0.0) == (sv.raw == 0.0)

    def test_strictly_increasing_within_branch(self):
        rng = np.random.default_rng(23)
        for lo, hi in ((0.0, 0.1), (0.1, 5.0)):  # small / large regions
            for _ in range(1000):
                a = float(rng.uniform(lo, hi))
                b = a * (1.0 + float(rng.uniform(1e-6, 0.5)))
                if b > hi:
                    continue
                sa, sb = surface_error(a, DEFAULT), surface_error(b, DEFAULT)
                if sa.branch is sb.branch:
                    assert abs(sb.shaped) > abs(sa.shaped)

    def test_small_branch_amplifies(self):
        rng = np.random.default_rng(24)
        bound = min(DEFAULT.threshold, 1.0)
        for _ in range(1500):
            e = float(rng.uniform(-bound, bound))
            if e == 0.0:
                continue
            sv = surface_error(e, DEFAULT)
            assert abs(sv.shaped) >= abs(e)

    def test_identity_config_is_identity_everywhere(self):
        cfg = VpsefConfig.identity()
        rng = np.random.default_rng(25)
        for e in rng.uniform(-10.0, 10.0, size=1500):
            sv = surface_error(float(e), cfg)
            assert sv.shaped == float(e)
            assert sv.branch is Branch.IDENTITY


class TestHysteresis:
    CFG = VpsefConfig(threshold=0.1, hysteresis=0.04)

    def test_holds_previous_branch_inside_band(self):
        assert surface_error(0.11, self.CFG, Branch.SMALL).branch is Branch.SMALL
        assert surface_error(0.09, self.CFG, Branch.LARGE).branch is Branch.LARGE

    def test_switches_outside_band(self):
        assert surface_error(0.13, self.CFG, Branch.SMALL).branch is Branch.LARGE
        assert surface_error(0.07, self.CFG, Branch.LARGE).branch is Branch.SMALL

    def test_no_previous_branch_falls_back(self):
        assert surface_error(0.11, self.CFG).branch is Branch.LARGE
        assert surface_error(0.09, self.CFG).branch is Branch.SMALL

    def test_zero_width_ignores_previous(self):
        assert surface_error(0.11, DEFAULT, Branch.SMALL).branch is Branch.LARGE
