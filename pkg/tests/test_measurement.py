import math

import numpy as np
import pytest

from etpsim import measurement as meas
from etpsim import states

HV = meas.AnalyzerSetting.hv()
RL = meas.AnalyzerSetting.rl()
PM = meas.AnalyzerSetting.pm()
NAMED = {"HV": HV, "RL": RL, "PM": PM}


class TestFourfoldEtp:
    def test_parallel_named_bases_give_one_third(self):
        psi = states.make_etp()
        for setting in NAMED.values():
            p = meas.fourfold_probability_etp(psi, setting, setting)
            assert p == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_crossed_named_bases_give_zero(self):
        psi = states.make_etp()
        for name_a, a in NAMED.items():
            for name_b, b in NAMED.items():
                if name_a != name_b:
                    assert meas.fourfold_probability_etp(psi, a, b) < 1e-12

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            meas.fourfold_probability_etp(np.zeros(4), HV, HV)


class TestFourfoldDoubleEop:
    def test_parallel_gives_half(self):
        psi = states.make_double_eop()
        for setting in NAMED.values():
            p = meas.fourfold_probability_eop2(psi, setting, setting)
            assert p == pytest.approx(0.5, abs=1e-12)

    def test_crossed_gives_quarter(self):
        psi = states.make_double_eop()
        assert meas.fourfold_probability_eop2(psi, HV, RL) == pytest.approx(
            0.25, abs=1e-12
        )
        assert meas.fourfold_probability_eop2(psi, PM, RL) == pytest.approx(
            0.25, abs=1e-12
        )


class TestFringeModel:
    def test_pure_single_mode_peak(self):
        m = states.MixtureModel.pure_etp(c0=1.0)
        assert meas.fringe_rate(m, "fig2a", 0.0) == pytest.approx(1.0 / 3.0)

    def test_pure_double_eop_floor(self):
        m = states.MixtureModel.pure_double_eop(c0=1.0)
        assert meas.fringe_rate(m, "fig2a", math.radians(45.0)) == pytest.approx(0.25)

    def test_noise_term_is_flat_quarter(self):
        m = states.MixtureModel(c0=1.0, alpha=0.0, beta=0.0, gamma=1.0)
        for scan in meas.SCANS:
            rates = meas.fringe_rate(m, scan, np.linspace(0, np.pi, 37))
            assert np.allclose(rates, 0.25, atol=1e-15)

    def test_exact_zero_at_crossed_grid_angles(self):
        m = states.MixtureModel.pure_etp(c0=1.0)
        assert meas.fringe_rate(m, "fig2a", math.radians(45.0)) == 0.0
        assert meas.fringe_rate(m, "fig2c", 0.0) == 0.0

    def test_unknown_scan(self):
        m = states.MixtureModel.pure_etp()
        with pytest.raises(ValueError):
            meas.fringe_rate(m, "fig2z", 0.0)

    def test_quantum_matches_model_on_grid(self):
        # closed forms against the full quantum probabilities, both sources
        etp = states.make_etp()
        eop2 = states.make_double_eop()
        m_etp = states.MixtureModel.pure_etp(c0=1.0)
        m_eop2 = states.MixtureModel.pure_double_eop(c0=1.0)
        angles = np.linspace(0.0, np.pi, 181)
        for scan in meas.SCANS:
            for angle in angles:
                a, b = meas.scan_settings(scan, angle)
                assert meas.fourfold_probability_etp(etp, a, b) == pytest.approx(
                    float(meas.fringe_rate(m_etp, scan, angle)), abs=1e-9
                )
                assert meas.fourfold_probability_eop2(eop2, a, b) == pytest.approx(
                    float(meas.fringe_rate(m_eop2, scan, angle)), abs=1e-9
                )


class TestRatioAnalytic:
    def test_pure_single_mode_is_zero(self):
        assert meas.ratio_r_analytic(states.MixtureModel.pure_etp()) == 0.0

    def test_pure_double_eop_is_half(self):
        assert meas.ratio_r_analytic(states.MixtureModel.pure_double_eop()) == 0.5

    def test_published_mixture(self):
        m = states.MixtureModel(c0=1.0, alpha=0.37, beta=0.63, gamma=0.0)
        assert meas.ratio_r_analytic(m) == pytest.approx(0.36, abs=0.005)

    def test_noise_increases_ratio(self):
        # fixed underlying alpha:beta ratio, growing white-noise fraction
        for alpha_share in (0.2, 0.5, 0.8):
            previous = -1.0
            for gamma in np.linspace(0.0, 0.9, 10):
                scale = 1.0 - gamma
                m = states.MixtureModel(
                    c0=1.0,
                    alpha=alpha_share * scale,
                    beta=(1.0 - alpha_share) * scale,
                    gamma=gamma,
                )
                r = meas.ratio_r_analytic(m)
                assert r > previous
                previous = r


class TestClassify:
    def test_parallel(self):
        assert meas.classify(HV, HV) == "parallel"
        assert meas.classify(PM, PM) == "parallel"

    def test_perpendicular(self):
        assert meas.classify(HV, RL) == "perpendicular"
        assert meas.classify(PM, RL) == "perpendicular"

    def test_continuous_setting_rejected(self):
        odd = meas.AnalyzerSetting(qwp_present=True, qwp_angle=0.3)
        with pytest.raises(ValueError):
            meas.classify(odd, HV)


class TestScanRegistry:
    def test_extremum_angles_on_quarter_step_grid(self):
        grid = set(np.arange(0.0, 180.1, 22.5))
        for scan in meas.SCANS:
            assert set(meas.parallel_angles_deg(scan)) <= grid
            assert set(meas.perpendicular_angles_deg(scan)) <= grid

    def test_scan_settings_match_named_bases_at_extrema(self):
        # the rotated-plate settings at the extremum angles analyze the same
        # bases as the named settings (equal split-port projectors), even
        # when an extra plate is physically present
        def projector(setting):
            lifted = setting.lifted()
            hv = np.zeros(3)
            hv[1] = 1.0
            return lifted.conj().T @ np.outer(hv, hv) @ lifted

        cases = [
            ("fig2a", 0.0, HV),
            ("fig2a", 45.0, RL),
            ("fig2a", 90.0, HV),
            ("fig2b", 0.0, RL),
            ("fig2b", 22.5, PM),
            ("fig2c", 0.0, HV),
            ("fig2c", 22.5, PM),
        ]
        for scan, angle_deg, named in cases:
            _, setting_b = meas.scan_settings(scan, math.radians(angle_deg))
            assert np.allclose(projector(setting_b), projector(named), atol=1e-12), (
                scan, angle_deg
            )

    def test_classify_raises_for_equivalent_but_unnamed_setting(self):
        # a QWP left in the beam at 0 deg analyzes H/V but is not the named
        # HV configuration; continuous-scan settings must go through the
        # fringe extrema instead
        _, setting_b = meas.scan_settings("fig2a", 0.0)
        with pytest.raises(ValueError):
            meas.classify(HV, setting_b)


class TestCoincidenceSummary:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            meas.CoincidenceSummary(c_parallel=-1.0, c_perpendicular=0.0)
