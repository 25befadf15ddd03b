import math

import numpy as np
import pytest

from etpsim import polarization as pol
from etpsim import states


class TestMakeEtp:
    def test_component_amplitudes(self):
        psi = states.make_etp()
        assert psi[1 * 3 + 1] == pytest.approx(-1.0 / math.sqrt(3.0))
        assert psi[0 * 3 + 0] == 0.0
        assert psi[0 * 3 + 2] == pytest.approx(1.0 / math.sqrt(3.0))

    def test_normalized(self):
        psi = states.make_etp()
        assert abs(np.vdot(psi, psi) - 1.0) < 1e-12


class TestUnpolarizedBasisForm:
    def test_etp_has_three_equal_coefficients(self):
        coeffs, residual = states.etp_in_unpolarized_basis(states.make_etp())
        assert residual < 1e-10
        assert np.allclose(coeffs, -1.0 / math.sqrt(3.0), atol=1e-10)
        assert np.sum(np.abs(coeffs) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_product_state_leaves_residual(self):
        # |HH>_A |HH>_B projects with coefficients (0, 1/2, -1/2); the
        # missing half of the norm stays outside the diagonal span.
        vec = np.zeros(9, dtype=complex)
        vec[0] = 1.0
        coeffs, residual = states.etp_in_unpolarized_basis(vec)
        assert residual == pytest.approx(math.sqrt(0.5), abs=1e-12)
        assert coeffs[0] == pytest.approx(0.0, abs=1e-12)
        assert abs(coeffs[1]) == pytest.approx(0.5, abs=1e-12)
        assert abs(coeffs[2]) == pytest.approx(0.5, abs=1e-12)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            states.etp_in_unpolarized_basis(np.zeros(4))


class TestMakeDoubleEop:
    def test_component_amplitudes(self):
        psi = states.make_double_eop()
        # order (A1, A2, B1, B2); +1/2 on |H V>_1 |H V>_2
        assert psi[0b0011] == pytest.approx(0.5)
        # -1/2 when the second pair flips: A2=V, B2=H
        assert psi[0b0110] == pytest.approx(-0.5)
        assert abs(np.vdot(psi, psi) - 1.0) < 1e-12

    def test_is_product_of_singlets(self):
        psi = states.make_double_eop().reshape(2, 2, 2, 2)
        singlet = np.array([[0.0, 1.0], [-1.0, 0.0]]) / math.sqrt(2.0)
        expected = np.einsum("ab,cd->acbd", singlet, singlet)
        assert np.allclose(psi, expected, atol=1e-15)


class TestEopState:
    def test_density_trace_and_positivity(self):
        for noise in (0.0, 0.18, 1.0):
            rho = states.make_eop(noise=noise).density()
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
            assert np.min(np.linalg.eigvalsh(rho)) > -1e-12

    def test_singlet_rotational_invariance(self):
        base = states.make_eop().vector
        rng = np.random.default_rng(3)
        for _ in range(50):
            kind = "quarter" if rng.integers(2) else "half"
            u = pol.waveplate(kind, rng.uniform(0, np.pi))
            rotated = np.kron(u, u) @ base
            assert abs(abs(np.vdot(rotated, base)) - 1.0) < 1e-10

    def test_rejects_bad_noise(self):
        with pytest.raises(ValueError):
            states.EopState(states.make_eop().vector, noise=1.5)


class TestEtpCollectiveInvariance:
    def test_same_plates_in_both_paths_leave_state_unchanged(self):
        # the two-path pair state is invariant (up to global phase) under
        # identical plate chains in A and B
        psi = states.make_etp()
        plates = [
            np.eye(2, dtype=complex),
            pol.waveplate("half", math.radians(22.5)),
            pol.waveplate("quarter", math.radians(45.0)),
            pol.waveplate("quarter", 0.7) @ pol.waveplate("half", 0.3),
        ]
        for u in plates:
            lifted = pol.symmetric_lift(u)
            out = np.kron(lifted, lifted) @ psi
            assert pol.equal_up_to_phase(out, psi, tol=1e-10)


class TestMixtureModel:
    def test_accepts_valid(self):
        m = states.MixtureModel(c0=10.0, alpha=0.37, beta=0.63, gamma=0.0)
        assert m.alpha == 0.37

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            states.MixtureModel(c0=1.0, alpha=0.5, beta=0.6, gamma=0.0)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            states.MixtureModel(c0=1.0, alpha=-0.2, beta=1.2, gamma=0.0)
        with pytest.raises(ValueError):
            states.MixtureModel(c0=-5.0, alpha=1.0, beta=0.0, gamma=0.0)

    def test_pure_shortcuts(self):
        assert states.MixtureModel.pure_etp().alpha == 1.0
        assert states.MixtureModel.pure_double_eop().beta == 1.0
