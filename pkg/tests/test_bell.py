import math

import numpy as np
import pytest
import scipy.linalg

from etpsim import bell
from etpsim import states

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def qubit_singlet():
    vec = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex)
    return vec / math.sqrt(2.0)


class TestChshValue:
    def test_textbook_tsirelson_configuration(self):
        # singlet correlations <a.sigma (x) b.sigma> = -a.b; the standard
        # a = z, a' = x, b = -(z+x)/sqrt2, b' = (x-z)/sqrt2 gives 2 sqrt 2
        settings = bell.BellSettings(
            a=SZ,
            a_prime=SX,
            b=-(SZ + SX) / math.sqrt(2.0),
            b_prime=(SX - SZ) / math.sqrt(2.0),
        )
        value = bell.chsh_value(qubit_singlet(), settings)
        assert value == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-9)

    def test_identical_observables_stay_classical(self):
        obs = bell.collective_pair_observable([0.3, -0.2, 0.9])
        settings = bell.BellSettings(a=obs, a_prime=obs, b=obs, b_prime=obs)
        value = bell.chsh_value(states.make_etp(), settings)
        assert abs(value) <= 2.0 + 1e-12

    def test_tsirelson_bound_random_settings(self):
        rng = np.random.default_rng(17)
        psi = states.make_etp()
        for _ in range(200):
            obs = [
                bell.collective_pair_observable(rng.uniform(-np.pi, np.pi, 3))
                for _ in range(4)
            ]
            settings = bell.BellSettings(a=obs[0], a_prime=obs[1], b=obs[2], b_prime=obs[3])
            assert abs(bell.chsh_value(psi, settings)) <= 2.0 * math.sqrt(2.0) + 1e-9

    def test_local_unitary_invariance(self):
        rng = np.random.default_rng(23)
        psi = states.make_etp()
        obs = [
            bell.collective_pair_observable(rng.uniform(-np.pi, np.pi, 3))
            for _ in range(4)
        ]
        settings = bell.BellSettings(a=obs[0], a_prime=obs[1], b=obs[2], b_prime=obs[3])
        base = bell.chsh_value(psi, settings)
        for _ in range(10):
            wa = scipy.linalg.expm(1j * _random_hermitian(rng, 3))
            wb = scipy.linalg.expm(1j * _random_hermitian(rng, 3))
            rotated_state = np.kron(wa, wb) @ psi
            rotated = bell.BellSettings(
                a=wa @ obs[0] @ wa.conj().T,
                a_prime=wa @ obs[1] @ wa.conj().T,
                b=wb @ obs[2] @ wb.conj().T,
                b_prime=wb @ obs[3] @ wb.conj().T,
            )
            assert bell.chsh_value(rotated_state, rotated) == pytest.approx(
                base, abs=1e-10
            )


def _random_hermitian(rng, dim):
    mat = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (mat + mat.conj().T) / 2.0


class TestObservables:
    def test_collective_pair_observable_is_dichotomic(self):
        rng = np.random.default_rng(29)
        for _ in range(50):
            obs = bell.collective_pair_observable(rng.uniform(-np.pi, np.pi, 3))
            bell.validate_dichotomic(obs)

    def test_collective_modes_observable_is_dichotomic(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            obs = bell.collective_modes_observable(rng.uniform(-np.pi, np.pi, 3))
            bell.validate_dichotomic(obs)

    def test_general_observable_is_dichotomic(self):
        rng = np.random.default_rng(37)
        for dim, signs in ((3, (1, -1, 1)), (4, (1, -1, -1, 1))):
            for _ in range(20):
                obs = bell.general_observable(
                    rng.normal(size=dim * dim - 1), signs
                )
                bell.validate_dichotomic(obs)

    def test_validate_rejects_non_dichotomic(self):
        with pytest.raises(ValueError):
            bell.validate_dichotomic(np.diag([1.0, 0.5, -1.0]))
        with pytest.raises(ValueError):
            bell.validate_dichotomic(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestOptimize:
    def test_single_mode_source_reaches_collective_maximum(self):
        out = bell.optimize_chsh(states.make_etp(), seed=1, n_starts=10)
        assert out.value >= 2.54
        assert out.value <= bell.COLLECTIVE_MAX_SINGLE_MODE + 1e-9

    def test_double_eop_reaches_one_plus_sqrt2(self):
        out = bell.optimize_chsh(states.make_double_eop(), seed=2, n_starts=10)
        assert out.value >= 2.35
        assert out.value == pytest.approx(bell.COLLECTIVE_MAX_DOUBLE_EOP, abs=1e-6)

    def test_separable_state_stays_classical(self):
        vec = np.zeros(9, dtype=complex)
        vec[0 * 3 + 2] = 1.0  # |HH>_A |VV>_B
        out = bell.optimize_chsh(vec, seed=3, n_starts=8)
        assert out.value <= 2.0 + 1e-9
        assert not out.improved_over_classical

    def test_value_matches_reevaluation_of_settings(self):
        out = bell.optimize_chsh(states.make_etp(), seed=4, n_starts=4, maxiter=800)
        again = bell.chsh_value(states.make_etp(), out.settings)
        assert abs(out.value - again) <= 1e-12

    def test_deterministic_given_seed(self):
        a = bell.optimize_chsh(states.make_etp(), seed=5, n_starts=4, maxiter=600)
        b = bell.optimize_chsh(states.make_etp(), seed=5, n_starts=4, maxiter=600)
        assert a.value == b.value
        assert np.array_equal(a.params, b.params)

    def test_coarse_grid_strategy(self):
        out = bell.optimize_chsh(
            states.make_etp(), strategy="coarse_grid_then_local",
            seed=6, n_starts=6,
        )
        assert out.value >= 2.54

    def test_restart_diagnostics(self):
        out = bell.optimize_chsh(states.make_etp(), seed=7, n_starts=5, maxiter=600)
        assert out.n_starts == 5
        assert len(out.restart_values) == 5
        assert out.restart_spread >= 0.0

    def test_unrestricted_family_on_qutrit(self):
        out = bell.optimize_chsh(
            states.make_etp(), family="unrestricted", seed=8, n_starts=6,
            maxiter=8000,
        )
        # contains the analyzer family, so it can only do at least as well
        assert out.value >= 2.5
        assert out.value <= bell.TSIRELSON_BOUND + 1e-9


class TestClassicalEnumeration:
    def test_single_mode_source_max_is_two(self):
        value = bell.classical_chsh_max(states.make_etp())
        assert value == pytest.approx(2.0, abs=1e-12)

    def test_double_eop_max_is_two(self):
        value = bell.classical_chsh_max(states.make_double_eop())
        assert value == pytest.approx(2.0, abs=1e-12)

    def test_qubit_singlet_max_is_two(self):
        assert bell.classical_chsh_max(qubit_singlet()) == pytest.approx(2.0, abs=1e-12)
