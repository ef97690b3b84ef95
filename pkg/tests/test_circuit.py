import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussfold import circuit as cb
from gaussfold.fock import enumerate_shell
from gaussfold.passive import apply_passive, dft, haar_random, identity, interferometer_element, preset
from gaussfold.squeezers import dual_squeezing_degree, ts_element_oracle
from gaussfold.verify import two_circuit_residual, factorization_residual, reference_spec, reference_spec2


def unfolded_oracle(spec, k, m, oracle_cutoff=30):
    """<k| W_A (x)TS W_B^T |m> with every two-mode squeezer taken from the exponentiated generator."""
    p_vec = {p: interferometer_element(spec.W_B, m, p) for p in enumerate_shell(spec.M, sum(m))}
    amp = 0j
    for q in enumerate_shell(spec.M, sum(k)):
        left = interferometer_element(spec.W_A, k, q)
        mid = 0j
        for p, val in p_vec.items():
            prod = 1.0
            for i, t in enumerate(spec.t_list):
                r = dual_squeezing_degree(t)
                prod *= ts_element_oracle(r, q[2 * i : 2 * i + 2], p[2 * i : 2 * i + 2], oracle_cutoff)
            mid += prod * val
        amp += left * mid
    return amp


@pytest.fixture(scope="module")
def spec2m():
    return cb.GaussianCircuitSpec(2, 0.4, [0.7], preset("random:1", 2), preset("random:2", 2), cutoff=6)


class TestSpec:
    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"M": 3, "t_list": [0.5]}, "even"),
            ({"xi": 1.0}, "squeezing"),
            ({"t_list": [0.5, 0.5]}, "transmissivities"),
            ({"t_list": [0.0]}, "transmissivities"),
            ({"cutoff": 0}, "cutoff"),
        ],
    )
    def test_validation(self, kwargs, match):
        args = {"M": 2, "xi": 0.3, "t_list": [0.5], "U_A": dft(2), "U_B": dft(2), "cutoff": 3}
        args.update(kwargs)
        with pytest.raises(ValueError, match=match):
            cb.GaussianCircuitSpec(**args)

    def test_unitary_dimension(self):
        with pytest.raises(ValueError, match="U_A"):
            cb.GaussianCircuitSpec(2, 0.3, [0.5], dft(4), dft(2))

    def test_mode_matrix_is_unitary(self):
        spec = reference_spec(4, 3)
        u = spec.mode_matrix.matrix
        assert u.shape == (8, 8)
        assert np.allclose(u @ u.conj().T, np.eye(8))

    def test_interleave_round_trip(self):
        assert cb.interleave((1, 2), (3, 4)) == (1, 3, 2, 4)
        assert cb.split_outcome((1, 3, 2, 4)) == ((1, 2), (3, 4))

    def test_input_state(self):
        spec = cb.GaussianCircuitSpec(2, 0.5, [0.5], dft(2), dft(2), cutoff=2)
        state = spec and cb.input_state(spec)
        assert state.modes == 4
        assert state[(1, 1, 2, 2)] == pytest.approx(0.75 * 0.5**3)


class TestJoint:
    def test_amplitude_matches_state_evolution(self, spec2m):
        out = apply_passive(spec2m.mode_matrix, cb.input_state(spec2m))
        for n_a, n_b in itertools.product(range(4), repeat=2):
            for k in enumerate_shell(2, n_a):
                for m in enumerate_shell(2, n_b):
                    want = out[cb.interleave(k, m)]
                    assert abs(cb.joint_amplitude(spec2m, k, m) - want) < 1e-14

    def test_odd_total_vanishes(self, spec2m):
        assert cb.joint_probability(spec2m, (1, 0), (0, 0)) == 0.0

    def test_vacuum_probability(self, spec2m):
        # only the vacuum of every source reaches (0, 0; 0, 0)
        assert cb.joint_probability(spec2m, (0, 0), (0, 0)) == pytest.approx((1 - 0.16) ** 2)

    def test_xi_zero(self):
        spec = cb.GaussianCircuitSpec(2, 0.0, [0.5], dft(2), dft(2))
        assert cb.joint_probability(spec, (0, 0), (0, 0)) == 1.0
        assert cb.joint_probability(spec, (1, 0), (1, 0)) == 0.0

    def test_scattershot_support(self):
        spec = cb.GaussianCircuitSpec(2, 0.4, [1.0], haar_random(2, 1), haar_random(2, 2))
        for n_a, n_b in itertools.product(range(4), repeat=2):
            if n_a == n_b or (n_a + n_b) % 2:
                continue
            for k in enumerate_shell(2, n_a):
                for m in enumerate_shell(2, n_b):
                    # the cancellation is exact up to rounding in the balanced beam splitters
                    assert cb.joint_probability(spec, k, m) < 1e-30

    def test_pattern_length(self, spec2m):
        with pytest.raises(ValueError):
            cb.joint_probability(spec2m, (0, 0, 0), (0, 0))


class TestUnfolded:
    @pytest.mark.parametrize("k, m", [((0, 0), (0, 0)), ((1, 1), (0, 2)), ((2, 1), (1, 0)), ((2, 2), (1, 1))])
    def test_against_exponentiated_squeezers(self, spec2m, k, m):
        assert abs(cb.conditional_amplitude_tilde(spec2m, k, m) - unfolded_oracle(spec2m, k, m)) < 1e-10

    @pytest.mark.parametrize("n_a, n_b", [(0, 0), (2, 0), (1, 3), (4, 2)])
    def test_state_matches_elements(self, n_a, n_b):
        spec = reference_spec(4, 8)
        for m in enumerate_shell(4, n_b)[:4]:
            state = cb.conditional_state_tilde(spec, m, n_a)
            for k in enumerate_shell(4, n_a):
                assert abs(state[k] - cb.conditional_amplitude_tilde(spec, k, m)) < 1e-13

    def test_conditional_normalized_over_k(self, spec2m):
        # sum over k of p~(k|m) = 1 for the Gaussian circuit
        m = (1, 0)
        total = sum(cb.conditional_state_tilde(spec2m, m, n).norm_squared() for n in range(1, 60, 2))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_identity_when_t_is_one(self):
        spec = cb.GaussianCircuitSpec(2, 0.4, [1.0], identity(2), identity(2))
        # W_A W_B^T = U_A B B^T U_B^T = I, so p~(k|m) = delta
        for k, m in itertools.product(enumerate_shell(2, 2), repeat=2):
            assert cb.conditional_probability_tilde(spec, k, m) == pytest.approx(float(k == m))


class TestFactorization:
    @pytest.mark.parametrize("modes, seed", [(2, 1), (2, 2), (4, 3)])
    def test_residual(self, modes, seed):
        assert factorization_residual(reference_spec(modes, seed), 4) < 1e-13

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.0, 0.9), st.floats(0.05, 1.0), st.integers(0, 1000))
    def test_residual_property(self, xi, t, seed):
        spec = cb.GaussianCircuitSpec(2, xi, [t], haar_random(2, seed), haar_random(2, seed + 1))
        assert factorization_residual(spec, 4) < 1e-12

    def test_prefactor_formula(self):
        spec = reference_spec(4, 5)
        a = cb.prefactor_a(spec, 3, 1)
        assert a == pytest.approx((1 - 0.16) ** 4 * 0.4**4 / math.prod(spec.t_list))


class TestTwoCircuit:
    def test_merge_layout(self):
        spec2 = reference_spec2(4)
        u_a = spec2.as_circuit.U_A.matrix
        assert np.allclose(u_a[:2, 0::2], spec2.V_A.matrix)
        assert np.allclose(u_a[2:, 1::2], spec2.V_A2.matrix)
        assert np.allclose(u_a[:2, 1::2], 0)

    def test_opposite_degrees(self):
        spec2 = reference_spec2(4)
        assert np.allclose(spec2.squeezing_degrees(False), -np.array(spec2.squeezing_degrees(True)))
        assert all(r < 0 for r in spec2.squeezing_degrees(False))

    @pytest.mark.parametrize("modes", [2, 4])
    def test_factorization(self, modes):
        spec2 = reference_spec2(modes)
        assert two_circuit_residual(spec2, 3) < 1e-13
        assert two_circuit_residual(spec2, 3, amplitudes=True) < 1e-13

    def test_probabilities_blind_to_global_sign(self):
        spec2 = reference_spec2(4)
        assert two_circuit_residual(spec2, 3, swap_signs=True) < 1e-13
        assert two_circuit_residual(spec2, 3, swap_signs=True, amplitudes=True) > 1e-3

    def test_conditional_probability_2(self):
        spec2 = reference_spec2(2)
        k, m = (1,), (1,)
        r = spec2.squeezing_degrees(True)
        amp = cb.single_mode_gaussian_amplitude(spec2.V_A2, r, spec2.V_B2, k, m)
        assert cb.conditional_probability_2(spec2, k, m, primed=True) == pytest.approx(abs(amp) ** 2)

    def test_validation(self):
        with pytest.raises(ValueError, match="V_A"):
            cb.GaussianCircuitSpec2(4, 0.3, [0.5, 0.5], dft(4), dft(2), dft(2), dft(2))
