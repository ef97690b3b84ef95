import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussfold.fock import (
    FockAmplitudeMap,
    as_pattern,
    basis_state,
    enumerate_shell,
    inner_product,
    pattern_sort_key,
    shell_cardinality,
    tensor,
    vacuum,
)


@pytest.mark.parametrize(
    "modes, photons, expected",
    [(1, 0, 1), (1, 7, 1), (2, 2, 3), (3, 2, 6), (4, 4, 35), (8, 0, 1)],
)
def test_shell_cardinality_values(modes, photons, expected):
    assert shell_cardinality(modes, photons) == expected


def test_shell_cardinality_is_exact_for_huge_shells():
    # far beyond 64-bit range; Python ints must not wrap
    value = shell_cardinality(200, 300)
    assert value == math.comb(499, 300)
    assert value > 2**128


@pytest.mark.parametrize("modes, photons", [(0, 1), (-1, 0), (2, -1)])
def test_shell_rejects_bad_arguments(modes, photons):
    with pytest.raises(ValueError):
        shell_cardinality(modes, photons)
    with pytest.raises(ValueError):
        enumerate_shell(modes, photons)


def test_enumerate_shell_order():
    assert enumerate_shell(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert enumerate_shell(3, 1) == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    assert enumerate_shell(3, 0) == [(0, 0, 0)]


@given(st.integers(1, 5), st.integers(0, 6))
def test_enumerate_shell_matches_cardinality(modes, photons):
    shell = enumerate_shell(modes, photons)
    assert len(shell) == shell_cardinality(modes, photons)
    assert len(set(shell)) == len(shell)
    assert all(sum(p) == photons and len(p) == modes for p in shell)
    # descending lexicographic order
    assert shell == sorted(shell, reverse=True)


def test_pattern_sort_key_groups_by_photon_number():
    patterns = [(0, 2), (1, 0), (0, 0), (2, 0), (1, 1), (0, 1)]
    ordered = sorted(patterns, key=pattern_sort_key)
    assert ordered == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_as_pattern_rejects_negative():
    with pytest.raises(ValueError):
        as_pattern([1, -1])


class TestAmplitudeMap:
    def test_drops_small_amplitudes(self):
        state = FockAmplitudeMap(2, 3, {(0, 0): 1.0, (1, 1): 1e-17})
        assert len(state) == 1
        assert state[(1, 1)] == 0

    @pytest.mark.parametrize("entries", [{(4, 0): 1.0}, {(1,): 1.0}, {(-1, 0): 1.0}])
    def test_validation(self, entries):
        with pytest.raises(ValueError):
            FockAmplitudeMap(2, 3, entries)

    def test_sectors_and_norm(self):
        state = FockAmplitudeMap(2, 2, {(0, 0): 0.6, (1, 1): 0.8j, (2, 0): 0.0})
        assert state.sectors() == {0: {(0, 0): 0.6}, 2: {(1, 1): 0.8j}}
        assert state.norm_squared() == pytest.approx(1.0)
        assert state.max_photons() == 2

    def test_tensor_and_inner_product(self):
        a = FockAmplitudeMap(1, 1, {(0,): 0.6, (1,): 0.8})
        b = basis_state((2,))
        ab = tensor(a, b)
        assert ab.modes == 2
        assert ab[(1, 2)] == pytest.approx(0.8)
        assert inner_product(ab, ab) == pytest.approx(1.0)
        assert inner_product(vacuum(2, 2), ab) == 0
        with pytest.raises(ValueError):
            inner_product(a, ab)
