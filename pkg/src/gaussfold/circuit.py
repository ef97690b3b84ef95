"""The passive circuit fed by two-mode squeezed vacua and its time-unfolded Gaussian twin.

Mode wiring (0-indexed physical modes of the 2M-mode passive circuit):

* TMS ``j`` (j = 0..M-1) occupies physical modes ``(2j, 2j+1)``: upper leg even,
  lower leg odd.
* Pair ``i`` joins TMS ``2i`` and ``2i+1``. Call their legs a = 4i, b = 4i+1,
  c = 4i+2, d = 4i+3. The coupling beam splitter ``t_i`` acts on ``(b, c)``
  with b as its first port.
* The A side holds the even physical modes, the B side the odd ones. Side-local
  indices are ``(a_i, c_i) -> (2i, 2i+1)`` and ``(b_i, d_i) -> (2i, 2i+1)``.
* A balanced beam splitter acts on each local pair, then ``U_A`` (``U_B``) on
  the whole side. Output ``s`` of ``U_A`` is physical mode ``2s``, output ``s``
  of ``U_B`` is physical mode ``2s+1``.

In the time-unfolded picture the coupling beam splitter of pair i becomes a
two-mode squeezer that takes B-local ``(2i, 2i+1)`` to A-local ``(2i, 2i+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .fock import FockAmplitudeMap, Pattern, as_pattern, enumerate_shell, tensor
from .passive import (
    PassiveUnitary,
    apply_passive,
    beam_splitter_matrix,
    interferometer_element,
)
from .squeezers import dual_squeezing_degree, ss_element, tms_state, ts_element_dual


def _validate_common(modes: int, xi: float, t_list: Sequence[float], cutoff: int) -> None:
    if modes < 2 or modes % 2:
        raise ValueError(f"number of simulated modes must be even and positive, got {modes}")
    if not 0.0 <= xi < 1.0:
        raise ValueError(f"squeezing parameter must lie in [0, 1), got {xi}")
    if len(t_list) != modes // 2:
        raise ValueError(f"need {modes // 2} transmissivities, got {len(t_list)}")
    if any(not 0.0 < t <= 1.0 for t in t_list):
        raise ValueError(f"transmissivities must lie in (0, 1], got {list(t_list)}")
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")


def balanced_row(modes: int) -> np.ndarray:
    """Balanced beam splitters on local pairs (2i, 2i+1)."""
    out = np.zeros((modes, modes))
    bs = beam_splitter_matrix(0.5)
    for i in range(modes // 2):
        out[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = bs
    return out


@dataclass(frozen=True, eq=False)
class GaussianCircuitSpec:
    """M simulated modes, squeezing xi, M/2 coupling transmissivities, U_A, U_B."""

    M: int
    xi: float
    t_list: tuple[float, ...]
    U_A: PassiveUnitary
    U_B: PassiveUnitary
    cutoff: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "t_list", tuple(float(t) for t in self.t_list))
        _validate_common(self.M, self.xi, self.t_list, self.cutoff)
        for name, u in (("U_A", self.U_A), ("U_B", self.U_B)):
            if u.dim != self.M:
                raise ValueError(f"{name} must be {self.M}x{self.M}, got {u.dim}")

    @cached_property
    def W_A(self) -> PassiveUnitary:
        return PassiveUnitary(self.U_A.matrix @ balanced_row(self.M))

    @cached_property
    def W_B(self) -> PassiveUnitary:
        return PassiveUnitary(self.U_B.matrix @ balanced_row(self.M))

    @cached_property
    def mode_matrix(self) -> PassiveUnitary:
        return build_ug_mode_matrix(self)

    def with_cutoff(self, cutoff: int) -> "GaussianCircuitSpec":
        return GaussianCircuitSpec(self.M, self.xi, self.t_list, self.U_A, self.U_B, cutoff)


def build_ug_mode_matrix(spec: GaussianCircuitSpec) -> PassiveUnitary:
    """2M x 2M mode matrix: coupling beam splitters, then balanced rows and U_A, U_B."""
    n = 2 * spec.M
    coupling = np.eye(n)
    for i, t in enumerate(spec.t_list):
        b, c = 4 * i + 1, 4 * i + 2
        coupling[np.ix_([b, c], [b, c])] = beam_splitter_matrix(t)
    sides = np.zeros((n, n), dtype=complex)
    even, odd = np.arange(0, n, 2), np.arange(1, n, 2)
    sides[np.ix_(even, even)] = spec.W_A.matrix
    sides[np.ix_(odd, odd)] = spec.W_B.matrix
    return PassiveUnitary(sides @ coupling)


def input_state(spec: GaussianCircuitSpec, cutoff: int | None = None) -> FockAmplitudeMap:
    """Tensor product of M two-mode squeezed vacua on physical modes (2j, 2j+1)."""
    cutoff = spec.cutoff if cutoff is None else cutoff
    state = tms_state(spec.xi, cutoff)
    single = state
    for _ in range(spec.M - 1):
        state = tensor(state, single)
    return state


def interleave(k: Sequence[int], m: Sequence[int]) -> Pattern:
    """Physical output pattern from A-side counts k and B-side counts m."""
    out: list[int] = []
    for a, b in zip(k, m):
        out += [a, b]
    return tuple(out)


def split_outcome(pattern: Sequence[int]) -> tuple[Pattern, Pattern]:
    return tuple(pattern[0::2]), tuple(pattern[1::2])


def _check_patterns(spec_modes: int, *patterns: Sequence[int]) -> list[Pattern]:
    out = []
    for p in patterns:
        p = as_pattern(p)
        if len(p) != spec_modes:
            raise ValueError(f"pattern {p} must have length {spec_modes}")
        out.append(p)
    return out


def joint_amplitude(spec: GaussianCircuitSpec, k: Sequence[int], m: Sequence[int]) -> complex:
    """<k, m| U_G |psi_in> summed over the TMS occupations that can reach (k, m)."""
    k, m = _check_patterns(spec.M, k, m)
    total = sum(k) + sum(m)
    if total % 2:
        return 0j
    photons = total // 2
    out = interleave(k, m)
    weight = (1.0 - spec.xi**2) ** (spec.M / 2) * spec.xi**photons
    if weight == 0.0:
        return 0j
    mat = spec.mode_matrix
    amp = 0j
    for n in enumerate_shell(spec.M, photons):
        if max(n) > spec.cutoff:
            continue
        amp += interferometer_element(mat, out, tuple(x for x in n for _ in range(2)))
    return weight * amp


def joint_probability(spec: GaussianCircuitSpec, k: Sequence[int], m: Sequence[int]) -> float:
    """p(k, m): k photons behind U_A and m behind U_B, directly from the passive circuit."""
    return abs(joint_amplitude(spec, k, m)) ** 2


def prefactor_a(spec: GaussianCircuitSpec, N_A: int, N_B: int) -> float:
    """(1 - xi^2)^M xi^(N_A + N_B) / prod t_j."""
    return (1.0 - spec.xi**2) ** spec.M * spec.xi ** (N_A + N_B) / math.prod(spec.t_list)


# -- time-unfolded circuit ------------------------------------------------------------


def _ts_layer(
    t_list: Sequence[float], q: Pattern, p_vec: dict[Pattern, complex]
) -> complex:
    """<q| (x)_i TS_i |v> for a B-side vector v given by its amplitudes."""
    total = 0j
    for p, amp in p_vec.items():
        prod = 1.0
        for i, t in enumerate(t_list):
            prod *= ts_element_dual(t, q[2 * i : 2 * i + 2], p[2 * i : 2 * i + 2])
            if prod == 0.0:
                break
        total += prod * amp
    return total


def conditional_amplitude_tilde(spec: GaussianCircuitSpec, k: Sequence[int], m: Sequence[int]) -> complex:
    """<k| W_A [(x) TS_j] W_B^T |m> composed element by element.

    W_B^T and W_A conserve photon number, so the intermediate patterns run
    over the finite shells of N_B and N_A photons and nothing is truncated.
    """
    k, m = _check_patterns(spec.M, k, m)
    p_vec = {p: interferometer_element(spec.W_B, m, p) for p in enumerate_shell(spec.M, sum(m))}
    amp = 0j
    for q in enumerate_shell(spec.M, sum(k)):
        left = interferometer_element(spec.W_A, k, q)
        if left != 0:
            amp += left * _ts_layer(spec.t_list, q, p_vec)
    return amp


def conditional_probability_tilde(spec: GaussianCircuitSpec, k: Sequence[int], m: Sequence[int]) -> float:
    """p~(k|m) = |<k| U~_G |m>|^2 for the time-unfolded Gaussian circuit."""
    return abs(conditional_amplitude_tilde(spec, k, m)) ** 2


def conditional_state_tilde(spec: GaussianCircuitSpec, m: Sequence[int], N_A: int) -> FockAmplitudeMap:
    """Projection of U~_G |m> onto the N_A-photon shell, as a sparse state over k."""
    (m,) = _check_patterns(spec.M, m)
    after_b = apply_passive(spec.W_B.T, FockAmplitudeMap(spec.M, max(m, default=0), {m: 1.0}))
    p_vec = dict(after_b.items())
    q_vec = {}
    for q in enumerate_shell(spec.M, N_A):
        amp = _ts_layer(spec.t_list, q, p_vec)
        if amp != 0:
            q_vec[q] = amp
    if not q_vec:
        return FockAmplitudeMap(spec.M, N_A, {})
    return apply_passive(spec.W_A, FockAmplitudeMap(spec.M, N_A, q_vec))


# -- two disjoint simulated circuits ------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianCircuitSpec2:
    """As :class:`GaussianCircuitSpec` with U_A, U_B split into two M/2-mode halves each.

    The upper port of every balanced beam splitter feeds ``V_A`` (``V_B``); the
    lower port feeds ``V_A2`` (``V_B2``). Outputs k (m) are read behind the
    unprimed circuits and k' (m') behind the primed ones.
    """

    M: int
    xi: float
    t_list: tuple[float, ...]
    V_A: PassiveUnitary
    V_A2: PassiveUnitary
    V_B: PassiveUnitary
    V_B2: PassiveUnitary
    cutoff: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "t_list", tuple(float(t) for t in self.t_list))
        _validate_common(self.M, self.xi, self.t_list, self.cutoff)
        for name in ("V_A", "V_A2", "V_B", "V_B2"):
            if getattr(self, name).dim != self.M // 2:
                raise ValueError(f"{name} must be {self.M // 2}x{self.M // 2}")

    @staticmethod
    def _merge(upper: PassiveUnitary, lower: PassiveUnitary) -> PassiveUnitary:
        half = upper.dim
        out = np.zeros((2 * half, 2 * half), dtype=complex)
        out[np.ix_(range(half), range(0, 2 * half, 2))] = upper.matrix
        out[np.ix_(range(half, 2 * half), range(1, 2 * half, 2))] = lower.matrix
        return PassiveUnitary(out)

    @cached_property
    def as_circuit(self) -> GaussianCircuitSpec:
        """Equivalent single-spec circuit with U_A = V_A (+) V_A2 wired by port."""
        return GaussianCircuitSpec(
            self.M,
            self.xi,
            self.t_list,
            self._merge(self.V_A, self.V_A2),
            self._merge(self.V_B, self.V_B2),
            self.cutoff,
        )

    def squeezing_degrees(self, primed: bool) -> list[float]:
        """Signed single-mode squeezing degrees of the unprimed or primed simulated circuit."""
        sign = -1.0 if primed else 1.0
        return [sign * dual_squeezing_degree(t) for t in self.t_list]


def joint_probability_2(
    spec2: GaussianCircuitSpec2,
    k: Sequence[int],
    m: Sequence[int],
    k2: Sequence[int],
    m2: Sequence[int],
) -> float:
    """p(k, m, k', m') from the full 2M-mode passive circuit."""
    k, m, k2, m2 = _check_patterns(spec2.M // 2, k, m, k2, m2)
    return joint_probability(spec2.as_circuit, k + k2, m + m2)


def prefactor_a2(spec2: GaussianCircuitSpec2, total_photons: int) -> float:
    return (1.0 - spec2.xi**2) ** spec2.M * spec2.xi**total_photons / math.prod(spec2.t_list)


def single_mode_gaussian_amplitude(
    V_A: PassiveUnitary, r_list: Sequence[float], V_B: PassiveUnitary, k: Sequence[int], m: Sequence[int]
) -> complex:
    """<k| V_A [(x) SS(r_j)] V_B^T |m> for a Bloch-Messiah-form circuit."""
    dim = V_A.dim
    k, m = _check_patterns(dim, k, m)
    p_vec = {p: interferometer_element(V_B, m, p) for p in enumerate_shell(dim, sum(m))}
    amp = 0j
    for q in enumerate_shell(dim, sum(k)):
        left = interferometer_element(V_A, k, q)
        if left == 0:
            continue
        mid = 0j
        for p, val in p_vec.items():
            prod = 1.0
            for r, qi, pi in zip(r_list, q, p):
                prod *= ss_element(r, qi, pi)
                if prod == 0.0:
                    break
            mid += prod * val
        amp += left * mid
    return amp


def conditional_probability_2(
    spec2: GaussianCircuitSpec2, k: Sequence[int], m: Sequence[int], primed: bool = False
) -> float:
    """p~(k|m) of one of the two disjoint simulated Gaussian circuits."""
    V_A, V_B = (spec2.V_A2, spec2.V_B2) if primed else (spec2.V_A, spec2.V_B)
    r_list = spec2.squeezing_degrees(primed)
    return abs(single_mode_gaussian_amplitude(V_A, r_list, V_B, k, m)) ** 2
