"""Fock matrix elements of beam splitters and squeezers, plus the TMS resource state.

Conventions (shared with :mod:`gaussfold.passive`): a Gaussian unitary with
symplectic matrix S acts as ``U^dag R U = S R`` on ``R = (a, a^dag)``. The
beam splitter is the real matrix ``[[sqrt t, sqrt(1-t)], [-sqrt(1-t), sqrt t]]``.
Under this convention the partial time reversal of that beam splitter is the
two-mode squeezer ``exp(r (a1^dag a2^dag - a1 a2))`` with negative degree
``r = -arccosh(1/sqrt t)``, and the single-mode squeezer is
``exp(r/2 (a^dag^2 - a^2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np
from scipy.linalg import expm

from .fock import FockAmplitudeMap, as_pattern
from .passive import beam_splitter_matrix

Kind = Literal["beam_splitter", "two_mode_squeezer", "single_mode_squeezer"]


@dataclass(frozen=True)
class SqueezerParam:
    """One primitive transformation with exactly one of t / g / r populated."""

    kind: Kind
    t: float | None = None
    g: float | None = None
    r: float | None = None

    def __post_init__(self) -> None:
        given = {"t": self.t, "g": self.g, "r": self.r}
        expected = {"beam_splitter": "t", "two_mode_squeezer": "g", "single_mode_squeezer": "r"}
        if self.kind not in expected:
            raise ValueError(f"unknown kind {self.kind!r}")
        want = expected[self.kind]
        if given[want] is None or any(v is not None for k, v in given.items() if k != want):
            raise ValueError(f"{self.kind} takes exactly the parameter {want!r}")
        if self.kind == "beam_splitter" and not 0.0 < self.t <= 1.0:
            raise ValueError(f"transmissivity must lie in (0, 1], got {self.t}")
        if self.kind == "two_mode_squeezer" and self.g < 1.0:
            raise ValueError(f"gain must be >= 1, got {self.g}")

    @classmethod
    def beam_splitter(cls, t: float) -> "SqueezerParam":
        return cls("beam_splitter", t=t)

    @classmethod
    def two_mode_squeezer(cls, g: float) -> "SqueezerParam":
        return cls("two_mode_squeezer", g=g)

    @classmethod
    def single_mode_squeezer(cls, r: float) -> "SqueezerParam":
        return cls("single_mode_squeezer", r=r)

    def dual(self) -> "SqueezerParam":
        """Beam splitter of transmissivity t <-> two-mode squeezer of gain 1/t."""
        if self.kind == "beam_splitter":
            return SqueezerParam.two_mode_squeezer(1.0 / self.t)
        if self.kind == "two_mode_squeezer":
            return SqueezerParam.beam_splitter(1.0 / self.g)
        raise ValueError("single-mode squeezers have no beam-splitter dual")

    @property
    def xi(self) -> float:
        """tanh r = sqrt(1 - t) for the dual pair."""
        if self.kind == "beam_splitter":
            return math.sqrt(1.0 - self.t)
        if self.kind == "two_mode_squeezer":
            return math.sqrt(1.0 - 1.0 / self.g)
        return math.tanh(abs(self.r))


def gain_to_degree(g: float) -> float:
    """arccosh(sqrt g), the squeezing degree of a two-mode squeezer of gain g."""
    return math.acosh(math.sqrt(g))


def dual_squeezing_degree(t: float) -> float:
    """Signed degree of the two-mode squeezer obtained from a beam splitter of transmissivity t."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"transmissivity must lie in (0, 1], got {t}")
    return -math.acosh(1.0 / math.sqrt(t))


# -- beam splitter ------------------------------------------------------------


def _check_pair(pattern: Sequence[int]) -> tuple[int, int]:
    p = as_pattern(pattern)
    if len(p) != 2:
        raise ValueError(f"expected a two-mode pattern, got {p}")
    return p


def bs_element(t: float, out: Sequence[int], inp: Sequence[int]) -> float:
    """<out| BS(t) |inp> as a single sum over photons leaving the first input port.

    Of the ``inp[0]`` photons in port 1, ``i`` stay (amplitude sqrt t) and the
    rest cross (-sqrt(1-t)); of the ``inp[1]`` photons in port 2, ``out[0]-i``
    cross (sqrt(1-t)) and the rest stay.
    """
    u = beam_splitter_matrix(t)
    (o1, o2), (n1, n2) = _check_pair(out), _check_pair(inp)
    if o1 + o2 != n1 + n2:
        return 0.0
    total = 0.0
    for i in range(max(0, o1 - n2), min(n1, o1) + 1):
        j = o1 - i
        total += (
            math.comb(n1, i)
            * math.comb(n2, j)
            * u[0, 0] ** i
            * u[1, 0] ** (n1 - i)
            * u[0, 1] ** j
            * u[1, 1] ** (n2 - j)
        )
    norm = math.exp(
        0.5 * (math.lgamma(o1 + 1) + math.lgamma(o2 + 1) - math.lgamma(n1 + 1) - math.lgamma(n2 + 1))
    )
    return total * norm


# -- two-mode squeezer --------------------------------------------------------


def ts_element_dual(t: float, out: Sequence[int], inp: Sequence[int]) -> float:
    """Two-mode squeezer element of gain 1/t obtained by partial time reversal.

    ``<k1,k2| TS(1/t) |m1,m2> = sqrt(t) <m1,k2| BS(t) |k1,m2>``: the first mode
    is time-reversed, swapping its input and output occupations.
    """
    (k1, k2), (m1, m2) = _check_pair(out), _check_pair(inp)
    if k1 - k2 != m1 - m2:
        return 0.0
    return math.sqrt(t) * bs_element(t, (m1, k2), (k1, m2))


@lru_cache(maxsize=256)
def _ts_block(r: float, diff: int, cutoff: int) -> tuple[dict, np.ndarray]:
    # exp(r G) restricted to n1 - n2 = diff; G = a1^dag a2^dag - a1 a2 preserves diff.
    if diff >= 0:
        basis = [(n + diff, n) for n in range(cutoff + 1 - diff)]
    else:
        basis = [(n, n - diff) for n in range(cutoff + 1 + diff)]
    size = len(basis)
    gen = np.zeros((size, size))
    for i in range(size - 1):
        n1, n2 = basis[i]
        gen[i + 1, i] = math.sqrt((n1 + 1) * (n2 + 1))
    gen = gen - gen.T
    return {b: i for i, b in enumerate(basis)}, expm(r * gen)


def ts_element_oracle(r: float, out: Sequence[int], inp: Sequence[int], oracle_cutoff: int) -> float:
    """<out| exp(r (a1^dag a2^dag - a1 a2)) |inp> by exponentiating the truncated generator.

    Each mode is truncated at ``oracle_cutoff`` photons. The error grows as the
    requested indices approach the cutoff and as tanh|r| approaches 1; pick
    the margin accordingly.
    """
    out, inp = _check_pair(out), _check_pair(inp)
    if max(out + inp) > oracle_cutoff:
        raise ValueError(f"oracle_cutoff {oracle_cutoff} does not contain indices {out}, {inp}")
    diff = out[0] - out[1]
    if inp[0] - inp[1] != diff:
        return 0.0
    index, block = _ts_block(float(r), diff, oracle_cutoff)
    return float(block[index[out], index[inp]])


# -- single-mode squeezer -----------------------------------------------------


@lru_cache(maxsize=64)
def _ss_block(r: float, cutoff: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, cutoff + 1)), 1)
    gen = 0.5 * (a.T @ a.T - a @ a)
    return expm(r * gen)


def ss_element_oracle(r: float, out: int, inp: int, oracle_cutoff: int = 120) -> float:
    """<out| exp(r/2 (a^dag^2 - a^2)) |inp> from the truncated single-mode generator."""
    if max(out, inp) > oracle_cutoff:
        raise ValueError(f"oracle_cutoff {oracle_cutoff} does not contain indices {out}, {inp}")
    return float(_ss_block(float(r), oracle_cutoff)[out, inp])


def _balanced(out: tuple[int, int], inp: tuple[int, int]) -> float:
    return bs_element(0.5, out, inp)


def _balanced_t(out: tuple[int, int], inp: tuple[int, int]) -> float:
    # transpose of the balanced beam splitter in the Fock basis
    return bs_element(0.5, inp, out)


def sandwich_element(t: float, out: Sequence[int], inp: Sequence[int]) -> float:
    """<out| BS(1/2) TS(1/t) BS(1/2)^T |inp>; both beam splitters conserve photons,
    so the intermediate sums run over finite shells."""
    (a, b), (c, d) = _check_pair(out), _check_pair(inp)
    if (a + b - c - d) % 2:
        return 0.0
    n_out, n_in = a + b, c + d
    total = 0.0
    for x in range(n_out + 1):
        left = _balanced((a, b), (x, n_out - x))
        if left == 0.0:
            continue
        for u in range(n_in + 1):
            v = n_in - u
            mid = ts_element_dual(t, (x, n_out - x), (u, v))
            if mid == 0.0:
                continue
            total += left * mid * _balanced_t((u, v), (c, d))
    return total


FACTORIZATION_TOL = 1e-10


@lru_cache(maxsize=4096)
def _ss_from_sandwich(degree: float, out: int, inp: int) -> float:
    t = 1.0 / math.cosh(degree) ** 2
    vac = sandwich_element(t, (0, 0), (0, 0))  # product of the two vacuum elements, 1/cosh r
    # BS TS BS^T = SS(-|r|) (x) SS(+|r|): the second mode carries the positive degree.
    probes = [(a, c) for a in range(3) for c in range(3) if (a - c) % 2 == 0]
    for a, c in probes:
        lhs = sandwich_element(t, (a, out), (c, inp)) * vac
        rhs = sandwich_element(t, (a, 0), (c, 0)) * sandwich_element(t, (0, out), (0, inp))
        if abs(lhs - rhs) > FACTORIZATION_TOL:
            raise RuntimeError(
                f"sandwich does not factorize at ({a},{out})<-({c},{inp}): residual {abs(lhs - rhs):.3e}"
            )
    return sandwich_element(t, (0, out), (0, inp)) / math.sqrt(vac)


def ss_element(r: float, out: int, inp: int) -> float:
    """Single-mode squeezer element <out| exp(r/2 (a^dag^2 - a^2)) |inp>.

    Built from the two-mode squeezer of gain cosh^2 r placed between balanced
    beam splitters, which splits into squeezers of opposite sign on the two
    modes. The product form is checked before the factor is read off.
    """
    if out < 0 or inp < 0:
        raise ValueError("occupations must be non-negative")
    if (out - inp) % 2:
        return 0.0
    if r == 0.0:
        return 1.0 if out == inp else 0.0
    value = _ss_from_sandwich(abs(float(r)), int(out), int(inp))
    # SS(-r) = P SS(r) P with parity P = (-1)^n
    return value if r > 0 else value * (-1) ** ((out - inp) // 2)


# -- resource state -----------------------------------------------------------


def tms_state(xi: float, cutoff: int) -> FockAmplitudeMap:
    """Two-mode squeezed vacuum sqrt(1 - xi^2) sum_n xi^n |n, n>, truncated at n <= cutoff."""
    if not 0.0 <= xi < 1.0:
        raise ValueError(f"squeezing parameter must lie in [0, 1), got {xi}")
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    norm = math.sqrt(1.0 - xi * xi)
    return FockAmplitudeMap(2, cutoff, {(n, n): norm * xi**n for n in range(cutoff + 1)})
