"""Passive (photon-number conserving) interferometers in the Fock basis.

A mode matrix ``U`` maps input mode ``j`` onto output modes through column
``j``: ``<out|U|inp> = Per(U[out, inp]) / sqrt(prod(out!) prod(inp!))`` with
rows repeated by the output pattern and columns by the input pattern.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .fock import FockAmplitudeMap, Pattern, as_pattern, enumerate_shell, shell_cardinality

UNITARITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PassiveUnitary:
    """An M x M unitary mode-transformation matrix, validated on construction."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise ValueError(f"mode matrix must be square and non-empty, got shape {mat.shape}")
        residual = np.max(np.abs(mat @ mat.conj().T - np.eye(mat.shape[0])))
        if residual > UNITARITY_TOL:
            raise ValueError(f"matrix is not unitary (max |UU^dag - I| = {residual:.3e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def T(self) -> "PassiveUnitary":
        # Fock-basis transpose of a passive circuit is the circuit of U^T.
        return PassiveUnitary(self.matrix.T)

    def __matmul__(self, other: "PassiveUnitary") -> "PassiveUnitary":
        return PassiveUnitary(self.matrix @ other.matrix)


def beam_splitter_matrix(t: float) -> np.ndarray:
    """Real 2x2 beam splitter of transmissivity ``t`` (lower-left entry negative)."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"transmissivity must lie in (0, 1], got {t}")
    c, s = math.sqrt(t), math.sqrt(1.0 - t)
    return np.array([[c, s], [-s, c]])


def identity(dim: int) -> PassiveUnitary:
    return PassiveUnitary(np.eye(dim))


def dft(dim: int) -> PassiveUnitary:
    idx = np.arange(dim)
    return PassiveUnitary(np.exp(2j * np.pi * np.outer(idx, idx) / dim) / math.sqrt(dim))


def haar_random(dim: int, seed: int) -> PassiveUnitary:
    if dim == 1:
        rng = np.random.default_rng(seed)
        return PassiveUnitary(np.array([[np.exp(2j * np.pi * rng.random())]]))
    return PassiveUnitary(unitary_group.rvs(dim, random_state=seed))


def preset(name: str, dim: int) -> PassiveUnitary:
    """Named unitaries: ``identity``, ``dft`` or ``random:<seed>``."""
    if name == "identity":
        return identity(dim)
    if name == "dft":
        return dft(dim)
    if name.startswith("random:"):
        return haar_random(dim, int(name.split(":", 1)[1]))
    raise ValueError(f"unknown unitary preset {name!r}")


# -- matrix file format ---------------------------------------------------------


def parse_matrix(text: str) -> np.ndarray:
    """Parse the plain-text matrix format: a line ``M`` then M rows of ``re,im`` pairs."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty matrix file")
    try:
        dim = int(lines[0])
    except ValueError:
        raise ValueError(f"first line must be the dimension, got {lines[0]!r}") from None
    rows = lines[1:]
    if len(rows) != dim:
        raise ValueError(f"expected {dim} rows, found {len(rows)}")
    mat = np.zeros((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        fields = row.split()
        if len(fields) != dim:
            raise ValueError(f"row {i + 1} has {len(fields)} entries, expected {dim}")
        for j, entry in enumerate(fields):
            try:
                re, im = entry.split(",")
                mat[i, j] = complex(float(re), float(im))
            except ValueError:
                raise ValueError(f"bad entry {entry!r} at row {i + 1}, column {j + 1}") from None
    return mat


def format_matrix(mat: np.ndarray) -> str:
    mat = np.asarray(mat, dtype=complex)
    lines = [str(mat.shape[0])]
    for row in mat:
        lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    return "\n".join(lines) + "\n"


def load_unitary(path: str | Path) -> PassiveUnitary:
    return PassiveUnitary(parse_matrix(Path(path).read_text()))


def save_unitary(unitary: PassiveUnitary, path: str | Path) -> None:
    Path(path).write_text(format_matrix(unitary.matrix))


# -- permanents -----------------------------------------------------------------


def permanent_naive(matrix: np.ndarray) -> complex:
    """Definition sum over all n! permutations. Test oracle only."""
    mat = np.asarray(matrix, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("permanent needs a square matrix")
    n = mat.shape[0]
    rows = np.arange(n)
    return complex(sum(np.prod(mat[rows, list(p)]) for p in itertools.permutations(range(n))))


def permanent(matrix: np.ndarray) -> complex:
    """Matrix permanent by Ryser's formula with Gray-code subset order, O(2^n n)."""
    mat = np.asarray(matrix, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("permanent needs a square matrix")
    n = mat.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n <= 3:
        return permanent_naive(mat)
    row_sums = np.zeros(n, dtype=complex)
    in_set = np.zeros(n, dtype=bool)
    total = 0j
    sign = -1.0
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        if in_set[j]:
            row_sums -= mat[:, j]
        else:
            row_sums += mat[:, j]
        in_set[j] = not in_set[j]
        total += sign * np.prod(row_sums)
        sign = -sign
    return complex((-1) ** n * total)


# -- factorials -----------------------------------------------------------------


def sqrt_factorial_product(pattern: Sequence[int]) -> float:
    """sqrt(prod(n_i!)); exact integers up to 20!, log-gamma above."""
    if all(n <= 20 for n in pattern):
        return math.sqrt(math.prod(math.factorial(n) for n in pattern))
    return math.exp(0.5 * sum(math.lgamma(n + 1) for n in pattern))


# -- matrix elements and state evolution ----------------------------------------


def _as_matrix(unitary: PassiveUnitary | np.ndarray) -> np.ndarray:
    return unitary.matrix if isinstance(unitary, PassiveUnitary) else np.asarray(unitary, dtype=complex)


def interferometer_element(
    unitary: PassiveUnitary | np.ndarray, out: Sequence[int], inp: Sequence[int]
) -> complex:
    """<out| U |inp> for a passive circuit; zero when photon numbers differ."""
    mat = _as_matrix(unitary)
    dim = mat.shape[0]
    out, inp = as_pattern(out), as_pattern(inp)
    if len(out) != dim or len(inp) != dim:
        raise ValueError(f"patterns must have length {dim}")
    if sum(out) != sum(inp):
        return 0j
    rows = np.repeat(np.arange(dim), out)
    cols = np.repeat(np.arange(dim), inp)
    sub = mat[np.ix_(rows, cols)]
    return permanent(sub) / (sqrt_factorial_product(out) * sqrt_factorial_product(inp))


DENSE_POLY_LIMIT = 2_000_000


def _image_dense(mat: np.ndarray, inp: Pattern, photons: int) -> np.ndarray:
    """Coefficients of prod_j (sum_i U_ij x_i)^inp_j as a dense array.

    The polynomial is homogeneous of degree ``photons``, so the exponent of
    the last variable is implied; the array is indexed by the first M-1
    exponents.
    """
    dim = mat.shape[0]
    shape = (photons + 1,) * (dim - 1)
    poly = np.zeros(shape, dtype=complex)
    poly[(0,) * (dim - 1)] = 1.0
    for j, count in enumerate(inp):
        col = mat[:, j]
        for _ in range(count):
            new = col[dim - 1] * poly
            for axis in range(dim - 1):
                if col[axis] == 0:
                    continue
                dst = [slice(None)] * (dim - 1)
                src = [slice(None)] * (dim - 1)
                dst[axis] = slice(1, None)
                src[axis] = slice(None, -1)
                new[tuple(dst)] += col[axis] * poly[tuple(src)]
            poly = new
    return poly


def _image_sparse(mat: np.ndarray, inp: Pattern) -> dict[Pattern, complex]:
    dim = mat.shape[0]
    poly: dict[Pattern, complex] = {(0,) * dim: 1.0}
    for j, count in enumerate(inp):
        col = mat[:, j]
        nz = [i for i in range(dim) if col[i] != 0]
        for _ in range(count):
            new: dict[Pattern, complex] = {}
            for mono, coeff in poly.items():
                for i in nz:
                    key = mono[:i] + (mono[i] + 1,) + mono[i + 1 :]
                    new[key] = new.get(key, 0j) + coeff * col[i]
            poly = new
    return poly


def _evolve_sector(
    mat: np.ndarray, sector: dict[Pattern, complex], photons: int
) -> dict[Pattern, complex]:
    """Apply U to a superposition of basis states that all carry ``photons`` photons."""
    dim = mat.shape[0]
    if dim == 1:
        return {p: amp * mat[0, 0] ** photons for p, amp in sector.items()}
    out: dict[Pattern, complex] = {}
    if (photons + 1) ** (dim - 1) <= DENSE_POLY_LIMIT:
        acc = np.zeros((photons + 1,) * (dim - 1), dtype=complex)
        for inp, amp in sector.items():
            acc += (amp / sqrt_factorial_product(inp)) * _image_dense(mat, inp, photons)
        for idx in zip(*np.nonzero(acc)):
            head = tuple(int(i) for i in idx)
            last = photons - sum(head)
            if last < 0:
                continue
            pattern = head + (last,)
            out[pattern] = acc[idx] * sqrt_factorial_product(pattern)
        return out
    for inp, amp in sector.items():
        scale = amp / sqrt_factorial_product(inp)
        for pattern, coeff in _image_sparse(mat, inp).items():
            out[pattern] = out.get(pattern, 0j) + scale * coeff * sqrt_factorial_product(pattern)
    return out


def apply_passive(unitary: PassiveUnitary | np.ndarray, state: FockAmplitudeMap) -> FockAmplitudeMap:
    """Evolve a state through a passive circuit, one photon-number sector at a time.

    Each input basis state is pushed through as the product of its creation
    operators, ``prod_j (sum_i U_ij a_i^dag)^n_j``, so only the columns the
    state actually occupies are ever computed. The output cutoff is the
    largest photon number in the state, the most any single mode can hold.
    """
    mat = _as_matrix(unitary)
    if mat.shape[0] != state.modes:
        raise ValueError(f"mode mismatch: circuit has {mat.shape[0]}, state has {state.modes}")
    out: dict[Pattern, complex] = {}
    for photons, sector in state.sectors().items():
        for pattern, amp in _evolve_sector(mat, sector, photons).items():
            out[pattern] = out.get(pattern, 0j) + amp
    return FockAmplitudeMap(state.modes, max(state.max_photons(), 0), out, drop_tol=state.drop_tol)


def sector_matrix(
    unitary: PassiveUnitary | np.ndarray, photons: int, limit: int = 5000
) -> tuple[list[Pattern], np.ndarray]:
    """Dense Fock matrix of U restricted to the ``photons``-photon sector.

    Rows and columns follow :func:`enumerate_shell` order. Refuses sectors
    larger than ``limit``.
    """
    mat = _as_matrix(unitary)
    dim = mat.shape[0]
    size = shell_cardinality(dim, photons)
    if size > limit:
        raise ValueError(f"sector dimension {size} exceeds limit {limit}")
    basis = enumerate_shell(dim, photons)
    index = {p: i for i, p in enumerate(basis)}
    dense = np.zeros((size, size), dtype=complex)
    for col, inp in enumerate(basis):
        for pattern, amp in _evolve_sector(mat, {inp: 1.0}, photons).items():
            dense[index[pattern], col] = amp
    return basis, dense
