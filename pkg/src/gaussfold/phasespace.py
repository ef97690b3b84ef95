"""Phase-space description of Gaussian states and transformations.

Everything uses the complex basis ``R = (a_1..a_M, a_1^dag..a_M^dag)``, the
form ``Sigma = diag(I_M, -I_M)``, and vacuum covariance ``I/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import as_pattern
from .hafnian import hafnian
from .passive import PassiveUnitary, beam_splitter_matrix
from .squeezers import SqueezerParam

SYMPLECTIC_TOL = 1e-10
HERMITIAN_TOL = 1e-12
PHYSICAL_TOL = 1e-10


def sigma_form(modes: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(modes), -np.ones(modes)])).astype(complex)


@dataclass(frozen=True, eq=False)
class SymplecticMatrix:
    """2M x 2M complex symplectic matrix with S Sigma S^dag = Sigma checked on construction."""

    matrix: np.ndarray
    tol: float = SYMPLECTIC_TOL

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2 or not mat.size:
            raise ValueError(f"symplectic matrix must be 2M x 2M, got shape {mat.shape}")
        residual = symplectic_residual(mat)
        if residual > self.tol:
            raise ValueError(f"matrix is not symplectic (max |S Sigma S^dag - Sigma| = {residual:.3e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def modes(self) -> int:
        return self.matrix.shape[0] // 2

    def __matmul__(self, other: "SymplecticMatrix") -> "SymplecticMatrix":
        return SymplecticMatrix(self.matrix @ other.matrix, tol=max(self.tol, other.tol))

    def inverse(self) -> "SymplecticMatrix":
        sig = sigma_form(self.modes)
        return SymplecticMatrix(sig @ self.matrix.conj().T @ sig, tol=self.tol)

    def passivity_residual(self) -> float:
        """Largest deviation from block form [[U, 0], [0, conj U]] with U unitary."""
        m = self.modes
        s = self.matrix
        off = max(np.max(np.abs(s[:m, m:])), np.max(np.abs(s[m:, :m])))
        u = s[:m, :m]
        unit = np.max(np.abs(u @ u.conj().T - np.eye(m)))
        conj = np.max(np.abs(s[m:, m:] - u.conj()))
        return float(max(off, unit, conj))

    def is_passive(self, tol: float = SYMPLECTIC_TOL) -> bool:
        return self.passivity_residual() <= tol


def symplectic_residual(matrix: np.ndarray) -> float:
    mat = np.asarray(matrix, dtype=complex)
    sig = sigma_form(mat.shape[0] // 2)
    return float(np.max(np.abs(mat @ sig @ mat.conj().T - sig)))


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Hermitian 2M x 2M covariance matrix of a zero-mean Gaussian state."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2 or not mat.size:
            raise ValueError(f"covariance matrix must be 2M x 2M, got shape {mat.shape}")
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(mat)))):
            raise ValueError(f"covariance matrix is not Hermitian (residual {herm:.3e})")
        mat = 0.5 * (mat + mat.conj().T)
        lowest = np.linalg.eigvalsh(mat + 0.5 * sigma_form(mat.shape[0] // 2)).min()
        if lowest < -PHYSICAL_TOL:
            raise ValueError(f"covariance matrix violates the uncertainty relation (eigenvalue {lowest:.3e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def modes(self) -> int:
        return self.matrix.shape[0] // 2


@dataclass(frozen=True, eq=False)
class BlochMessiahFactors:
    S1: SymplecticMatrix
    r_list: np.ndarray
    S2: SymplecticMatrix

    def squeezing(self) -> SymplecticMatrix:
        return squeezing_layer(self.r_list)

    def reconstruct(self) -> np.ndarray:
        return self.S1.matrix @ self.squeezing().matrix @ self.S2.matrix


# -- constructors ---------------------------------------------------------------


def passive_symplectic(unitary: PassiveUnitary | np.ndarray) -> SymplecticMatrix:
    u = unitary.matrix if isinstance(unitary, PassiveUnitary) else np.asarray(unitary, dtype=complex)
    m = u.shape[0]
    out = np.zeros((2 * m, 2 * m), dtype=complex)
    out[:m, :m] = u
    out[m:, m:] = u.conj()
    return SymplecticMatrix(out)


def squeezing_layer(r_list: Sequence[float]) -> SymplecticMatrix:
    """Direct sum of single-mode squeezers [[cosh r, sinh r], [sinh r, cosh r]]."""
    r = np.asarray(r_list, dtype=float)
    m = r.size
    ch, sh = np.diag(np.cosh(r)), np.diag(np.sinh(r))
    return SymplecticMatrix(np.block([[ch, sh], [sh, ch]]))


def symplectic_primitive(param: SqueezerParam) -> SymplecticMatrix:
    """Beam splitter and two-mode squeezer on two modes, single-mode squeezer on one."""
    if param.kind == "beam_splitter":
        return passive_symplectic(beam_splitter_matrix(param.t))
    if param.kind == "two_mode_squeezer":
        g = param.g
        a, b = math.sqrt(g), math.sqrt(g - 1.0)
        return SymplecticMatrix(
            np.array([[a, 0, 0, b], [0, a, b, 0], [0, b, a, 0], [b, 0, 0, a]], dtype=complex)
        )
    return squeezing_layer([param.r])


def embed_symplectic(small: SymplecticMatrix, targets: Sequence[int], modes: int) -> SymplecticMatrix:
    """Act with ``small`` on the listed modes of an M-mode system, identity elsewhere."""
    k = small.modes
    if len(targets) != k or len(set(targets)) != k or max(targets) >= modes or min(targets) < 0:
        raise ValueError(f"bad target modes {targets} for a {k}-mode block in {modes} modes")
    idx = list(targets) + [t + modes for t in targets]
    out = np.eye(2 * modes, dtype=complex)
    out[np.ix_(idx, idx)] = small.matrix
    return SymplecticMatrix(out)


def vacuum_covariance(modes: int) -> CovarianceMatrix:
    return CovarianceMatrix(0.5 * np.eye(2 * modes))


def evolve_covariance(S: SymplecticMatrix, sigma: CovarianceMatrix) -> CovarianceMatrix:
    """sigma_out = S sigma S^dag."""
    if S.modes != sigma.modes:
        raise ValueError(f"mode mismatch: {S.modes} vs {sigma.modes}")
    out = S.matrix @ sigma.matrix @ S.matrix.conj().T
    return CovarianceMatrix(0.5 * (out + out.conj().T))


# -- Bloch-Messiah ----------------------------------------------------------------


def takagi(sym: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Autonne-Takagi factorization ``sym = W diag(s) W^T`` of a complex symmetric matrix.

    Singular values within ``tol`` of each other are treated as degenerate;
    inside each degenerate block the left and right singular vectors differ by
    a symmetric unitary whose square root fixes the phases. Returns ``(s, W)``
    with ``s`` descending.
    """
    u, s, vh = np.linalg.svd(sym)
    v = vh.conj().T
    n = s.size
    w = np.zeros_like(u)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(s[stop] - s[start]) <= tol * max(1.0, s[start]):
            stop += 1
        block = slice(start, stop)
        if s[start] <= tol:
            w[:, block] = u[:, block]
        else:
            q = u[:, block].conj().T @ v[:, block].conj()
            vals, vecs = np.linalg.eig(q)
            root = vecs @ np.diag(np.sqrt(vals)) @ np.linalg.inv(vecs)
            w[:, block] = u[:, block] @ root
        start = stop
    return s, w


def bloch_messiah(S: SymplecticMatrix, tol: float = SYMPLECTIC_TOL) -> BlochMessiahFactors:
    """Factor S = S1 (direct sum of single-mode squeezers) S2 with S1, S2 passive.

    Polar decomposition S = P O gives a positive symplectic P and a passive O;
    Takagi on the off-diagonal block of P yields the squeezing degrees and the
    passive frame W with P = W D W^dag. Degrees come back non-negative and
    sorted in descending order.
    """
    if not isinstance(S, SymplecticMatrix):
        S = SymplecticMatrix(S)
    m = S.modes
    s = S.matrix
    evals, evecs = np.linalg.eigh(s @ s.conj().T)
    if evals.min() <= 0:
        raise ValueError("symplectic matrix is singular")
    pos = evecs @ np.diag(np.sqrt(evals)) @ evecs.conj().T
    off = pos[:m, m:]
    sinh_r, w = takagi(0.5 * (off + off.T))
    r_list = np.arcsinh(sinh_r)
    order = np.argsort(-r_list, kind="stable")
    r_list, w = r_list[order], w[:, order]
    w = _canonical_phases(w, r_list)
    s1 = passive_symplectic(w)
    squeeze = squeezing_layer(r_list)
    s2_mat = squeeze.inverse().matrix @ s1.matrix.conj().T @ s
    # project out rounding in the off-diagonal blocks before validating
    u2 = s2_mat[:m, :m]
    passive_err = max(np.max(np.abs(s2_mat[:m, m:])), np.max(np.abs(s2_mat[m:, :m])))
    if passive_err > tol:
        raise ArithmeticError(f"second factor is not passive (off-diagonal {passive_err:.3e})")
    s2 = passive_symplectic(_nearest_unitary(u2))
    factors = BlochMessiahFactors(s1, r_list, s2)
    residual = float(np.max(np.abs(factors.reconstruct() - s)))
    if residual > tol * max(1.0, float(np.max(np.abs(s)))):
        raise ArithmeticError(f"Bloch-Messiah reconstruction residual {residual:.3e} exceeds {tol:.1e}")
    return factors


def _nearest_unitary(mat: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(mat)
    return u @ vh


def _canonical_phases(w: np.ndarray, r_list: np.ndarray) -> np.ndarray:
    """Column-phase canonicalization: first non-negligible entry made real positive.

    Only unsqueezed columns may take an arbitrary phase; squeezed ones can
    only flip sign without changing W diag(sinh r) W^T.
    """
    w = w.copy()
    for j in range(w.shape[1]):
        col = w[:, j]
        lead = col[np.argmax(np.abs(col) > 1e-8)]
        if r_list[j] <= 1e-12:
            w[:, j] = col * (abs(lead) / lead)
        elif lead.real < 0:
            w[:, j] = -col
    return w


# -- reduced state of the B side and its photon statistics --------------------------


def sigma_B(xi: float, t_list: Sequence[float]) -> CovarianceMatrix:
    """Covariance of the modes entering W_B, before W_B acts.

    Pair j contributes a 4x4 block on modes (2j, 2j+1): cosh(2r)/2 on the
    diagonal and sqrt(1 - t_j) sinh(2r)/2 linking each annihilation operator
    with the partner's creation operator, where tanh r = xi.
    """
    if not 0.0 <= xi < 1.0:
        raise ValueError(f"squeezing parameter must lie in [0, 1), got {xi}")
    t_list = list(t_list)
    if not t_list or any(not 0.0 < t <= 1.0 for t in t_list):
        raise ValueError(f"transmissivities must lie in (0, 1], got {t_list}")
    r = math.atanh(xi)
    m = 2 * len(t_list)
    sig = 0.5 * math.cosh(2 * r) * np.eye(2 * m, dtype=complex)
    for j, t in enumerate(t_list):
        c = 0.5 * math.sqrt(1.0 - t) * math.sinh(2 * r)
        p, q = 2 * j, 2 * j + 1
        for i, k in ((p, q), (q, p)):
            sig[i, k + m] = c
            sig[k + m, i] = c
    return CovarianceMatrix(sig)


CONDITION_LIMIT = 1e12


def marginal_probability(
    m: Sequence[int], xi: float, t_list: Sequence[float], W_B: PassiveUnitary
) -> float:
    """Probability of the pattern m behind W_B, from a hafnian of the output covariance.

    Q = sigma_out + I/2 with sigma_out = S_B sigma_B S_B^dag,
    A = [[0, I], [I, 0]] (I - Q^-1), and A_m repeats rows/columns i and i+M
    m_i times (deleting them when m_i = 0).
    """
    pattern = as_pattern(m)
    modes = W_B.dim
    if len(pattern) != modes:
        raise ValueError(f"pattern must have length {modes}")
    sig_b = sigma_B(xi, t_list)
    if sig_b.modes != modes:
        raise ValueError(f"W_B has {modes} modes but sigma_B has {sig_b.modes}")
    sig_out = evolve_covariance(passive_symplectic(W_B), sig_b).matrix
    q = sig_out + 0.5 * np.eye(2 * modes)
    cond = np.linalg.cond(q)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise np.linalg.LinAlgError(f"output covariance is singular (condition number {cond:.3e})")
    q_inv = np.linalg.solve(q, np.eye(2 * modes))
    swap = np.block([[np.zeros((modes, modes)), np.eye(modes)], [np.eye(modes), np.zeros((modes, modes))]])
    a = swap @ (np.eye(2 * modes) - q_inv)
    idx = np.concatenate([np.repeat(np.arange(modes), pattern), np.repeat(np.arange(modes), pattern) + modes])
    haf = hafnian(a[np.ix_(idx, idx)])
    sign, logdet = np.linalg.slogdet(q)
    det = (sign * np.exp(logdet)).real
    prob = haf.real / (math.prod(math.factorial(k) for k in pattern) * math.sqrt(det))
    return float(prob)


def random_symplectic(modes: int, rng: np.random.Generator, layers: int = 3) -> SymplecticMatrix:
    """Product of random primitives: Haar interferometers, two-mode and single-mode squeezers.

    Each layer is a random passive transformation followed by a squeezer on a
    random mode (or random pair of modes when ``modes >= 2``).
    """
    from scipy.stats import unitary_group

    total = passive_symplectic(unitary_group.rvs(modes, random_state=rng)) if modes > 1 else squeezing_layer([0.0])
    for _ in range(layers):
        if modes >= 2 and rng.random() < 0.5:
            pair = rng.choice(modes, size=2, replace=False)
            prim = symplectic_primitive(SqueezerParam.two_mode_squeezer(1.0 + 2.0 * rng.random()))
            block = embed_symplectic(prim, [int(p) for p in pair], modes)
        else:
            prim = symplectic_primitive(SqueezerParam.single_mode_squeezer(rng.uniform(-1.0, 1.0)))
            block = embed_symplectic(prim, [int(rng.integers(modes))], modes)
        total = block @ total
        if modes > 1:
            total = passive_symplectic(unitary_group.rvs(modes, random_state=rng)) @ total
    return total
