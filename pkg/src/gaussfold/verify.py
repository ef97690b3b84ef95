"""Numerical checks of every identity the package relies on, on reference parameters.

Each suite returns :class:`CheckResult` rows. ``relation`` is ``"<"`` for an
error that must stay below ``threshold`` and ``">="`` for a rate that must
reach it. Thresholds can be overridden per suite through the environment
variable ``GAUSSFOLD_VERIFY_TOL``, e.g. ``"duality=0,hafnian=1e-20"``.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import circuit as cb
from .fock import FockAmplitudeMap, enumerate_shell
from .hafnian import hafnian, hafnian_reference
from .passive import apply_passive, haar_random, interferometer_element, preset
from .phasespace import bloch_messiah, marginal_probability, random_symplectic
from .sampler import (
    PriorSpec,
    exact_device_distribution,
    run_mis_chain,
    target_distribution,
    total_variation_distance,
)
from .squeezers import (
    bs_element,
    gain_to_degree,
    sandwich_element,
    ss_element_oracle,
    ts_element_dual,
    ts_element_oracle,
)

TOL_ENV = "GAUSSFOLD_VERIFY_TOL"


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    relation: str = "<"

    @property
    def suite(self) -> str:
        return self.name.split("/", 1)[0]

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        if self.relation == "<":
            return bool(self.value < self.threshold or (self.threshold == 0.0 and self.value == 0.0))
        return bool(self.value >= self.threshold)

    def as_dict(self) -> dict:
        return {
            "check": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "relation": self.relation,
            "passed": self.passed,
        }


def _pairs(limit: int) -> Iterable[tuple[int, int]]:
    return itertools.product(range(limit + 1), repeat=2)


# -- suites -------------------------------------------------------------------------


def check_duality(
    t_values: Iterable[float] = (0.3, 0.5, 0.9), limit: int = 5, oracle_cutoff: int = 60, tol: float = 1e-10
) -> list[CheckResult]:
    """Dual two-mode squeezer elements against the exponentiated generator."""
    rows = []
    for t in t_values:
        r = -math.acosh(1.0 / math.sqrt(t))
        err = 0.0
        for out in _pairs(limit):
            for inp in _pairs(limit):
                err = max(err, abs(ts_element_dual(t, out, inp) - ts_element_oracle(r, out, inp, oracle_cutoff)))
        rows.append(CheckResult(f"duality/t={t:g}/oracle_cutoff={oracle_cutoff}", err, tol))
    return rows


def check_sandwich(t_values: Iterable[float] = (0.5, 0.8), limit: int = 4, tol: float = 1e-8) -> list[CheckResult]:
    """BS(1/2) TS(1/t) BS(1/2)^T against SS(-rho) (x) SS(+rho), rho = arccosh sqrt(1/t)."""
    rows = []
    for t in t_values:
        rho = gain_to_degree(1.0 / t)
        err = 0.0
        for out in _pairs(limit):
            for inp in _pairs(limit):
                want = ss_element_oracle(-rho, out[0], inp[0]) * ss_element_oracle(rho, out[1], inp[1])
                err = max(err, abs(sandwich_element(t, out, inp) - want))
        rows.append(CheckResult(f"sandwich/t={t:g}", err, tol))
    return rows


def reference_spec(modes: int, seed: int, xi: float = 0.4, cutoff: int = 4) -> cb.GaussianCircuitSpec:
    """Random t_list in [0.3, 0.95] and Haar U_A, U_B, all derived from one seed."""
    rng = np.random.default_rng(seed)
    t_list = rng.uniform(0.3, 0.95, size=modes // 2)
    return cb.GaussianCircuitSpec(
        modes, xi, t_list, haar_random(modes, seed + 1), haar_random(modes, seed + 2), cutoff
    )


def factorization_residual(spec: cb.GaussianCircuitSpec, max_total: int) -> float:
    """max |p(k,m) - A p~(k|m)| over all k, m with N_A + N_B <= max_total."""
    err = 0.0
    for total in range(max_total + 1):
        for n_b in range(total + 1):
            n_a = total - n_b
            for m in enumerate_shell(spec.M, n_b):
                cond = cb.conditional_state_tilde(spec, m, n_a)
                pref = cb.prefactor_a(spec, n_a, n_b)
                for k in enumerate_shell(spec.M, n_a):
                    p = cb.joint_probability(spec, k, m)
                    err = max(err, abs(p - pref * abs(cond[k]) ** 2))
    return err


def check_factorization(modes: Iterable[int] = (2, 4), seed: int = 11, tol: float = 1e-9) -> list[CheckResult]:
    return [
        CheckResult(f"factorization/M={M}", factorization_residual(reference_spec(M, seed + M), 4), tol)
        for M in modes
    ]


def scattershot_spec(xi: float = 0.4, cutoff: int = 4) -> cb.GaussianCircuitSpec:
    return cb.GaussianCircuitSpec(2, xi, [1.0], preset("random:5", 2), preset("random:6", 2), cutoff)


def check_scattershot(seed: int = 3, proposals: int = 5000, tol: float = 1e-12) -> list[CheckResult]:
    """t = 1: device equals the Gaussian circuit with the device's own m-marginal as prior,
    the support has N_A = N_B, and every in-shell proposal is accepted.

    The equality is checked on every shell the cutoff leaves untruncated.
    """
    spec = scattershot_spec()
    dev = exact_device_distribution(spec)
    err, off_shell = 0.0, 0.0
    for (k, m), p in dev.as_dict().items():
        n_a, n_b = sum(k), sum(m)
        if n_a != n_b:
            off_shell = max(off_shell, p)
            continue
        if n_b > spec.cutoff:
            # above the cutoff some TMS terms are truncated away
            continue
        prior_m = (1.0 - spec.xi**2) ** spec.M * spec.xi ** (2 * n_b)
        err = max(err, abs(p - prior_m * cb.conditional_probability_tilde(spec, k, m)))
    rng = np.random.default_rng(seed)
    chain = run_mis_chain(dev, PriorSpec.uniform_shell(2), spec.xi, 0, proposals, rng)
    return [
        CheckResult("scattershot/p_equals_target", err, tol),
        CheckResult("scattershot/mass_off_N_A=N_B", off_shell, 0.0),
        CheckResult("scattershot/in_shell_acceptance", chain.support_acceptance_rate, 1.0, ">="),
    ]


def mis_reference(cutoff: int = 8):
    spec = cb.GaussianCircuitSpec(2, 0.4, [0.7], preset("random:1", 2), preset("random:2", 2), cutoff)
    prior = PriorSpec.uniform_shell(2)
    return spec, prior, exact_device_distribution(spec), target_distribution(spec, prior)


def check_mis(seed: int = 2024, n_samples: int = 20_000, burn_in: int = 1000, tol: float = 0.03) -> list[CheckResult]:
    spec, prior, dev, tgt = mis_reference()
    chain = run_mis_chain(dev, prior, spec.xi, burn_in, n_samples, np.random.default_rng(seed))
    tvd_long = total_variation_distance(chain.samples, tgt)
    tvd_short = total_variation_distance(chain.samples[:1000], tgt)
    return [
        CheckResult(f"mis/tvd_at_{n_samples}", tvd_long, tol),
        CheckResult("mis/tvd_decrease_1000_vs_long", tvd_short - tvd_long, 0.0, ">="),
    ]


def check_acceptance_bound(seed: int = 7, proposals: int = 200_000) -> list[CheckResult]:
    """Mean acceptance over in-shell proposals against 1/2 minus a 3-sigma binomial margin."""
    spec, prior, dev, _ = mis_reference()
    chain = run_mis_chain(dev, prior, spec.xi, 0, proposals, np.random.default_rng(seed))
    n = chain.state.proposals_in_support
    rate = chain.support_acceptance_rate
    margin = 3.0 * math.sqrt(0.25 / n) if n else math.inf
    return [CheckResult(f"acceptance_bound/in_shell_rate(n={n})", rate, 0.5 - margin, ">=")]


def check_hafnian(seed: int = 5, tol: float = 1e-12) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    err = 0.0
    for dim in (2, 4, 6, 8):
        for _ in range(5):
            a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            a = a + a.T
            ref = hafnian_reference(a)
            err = max(err, abs(hafnian(a) - ref) / max(1.0, abs(ref)))
    ones = max(abs(hafnian(np.ones((2 * k, 2 * k))) - math.prod(range(1, 2 * k, 2))) for k in (1, 2, 3, 4))
    return [CheckResult("hafnian/optimized_vs_definition", err, tol), CheckResult("hafnian/all_ones", ones, 0.0)]


def check_marginal(tol: float = 1e-6, cutoff: int = 11) -> list[CheckResult]:
    spec = cb.GaussianCircuitSpec(2, 0.4, [0.7], preset("identity", 2), preset("dft", 2), cutoff)
    dev = exact_device_distribution(spec)
    sums: dict[tuple, float] = {}
    for (k, m), p in dev.as_dict().items():
        if sum(m) <= 3:
            sums[m] = sums.get(m, 0.0) + p
    err = 0.0
    for n in range(4):
        for m in enumerate_shell(2, n):
            err = max(err, abs(marginal_probability(m, spec.xi, spec.t_list, spec.W_B) - sums.get(m, 0.0)))
    err1 = 0.0
    for n in range(4):
        for m in enumerate_shell(2, n):
            exact = (1 - spec.xi**2) ** 2 * spec.xi ** (2 * n)
            err1 = max(err1, abs(marginal_probability(m, spec.xi, [1.0], spec.W_B) - exact))
    return [
        CheckResult("marginal/truncation_tail", dev.tail, 1e-8),
        CheckResult("marginal/hafnian_vs_fock", err, tol),
        CheckResult("marginal/t=1_closed_form", err1, 1e-14),
    ]


def check_bloch_messiah(seed: int = 9, count: int = 100, tol: float = 1e-10) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    rows = []
    for modes in (2, 3, 4):
        recon, passive = 0.0, 0.0
        for _ in range(count):
            s = random_symplectic(modes, rng)
            f = bloch_messiah(s)
            recon = max(recon, float(np.max(np.abs(f.reconstruct() - s.matrix))))
            passive = max(passive, f.S1.passivity_residual(), f.S2.passivity_residual())
        rows.append(CheckResult(f"bloch_messiah/M={modes}/reconstruction", recon, tol))
        rows.append(CheckResult(f"bloch_messiah/M={modes}/passivity", passive, tol))
    return rows


def two_circuit_residual(
    spec2: cb.GaussianCircuitSpec2, max_total: int = 4, swap_signs: bool = False, amplitudes: bool = False
) -> float:
    """max |p(k,m,k',m') - A p~(k|m) p~'(k'|m')| with N_A + N_B + N_A' + N_B' <= max_total.

    With ``amplitudes`` the comparison is between the joint amplitude and
    sqrt(A) times the two simulated amplitudes. Probabilities are blind to a
    global flip of the squeezing signs (parity commutes with passive
    circuits), amplitudes are not.
    """
    half = spec2.M // 2
    r_up, r_low = spec2.squeezing_degrees(False), spec2.squeezing_degrees(True)
    if swap_signs:
        r_up, r_low = r_low, r_up
    patterns = [p for n in range(max_total + 1) for p in enumerate_shell(half, n)]
    circ = spec2.as_circuit
    err = 0.0
    for k, m, k2, m2 in itertools.product(patterns, repeat=4):
        total = sum(k) + sum(m) + sum(k2) + sum(m2)
        if total > max_total:
            continue
        a1 = cb.single_mode_gaussian_amplitude(spec2.V_A, r_up, spec2.V_B, k, m)
        a2 = cb.single_mode_gaussian_amplitude(spec2.V_A2, r_low, spec2.V_B2, k2, m2)
        pref = cb.prefactor_a2(spec2, total)
        if amplitudes:
            diff = cb.joint_amplitude(circ, k + k2, m + m2) - math.sqrt(pref) * a1 * a2
        else:
            diff = cb.joint_probability(circ, k + k2, m + m2) - pref * abs(a1 * a2) ** 2
        err = max(err, abs(diff))
    return err


def reference_spec2(modes: int = 2, seed: int = 21) -> cb.GaussianCircuitSpec2:
    rng = np.random.default_rng(seed)
    half = modes // 2
    return cb.GaussianCircuitSpec2(
        modes,
        0.4,
        rng.uniform(0.3, 0.95, size=half),
        *(haar_random(half, seed + i) for i in range(1, 5)),
        cutoff=4,
    )


def check_two_circuit(tol: float = 1e-9) -> list[CheckResult]:
    """Joint factorization into two single-mode-squeezer circuits with opposite squeezing."""
    rows = []
    for modes in (2, 4):
        spec2 = reference_spec2(modes)
        depth = 4 if modes == 2 else 3
        rows.append(CheckResult(f"two_circuit/M={modes}/factorization", two_circuit_residual(spec2, depth), tol))
        rows.append(
            CheckResult(f"two_circuit/M={modes}/amplitudes", two_circuit_residual(spec2, depth, amplitudes=True), tol)
        )
        # the upper port carries r_j, the lower -r_j; exchanging them must break the amplitudes
        swapped = two_circuit_residual(spec2, depth, swap_signs=True, amplitudes=True)
        rows.append(CheckResult(f"two_circuit/M={modes}/swapped_signs_break", swapped, 1e-3, ">="))
    return rows


def check_conservation(seed: int = 13) -> list[CheckResult]:
    """Off-sector amplitudes must be exact zeros, not merely small."""
    rng = np.random.default_rng(seed)
    u = haar_random(3, seed)
    worst = 0.0
    for n_in in range(4):
        for n_out in range(4):
            if n_in == n_out:
                continue
            for inp in enumerate_shell(3, n_in):
                for out in enumerate_shell(3, n_out):
                    worst = max(worst, abs(interferometer_element(u, out, inp)))
    amps = {p: complex(rng.normal(), rng.normal()) for n in range(4) for p in enumerate_shell(3, n)}
    state = FockAmplitudeMap(3, 3, amps)
    out_sectors = apply_passive(u, state).sectors()
    leak = 0.0
    for n in range(4):
        in_norm = sum(abs(a) ** 2 for p, a in amps.items() if sum(p) == n)
        out_norm = sum(abs(a) ** 2 for a in out_sectors.get(n, {}).values())
        leak = max(leak, abs(out_norm - in_norm) / in_norm)
    if set(out_sectors) - set(range(4)):
        leak = math.inf
    bs_worst = max(
        abs(bs_element(0.37, out, inp)) for out in _pairs(4) for inp in _pairs(4) if sum(out) != sum(inp)
    )
    ts_worst = 0.0
    for out in _pairs(5):
        for inp in _pairs(5):
            if out[0] - out[1] != inp[0] - inp[1]:
                ts_worst = max(ts_worst, abs(ts_element_dual(0.4, out, inp)), abs(ts_element_oracle(-0.5, out, inp, 20)))
    return [
        CheckResult("conservation/passive_off_sector", worst, 0.0),
        CheckResult("conservation/sector_norms", leak, 1e-12),
        CheckResult("conservation/bs_off_sector", bs_worst, 0.0),
        CheckResult("conservation/ts_off_difference", ts_worst, 0.0),
    ]


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "duality": check_duality,
    "sandwich": check_sandwich,
    "factorization": check_factorization,
    "scattershot": check_scattershot,
    "mis": check_mis,
    "acceptance_bound": check_acceptance_bound,
    "hafnian": check_hafnian,
    "marginal": check_marginal,
    "bloch_messiah": check_bloch_messiah,
    "two_circuit": check_two_circuit,
    "conservation": check_conservation,
}


def tolerance_overrides(env: str | None = None) -> dict[str, float]:
    """Parse ``suite=value`` pairs separated by commas."""
    text = os.environ.get(TOL_ENV, "") if env is None else env
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, sep, value = item.partition("=")
        if not sep or name.strip() not in SUITES:
            raise ValueError(f"bad tolerance override {item!r} in {TOL_ENV}")
        out[name.strip()] = float(value)
    return out


def run_suites(selected: Iterable[str] | None = None) -> list[CheckResult]:
    names = list(SUITES) if selected is None else list(selected)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    overrides = tolerance_overrides()
    rows = []
    for name in names:
        for row in SUITES[name]():
            if name in overrides:
                row = CheckResult(row.name, row.value, overrides[name], row.relation)
            rows.append(row)
    return rows


def _bound(row: CheckResult) -> str:
    if row.relation == "<" and row.threshold == 0.0:
        return "== 0"
    return f"{row.relation} {row.threshold:.1e}"


def format_table(rows: list[CheckResult]) -> str:
    header = ("check", "value", "threshold", "status")
    body = [
        (r.name, f"{r.value:.3e}", _bound(r), "PASS" if r.passed else "FAIL") for r in rows
    ]
    widths = [max(len(x[i]) for x in [header, *body]) for i in range(4)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in [header, *body]]
    return "\n".join(lines)
