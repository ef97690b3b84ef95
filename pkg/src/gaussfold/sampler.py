"""Exact device sampling and Metropolised independence sampling (MIS) of the target.

The device is the passive circuit: it emits (k, m) with probability p(k, m).
The chain uses device draws as independent proposals and accepts a move from
(k, m) to (k', m') with probability

    min(1, xi^(Delta_A + Delta_B) * p0(m') / p0(m)),
    Delta_A = sum(k - k'),  Delta_B = sum(m - m'),

which makes the Gaussian-circuit distribution p0(m) p~(k|m) stationary.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .circuit import GaussianCircuitSpec, conditional_state_tilde, input_state, split_outcome
from .fock import Pattern, as_pattern, pattern_sort_key, shell_cardinality
from .passive import apply_passive

Outcome = tuple[Pattern, Pattern]


@dataclass(frozen=True)
class PriorSpec:
    """Distribution p0(m) of simulated input patterns.

    ``uniform_shell`` spreads mass evenly over all m with ``photons`` photons,
    ``fixed`` puts all mass on ``m0``, and ``gibbs`` is a product of per-mode
    geometric laws with mean ``mean_occupation``, renormalized over
    occupations ``0..max_occupation``.
    """

    kind: Literal["uniform_shell", "fixed", "gibbs"]
    photons: int | None = None
    m0: Pattern | None = None
    mean_occupation: float | None = None
    max_occupation: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "uniform_shell":
            if self.photons is None or self.photons < 0:
                raise ValueError("uniform_shell prior needs photons >= 0")
        elif self.kind == "fixed":
            if self.m0 is None:
                raise ValueError("fixed prior needs m0")
            object.__setattr__(self, "m0", as_pattern(self.m0))
        elif self.kind == "gibbs":
            if self.mean_occupation is None or self.mean_occupation <= 0:
                raise ValueError("gibbs prior needs a positive mean_occupation")
            if self.max_occupation is None or self.max_occupation < 0:
                raise ValueError("gibbs prior needs max_occupation >= 0")
        else:
            raise ValueError(f"unknown prior kind {self.kind!r}")

    @classmethod
    def uniform_shell(cls, photons: int) -> "PriorSpec":
        return cls("uniform_shell", photons=photons)

    @classmethod
    def fixed(cls, m0: Sequence[int]) -> "PriorSpec":
        return cls("fixed", m0=tuple(m0))

    @classmethod
    def gibbs(cls, mean_occupation: float, max_occupation: int) -> "PriorSpec":
        return cls("gibbs", mean_occupation=mean_occupation, max_occupation=max_occupation)


def prior_probability(prior: PriorSpec, m: Sequence[int]) -> float:
    m = as_pattern(m)
    if prior.kind == "uniform_shell":
        if sum(m) != prior.photons:
            return 0.0
        return 1.0 / shell_cardinality(len(m), prior.photons)
    if prior.kind == "fixed":
        return 1.0 if m == prior.m0 else 0.0
    if max(m, default=0) > prior.max_occupation:
        return 0.0
    q = prior.mean_occupation / (1.0 + prior.mean_occupation)
    per_mode_norm = (1.0 - q) / (1.0 - q ** (prior.max_occupation + 1))
    return math.prod(per_mode_norm * q**n for n in m)


# -- exact outcome distributions --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Materialized probabilities over (k, m) outcomes.

    ``tail`` is the mass missing from the listed outcomes, so probabilities
    and tail sum to one. ``raw_mass`` records the mass before any
    renormalization (1 for distributions that were not renormalized).
    """

    outcomes: tuple[Outcome, ...]
    probabilities: np.ndarray
    tail: float = 0.0
    raw_mass: float = 1.0

    def __post_init__(self) -> None:
        probs = np.asarray(self.probabilities, dtype=float)
        if probs.shape != (len(self.outcomes),):
            raise ValueError("one probability per outcome required")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(math.fsum(probs) + self.tail - 1.0) > 1e-10:
            raise ValueError(f"probabilities plus tail sum to {math.fsum(probs) + self.tail}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "_cdf", np.cumsum(probs))

    def __len__(self) -> int:
        return len(self.outcomes)

    def as_dict(self) -> dict[Outcome, float]:
        return dict(zip(self.outcomes, self.probabilities.tolist()))

    def total(self) -> float:
        return float(math.fsum(self.probabilities))

    def draw(self, rng: np.random.Generator, size: int) -> list[Outcome]:
        return [self.outcomes[i] for i in self.draw_indices(rng, size)]

    def draw_indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cdf = self._cdf
        idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
        return np.minimum(idx, len(cdf) - 1)


def _outcome_key(outcome: Outcome) -> tuple:
    k, m = outcome
    return pattern_sort_key(k + m) + pattern_sort_key(k)


def reachable_outcome_count(spec: GaussianCircuitSpec) -> int:
    """Upper bound on the number of (k, m) patterns reachable under the cutoff."""
    return sum(shell_cardinality(2 * spec.M, 2 * n) for n in range(spec.M * spec.cutoff + 1))


def exact_device_distribution(spec: GaussianCircuitSpec, max_outcomes: int = 10**6) -> OutcomeDistribution:
    """All (k, m) with nonzero probability under the TMS cutoff, canonically ordered."""
    bound = reachable_outcome_count(spec)
    if bound > max_outcomes:
        raise ValueError(
            f"up to {bound} reachable outcomes exceeds the limit of {max_outcomes}; lower the cutoff"
        )
    state = apply_passive(spec.mode_matrix, input_state(spec))
    pairs = sorted(((split_outcome(p), abs(a) ** 2) for p, a in state.items()), key=lambda x: _outcome_key(x[0]))
    outcomes = tuple(o for o, _ in pairs)
    probs = np.array([p for _, p in pairs])
    return OutcomeDistribution(outcomes, probs, tail=max(0.0, 1.0 - math.fsum(probs)))


def draw_device_sample(dist: OutcomeDistribution, rng: np.random.Generator) -> Outcome:
    """One inverse-CDF draw from the (renormalized) device distribution."""
    return dist.draw(rng, 1)[0]


def conditional_table(spec: GaussianCircuitSpec, outcomes: Iterable[Outcome]) -> dict[Outcome, float]:
    """p~(k|m) for every listed outcome, one time-unfolded evolution per (m, N_A) group."""
    groups: dict[tuple[Pattern, int], list[Pattern]] = {}
    for k, m in outcomes:
        groups.setdefault((m, sum(k)), []).append(k)
    table = {}
    for (m, n_a), ks in groups.items():
        cond = conditional_state_tilde(spec, m, n_a)
        for k in ks:
            table[(k, m)] = abs(cond[k]) ** 2
    return table


def target_distribution(
    spec: GaussianCircuitSpec,
    prior: PriorSpec,
    support: Iterable[Outcome] | None = None,
) -> OutcomeDistribution:
    """p0(m) p~(k|m) over a finite outcome set, renormalized.

    The set defaults to the device support, so the target and the chain live
    on the same truncated space. The pre-normalization sum is kept in
    ``raw_mass``; its distance from 1 is the normalization residual.
    """
    if support is None:
        support = exact_device_distribution(spec).outcomes
    kept = [x for x in support if prior_probability(prior, x[1]) > 0]
    cond = conditional_table(spec, kept)
    raw = sorted(((x, prior_probability(prior, x[1]) * cond[x]) for x in kept), key=lambda y: _outcome_key(y[0]))
    probs = np.array([p for _, p in raw], dtype=float)
    mass = math.fsum(probs)
    if mass <= 0:
        return OutcomeDistribution((), np.zeros(0), tail=1.0, raw_mass=0.0)
    probs = probs / mass
    return OutcomeDistribution(tuple(o for o, _ in raw), probs, tail=1.0 - math.fsum(probs), raw_mass=mass)


def total_variation_distance(samples: Iterable[Outcome], exact: OutcomeDistribution) -> float:
    """1/2 sum |empirical - exact| over the union of supports."""
    counts = Counter(samples)
    n = sum(counts.values())
    if n == 0:
        raise ValueError("no samples")
    ref = exact.as_dict()
    norm = math.fsum(ref.values()) or 1.0
    keys = set(counts) | set(ref)
    return 0.5 * math.fsum(abs(counts.get(x, 0) / n - ref.get(x, 0.0) / norm) for x in keys)


# -- the Markov chain ---------------------------------------------------------------


def mis_accept_probability(xi: float, prior: PriorSpec, current: Outcome, proposal: Outcome) -> float:
    """min{1, xi^(Delta_A + Delta_B) p0(m') / p0(m)}."""
    (k, m), (k2, m2) = current, proposal
    p_cur = prior_probability(prior, m)
    if p_cur <= 0:
        raise ValueError(f"current state {current} has zero prior probability")
    p_new = prior_probability(prior, m2)
    if p_new == 0:
        return 0.0
    delta = (sum(k) - sum(k2)) + (sum(m) - sum(m2))
    if xi == 0.0:
        # 0^delta: vanishes for delta > 0, unbounded (clamped to 1) for delta < 0
        if delta != 0:
            return 1.0 if delta < 0 else 0.0
        return min(1.0, p_new / p_cur)
    return min(1.0, xi**delta * p_new / p_cur)


@dataclass
class MisChainState:
    current: Outcome
    steps: int = 0
    accepted: int = 0
    proposals_in_support: int = 0
    accepted_in_support: int = 0
    rng_stream: str = ""


@dataclass
class SampleRecord:
    chain: int
    step: int
    k: Pattern
    m: Pattern
    accepted: bool


@dataclass
class ChainResult:
    samples: list[Outcome]
    records: list[SampleRecord]
    acceptance_rate: float
    support_acceptance_rate: float
    state: MisChainState
    seed: str = ""

    @property
    def in_support_proposals(self) -> int:
        return self.state.proposals_in_support


DeviceSource = OutcomeDistribution | Callable[[np.random.Generator, int], Sequence[Outcome]]


def _draw(device: DeviceSource, rng: np.random.Generator, size: int) -> list[Outcome]:
    if isinstance(device, OutcomeDistribution):
        return device.draw(rng, size)
    return list(device(rng, size))


class ChainInitError(RuntimeError):
    pass


def run_mis_chain(
    device: DeviceSource,
    prior: PriorSpec,
    xi: float,
    burn_in: int,
    n_samples: int,
    rng: np.random.Generator,
    *,
    max_init_draws: int = 100_000,
    chain_id: int = 0,
    stream: str = "",
) -> ChainResult:
    """Metropolised independence sampler driven by device draws.

    The chain starts at the first device draw with nonzero prior. On
    rejection the current state is emitted again. Only the ``n_samples``
    steps after ``burn_in`` are retained.
    """
    if burn_in < 0 or n_samples < 0:
        raise ValueError("burn_in and n_samples must be >= 0")
    current = None
    drawn = 0
    while current is None and drawn < max_init_draws:
        batch = _draw(device, rng, min(1024, max_init_draws - drawn))
        drawn += len(batch)
        for outcome in batch:
            if prior_probability(prior, outcome[1]) > 0:
                current = outcome
                break
    if current is None:
        raise ChainInitError(
            f"no device draw hit the prior support in {max_init_draws} attempts "
            f"(prior {prior.kind}); the prior may be unreachable under this circuit"
        )
    state = MisChainState(current=current, rng_stream=stream)
    total = burn_in + n_samples
    proposals = _draw(device, rng, total)
    uniforms = rng.random(total)
    samples: list[Outcome] = []
    records: list[SampleRecord] = []
    for step in range(total):
        proposal = proposals[step]
        accept_p = mis_accept_probability(xi, prior, state.current, proposal)
        in_support = prior_probability(prior, proposal[1]) > 0
        accepted = uniforms[step] < accept_p
        state.steps += 1
        if in_support:
            state.proposals_in_support += 1
        if accepted:
            state.current = proposal
            state.accepted += 1
            if in_support:
                state.accepted_in_support += 1
        if step >= burn_in:
            samples.append(state.current)
            records.append(SampleRecord(chain_id, step - burn_in, *state.current, bool(accepted)))
    rate = state.accepted / state.steps if state.steps else 0.0
    support_rate = state.accepted_in_support / state.proposals_in_support if state.proposals_in_support else 0.0
    return ChainResult(samples, records, rate, support_rate, state, stream)


def chain_seeds(master_seed: int, n_chains: int) -> list[np.random.SeedSequence]:
    """Independent per-chain streams spawned from one master seed."""
    return np.random.SeedSequence(master_seed).spawn(n_chains)


def _run_one(args) -> ChainResult:
    device, prior, xi, burn_in, n_samples, seq, chain_id, max_init = args
    rng = np.random.Generator(np.random.PCG64(seq))
    stream = f"{seq.entropy}/{'.'.join(map(str, seq.spawn_key))}"
    return run_mis_chain(
        device, prior, xi, burn_in, n_samples, rng, max_init_draws=max_init, chain_id=chain_id, stream=stream
    )


def run_chains(
    device: OutcomeDistribution,
    prior: PriorSpec,
    xi: float,
    burn_in: int,
    n_samples: int,
    n_chains: int,
    master_seed: int,
    *,
    workers: int = 1,
    max_init_draws: int = 100_000,
) -> list[ChainResult]:
    """Run independent chains, in worker processes when ``workers > 1``.

    Results come back in chain order regardless of scheduling.
    """
    jobs = [
        (device, prior, xi, burn_in, n_samples, seq, i, max_init_draws)
        for i, seq in enumerate(chain_seeds(master_seed, n_chains))
    ]
    if workers <= 1 or n_chains == 1:
        return [_run_one(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, n_chains)) as pool:
        return list(pool.map(_run_one, jobs))
