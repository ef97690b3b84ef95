"""Occupation patterns and sparse Fock-space amplitude maps."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

Pattern = tuple[int, ...]

DEFAULT_DROP_TOL = 1e-15


def as_pattern(counts: Iterable[int]) -> Pattern:
    """Validate a photon-count vector and return it as a tuple of ints."""
    pattern = tuple(int(c) for c in counts)
    if any(c < 0 for c in pattern):
        raise ValueError(f"photon counts must be non-negative, got {pattern}")
    return pattern


def shell_cardinality(modes: int, total_photons: int) -> int:
    """Number of ways to distribute ``total_photons`` bosons over ``modes`` modes.

    Python integers never wrap, so very large shells come back exact rather
    than overflowing.
    """
    if modes < 1:
        raise ValueError("modes must be >= 1")
    if total_photons < 0:
        raise ValueError("total_photons must be >= 0")
    return math.comb(total_photons + modes - 1, total_photons)


def _shell(modes: int, total: int) -> Iterator[Pattern]:
    if modes == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _shell(modes - 1, total - first):
            yield (first, *rest)


def enumerate_shell(modes: int, total_photons: int) -> list[Pattern]:
    """All patterns of length ``modes`` summing to ``total_photons``.

    Ordered lexicographically, descending in the first differing coordinate:
    ``enumerate_shell(2, 2) == [(2, 0), (1, 1), (0, 2)]``.
    """
    if modes < 1:
        raise ValueError("modes must be >= 1")
    if total_photons < 0:
        raise ValueError("total_photons must be >= 0")
    return list(_shell(modes, total_photons))


def pattern_sort_key(pattern: Sequence[int]) -> tuple:
    """Sort key placing patterns by photon number, then in shell order."""
    return (sum(pattern), tuple(-c for c in pattern))


@dataclass(frozen=True, eq=False)
class FockAmplitudeMap:
    """Sparse complex amplitudes over occupation patterns with a per-mode cutoff.

    Amplitudes with magnitude at or below ``drop_tol`` are discarded on
    construction; together with the cutoff this is the only truncation.
    Absent patterns read as zero.
    """

    modes: int
    cutoff: int
    entries: Mapping[Pattern, complex] = field(default_factory=dict)
    drop_tol: float = DEFAULT_DROP_TOL

    def __post_init__(self) -> None:
        if self.modes < 1:
            raise ValueError("modes must be >= 1")
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        clean: dict[Pattern, complex] = {}
        for key, amp in self.entries.items():
            pattern = as_pattern(key)
            if len(pattern) != self.modes:
                raise ValueError(f"pattern {pattern} does not have {self.modes} modes")
            if max(pattern, default=0) > self.cutoff:
                raise ValueError(f"pattern {pattern} exceeds cutoff {self.cutoff}")
            amp = complex(amp)
            if abs(amp) > self.drop_tol:
                clean[pattern] = clean.get(pattern, 0j) + amp
        object.__setattr__(self, "entries", clean)

    def __getitem__(self, pattern: Sequence[int]) -> complex:
        return self.entries.get(tuple(pattern), 0j)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Pattern]:
        return iter(self.entries)

    def items(self):
        return self.entries.items()

    def norm_squared(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.entries.values())

    def sectors(self) -> dict[int, dict[Pattern, complex]]:
        """Group entries by total photon number."""
        out: dict[int, dict[Pattern, complex]] = defaultdict(dict)
        for pattern, amp in self.entries.items():
            out[sum(pattern)][pattern] = amp
        return dict(out)

    def max_photons(self) -> int:
        return max((sum(p) for p in self.entries), default=0)


def vacuum(modes: int, cutoff: int = 0) -> FockAmplitudeMap:
    return FockAmplitudeMap(modes, cutoff, {(0,) * modes: 1.0})


def basis_state(pattern: Sequence[int], cutoff: int | None = None) -> FockAmplitudeMap:
    pattern = as_pattern(pattern)
    return FockAmplitudeMap(
        len(pattern), max(pattern, default=0) if cutoff is None else cutoff, {pattern: 1.0}
    )


def inner_product(a: FockAmplitudeMap, b: FockAmplitudeMap) -> complex:
    """<a|b> = sum over patterns of conj(a[p]) * b[p]."""
    if a.modes != b.modes:
        raise ValueError(f"mode mismatch: {a.modes} vs {b.modes}")
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for pattern in small.entries:
        total += a[pattern].conjugate() * b[pattern]
    return total


def tensor(a: FockAmplitudeMap, b: FockAmplitudeMap) -> FockAmplitudeMap:
    """Tensor product; patterns concatenate and amplitudes multiply."""
    entries = {pa + pb: xa * xb for pa, xa in a.items() for pb, xb in b.items()}
    return FockAmplitudeMap(
        a.modes + b.modes,
        max(a.cutoff, b.cutoff),
        entries,
        drop_tol=min(a.drop_tol, b.drop_tol),
    )
