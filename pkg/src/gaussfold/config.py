"""YAML experiment configuration.

Example::

    circuit:
      kind: standard            # or two_circuit
      modes: 2
      xi: 0.4
      transmissivities: [0.7]
      U_A: "random:1"           # preset name or matrix file relative to this config
      U_B: dft
      cutoff: 8
    prior:
      kind: uniform_shell       # uniform_shell | fixed | gibbs
      photons: 2
    sampler:
      burn_in: 1000
      n_samples: 20000
      n_chains: 1
      master_seed: 2024
    output: runs/reference

A ``two_circuit`` circuit takes ``V_A``, ``V_A2``, ``V_B``, ``V_B2`` (each
modes/2 x modes/2) instead of ``U_A`` and ``U_B``. Everything is validated
when the file is loaded, before any computation starts.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .circuit import GaussianCircuitSpec, GaussianCircuitSpec2
from .passive import PassiveUnitary, load_unitary, preset
from .sampler import PriorSpec

PRESET_PREFIXES = ("identity", "dft", "random:")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SamplerSettings:
    burn_in: int = 1000
    n_samples: int = 20_000
    n_chains: int = 1
    master_seed: int = 0
    workers: int = 1
    max_init_draws: int = 100_000

    def __post_init__(self) -> None:
        for name in ("burn_in", "n_samples"):
            if getattr(self, name) < 0:
                raise ConfigError(f"sampler.{name} must be >= 0")
        for name in ("n_chains", "workers", "max_init_draws"):
            if getattr(self, name) < 1:
                raise ConfigError(f"sampler.{name} must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    circuit: GaussianCircuitSpec | GaussianCircuitSpec2
    prior: PriorSpec
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    output: Path | None = None

    @property
    def device_circuit(self) -> GaussianCircuitSpec:
        """The circuit whose passive counterpart is sampled (two_circuit specs are flattened)."""
        if isinstance(self.circuit, GaussianCircuitSpec2):
            return self.circuit.as_circuit
        return self.circuit

    def with_overrides(
        self,
        *,
        seed: int | None = None,
        cutoff: int | None = None,
        samples: int | None = None,
        burn_in: int | None = None,
        output: str | Path | None = None,
    ) -> "ExperimentConfig":
        """Command-line values replace the file's; ``None`` keeps the file's value."""
        sampler = self.sampler
        changes = {
            k: v for k, v in {"master_seed": seed, "n_samples": samples, "burn_in": burn_in}.items() if v is not None
        }
        if changes:
            sampler = dataclasses.replace(sampler, **changes)
        circuit = self.circuit
        if cutoff is not None:
            if cutoff < 1:
                raise ConfigError("cutoff must be >= 1")
            circuit = dataclasses.replace(circuit, cutoff=cutoff)
        return ExperimentConfig(circuit, self.prior, sampler, Path(output) if output is not None else self.output)


def resolve_unitary(value: Any, dim: int, base: Path, name: str) -> PassiveUnitary:
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be a preset name or a matrix file path")
    try:
        if value.startswith(PRESET_PREFIXES):
            return preset(value, dim)
        unitary = load_unitary(base / value)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    if unitary.dim != dim:
        raise ConfigError(f"{name}: expected a {dim}x{dim} matrix, got {unitary.dim}x{unitary.dim}")
    return unitary


def _require(section: dict, key: str, where: str) -> Any:
    if key not in section:
        raise ConfigError(f"missing {where}.{key}")
    return section[key]


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def parse_circuit(raw: dict, base: Path) -> GaussianCircuitSpec | GaussianCircuitSpec2:
    kind = raw.get("kind", "standard")
    common = {"kind", "modes", "xi", "transmissivities", "cutoff"}
    try:
        modes = int(_require(raw, "modes", "circuit"))
        xi = float(_require(raw, "xi", "circuit"))
        t_list = [float(t) for t in _require(raw, "transmissivities", "circuit")]
        cutoff = int(raw.get("cutoff", 4))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"circuit: {exc}") from exc
    try:
        if kind == "standard":
            _check_keys(raw, common | {"U_A", "U_B"}, "circuit")
            u_a = resolve_unitary(_require(raw, "U_A", "circuit"), modes, base, "circuit.U_A")
            u_b = resolve_unitary(_require(raw, "U_B", "circuit"), modes, base, "circuit.U_B")
            return GaussianCircuitSpec(modes, xi, t_list, u_a, u_b, cutoff)
        if kind == "two_circuit":
            names = ("V_A", "V_A2", "V_B", "V_B2")
            _check_keys(raw, common | set(names), "circuit")
            half = modes // 2
            mats = [resolve_unitary(_require(raw, n, "circuit"), half, base, f"circuit.{n}") for n in names]
            return GaussianCircuitSpec2(modes, xi, t_list, *mats, cutoff=cutoff)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"circuit: {exc}") from exc
    raise ConfigError(f"circuit.kind must be 'standard' or 'two_circuit', got {kind!r}")


def parse_prior(raw: dict, modes: int) -> PriorSpec:
    kind = _require(raw, "kind", "prior")
    try:
        if kind == "uniform_shell":
            _check_keys(raw, {"kind", "photons"}, "prior")
            return PriorSpec.uniform_shell(int(_require(raw, "photons", "prior")))
        if kind == "fixed":
            _check_keys(raw, {"kind", "m0"}, "prior")
            m0 = [int(x) for x in _require(raw, "m0", "prior")]
            if len(m0) != modes:
                raise ConfigError(f"prior.m0 must have {modes} entries")
            return PriorSpec.fixed(m0)
        if kind == "gibbs":
            _check_keys(raw, {"kind", "mean_occupation", "max_occupation"}, "prior")
            return PriorSpec.gibbs(
                float(_require(raw, "mean_occupation", "prior")), int(raw.get("max_occupation", 8))
            )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"prior: {exc}") from exc
    raise ConfigError(f"prior.kind must be uniform_shell, fixed or gibbs, got {kind!r}")


def parse_config(raw: Any, base: Path = Path(".")) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping with circuit/prior/sampler sections")
    _check_keys(raw, {"circuit", "prior", "sampler", "output"}, "config")
    circuit = parse_circuit(_require(raw, "circuit", "config") or {}, base)
    prior = parse_prior(_require(raw, "prior", "config") or {}, circuit.M)
    sampler_raw = raw.get("sampler") or {}
    _check_keys(sampler_raw, {f.name for f in dataclasses.fields(SamplerSettings)}, "sampler")
    try:
        sampler = SamplerSettings(**{k: int(v) for k, v in sampler_raw.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sampler: {exc}") from exc
    output = raw.get("output")
    return ExperimentConfig(circuit, prior, sampler, base / output if output is not None else None)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return parse_config(raw, path.parent)
