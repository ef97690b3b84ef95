"""Command-line runner: simulate | sample | verify | decompose.

Precedence for every setting: command-line flag, then config file, then the
built-in default. Reports are written as an aligned text table and a JSON
file side by side; sample and distribution streams are JSON lines with one
header record first. All files are assembled in memory and written at the
end, so a failed run leaves nothing behind.

Exit status: 0 on success, 1 when a verification check fails, 2 for invalid
input (bad config, matrix file or flags), 3 when a run cannot complete
(scale limit exceeded, chain initialization failure).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .circuit import prefactor_a
from .config import ConfigError, ExperimentConfig, load_config
from .passive import format_matrix, parse_matrix
from .phasespace import SymplecticMatrix, bloch_messiah, symplectic_residual
from .sampler import (
    ChainInitError,
    conditional_table,
    exact_device_distribution,
    prior_probability,
    run_chains,
    target_distribution,
    total_variation_distance,
)
from .verify import SUITES, format_table, run_suites

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


class RunError(RuntimeError):
    pass


# -- output helpers --------------------------------------------------------------


def _jsonl(header: dict, records: list[dict]) -> str:
    lines = [json.dumps(header, sort_keys=True)]
    lines.extend(json.dumps(r, sort_keys=True) for r in records)
    return "\n".join(lines) + "\n"


def _aligned(rows: list[tuple[str, ...]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def _write_all(files: dict[Path, str]) -> None:
    """Write every file through temporaries, then move them into place."""
    staged = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(path.name + ".part")
            tmp.write_text(text)
            staged.append((tmp, path))
    except OSError:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, path in staged:
        tmp.replace(path)


def _output_dir(args: argparse.Namespace, config: ExperimentConfig | None = None) -> Path | None:
    if args.output is not None:
        return Path(args.output)
    return config.output if config is not None else None


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config)
    return config.with_overrides(
        seed=getattr(args, "seed", None),
        cutoff=getattr(args, "cutoff", None),
        samples=getattr(args, "samples", None),
        burn_in=getattr(args, "burn_in", None),
        output=args.output,
    )


def _config_summary(config: ExperimentConfig) -> dict:
    spec = config.device_circuit
    prior = config.prior
    return {
        "modes": spec.M,
        "xi": spec.xi,
        "transmissivities": list(spec.t_list),
        "cutoff": spec.cutoff,
        "prior": {k: v for k, v in vars(prior).items() if v is not None},
        "sampler": vars(config.sampler),
    }


def _device(config: ExperimentConfig):
    try:
        return exact_device_distribution(config.device_circuit)
    except ValueError as exc:
        raise RunError(str(exc)) from exc


# -- commands ------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    spec = config.device_circuit
    dev = _device(config)
    cond = conditional_table(spec, dev.outcomes)
    target = target_distribution(spec, config.prior, dev.outcomes).as_dict()
    records, max_residual = [], 0.0
    for (k, m), p in zip(dev.outcomes, dev.probabilities.tolist()):
        n_a, n_b = sum(k), sum(m)
        a = prefactor_a(spec, n_a, n_b)
        # above 2 * cutoff photons the truncated input misses terms of p(k, m)
        exact = n_a + n_b <= 2 * spec.cutoff
        residual = abs(p - a * cond[(k, m)]) if exact else None
        if residual is not None:
            max_residual = max(max_residual, residual)
        records.append(
            {
                "k": list(k),
                "m": list(m),
                "p": p,
                "p_tilde_conditional": cond[(k, m)],
                "target": target.get((k, m), 0.0),
                "A": a,
                "residual": residual,
            }
        )
    summary = {
        "outcomes": len(dev),
        "device_tail": dev.tail,
        "target_raw_mass": math.fsum(
            prior_probability(config.prior, m) * cond[(k, m)] for k, m in dev.outcomes
        ),
        "max_factorization_residual": max_residual,
        "residual_checked_up_to_photons": 2 * spec.cutoff,
    }
    prefactors = sorted({(sum(r["k"]), sum(r["m"]), r["A"]) for r in records})
    header = {"record": "header", "command": "simulate", "version": __version__, "config": _config_summary(config)}
    table = [("quantity", "value")] + [(k, f"{v:.6g}" if isinstance(v, float) else str(v)) for k, v in summary.items()]
    a_table = [("N_A", "N_B", "A")] + [(str(x), str(y), f"{a:.6e}") for x, y, a in prefactors]
    text = _aligned(table) + "\nprefactor table\n" + _aligned(a_table)
    print(text, end="")
    out = _output_dir(args, config)
    if out is not None:
        report = {**summary, "prefactors": [{"N_A": x, "N_B": y, "A": a} for x, y, a in prefactors]}
        _write_all(
            {
                out / "simulate.jsonl": _jsonl(header, records),
                out / "simulate_report.txt": text,
                out / "simulate_report.json": json.dumps(report, indent=2, sort_keys=True) + "\n",
            }
        )
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    config = _load(args)
    spec, s = config.device_circuit, config.sampler
    dev = _device(config)
    try:
        chains = run_chains(
            dev,
            config.prior,
            spec.xi,
            s.burn_in,
            s.n_samples,
            s.n_chains,
            s.master_seed,
            workers=s.workers,
            max_init_draws=s.max_init_draws,
        )
    except ChainInitError as exc:
        raise RunError(str(exc)) from exc
    samples = [x for c in chains for x in c.samples]
    try:
        tvd = total_variation_distance(samples, target_distribution(spec, config.prior, dev.outcomes)) if samples else None
    except ValueError:
        tvd = None
    steps = sum(c.state.steps for c in chains)
    in_support = sum(c.state.proposals_in_support for c in chains)
    summary = {
        "samples": len(samples),
        "acceptance_rate": sum(c.state.accepted for c in chains) / steps if steps else 0.0,
        "in_support_acceptance_rate": (
            sum(c.state.accepted_in_support for c in chains) / in_support if in_support else 0.0
        ),
        "in_support_proposals": in_support,
        "tvd_vs_exact_target": tvd,
        "chains": [
            {
                "chain": i,
                "seed": c.seed,
                "acceptance_rate": c.acceptance_rate,
                "in_support_acceptance_rate": c.support_acceptance_rate,
            }
            for i, c in enumerate(chains)
        ],
    }
    header = {"record": "header", "command": "sample", "version": __version__, "config": _config_summary(config)}
    records = [
        {"chain": r.chain, "step": r.step, "k": list(r.k), "m": list(r.m), "accepted": r.accepted}
        for c in chains
        for r in c.records
    ]
    rows = [("quantity", "value")]
    for key in ("samples", "acceptance_rate", "in_support_acceptance_rate", "in_support_proposals", "tvd_vs_exact_target"):
        val = summary[key]
        rows.append((key, "n/a" if val is None else (f"{val:.6g}" if isinstance(val, float) else str(val))))
    rows += [(f"chain {c['chain']} seed", c["seed"]) for c in summary["chains"]]
    text = _aligned(rows)
    print(text, end="")
    out = _output_dir(args, config)
    if out is not None:
        _write_all(
            {
                out / "samples.jsonl": _jsonl(header, records),
                out / "sample_report.txt": text,
                out / "sample_report.json": json.dumps(summary, indent=2, sort_keys=True) + "\n",
            }
        )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    selected = None
    if args.suite:
        selected = [name.strip() for item in args.suite for name in item.split(",") if name.strip()]
    try:
        rows = run_suites(selected)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc).strip("'\"")) from exc
    text = format_table(rows) + "\n"
    print(text, end="")
    out = _output_dir(args)
    if out is not None:
        report = {"checks": [r.as_dict() for r in rows], "all_passed": all(r.passed for r in rows)}
        _write_all(
            {
                out / "verify_report.txt": text,
                out / "verify_report.json": json.dumps(report, indent=2, sort_keys=True) + "\n",
            }
        )
    return EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK_FAILED


def _matrix_json(mat: np.ndarray) -> list[list[list[float]]]:
    return [[[z.real, z.imag] for z in row] for row in np.asarray(mat)]


def cmd_decompose(args: argparse.Namespace) -> int:
    try:
        mat = parse_matrix(Path(args.matrix).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read matrix file: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"matrix file: {exc}") from exc
    if mat.shape[0] % 2:
        raise ConfigError(f"a symplectic matrix must have even dimension, got {mat.shape[0]}")
    residual = symplectic_residual(mat)
    try:
        S = SymplecticMatrix(mat)
    except ValueError as exc:
        raise ConfigError(f"input rejected, max |S Sigma S^dag - Sigma| = {residual:.3e}") from exc
    try:
        factors = bloch_messiah(S)
    except ArithmeticError as exc:
        raise RunError(str(exc)) from exc
    recon = float(np.max(np.abs(factors.reconstruct() - S.matrix)))
    r_list = [float(r) for r in factors.r_list]
    text = (
        f"modes                   {S.modes}\n"
        f"squeezing degrees       {' '.join(f'{r:.12g}' for r in r_list)}\n"
        f"reconstruction residual {recon:.3e}\n"
        f"symplectic residual     {residual:.3e}\n"
        f"\nS1\n{format_matrix(factors.S1.matrix)}\nS2\n{format_matrix(factors.S2.matrix)}"
    )
    print(text, end="")
    out = _output_dir(args)
    if out is not None:
        report = {
            "modes": S.modes,
            "r_list": r_list,
            "reconstruction_residual": recon,
            "symplectic_residual": residual,
            "S1": _matrix_json(factors.S1.matrix),
            "S2": _matrix_json(factors.S2.matrix),
        }
        _write_all(
            {
                out / "decompose_report.txt": text,
                out / "decompose_report.json": json.dumps(report, indent=2, sort_keys=True) + "\n",
                out / "S1.txt": format_matrix(factors.S1.matrix),
                out / "S2.txt": format_matrix(factors.S2.matrix),
            }
        )
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaussfold", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="exact device distribution, target and factorization residuals")
    smp = sub.add_parser("sample", help="run Metropolised independence chains on device draws")
    for p in (sim, smp):
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--cutoff", type=int, help="per-source photon cutoff (overrides circuit.cutoff)")
        p.add_argument("--output", help="output directory (overrides config output)")
    smp.add_argument("--seed", type=int, help="master seed (overrides sampler.master_seed)")
    smp.add_argument("--samples", type=int, help="retained samples per chain")
    smp.add_argument("--burn-in", type=int, help="discarded steps per chain")

    ver = sub.add_parser("verify", help="run the numerical identity suites")
    ver.add_argument("--suite", action="append", help=f"suite(s) to run, comma separated: {', '.join(SUITES)}")
    ver.add_argument("--output", help="directory for the report files")

    dec = sub.add_parser("decompose", help="Bloch-Messiah factors of a symplectic matrix file")
    dec.add_argument("matrix", help="2M x 2M matrix in the plain-text matrix format")
    dec.add_argument("--output", help="directory for the report files")
    return parser


COMMANDS = {"simulate": cmd_simulate, "sample": cmd_sample, "verify": cmd_verify, "decompose": cmd_decompose}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
