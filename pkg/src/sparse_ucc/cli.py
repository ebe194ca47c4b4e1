"""Command-line entry point: ``sparse-ucc <command> --fcidump FILE ...``.

Exit status is 0 on success, 1 on any error and 2 when ``optimize`` stops
at the iteration limit (its outputs are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .ansatz import OrderedAnsatz, UccsdProblem, apply_ansatz
from .diagnostics import entropy_trace, md_convergence_sweep, replay_vs_ncut
from .fcidump import read_fcidump, window_orbitals
from .hamiltonian import BasisTooLarge, expectation_energy, fci_ground_energy
from .optimizer import AnsatzObjective, OptimizationError, OptimizerSettings, minimize
from .wavefunction import TruncationPolicy

log = logging.getLogger("sparse_ucc")


class CliError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    fcidump_path: Path
    n_cut: int | None = None
    n_max: int | None = None
    m_d: int = 0
    max_orbitals: int | None = None
    settings: OptimizerSettings = OptimizerSettings()
    params_in: Path | None = None
    params_out: Path | None = None
    report: Path | None = None
    trace: Path | None = None

    def __post_init__(self) -> None:
        if self.n_cut is not None and self.n_max is not None and self.n_cut > self.n_max:
            raise CliError(f"--n-cut {self.n_cut} exceeds --n-max {self.n_max}")
        if self.max_orbitals is not None and not 1 <= self.max_orbitals <= 32:
            raise CliError("--max-orbitals must be between 1 and 32")
        if self.m_d < 0:
            raise CliError("--m-d must be non-negative")

    @property
    def policy(self) -> TruncationPolicy:
        if self.n_cut is None and self.n_max is None:
            return TruncationPolicy.unlimited()
        n_cut = self.n_cut if self.n_cut is not None else self.n_max
        n_max = self.n_max if self.n_max is not None else self.n_cut
        return TruncationPolicy(n_cut, n_max)


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


def _load_store(cfg: RunConfig):
    try:
        store = read_fcidump(cfg.fcidump_path)
    except OSError as exc:
        raise CliError(f"cannot read {cfg.fcidump_path}: {exc.strerror or exc}") from None
    if cfg.max_orbitals is not None:
        if cfg.max_orbitals > store.n_orbitals:
            raise CliError(f"--max-orbitals {cfg.max_orbitals} exceeds NORB={store.n_orbitals}")
        store = window_orbitals(store, cfg.max_orbitals)
    return store


def _load_params(path: Path) -> OrderedAnsatz:
    try:
        return OrderedAnsatz.from_json(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"malformed parameter file {path}: {exc}") from None


def match_parameters(skeleton: OrderedAnsatz, given: OrderedAnsatz) -> OrderedAnsatz:
    """Copy parameters from ``given`` onto ``skeleton``'s order; operator sets must agree."""
    theta = {}
    for f in given:
        if f.op in theta:
            raise CliError(f"operator {f.op} appears twice in the parameter file")
        theta[f.op] = f.theta
    wanted = {f.op for f in skeleton}
    for f in given:
        if f.op not in wanted:
            raise CliError(f"operator {f.op} in the parameter file is not part of the configured ansatz")
    for f in skeleton:
        if f.op not in theta:
            raise CliError(f"configured operator {f.op} is missing from the parameter file")
    return skeleton.with_thetas([theta[f.op] for f in skeleton])


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_optimize(cfg: RunConfig) -> int:
    store = _load_store(cfg)
    problem = UccsdProblem.from_store(store)
    ansatz = problem.ansatz(cfg.m_d)
    if cfg.params_in is not None:
        ansatz = match_parameters(ansatz, _load_params(cfg.params_in))
    ctx = AnsatzObjective(store, problem.reference, ansatz, cfg.policy)
    log.info("optimizing %d parameters (%d doubles)", len(ansatz), ansatz.n_doubles)
    result = minimize(ansatz.thetas, ctx, cfg.settings, callback=lambda r: log.info("%s", r))
    final = ansatz.with_thetas(result.theta)
    report = expectation_energy(apply_ansatz(problem.reference, final, cfg.policy), store, problem.reference)
    payload = asdict(report) | {
        "hf_energy": problem.hf_energy,
        "status": result.status,
        "iterations": result.iterations,
        "n_parameters": len(final),
    }
    _emit(cfg.report, json.dumps(payload, indent=2) + "\n")
    if cfg.trace is not None:
        write_atomic(cfg.trace, result.trace.to_csv())
    if cfg.params_out is not None:
        write_atomic(cfg.params_out, final.to_json())
    return 2 if result.status == "max_iterations" else 0


def cmd_replay(cfg: RunConfig, ncut_values: Sequence[int]) -> int:
    if cfg.params_in is None:
        raise CliError("replay needs --params-in")
    store = _load_store(cfg)
    problem = UccsdProblem.from_store(store)
    ansatz = match_parameters(problem.ansatz(cfg.m_d), _load_params(cfg.params_in))
    rule = cfg.n_max if cfg.n_max is not None else "same"
    sweep = replay_vs_ncut(problem.reference, ansatz, ncut_values, store, rule)
    _emit(cfg.trace, sweep.to_csv())
    if cfg.report is not None:
        write_atomic(cfg.report, sweep.manifest())
    return 0


def cmd_entropy_trace(cfg: RunConfig) -> int:
    store = _load_store(cfg)
    problem = UccsdProblem.from_store(store)
    ansatz = problem.ansatz(cfg.m_d)
    if cfg.params_in is not None:
        ansatz = match_parameters(ansatz, _load_params(cfg.params_in))
    sweep = entropy_trace(problem.reference, ansatz, cfg.policy)
    _emit(cfg.trace, sweep.to_csv())
    if cfg.report is not None:
        write_atomic(cfg.report, sweep.manifest())
    return 0


def cmd_fci(cfg: RunConfig) -> int:
    store = _load_store(cfg)
    try:
        energy = fci_ground_energy(store, store.n_alpha, store.n_beta)
    except BasisTooLarge as exc:
        raise CliError(f"FCI refused: dimension {exc.dimension} exceeds the limit of {exc.limit}") from None
    _emit(cfg.report, json.dumps({"fci_energy": energy}, indent=2) + "\n")
    return 0


def cmd_mp2(cfg: RunConfig) -> int:
    store = _load_store(cfg)
    problem = UccsdProblem.from_store(store)
    payload = {"hf_energy": problem.hf_energy, "mp2_correlation_energy": problem.mp2.energy}
    _emit(cfg.report, json.dumps(payload, indent=2) + "\n")
    if cfg.params_out is not None:
        write_atomic(cfg.params_out, problem.ansatz(cfg.m_d).to_json())
    return 0


def cmd_sweep_md(cfg: RunConfig, md_values: Sequence[int], workers: int) -> int:
    store = _load_store(cfg)
    problem = UccsdProblem.from_store(store)
    sweep = md_convergence_sweep(problem, md_values, cfg.policy, cfg.settings, workers=workers)
    _emit(cfg.trace, sweep.to_csv())
    if cfg.report is not None:
        write_atomic(cfg.report, sweep.manifest())
    return 0


def cmd_info(cfg: RunConfig) -> int:
    from math import comb

    store = _load_store(cfg)
    problem = UccsdProblem.from_store(store, check_canonical=False)
    payload = {
        "n_orbitals": store.n_orbitals,
        "n_electrons": store.n_electrons,
        "n_alpha": store.n_alpha,
        "n_beta": store.n_beta,
        "core_energy": store.core_energy,
        "hf_energy": problem.hf_energy,
        "n_singles": sum(not op.is_double for op in problem.pool),
        "n_doubles": sum(op.is_double for op in problem.pool),
        "n_determinants": comb(store.n_orbitals, store.n_alpha) * comb(store.n_orbitals, store.n_beta),
    }
    _emit(cfg.report, json.dumps(payload, indent=2) + "\n")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fcidump", required=True, type=Path)
    common.add_argument("--n-cut", type=int)
    common.add_argument("--n-max", type=int)
    common.add_argument("--m-d", type=int, default=0, help="double factors kept (0 = all)")
    common.add_argument("--max-orbitals", type=int, help="keep only the lowest spatial orbitals")
    common.add_argument("--max-iter", type=int, default=200)
    common.add_argument("--grad-step", type=float, default=1e-4)
    common.add_argument("--tol-energy", type=float, default=1e-8)
    common.add_argument("--tol-grad", type=float, default=1e-6)
    common.add_argument("--gradient", choices=("finite_difference", "adjoint"), default="finite_difference")
    common.add_argument("--params-in", type=Path)
    common.add_argument("--params-out", type=Path)
    common.add_argument("--report", type=Path)
    common.add_argument("--trace", type=Path)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="sparse-ucc", description="Sparse-wavefunction factorized UCCSD solver.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("optimize", parents=[common], help="optimize the ansatz parameters")
    rp = sub.add_parser("replay", parents=[common], help="fixed-parameter energies vs N_CUT")
    rp.add_argument("--ncut-list", type=_int_list, required=True)
    sub.add_parser("entropy-trace", parents=[common], help="entropy after each factor")
    sub.add_parser("fci", parents=[common], help="exact ground-state energy (small systems)")
    sub.add_parser("mp2", parents=[common], help="MP2 energy and initial parameters")
    sw = sub.add_parser("sweep-md", parents=[common], help="optimized energy vs number of doubles")
    sw.add_argument("--md-values", type=_int_list, required=True)
    sub.add_parser("info", parents=[common], help="system summary")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        settings = OptimizerSettings(
            gradient_step=args.grad_step,
            energy_tolerance=args.tol_energy,
            gradient_tolerance=args.tol_grad,
            max_iterations=args.max_iter,
            gradient=args.gradient,
            workers=args.workers,
        )
        cfg = RunConfig(
            fcidump_path=args.fcidump,
            n_cut=args.n_cut,
            n_max=args.n_max,
            m_d=args.m_d,
            max_orbitals=args.max_orbitals,
            settings=settings,
            params_in=args.params_in,
            params_out=args.params_out,
            report=args.report,
            trace=args.trace,
        )
        if args.command == "optimize":
            return cmd_optimize(cfg)
        if args.command == "replay":
            return cmd_replay(cfg, args.ncut_list)
        if args.command == "entropy-trace":
            return cmd_entropy_trace(cfg)
        if args.command == "fci":
            return cmd_fci(cfg)
        if args.command == "mp2":
            return cmd_mp2(cfg)
        if args.command == "sweep-md":
            return cmd_sweep_md(cfg, args.md_values, args.workers)
        return cmd_info(cfg)
    except (CliError, OptimizationError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"sparse-ucc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
