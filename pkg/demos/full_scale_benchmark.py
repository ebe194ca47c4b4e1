"""Opt-in long-running benchmark: the N_CUT / M_D budget study at 64 qubits.

Not part of the test suite; at the default settings this takes hours.
Generate the input first (needs pyscf):

    python tools/make_fixtures.py --large nh3_ccpcvdz.fcidump
    python demos/full_scale_benchmark.py --fcidump nh3_ccpcvdz.fcidump --out bench/

For every N_CUT it writes ``md_sweep_ncut<N>.csv`` (correlation energy vs
M_D) with a JSON manifest.  With the largest M_D it also writes the entropy
trace and a fixed-parameter replay over N_CUT.  Shrink ``--md-values``,
``--ncut-values`` and ``--max-iter`` for a quick smoke run.
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from sparse_ucc import (
    AnsatzObjective,
    OptimizerSettings,
    TruncationPolicy,
    UccsdProblem,
    entropy_trace,
    md_convergence_sweep,
    minimize,
    read_fcidump,
    replay_vs_ncut,
)
from sparse_ucc.cli import _int_list, write_atomic

log = logging.getLogger("benchmark")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--fcidump", type=Path, required=True)
    parser.add_argument("--out", type=Path, default=Path("bench"))
    parser.add_argument("--md-values", type=_int_list, default=[500, 1000, 2000, 3000, 4000, 5000])
    parser.add_argument("--ncut-values", type=_int_list, default=[1000, 2000, 3000, 4000, 5000])
    parser.add_argument("--n-max", type=int, default=8000)
    parser.add_argument("--max-iter", type=int, default=200)
    parser.add_argument("--gradient", choices=("finite_difference", "adjoint"), default="adjoint")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    args.out.mkdir(parents=True, exist_ok=True)
    store = read_fcidump(args.fcidump)
    problem = UccsdProblem.from_store(store)
    settings = OptimizerSettings(max_iterations=args.max_iter, gradient=args.gradient, workers=args.workers)
    log.info("%d orbitals, %d pool operators, HF %.10f", store.n_orbitals, len(problem.pool), problem.hf_energy)

    for n_cut in args.ncut_values:
        policy = TruncationPolicy(n_cut, max(n_cut, args.n_max))
        sweep = md_convergence_sweep(problem, args.md_values, policy, settings, workers=args.workers)
        write_atomic(args.out / f"md_sweep_ncut{n_cut}.csv", sweep.to_csv())
        write_atomic(args.out / f"md_sweep_ncut{n_cut}.json", sweep.manifest())
        log.info("n_cut=%d done: %s", n_cut, sweep.column("correlation_energy"))

    # entropy and replay use parameters optimized at the largest M_D and N_CUT
    n_cut = max(args.ncut_values)
    policy = TruncationPolicy(n_cut, max(n_cut, args.n_max))
    ansatz = problem.ansatz(max(args.md_values))
    result = minimize(ansatz.thetas, AnsatzObjective(store, problem.reference, ansatz, policy), settings)
    optimized = ansatz.with_thetas(result.theta)
    write_atomic(args.out / "params.json", optimized.to_json())

    trace = entropy_trace(problem.reference, optimized, policy)
    write_atomic(args.out / "entropy_trace.csv", trace.to_csv())
    replay = replay_vs_ncut(problem.reference, optimized, args.ncut_values, store, n_max_rule=lambda n: max(n, args.n_max))
    write_atomic(args.out / "replay.csv", replay.to_csv())
    write_atomic(args.out / "replay.json", replay.manifest())


if __name__ == "__main__":
    main()
