"""Analysis sweeps: entropy per factor, energy vs. number of doubles, fixed-parameter replay."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .ansatz import OrderedAnsatz, UccsdProblem, apply_ansatz, compile_op, propagate
from .determinant import Determinant
from .fcidump import IntegralStore
from .hamiltonian import expectation_energy
from .optimizer import AnsatzObjective, OptimizerSettings, minimize
from .wavefunction import SparseWavefunction, TruncationPolicy, entropy, from_reference

NMaxRule = Union[int, str, Callable[[int], int]]


@dataclass
class SweepResult:
    axis: str
    columns: tuple[str, ...]
    points: list[dict] = field(default_factory=list)
    inputs: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([p[name] for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for p in self.points:
            w.writerow([repr(p[c]) if isinstance(p[c], float) else p[c] for c in self.columns])
        return buf.getvalue()

    def manifest(self) -> str:
        return json.dumps({"axis": self.axis, "inputs": self.inputs, "points": self.points}, indent=2) + "\n"


def _policy_dict(policy: TruncationPolicy) -> dict | None:
    return None if policy.is_unlimited else asdict(policy)


def entropy_trace(
    reference: Determinant,
    ansatz: OrderedAnsatz,
    policy: TruncationPolicy | None = None,
) -> SweepResult:
    """Entropy and determinant count after each factor (application plus truncation)."""
    policy = policy or TruncationPolicy.unlimited()
    wf = from_reference(reference)
    ops = [compile_op(op) for op in ansatz.operators]
    result = SweepResult(
        "factor_index",
        ("factor_index", "entropy", "n_det"),
        inputs={"n_factors": len(ansatz), "policy": _policy_dict(policy)},
    )
    for k, keys, amps, *_ in propagate(wf.keys, wf.amps, ops, ansatz.thetas, policy):
        state = SparseWavefunction(keys, amps, presorted=True)
        result.points.append({"factor_index": k + 1, "entropy": entropy(state), "n_det": len(keys)})
    return result


def _ansatz_with_doubles(problem: UccsdProblem, m_d: int) -> OrderedAnsatz:
    full = problem.ansatz(0)
    if m_d == 0:
        return OrderedAnsatz(tuple(f for f in full if not f.op.is_double))
    return problem.ansatz(m_d)


def md_convergence_sweep(
    problem: UccsdProblem,
    md_values: Sequence[int],
    policy: TruncationPolicy | None = None,
    settings: OptimizerSettings = OptimizerSettings(),
    workers: int = 1,
) -> SweepResult:
    """Optimized correlation energy for each number of retained doubles.

    Each point starts from the MP2 parameters.  Here ``0`` means no doubles
    at all (singles only), unlike :class:`AnsatzConfig` where 0 keeps all.
    """
    md_values = [int(m) for m in md_values]
    if any(b <= a for a, b in zip(md_values, md_values[1:])):
        raise ValueError("md_values must be strictly increasing")
    policy = policy or TruncationPolicy.unlimited()
    hf = problem.hf_energy

    def point(m_d: int) -> dict:
        ansatz = _ansatz_with_doubles(problem, m_d)
        ctx = AnsatzObjective(problem.store, problem.reference, ansatz, policy)
        res = minimize(ansatz.thetas, ctx, settings)
        return {
            "x": m_d,
            "correlation_energy": res.energy - hf,
            "status": res.status,
            "iterations": res.iterations,
        }

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            points = list(pool.map(point, md_values))
    else:
        points = [point(m) for m in md_values]
    return SweepResult(
        "m_d",
        ("x", "correlation_energy"),
        points,
        inputs={
            "md_values": md_values,
            "policy": _policy_dict(policy),
            "settings": asdict(settings),
            "hf_energy": hf,
        },
    )


def _n_max_for(n_cut: int, rule: NMaxRule) -> int:
    if callable(rule):
        n_max = int(rule(n_cut))
    elif rule == "same":
        n_max = n_cut
    elif isinstance(rule, (int, np.integer)):
        n_max = int(rule)
    else:
        raise ValueError(f"unsupported n_max rule {rule!r}")
    if n_max < n_cut:
        raise ValueError(f"n_max={n_max} is below n_cut={n_cut}")
    return n_max


def replay_vs_ncut(
    reference: Determinant,
    ansatz: OrderedAnsatz,
    ncut_values: Sequence[int],
    store: IntegralStore,
    n_max_rule: NMaxRule = "same",
) -> SweepResult:
    """Correlation energy of a fixed-parameter ansatz under different truncation budgets.

    ``n_max_rule`` is either a fixed N_MAX, ``"same"`` (N_MAX = N_CUT) or a
    callable mapping N_CUT to N_MAX.  No optimization happens here.
    """
    ncut_values = [int(n) for n in ncut_values]
    if any(b <= a for a, b in zip(ncut_values, ncut_values[1:])):
        raise ValueError("ncut_values must be strictly increasing")
    result = SweepResult(
        "n_cut",
        ("x", "correlation_energy"),
        inputs={
            "ncut_values": ncut_values,
            "n_max_rule": n_max_rule if isinstance(n_max_rule, (int, str)) else repr(n_max_rule),
            "thetas": [float(t) for t in ansatz.thetas],
        },
    )
    for n_cut in ncut_values:
        policy = TruncationPolicy(n_cut, _n_max_for(n_cut, n_max_rule))
        wf = apply_ansatz(reference, ansatz, policy)
        report = expectation_energy(wf, store, reference)
        result.points.append(
            {
                "x": n_cut,
                "n_max": policy.n_max,
                "correlation_energy": report.correlation_energy,
                "total_energy": report.total_energy,
                "n_det": report.n_det,
            }
        )
    return result
