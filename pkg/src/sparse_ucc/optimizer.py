"""Variational minimization of the factorized UCC energy.

The objective is the Rayleigh-quotient energy of the truncated ansatz state.
Gradients come either from central differences (default) or from a reverse
pass through the factor sequence ("adjoint"), which differentiates the same
piecewise-smooth map exactly for a fixed set of truncation survivors.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .ansatz import OrderedAnsatz, compile_op, propagate, rotate
from .determinant import Determinant
from .fcidump import IntegralStore
from .hamiltonian import HamiltonianCache, connected_pairs, pair_elements
from .wavefunction import SparseWavefunction, TruncationPolicy

# above this many reachable determinants the adjoint pass skips the shared cache
REACH_CACHE_LIMIT = 20_000

STATUSES = ("converged_energy", "converged_gradient", "max_iterations")


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerSettings:
    gradient_step: float = 1e-4
    energy_tolerance: float = 1e-8
    gradient_tolerance: float = 1e-6
    max_iterations: int = 200
    gradient: str = "finite_difference"  # or "adjoint"
    workers: int = 1
    memory: int = 50  # L-BFGS history length

    def __post_init__(self) -> None:
        for name in ("gradient_step", "energy_tolerance", "gradient_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 1 or self.workers < 1 or self.memory < 1:
            raise ValueError("max_iterations, workers and memory must be positive")
        if self.gradient not in ("finite_difference", "adjoint"):
            raise ValueError(f"unknown gradient method {self.gradient!r}")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    energy: float
    gradient_norm: float
    n_det: int
    elapsed_seconds: float


@dataclass
class OptimizationTrace:
    records: list[TraceRecord] = field(default_factory=list)
    status: str = "max_iterations"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "energy", "gradient_norm", "n_det", "elapsed_seconds"])
        for r in self.records:
            w.writerow([r.iteration, repr(r.energy), repr(r.gradient_norm), r.n_det, f"{r.elapsed_seconds:.6f}"])
        return buf.getvalue()


@dataclass
class OptimizationResult:
    theta: np.ndarray
    energy: float
    trace: OptimizationTrace

    @property
    def status(self) -> str:
        return self.trace.status

    @property
    def iterations(self) -> int:
        return self.trace.records[-1].iteration if self.trace.records else 0


class AnsatzObjective:
    """Energy of the truncated ansatz state as a function of all parameters.

    Holds the fixed pieces (integrals, reference, factor order, truncation
    policy) and a Hamiltonian cache shared by every evaluation.
    """

    def __init__(
        self,
        store: IntegralStore,
        reference: Determinant,
        ansatz: OrderedAnsatz,
        policy: TruncationPolicy | None = None,
        hamiltonian: HamiltonianCache | None = None,
    ):
        self.store = store
        self.reference = reference
        self.ansatz = ansatz
        self.policy = policy or TruncationPolicy.unlimited()
        self.ops = [compile_op(op) for op in ansatz.operators]
        self.hamiltonian = hamiltonian or HamiltonianCache(store)
        self._ref_keys = np.array([reference.key], dtype=np.uint64)

    @property
    def n_params(self) -> int:
        return len(self.ops)

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        return theta

    def _final_state(self, theta: np.ndarray, start: int = 0, keys=None, amps=None):
        if keys is None:
            keys, amps = self._ref_keys, np.ones(1)
        for _, keys, amps, *_ in propagate(keys, amps, self.ops, theta, self.policy, start):
            pass
        return keys, amps

    def state(self, theta) -> SparseWavefunction:
        keys, amps = self._final_state(self._check(theta))
        return SparseWavefunction(keys, amps, presorted=True)

    def evaluate(self, theta) -> tuple[float, int]:
        """Total energy and determinant count of the final state."""
        keys, amps = self._final_state(self._check(theta))
        return self.hamiltonian.energy(keys, amps) + self.store.core_energy, len(keys)

    def __call__(self, theta) -> float:
        return self.evaluate(theta)[0]

    def finite_difference_gradient(self, theta, step: float = 1e-4, workers: int = 1) -> np.ndarray:
        """Central differences; each component restarts from the cached prefix state."""
        theta = self._check(theta)
        prefix = [(self._ref_keys, np.ones(1))]
        for _, keys, amps, *_ in propagate(self._ref_keys, np.ones(1), self.ops, theta, self.policy):
            prefix.append((keys, amps))

        def component(k: int) -> float:
            vals = []
            for sign in (1.0, -1.0):
                shifted = theta.copy()
                shifted[k] += sign * step
                keys, amps = self._final_state(shifted, start=k, keys=prefix[k][0], amps=prefix[k][1])
                vals.append(self.hamiltonian.energy(keys, amps))
            return (vals[0] - vals[1]) / (2.0 * step)

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                return np.array(list(pool.map(component, range(self.n_params))))
        return np.array([component(k) for k in range(self.n_params)])

    def adjoint_gradient(self, theta) -> tuple[float, np.ndarray, int]:
        """Energy, exact gradient and n_det from one forward and one reverse pass.

        The survivors of each truncation are held fixed.  Where a parameter
        sits at exactly zero and any move would push the count past N_MAX,
        this is the derivative of the untriggered branch; central differences
        see the triggered one.
        """
        theta = self._check(theta)
        # ``reach`` collects the determinants the derivative of the final state
        # can touch.  A factor at theta = 0 is the identity, so it only adds
        # the partners of the current state, not of every earlier direction.
        reach = self._ref_keys
        tape = []
        for k, keys, amps, pre_keys, pre_amps, scale in propagate(
            self._ref_keys, np.ones(1), self.ops, theta, self.policy
        ):
            tape.append((pre_keys, pre_amps, keys if scale is not None else None, scale))
            op = self.ops[k]
            if theta[k] != 0.0:
                reach = _expand(reach, op)
            reach = np.union1d(reach, _partners(pre_keys, op))
            if scale is not None:
                reach = np.intersect1d(reach, keys, assume_unique=True)
        reach = np.union1d(reach, keys)

        e_el = self.hamiltonian.energy(keys, amps)
        n2 = float(np.dot(amps, amps))
        psi = np.zeros(len(reach))
        psi[np.searchsorted(reach, keys)] = amps
        nu_keys = reach
        nu = 2.0 * (self._h_on(reach, keys, amps) - e_el * psi) / n2

        grad = np.zeros(self.n_params)
        for k in range(self.n_params - 1, -1, -1):
            pre_keys, pre_amps, kept, scale = tape[k]
            if kept is not None:
                _, a, _ = np.intersect1d(nu_keys, kept, assume_unique=True, return_indices=True)
                nu_keys, nu = nu_keys[a], nu[a] * scale
            op = self.ops[k]
            gk, gv = rotate(pre_keys, pre_amps, op, 0.0, 1.0, passive=0.0, drop=0.0)
            grad[k] = _sparse_dot(nu_keys, nu, gk, gv)
            if theta[k] != 0.0:
                nu_keys, nu = rotate(nu_keys, nu, op, np.cos(theta[k]), -np.sin(theta[k]), drop=0.0)
        return e_el + self.store.core_energy, grad, len(keys)

    def _h_on(self, rows: np.ndarray, keys: np.ndarray, amps: np.ndarray) -> np.ndarray:
        """(H psi) restricted to the sorted determinants ``rows``."""
        if len(rows) <= REACH_CACHE_LIMIT:
            _, universe, _, hx = self.hamiltonian.apply(keys, amps, cover=rows)
            return hx[np.searchsorted(universe, rows)]
        # large reach: only the rows x support block is needed
        out = np.zeros(len(rows))
        ints = self.hamiltonian.ints
        for i, j in connected_pairs(rows, keys):
            out += np.bincount(i, weights=pair_elements(rows[i], keys[j], ints) * amps[j], minlength=len(rows))
        return out


def _expand(keys: np.ndarray, op) -> np.ndarray:
    masked = keys & op.both
    active = (masked == op.occ_bits) | (masked == op.vir_bits)
    if not active.any():
        return keys
    return np.union1d(keys, keys[active] ^ op.both)


def _partners(keys: np.ndarray, op) -> np.ndarray:
    masked = keys & op.both
    active = (masked == op.occ_bits) | (masked == op.vir_bits)
    return np.unique(keys[active] ^ op.both)


def _sparse_dot(k1, v1, k2, v2) -> float:
    _, a, b = np.intersect1d(k1, k2, assume_unique=True, return_indices=True)
    return float(np.dot(v1[a], v2[b]))


def objective(theta, context: AnsatzObjective) -> float:
    """Total energy (hartree) of the ansatz with parameters ``theta``."""
    return context(theta)


def gradient(theta, context: AnsatzObjective, step: float = 1e-4, workers: int = 1) -> np.ndarray:
    """Central-difference gradient ``[E(t + h e_k) - E(t - h e_k)] / 2h``."""
    return context.finite_difference_gradient(theta, step, workers)


def _lbfgs_direction(g: np.ndarray, history: list[tuple[np.ndarray, np.ndarray, float]]) -> np.ndarray:
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(history):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if history:
        s, y, _ = history[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(history, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def minimize(
    initial_theta: Sequence[float],
    context: AnsatzObjective,
    settings: OptimizerSettings = OptimizerSettings(),
    callback: Callable[[TraceRecord], None] | None = None,
) -> OptimizationResult:
    """Quasi-Newton (L-BFGS, Armijo backtracking) minimization of ``context``.

    Stops when the energy decrease of an accepted step falls below
    ``energy_tolerance``, the gradient norm falls below
    ``gradient_tolerance``, or after ``max_iterations`` steps.
    """
    t0 = time.perf_counter()
    x = np.array(initial_theta, dtype=float)

    if settings.gradient == "adjoint":

        def value_grad(theta):
            e, g, n = context.adjoint_gradient(theta)
            return e, g, n

    else:

        def value_grad(theta):
            e, n = context.evaluate(theta)
            _finite(e, theta)
            return e, context.finite_difference_gradient(theta, settings.gradient_step, settings.workers), n

    trace = OptimizationTrace()

    def record(it: int, e: float, g: np.ndarray, n: int) -> None:
        rec = TraceRecord(it, e, float(np.linalg.norm(g)), n, time.perf_counter() - t0)
        trace.records.append(rec)
        if callback is not None:
            callback(rec)

    f, g, n = value_grad(x)
    _finite(f, x)
    record(0, f, g, n)
    history: list[tuple[np.ndarray, np.ndarray, float]] = []
    status = "max_iterations"
    for it in range(1, settings.max_iterations + 1):
        if np.linalg.norm(g) < settings.gradient_tolerance:
            status = "converged_gradient"
            break
        p = _lbfgs_direction(g, history)
        slope = float(np.dot(g, p))
        if slope >= 0.0:
            history.clear()
            p = -g
            slope = -float(np.dot(g, g))
        step = 1.0
        if not history:
            step = min(1.0, 0.1 / max(np.abs(p).max(), 1e-300))
        accepted = False
        for _ in range(60):
            x_new = x + step * p
            f_new, _ = context.evaluate(x_new)
            _finite(f_new, x_new)
            if f_new <= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            status = "converged_energy"  # no representable decrease left along p
            break
        f_new, g_new, n = value_grad(x_new)
        s, y = x_new - x, g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-16 * float(np.dot(y, y)) and sy > 0.0:
            history.append((s, y, 1.0 / sy))
            if len(history) > settings.memory:
                history.pop(0)
        decrease = f - f_new
        x, f, g = x_new, f_new, g_new
        record(it, f, g, n)
        if decrease < settings.energy_tolerance:
            status = "converged_energy"
            break
    else:
        if np.linalg.norm(g) < settings.gradient_tolerance:
            status = "converged_gradient"
    trace.status = status
    return OptimizationResult(x, f, trace)


def _finite(e: float, theta: np.ndarray) -> None:
    if not np.isfinite(e):
        raise OptimizationError(f"non-finite energy {e} at parameters {np.array2string(theta, threshold=20)}")
