"""Factorized UCCSD: operator pool, MP2 start, ordering and factor application.

Each factor ``exp(theta (A - A^+))`` acts on a determinant pair
``{D, Dbar}`` with ``A|D> = p|Dbar>`` as a plane rotation

    c_D    <- cos(theta) c_D    - p sin(theta) c_Dbar
    c_Dbar <- cos(theta) c_Dbar + p sin(theta) c_D

and leaves determinants on which neither ``A`` nor ``A^+`` acts untouched,
so a factor costs one pass over the stored determinants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .determinant import (
    Determinant,
    ExcitationOperator,
    hartree_fock_reference,
    key_bit,
    string_phase,
)
from .fcidump import IntegralStore, OrbitalEnergies, orbital_energies
from .hamiltonian import reference_energy, spin_orbital_integrals
from .wavefunction import (
    DROP_THRESHOLD,
    SparseWavefunction,
    TruncationPolicy,
    from_reference,
    truncate_arrays,
)


class DegenerateOrbitalsError(ValueError):
    pass


@dataclass(frozen=True)
class UccFactor:
    op: ExcitationOperator
    theta: float
    pool_index: int

    def to_dict(self) -> dict:
        return {
            "kind": self.op.kind,
            "i": self.op.i,
            "j": self.op.j,
            "a": self.op.a,
            "b": self.op.b,
            "theta": float(self.theta),
            "pool_index": self.pool_index,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> UccFactor:
        if d["kind"] == "single":
            op = ExcitationOperator.single(int(d["i"]), int(d["a"]))
        elif d["kind"] == "double":
            op = ExcitationOperator.double(int(d["i"]), int(d["j"]), int(d["a"]), int(d["b"]))
        else:
            raise ValueError(f"unknown factor kind {d['kind']!r}")
        return cls(op, float(d["theta"]), int(d.get("pool_index", -1)))


@dataclass(frozen=True)
class AnsatzConfig:
    m_d: int = 0  # number of doubles kept; 0 keeps all
    include_all_singles: bool = True

    def __post_init__(self) -> None:
        if self.m_d < 0:
            raise ValueError("m_d must be non-negative")
        if not self.include_all_singles:
            raise ValueError("all single factors are always included")


@dataclass(frozen=True)
class OrderedAnsatz:
    """Factors in application order: ``factors[0]`` acts first on the reference."""

    factors: tuple[UccFactor, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        seen_single = False
        for f in self.factors:
            if f.op.is_double and seen_single:
                raise ValueError("all double factors must precede the single factors")
            seen_single |= not f.op.is_double

    def __len__(self) -> int:
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([f.theta for f in self.factors], dtype=float)

    @property
    def operators(self) -> list[ExcitationOperator]:
        return [f.op for f in self.factors]

    @property
    def n_doubles(self) -> int:
        return sum(f.op.is_double for f in self.factors)

    @property
    def n_singles(self) -> int:
        return len(self.factors) - self.n_doubles

    def with_thetas(self, thetas: Sequence[float]) -> OrderedAnsatz:
        thetas = np.asarray(thetas, dtype=float)
        if thetas.shape != (len(self.factors),):
            raise ValueError(f"expected {len(self.factors)} parameters, got {thetas.shape}")
        return OrderedAnsatz(tuple(replace(f, theta=float(t)) for f, t in zip(self.factors, thetas)))

    def to_json(self) -> str:
        return json.dumps([f.to_dict() for f in self.factors], indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> OrderedAnsatz:
        data = json.loads(text)
        if isinstance(data, dict):
            data = data["factors"]
        return cls(tuple(UccFactor.from_dict(d) for d in data))


def build_pool(n_orbitals: int, reference: Determinant) -> list[ExcitationOperator]:
    """All Sz-conserving spin-orbital singles, then all canonical doubles."""
    n = 2 * n_orbitals
    occ = [s for s in range(n) if reference.is_occupied(s)]
    vir = [s for s in range(n) if not reference.is_occupied(s)]
    pool = [ExcitationOperator.single(i, a) for i in occ for a in vir if i % 2 == a % 2]
    for x, i in enumerate(occ):
        for j in occ[x + 1 :]:
            for y, a in enumerate(vir):
                for b in vir[y + 1 :]:
                    if i % 2 + j % 2 == a % 2 + b % 2:
                        pool.append(ExcitationOperator.double(i, j, a, b))
    return pool


@dataclass(frozen=True)
class Mp2Result:
    amplitudes: dict[ExcitationOperator, float]
    energy: float  # second-order correlation energy, hartree


def mp2_amplitudes(
    store: IntegralStore,
    eps: OrbitalEnergies,
    reference: Determinant,
    pool: Iterable[ExcitationOperator] | None = None,
) -> Mp2Result:
    """First-order doubles amplitudes ``<ij||ab> / (e_i + e_j - e_a - e_b)``.

    Singles get zero.  The returned energy is the quarter-sum of
    ``|<ij||ab>|^2 / Delta`` over every spin-orbital quadruple, computed
    independently of the canonical amplitude list.
    """
    ints = spin_orbital_integrals(store)
    e = np.asarray(eps.eps)
    if pool is None:
        pool = build_pool(store.n_orbitals, reference)
    amps: dict[ExcitationOperator, float] = {}
    for op in pool:
        if not op.is_double:
            amps[op] = 0.0
            continue
        i, j = op.occ
        a, b = op.vir
        delta = e[i] + e[j] - e[a] - e[b]
        if abs(delta) < 1e-10:
            raise DegenerateOrbitalsError(f"vanishing MP2 denominator for {i},{j}->{a},{b}")
        amps[op] = float(ints.anti(i, j, a, b)) / delta

    n = ints.n_spin_orbitals
    occ = np.array([s for s in range(n) if reference.is_occupied(s)])
    vir = np.array([s for s in range(n) if not reference.is_occupied(s)])
    energy = 0.0
    if len(occ) and len(vir):
        I, J, A, B = np.meshgrid(occ, occ, vir, vir, indexing="ij")
        num = ints.anti(I, J, A, B) ** 2
        delta = e[I] + e[J] - e[A] - e[B]
        live = num > 0.0
        energy = 0.25 * float(np.sum(num[live] / delta[live]))
    return Mp2Result(amps, energy)


def order_and_truncate(
    pool: Sequence[ExcitationOperator],
    amplitudes: Mapping[ExcitationOperator, float],
    config: AnsatzConfig = AnsatzConfig(),
) -> OrderedAnsatz:
    """Doubles by decreasing |initial amplitude| (top ``m_d``), then all singles at zero."""
    doubles = [(idx, op) for idx, op in enumerate(pool) if op.is_double]
    doubles.sort(key=lambda t: (-abs(amplitudes.get(t[1], 0.0)), t[0]))
    if config.m_d:
        doubles = doubles[: config.m_d]
    factors = [UccFactor(op, float(amplitudes.get(op, 0.0)), idx) for idx, op in doubles]
    factors += [UccFactor(op, 0.0, idx) for idx, op in enumerate(pool) if not op.is_double]
    return OrderedAnsatz(tuple(factors))


# ---------------------------------------------------------------------------
# factor application on key/amplitude arrays


@dataclass(frozen=True)
class CompiledOp:
    occ: tuple[int, ...]
    vir: tuple[int, ...]
    occ_bits: np.uint64
    vir_bits: np.uint64
    both: np.uint64 = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "both", self.occ_bits | self.vir_bits)


@lru_cache(maxsize=None)
def compile_op(op: ExcitationOperator) -> CompiledOp:
    occ_bits = sum(1 << key_bit(s) for s in op.occ)
    vir_bits = sum(1 << key_bit(s) for s in op.vir)
    return CompiledOp(op.occ, op.vir, np.uint64(occ_bits), np.uint64(vir_bits))


def rotate(
    keys: np.ndarray,
    amps: np.ndarray,
    op: CompiledOp,
    cos: float,
    sin: float,
    passive: float = 1.0,
    drop: float = DROP_THRESHOLD,
) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``cos * 1 + sin * (A - A^+)`` on active pairs, ``passive`` elsewhere.

    With ``(cos, sin) = (cos t, sin t)`` and ``passive=1`` this is the UCC
    factor; ``(0, 1, passive=0)`` gives the generator ``A - A^+`` itself.
    ``keys`` must be sorted; the output is sorted as well.  Entries below
    ``drop`` in magnitude are discarded.
    """
    masked = keys & op.both
    up = masked == op.occ_bits
    down = masked == op.vir_bits
    active = up | down
    if not active.any():
        if passive == 1.0:
            return keys, amps
        out = amps * passive
    else:
        out = amps * passive
        out[active] = amps[active] * cos
        k_up, k_down = keys[up], keys[down]
        p_up = string_phase(k_up, op.occ, op.vir[::-1])
        p_down = string_phase(k_down, op.vir, op.occ[::-1])
        partner = np.concatenate((k_up ^ op.both, k_down ^ op.both))
        contrib = np.concatenate((sin * p_up * amps[up], -sin * p_down * amps[down]))
        pos = np.searchsorted(keys, partner)
        found = pos < len(keys)
        found[found] = keys[pos[found]] == partner[found]
        out[pos[found]] += contrib[found]
        if not found.all():
            keys = np.concatenate((keys, partner[~found]))
            out = np.concatenate((out, contrib[~found]))
            order = np.argsort(keys, kind="stable")
            keys, out = keys[order], out[order]
    if drop > 0.0:
        keep = np.abs(out) >= drop
        if not keep.all():
            keys, out = keys[keep], out[keep]
    return keys, out


def apply_factor(wf: SparseWavefunction, factor: UccFactor) -> SparseWavefunction:
    """Exact action of ``exp(theta (A - A^+))`` on a sparse state."""
    if factor.theta == 0.0:
        return wf
    keys, amps = rotate(wf.keys, wf.amps, compile_op(factor.op), np.cos(factor.theta), np.sin(factor.theta))
    return SparseWavefunction(keys, amps, presorted=True)


def propagate(
    keys: np.ndarray,
    amps: np.ndarray,
    ops: Sequence[CompiledOp],
    thetas: Sequence[float],
    policy: TruncationPolicy,
    start: int = 0,
):
    """Apply ``ops[start:]`` with truncation after every factor; yields each state.

    Yields ``(k, keys, amps, pre_keys, pre_amps, scale)`` after factor ``k``,
    where ``pre_*`` is the rotated state before truncation and ``scale`` is
    the renormalization factor (``None`` when the trigger did not fire).
    """
    for k in range(start, len(ops)):
        theta = thetas[k]
        if theta != 0.0:
            pre_keys, pre_amps = rotate(keys, amps, ops[k], np.cos(theta), np.sin(theta))
        else:
            pre_keys, pre_amps = keys, amps
        keys, amps, scale = truncate_arrays(pre_keys, pre_amps, policy)
        yield k, keys, amps, pre_keys, pre_amps, scale


def apply_ansatz(
    reference: Determinant,
    ansatz: OrderedAnsatz,
    policy: TruncationPolicy | None = None,
) -> SparseWavefunction:
    """Reference state evolved by every factor in order, truncating after each."""
    policy = policy or TruncationPolicy.unlimited()
    wf = from_reference(reference)
    keys, amps = wf.keys, wf.amps
    ops = [compile_op(op) for op in ansatz.operators]
    for _, keys, amps, *_ in propagate(keys, amps, ops, ansatz.thetas, policy):
        pass
    return SparseWavefunction(keys, amps, presorted=True)


@dataclass
class UccsdProblem:
    """Everything derived from the integrals before optimization starts."""

    store: IntegralStore
    reference: Determinant
    eps: OrbitalEnergies
    pool: list[ExcitationOperator]
    mp2: Mp2Result

    @classmethod
    def from_store(cls, store: IntegralStore, check_canonical: bool = True) -> UccsdProblem:
        ref = hartree_fock_reference(store.n_orbitals, store.n_alpha, store.n_beta)
        eps = orbital_energies(store, ref, check_canonical=check_canonical)
        pool = build_pool(store.n_orbitals, ref)
        return cls(store, ref, eps, pool, mp2_amplitudes(store, eps, ref, pool))

    @property
    def hf_energy(self) -> float:
        return reference_energy(self.store, self.reference)

    def ansatz(self, m_d: int = 0) -> OrderedAnsatz:
        return order_and_truncate(self.pool, self.mp2.amplitudes, AnsatzConfig(m_d=m_d))
