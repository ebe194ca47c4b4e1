"""Slater-Condon matrix elements, Rayleigh-quotient energies and an FCI oracle."""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .determinant import (
    Determinant,
    bit_index,
    enumerate_sector,
    excitation_degree,
    hartree_fock_reference,
    lowest_bit,
    occupation_matrix,
    popcount,
    string_phase,
)
from .fcidump import IntegralStore
from .wavefunction import SparseWavefunction

FCI_MAX_DETERMINANTS = 40_000
_PAIR_BLOCK = 1 << 22  # max XOR-matrix entries materialized at once


class BasisTooLarge(ValueError):
    def __init__(self, dimension: int, limit: int):
        self.dimension = dimension
        self.limit = limit
        super().__init__(f"determinant space of dimension {dimension} exceeds the FCI limit of {limit}")


class SpinOrbitalIntegrals:
    """Spin-orbital view of an :class:`IntegralStore` (``s = 2p + sigma``).

    ``h[s, t]`` is the one-electron integral and :meth:`anti` the
    antisymmetrized two-electron integral <st||uv>.
    """

    def __init__(self, store: IntegralStore):
        m = store.n_orbitals
        n = 2 * m
        self.store = store
        self.n_spin_orbitals = n
        self.spatial = np.arange(n) // 2
        self.spin = np.arange(n) % 2
        self.eri = np.asarray(store.dense_eri)
        same = self.spin[:, None] == self.spin[None, :]
        self.h = np.where(same, store.one_electron[np.ix_(self.spatial, self.spatial)], 0.0)
        s = np.arange(n)
        # diagonal coupling J[s, t] = <st||st>
        self.coupling = self.anti(s[:, None], s[None, :], s[:, None], s[None, :])
        # F[t, s, u] = <tu||su>, used for single-excitation elements
        t3, s3, u3 = np.meshgrid(s, s, s, indexing="ij")
        self.single_kernel = self.anti(t3, u3, s3, u3)

    def anti(self, s, t, u, v):
        """<st||uv> = (su|tv)[spins s=u, t=v] - (sv|tu)[spins s=v, t=u]."""
        sp_, sg = self.spatial, self.spin
        direct = np.where(
            (sg[s] == sg[u]) & (sg[t] == sg[v]), self.eri[sp_[s], sp_[u], sp_[t], sp_[v]], 0.0
        )
        exchange = np.where(
            (sg[s] == sg[v]) & (sg[t] == sg[u]), self.eri[sp_[s], sp_[v], sp_[t], sp_[u]], 0.0
        )
        return direct - exchange


@lru_cache(maxsize=16)
def spin_orbital_integrals(store: IntegralStore) -> SpinOrbitalIntegrals:
    return SpinOrbitalIntegrals(store)


def diagonal_elements(keys: np.ndarray, ints: SpinOrbitalIntegrals) -> np.ndarray:
    occ = occupation_matrix(keys, ints.n_spin_orbitals).astype(float)
    one = occ @ np.diag(ints.h)
    two = 0.5 * np.einsum("ns,st,nt->n", occ, ints.coupling, occ)
    return one + two


def pair_elements(k1: np.ndarray, k2: np.ndarray, ints: SpinOrbitalIntegrals) -> np.ndarray:
    """<D1|H|D2> (electronic part only) for aligned key arrays of degree <= 2."""
    x = k1 ^ k2
    degree = popcount(x) // 2
    out = np.zeros(len(k1))

    d0 = degree == 0
    if d0.any():
        out[d0] = diagonal_elements(k1[d0], ints)

    d1 = degree == 1
    if d1.any():
        a, b, xx = k1[d1], k2[d1], x[d1]
        t = bit_index(a & xx)  # occupied in D1 only
        s = bit_index(b & xx)  # occupied in D2 only
        gamma = string_phase(b, [s], [t])
        occ2 = occupation_matrix(b, ints.n_spin_orbitals)
        two = np.einsum("nu,nu->n", ints.single_kernel[t, s], occ2)
        out[d1] = gamma * (ints.h[t, s] + two)

    d2 = degree == 2
    if d2.any():
        a, b, xx = k1[d2], k2[d2], x[d2]
        ann = b & xx
        cre = a & xx
        lo, hi = bit_index(lowest_bit(ann)), bit_index(ann ^ lowest_bit(ann))
        s, u = np.minimum(lo, hi), np.maximum(lo, hi)
        lo, hi = bit_index(lowest_bit(cre)), bit_index(cre ^ lowest_bit(cre))
        t, v = np.minimum(lo, hi), np.maximum(lo, hi)
        # D1 = gamma * a+_t a+_v a_u a_s D2
        gamma = string_phase(b, [s, u], [v, t])
        out[d2] = gamma * ints.anti(t, v, s, u)
    return out


def connected_pairs(rows: np.ndarray, cols: np.ndarray):
    """Yield ``(i, j)`` index blocks of all pairs with excitation degree <= 2.

    Blocks come in row order, so reductions over them are deterministic.
    """
    step = max(1, _PAIR_BLOCK // max(len(cols), 1))
    for start in range(0, len(rows), step):
        block = rows[start : start + step]
        close = popcount(block[:, None] ^ cols[None, :]) <= 4
        i, j = np.nonzero(close)
        yield i + start, j


def _check_sector(d1: Determinant, d2: Determinant) -> None:
    if (d1.n_alpha, d1.n_beta) != (d2.n_alpha, d2.n_beta):
        raise ValueError(f"electron counts differ: {d1} vs {d2}")


def matrix_element(d1: Determinant, d2: Determinant, store: IntegralStore) -> float:
    """Slater-Condon element <d1|H|d2> in hartree, excluding the core energy."""
    _check_sector(d1, d2)
    if excitation_degree(d1, d2) > 2:
        return 0.0
    k1 = np.array([d1.key], dtype=np.uint64)
    k2 = np.array([d2.key], dtype=np.uint64)
    return float(pair_elements(k1, k2, spin_orbital_integrals(store))[0])


def build_hamiltonian(keys: np.ndarray, store: IntegralStore) -> sp.csr_matrix:
    """Sparse electronic Hamiltonian over the determinants ``keys`` (in that order)."""
    ints = spin_orbital_integrals(store)
    rows, cols, vals = [], [], []
    for i, j in connected_pairs(keys, keys):
        rows.append(i)
        cols.append(j)
        vals.append(pair_elements(keys[i], keys[j], ints))
    n = len(keys)
    if not rows:
        return sp.csr_matrix((n, n))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


@dataclass(frozen=True)
class EnergyReport:
    total_energy: float
    correlation_energy: float
    norm: float
    n_det: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def reference_energy(store: IntegralStore, reference: Determinant | None = None) -> float:
    """Total energy (core included) of a single determinant, by default the aufbau one."""
    if reference is None:
        reference = hartree_fock_reference(store.n_orbitals, store.n_alpha, store.n_beta)
    keys = np.array([reference.key], dtype=np.uint64)
    return float(diagonal_elements(keys, spin_orbital_integrals(store))[0]) + store.core_energy


def _block_sum(keys, amps, ints, rows_slice) -> float:
    rows = keys[rows_slice]
    total = 0.0
    for i, j in connected_pairs(rows, keys):
        i = i + rows_slice.start
        h = pair_elements(keys[i], keys[j], ints)
        total += float(np.dot(amps[i] * amps[j], h))
    return total


def electronic_energy(wf: SparseWavefunction, store: IntegralStore, workers: int = 1) -> float:
    """Rayleigh quotient of the electronic Hamiltonian by the pairwise loop.

    Pairs whose keys differ in more than four spin orbitals are skipped.  Row
    blocks have a fixed size and partial sums are reduced in block order, so
    the result does not depend on ``workers``.
    """
    keys, amps = wf.keys, wf.amps
    n2 = float(np.dot(amps, amps))
    if len(keys) == 0 or n2 == 0.0:
        raise ValueError("energy of an empty or zero-norm wavefunction is undefined")
    ints = spin_orbital_integrals(store)
    step = max(1, _PAIR_BLOCK // len(keys))
    blocks = [slice(s, min(s + step, len(keys))) for s in range(0, len(keys), step)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            partial = list(pool.map(lambda b: _block_sum(keys, amps, ints, b), blocks))
    else:
        partial = [_block_sum(keys, amps, ints, b) for b in blocks]
    return float(np.sum(partial)) / n2


def expectation_energy(
    wf: SparseWavefunction,
    store: IntegralStore,
    reference: Determinant | None = None,
    workers: int = 1,
) -> EnergyReport:
    """Energy report for ``wf``; correlation energy is relative to ``reference``."""
    total = store.core_energy + electronic_energy(wf, store, workers)
    nrm = float(np.sqrt(np.dot(wf.amps, wf.amps)))
    return EnergyReport(total, total - reference_energy(store, reference), nrm, wf.n_det)


def fci_ground_energy(
    store: IntegralStore, n_alpha: int, n_beta: int, max_determinants: int = FCI_MAX_DETERMINANTS
) -> float:
    """Lowest eigenvalue (plus core energy) of H in the full (n_alpha, n_beta) sector."""
    m = store.n_orbitals
    dim = comb(m, n_alpha) * comb(m, n_beta)
    if dim > max_determinants:
        raise BasisTooLarge(dim, max_determinants)
    keys = enumerate_sector(m, n_alpha, n_beta)
    ham = build_hamiltonian(keys, store)
    if dim <= 1500:
        e0 = np.linalg.eigvalsh(ham.toarray())[0]
    else:
        diag = ham.diagonal()
        v0 = np.zeros(dim)
        v0[np.argmin(diag)] = 1.0
        v0 += 1e-3  # keep overlap with the ground state generic
        e0 = spla.eigsh(ham, k=1, which="SA", v0=v0, tol=1e-13, maxiter=20 * dim)[0][0]
    return float(e0) + store.core_energy


class HamiltonianCache:
    """Sparse H over a growing, sorted set of determinants.

    Used by the optimizer, where the same determinants recur across energy
    evaluations.  Rows/columns are kept in canonical key order; since states
    are scattered onto that order with exact zeros elsewhere, energies do not
    depend on which extra determinants happen to be cached.  Once the cached
    set would pass ``max_size`` it is dropped and rebuilt from the request.
    """

    def __init__(self, store: IntegralStore, max_size: int = 200_000):
        self.store = store
        self.max_size = max_size
        self.ints = spin_orbital_integrals(store)
        self._lock = threading.Lock()
        self._coo = ([], [], [])  # key-valued rows, cols, values
        self._state = (np.zeros(0, dtype=np.uint64), sp.csr_matrix((0, 0)))

    @property
    def keys(self) -> np.ndarray:
        return self._state[0]

    @property
    def matrix(self) -> sp.csr_matrix:
        return self._state[1]

    def ensure(self, keys: np.ndarray) -> tuple[np.ndarray, sp.csr_matrix]:
        """Make sure every key is covered; returns a consistent (keys, matrix) snapshot."""
        state = self._state
        if _all_present(state[0], keys):
            return state
        with self._lock:
            known = self._state[0]
            new = np.setdiff1d(keys, known)
            if len(new) == 0:
                return self._state
            if len(known) + len(new) > self.max_size:
                self._coo = ([], [], [])
                known, new = known[:0], np.unique(keys)
            rows, cols, vals = self._coo
            for i, j in connected_pairs(new, known):
                h = pair_elements(new[i], known[j], self.ints)
                rows += [new[i], known[j]]
                cols += [known[j], new[i]]
                vals += [h, h]
            for i, j in connected_pairs(new, new):
                rows.append(new[i])
                cols.append(new[j])
                vals.append(pair_elements(new[i], new[j], self.ints))
            universe = np.union1d(known, new)
            r = np.searchsorted(universe, np.concatenate(rows))
            c = np.searchsorted(universe, np.concatenate(cols))
            n = len(universe)
            mat = sp.csr_matrix((np.concatenate(vals), (r, c)), shape=(n, n))
            self._state = (universe, mat)
            return self._state

    def apply(self, keys: np.ndarray, amps: np.ndarray, cover: np.ndarray | None = None):
        """Electronic energy of (keys, amps) and the vector H psi over the cached set.

        ``cover`` lists extra determinants on which H psi must be exact.
        Returns ``(energy, universe_keys, x, hx)`` with ``x`` the state
        scattered onto the universe.
        """
        need = keys if cover is None else np.union1d(keys, cover)
        universe, mat = self.ensure(need)
        idx = np.searchsorted(universe, keys)
        x = np.zeros(len(universe))
        x[idx] = amps
        hx = mat @ x
        # reduce over the state's own entries so the sum order ignores the cache size
        n2 = float(np.dot(amps, amps))
        if n2 == 0.0:
            raise ValueError("energy of a zero-norm wavefunction is undefined")
        return float(np.dot(amps, hx[idx])) / n2, universe, x, hx

    def energy(self, keys: np.ndarray, amps: np.ndarray) -> float:
        return self.apply(keys, amps)[0]


def _all_present(sorted_keys: np.ndarray, keys: np.ndarray) -> bool:
    if len(sorted_keys) == 0:
        return len(keys) == 0
    pos = np.searchsorted(sorted_keys, keys)
    pos = np.minimum(pos, len(sorted_keys) - 1)
    return bool(np.all(sorted_keys[pos] == keys))
