from __future__ import annotations

import numpy as np
import pytest

import oracles
from conftest import random_store
from sparse_ucc.determinant import Determinant, enumerate_sector, hartree_fock_reference
from sparse_ucc.hamiltonian import (
    BasisTooLarge,
    HamiltonianCache,
    build_hamiltonian,
    electronic_energy,
    expectation_energy,
    fci_ground_energy,
    matrix_element,
    reference_energy,
)
from sparse_ucc.wavefunction import SparseWavefunction, from_reference


@pytest.mark.parametrize("m, n_alpha, n_beta", [(2, 1, 0), (3, 2, 1), (4, 2, 2), (4, 3, 1)])
def test_sparse_matrix_matches_oracle(m, n_alpha, n_beta):
    store = random_store(m, n_alpha + n_beta, seed=10 + m, ms2=n_alpha - n_beta)
    basis = oracles.sector_basis(m, n_alpha, n_beta)
    dense = oracles.dense_hamiltonian(store, basis)
    keys = np.array([oracles.to_determinant(b).key for b in basis], dtype=np.uint64)
    order = np.argsort(keys)
    mat = build_hamiltonian(keys[order], store).toarray()
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    np.testing.assert_allclose(mat[np.ix_(inv, inv)], dense, rtol=0, atol=1e-12)


def test_hermitian_and_sector_checks():
    store = random_store(3, 3, seed=1)
    d1, d2 = Determinant(0b011, 0b001), Determinant(0b101, 0b010)
    assert matrix_element(d1, d2, store) == matrix_element(d2, d1, store)
    with pytest.raises(ValueError):
        matrix_element(d1, Determinant(0b001, 0b011), store)


def test_far_pairs_vanish():
    store = random_store(4, 4, seed=2)
    assert matrix_element(Determinant(0b0011, 0b0011), Determinant(0b1100, 0b1100), store) == 0.0


@pytest.mark.parametrize("name", ["h2", "lih", "beh2", "nh3"])
def test_fci_and_hf_energies(name, manifest, molecule):
    store = molecule(name)
    ref = hartree_fock_reference(store.n_orbitals, store.n_alpha, store.n_beta)
    assert reference_energy(store, ref) == pytest.approx(manifest[name]["hf_energy"], abs=1e-10)
    assert fci_ground_energy(store, store.n_alpha, store.n_beta) == pytest.approx(
        manifest[name]["fci_energy"], abs=1e-9
    )


def test_fci_refuses_large_basis(molecule):
    with pytest.raises(BasisTooLarge) as err:
        fci_ground_energy(molecule("ch2o"), 8, 8)
    assert err.value.dimension == 245025


def test_rayleigh_quotient_is_scale_invariant():
    store = random_store(4, 4, seed=6)
    keys = enumerate_sector(4, 2, 2)
    rng = np.random.default_rng(0)
    amps = rng.normal(size=len(keys))
    e1 = electronic_energy(SparseWavefunction(keys, amps), store)
    e2 = electronic_energy(SparseWavefunction(keys, -3.0 * amps), store)
    assert e1 == pytest.approx(e2, abs=1e-12)
    dense = build_hamiltonian(keys, store).toarray()
    assert e1 == pytest.approx(amps @ dense @ amps / (amps @ amps), abs=1e-12)


def test_energy_of_reference_and_report():
    store = random_store(3, 2, seed=8)
    ref = hartree_fock_reference(3, 1, 1)
    report = expectation_energy(from_reference(ref), store, ref)
    assert report.correlation_energy == 0.0
    assert report.norm == 1.0 and report.n_det == 1


def test_workers_do_not_change_energy(molecule):
    store = molecule("lih")
    keys = enumerate_sector(store.n_orbitals, 2, 2)
    amps = np.random.default_rng(1).normal(size=len(keys))
    wf = SparseWavefunction(keys, amps)
    assert electronic_energy(wf, store, workers=1) == electronic_energy(wf, store, workers=4)


def test_cache_matches_direct_energy_regardless_of_history():
    store = random_store(4, 4, seed=9)
    keys = enumerate_sector(4, 2, 2)
    rng = np.random.default_rng(2)
    sub = np.sort(rng.choice(keys, 12, replace=False))
    amps = rng.normal(size=12)
    fresh = HamiltonianCache(store)
    warm = HamiltonianCache(store)
    warm.ensure(keys)
    e_fresh = fresh.energy(sub, amps)
    assert e_fresh == warm.energy(sub, amps)
    assert e_fresh == pytest.approx(electronic_energy(SparseWavefunction(sub, amps), store), abs=1e-12)


def test_cache_reset_keeps_energies_identical():
    store = random_store(4, 4, seed=12)
    keys = enumerate_sector(4, 2, 2)
    rng = np.random.default_rng(4)
    small = HamiltonianCache(store, max_size=15)
    big = HamiltonianCache(store)
    for _ in range(10):
        sub = np.sort(rng.choice(keys, 10, replace=False))
        amps = rng.normal(size=10)
        assert small.energy(sub, amps) == big.energy(sub, amps)
    assert len(small.keys) <= 15
