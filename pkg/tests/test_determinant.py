from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sparse_ucc.determinant import (
    Determinant,
    ExcitationOperator,
    apply_deexcitation,
    apply_excitation,
    enumerate_sector,
    excitation_degree,
    hartree_fock_reference,
    occupation_matrix,
    string_phase,
)
from sparse_ucc.ansatz import build_pool


def all_operators(n_spin: int):
    for i in range(n_spin):
        for a in range(n_spin):
            if i != a:
                try:
                    yield ExcitationOperator.single(i, a)
                except ValueError:
                    pass
    for occ in combinations(range(n_spin), 2):
        for vir in combinations(range(n_spin), 2):
            try:
                yield ExcitationOperator(occ, vir)
            except ValueError:
                pass


def all_states(n_spin: int):
    return range(1 << n_spin)


def test_canonical_order_is_alpha_then_beta():
    d1 = Determinant(0b01, 0b11)
    d2 = Determinant(0b10, 0b01)
    assert d1 < d2 and d1.key < d2.key
    assert sorted([d2, d1]) == [d1, d2]


@given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
def test_key_round_trip(a, b):
    d = Determinant(a, b)
    assert Determinant.from_key(d.key) == d
    assert Determinant.from_spin_orbitals(d.occupied()) == d


def test_render():
    assert Determinant(0b011, 0b001).render(3) == "a:110 b:100"


def test_hartree_fock_reference():
    ref = hartree_fock_reference(4, 2, 1)
    assert ref.occupied() == [0, 1, 2]
    with pytest.raises(ValueError):
        hartree_fock_reference(2, 3, 0)


@pytest.mark.parametrize(
    "occ, vir",
    [((1, 0), (2, 3)), ((0,), (3,)), ((0, 2), (1, 3)), ((0, 1), (1, 3)), ((0,), (2, 4))],
)
def test_invalid_operators(occ, vir):
    with pytest.raises(ValueError):
        ExcitationOperator(occ, vir)


@pytest.mark.parametrize("n_spin", [4, 6, 8])
def test_excitation_matches_oracle_exhaustively(n_spin):
    for op in all_operators(n_spin):
        if op.is_double:
            string = [("+", op.a), ("+", op.b), ("-", op.j), ("-", op.i)]
        else:
            string = [("+", op.a), ("-", op.i)]
        dagger = [("+" if k == "-" else "-", p) for k, p in reversed(string)]
        for state in all_states(n_spin):
            det = oracles.to_determinant(state)
            for fn, ops in ((apply_excitation, string), (apply_deexcitation, dagger)):
                got = fn(det, op)
                want = oracles.apply_string(state, ops)
                if want is None:
                    assert got is None
                else:
                    assert got.det == oracles.to_determinant(want[0])
                    assert got.phase == want[1]


@given(st.integers(0, 2**8 - 1), st.integers(0, 2**8 - 1))
def test_degree_is_half_the_symmetric_difference(s1, s2):
    d1, d2 = oracles.to_determinant(s1), oracles.to_determinant(s2)
    assert excitation_degree(d1, d2) == bin(s1 ^ s2).count("1") // 2


def test_vectorized_phase_matches_scalar():
    keys = enumerate_sector(4, 2, 2)
    for op in build_pool(4, hartree_fock_reference(4, 2, 2)):
        for k in keys:
            got = apply_excitation(Determinant.from_key(int(k)), op)
            if got is not None:
                phase = string_phase(np.array([k], dtype=np.uint64), op.occ, op.vir[::-1])
                assert phase[0] == got.phase


def test_enumerate_sector_is_sorted_and_complete():
    keys = enumerate_sector(5, 2, 3)
    assert len(keys) == 10 * 10
    assert np.all(np.diff(keys.astype(object)) > 0)
    occ = occupation_matrix(keys, 10)
    assert np.all(occ[:, 0::2].sum(axis=1) == 2) and np.all(occ[:, 1::2].sum(axis=1) == 3)
