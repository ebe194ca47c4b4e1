from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sparse_ucc.determinant import Determinant
from sparse_ucc.wavefunction import (
    SparseWavefunction,
    TruncationPolicy,
    entropy,
    from_reference,
    norm,
    truncate,
)


@st.composite
def wavefunctions(draw, max_size=40):
    n = draw(st.integers(1, max_size))
    keys = draw(st.lists(st.integers(0, 2**20), min_size=n, max_size=n, unique=True))
    # a small set of magnitudes so ties are common
    mags = draw(hnp.arrays(np.float64, n, elements=st.sampled_from([0.1, 0.25, 0.5, 1.0, 2.0])))
    signs = draw(hnp.arrays(np.float64, n, elements=st.sampled_from([-1.0, 1.0])))
    return SparseWavefunction(np.array(keys, dtype=np.uint64), mags * signs)


@st.composite
def policies(draw):
    n_cut = draw(st.integers(1, 30))
    return TruncationPolicy(n_cut, n_cut + draw(st.integers(0, 15)))


def brute_truncate(wf: SparseWavefunction, policy: TruncationPolicy) -> dict[int, float]:
    entries = {int(k): float(c) for k, c in zip(wf.keys, wf.amps)}
    if len(entries) <= policy.n_max:
        return entries
    ranked = sorted(entries, key=lambda k: (-abs(entries[k]), k))[: policy.n_cut]
    scale = np.sqrt(sum(entries[k] ** 2 for k in ranked))
    return {k: entries[k] / scale for k in ranked}


@settings(max_examples=300, deadline=None)
@given(wavefunctions(), policies())
def test_truncation_matches_brute_force(wf, policy):
    out = truncate(wf, policy)
    want = brute_truncate(wf, policy)
    assert [int(k) for k in out.keys] == sorted(want)
    np.testing.assert_allclose(out.amps, [want[k] for k in sorted(want)], rtol=0, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(wavefunctions(), policies())
def test_truncation_properties(wf, policy):
    out = truncate(wf, policy)
    if wf.n_det <= policy.n_max:
        assert out is wf
    else:
        assert out.n_det == policy.n_cut
        assert norm(out) == pytest.approx(1.0, abs=1e-14)
        assert set(out.keys.tolist()) <= set(wf.keys.tolist())
        # idempotent: a pruned state is at or below n_cut <= n_max
        again = truncate(out, policy)
        assert again is out


@pytest.mark.parametrize("n_max", [3, 4, 5])
def test_trigger_is_strict(n_max):
    wf = SparseWavefunction(np.arange(4, dtype=np.uint64), np.ones(4))
    out = truncate(wf, TruncationPolicy(2, n_max))
    assert out.n_det == (2 if n_max < 4 else 4)


def test_ties_keep_canonically_smaller_determinants():
    keys = np.array([9, 3, 7, 1], dtype=np.uint64)
    wf = SparseWavefunction(keys, np.array([0.5, -0.5, 0.5, 0.2]))
    out = truncate(wf, TruncationPolicy(2, 2))
    assert out.keys.tolist() == [3, 7]
    np.testing.assert_allclose(out.amps, [-1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_truncation_is_order_independent():
    rng = np.random.default_rng(3)
    keys = rng.permutation(50).astype(np.uint64)
    amps = rng.choice([-1.0, 0.5, 1.0], size=50)
    a = truncate(SparseWavefunction(keys, amps), TruncationPolicy(7, 10))
    order = rng.permutation(50)
    b = truncate(SparseWavefunction(keys[order], amps[order]), TruncationPolicy(7, 10))
    assert a.keys.tolist() == b.keys.tolist()
    np.testing.assert_array_equal(a.amps, b.amps)


@pytest.mark.parametrize("n_cut, n_max", [(0, 1), (3, 2), (-1, 5)])
def test_invalid_policies(n_cut, n_max):
    with pytest.raises(ValueError):
        TruncationPolicy(n_cut, n_max)


def test_entropy_values():
    assert entropy(from_reference(Determinant(1, 1))) == 0.0
    even = SparseWavefunction(np.arange(4, dtype=np.uint64), np.full(4, 0.5))
    assert entropy(even) == pytest.approx(np.log(4))


def test_mapping_interface_and_csv():
    wf = SparseWavefunction.from_dict({Determinant(1, 1): 0.6, Determinant(2, 1): -0.8})
    assert wf[Determinant(2, 1)] == -0.8
    assert Determinant(1, 2) not in wf and wf.get(Determinant(1, 2)) == 0.0
    lines = wf.to_csv().splitlines()
    assert lines[0] == "determinant_alpha,determinant_beta,amplitude"
    assert lines[1] == "2,1,-0.8"


def test_duplicates_rejected():
    with pytest.raises(ValueError):
        SparseWavefunction(np.array([1, 1], dtype=np.uint64), np.ones(2))
