"""Sparse real-amplitude wavefunctions and the N_CUT/N_MAX truncation rule."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .determinant import Determinant

DROP_THRESHOLD = 1e-14


@dataclass(frozen=True)
class TruncationPolicy:
    """Prune to the ``n_cut`` largest amplitudes once more than ``n_max`` are stored."""

    n_cut: int
    n_max: int

    def __post_init__(self) -> None:
        if not 0 < self.n_cut <= self.n_max:
            raise ValueError(f"need 0 < n_cut <= n_max, got n_cut={self.n_cut} n_max={self.n_max}")

    @classmethod
    def unlimited(cls) -> TruncationPolicy:
        big = np.iinfo(np.int64).max
        return cls(big, big)

    @property
    def is_unlimited(self) -> bool:
        return self.n_max == np.iinfo(np.int64).max


class SparseWavefunction:
    """Map from determinants to real amplitudes, kept in canonical order.

    Storage is a pair of arrays: packed determinant keys (sorted ascending,
    which is the canonical determinant order) and amplitudes.  Instances are
    treated as immutable; every operation returns a new object.
    """

    __slots__ = ("keys", "amps")

    def __init__(self, keys: np.ndarray, amps: np.ndarray, *, presorted: bool = False):
        keys = np.asarray(keys, dtype=np.uint64)
        amps = np.asarray(amps, dtype=np.float64)
        if keys.shape != amps.shape or keys.ndim != 1:
            raise ValueError("keys and amplitudes must be 1-D arrays of equal length")
        if not presorted:
            order = np.argsort(keys, kind="stable")
            keys, amps = keys[order], amps[order]
            if len(keys) > 1 and np.any(keys[1:] == keys[:-1]):
                raise ValueError("duplicate determinants")
        keys.setflags(write=False)
        amps.setflags(write=False)
        self.keys = keys
        self.amps = amps

    @classmethod
    def from_dict(cls, entries: Mapping[Determinant, float]) -> SparseWavefunction:
        keys = np.array([d.key for d in entries], dtype=np.uint64)
        amps = np.array([float(v) for v in entries.values()], dtype=np.float64)
        return cls(keys, amps)

    @property
    def n_det(self) -> int:
        return len(self.keys)

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self) -> Iterator[Determinant]:
        return (Determinant.from_key(k) for k in self.keys)

    def items(self) -> Iterator[tuple[Determinant, float]]:
        return ((Determinant.from_key(k), float(c)) for k, c in zip(self.keys, self.amps))

    def __getitem__(self, det: Determinant) -> float:
        key = np.uint64(det.key)
        pos = int(np.searchsorted(self.keys, key))
        if pos < len(self.keys) and self.keys[pos] == key:
            return float(self.amps[pos])
        raise KeyError(det)

    def get(self, det: Determinant, default: float = 0.0) -> float:
        try:
            return self[det]
        except KeyError:
            return default

    def __contains__(self, det: object) -> bool:
        return isinstance(det, Determinant) and self.get(det, None) is not None

    def to_dict(self) -> dict[Determinant, float]:
        return dict(self.items())

    def __repr__(self) -> str:
        return f"SparseWavefunction(n_det={self.n_det}, norm={norm(self):.6g})"

    def to_csv(self) -> str:
        """CSV ``determinant_alpha,determinant_beta,amplitude``, largest |amplitude| first."""
        order = np.lexsort((self.keys, -np.abs(self.amps)))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["determinant_alpha", "determinant_beta", "amplitude"])
        for idx in order:
            d = Determinant.from_key(self.keys[idx])
            w.writerow([d.alpha_mask, d.beta_mask, repr(float(self.amps[idx]))])
        return buf.getvalue()


def from_reference(det: Determinant) -> SparseWavefunction:
    return SparseWavefunction(np.array([det.key], dtype=np.uint64), np.ones(1), presorted=True)


def norm(wf: SparseWavefunction) -> float:
    return float(np.sqrt(np.dot(wf.amps, wf.amps)))


def entropy(wf: SparseWavefunction) -> float:
    """Shannon entropy ``-sum |c|^2 ln |c|^2`` (nats) of the stored amplitudes, as given."""
    p = wf.amps[wf.amps != 0.0] ** 2
    return float(-np.sum(p * np.log(p)))


def truncate(wf: SparseWavefunction, policy: TruncationPolicy) -> SparseWavefunction:
    """Keep the ``n_cut`` largest |c| once ``n_det > n_max``; renormalize survivors.

    Equal magnitudes are resolved in favour of the canonically smaller
    determinant.
    """
    keys, amps, _ = truncate_arrays(wf.keys, wf.amps, policy)
    if keys is wf.keys:
        return wf
    return SparseWavefunction(keys, amps, presorted=True)


def truncate_arrays(keys: np.ndarray, amps: np.ndarray, policy: TruncationPolicy):
    """Array form of :func:`truncate`; returns ``(keys, amps, scale)``.

    ``scale`` is the renormalization factor applied to the survivors, or
    ``None`` when the trigger did not fire (inputs returned unchanged).
    """
    if len(keys) <= policy.n_max:
        return keys, amps, None
    order = np.lexsort((keys, -np.abs(amps)))[: policy.n_cut]
    order.sort()  # keys are sorted, so index order is canonical order
    kept_keys = keys[order]
    kept = amps[order]
    scale = 1.0 / np.sqrt(np.dot(kept, kept))
    return kept_keys, kept * scale, scale
