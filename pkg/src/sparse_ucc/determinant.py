"""Slater determinants as occupation bitmasks.

Spin orbitals are numbered ``s = 2p + sigma`` (``sigma = 0`` for alpha, 1 for
beta), so alpha/beta partners of a spatial orbital are adjacent.  Fermionic
signs are taken with respect to this spin-orbital order: applying ``a_s`` or
``a_s^dagger`` to a determinant contributes ``(-1)**n`` where ``n`` is the
number of occupied spin orbitals with index below ``s``.

Internally a determinant is packed into one 64-bit key,
``key = alpha_mask << 32 | beta_mask``, so that integer order on keys is the
canonical (alpha_mask, beta_mask) lexicographic order.  The vectorized helpers
at the bottom of this module work on ``uint64`` arrays of such keys.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

MAX_ORBITALS = 32
_WORD = (1 << MAX_ORBITALS) - 1


def spatial(s: int) -> int:
    return s >> 1


def spin(s: int) -> int:
    return s & 1


def key_bit(s: int) -> int:
    """Position of spin orbital ``s`` inside a packed determinant key."""
    p, sigma = s >> 1, s & 1
    return p if sigma else p + MAX_ORBITALS


def below_mask(s: int) -> int:
    """Key mask selecting every spin orbital with index smaller than ``s``."""
    p, sigma = s >> 1, s & 1
    low = (1 << p) - 1
    mask = (low << MAX_ORBITALS) | low
    if sigma:
        mask |= 1 << (p + MAX_ORBITALS)
    return mask


@dataclass(frozen=True, order=True)
class Determinant:
    """A Slater determinant given by alpha and beta occupation masks.

    Bit ``p`` of ``alpha_mask`` is set when spatial orbital ``p`` holds an
    alpha electron; likewise for ``beta_mask``.  Ordering is lexicographic on
    ``(alpha_mask, beta_mask)``.
    """

    alpha_mask: int
    beta_mask: int

    def __post_init__(self) -> None:
        for m in (self.alpha_mask, self.beta_mask):
            if m < 0 or m > _WORD:
                raise ValueError(f"occupation mask {m:#x} does not fit in {MAX_ORBITALS} orbitals")

    @property
    def key(self) -> int:
        return (self.alpha_mask << MAX_ORBITALS) | self.beta_mask

    @classmethod
    def from_key(cls, key: int) -> Determinant:
        key = int(key)
        return cls(key >> MAX_ORBITALS, key & _WORD)

    @classmethod
    def from_spin_orbitals(cls, occupied) -> Determinant:
        alpha = beta = 0
        for s in occupied:
            if s & 1:
                beta |= 1 << (s >> 1)
            else:
                alpha |= 1 << (s >> 1)
        return cls(alpha, beta)

    @property
    def n_alpha(self) -> int:
        return self.alpha_mask.bit_count()

    @property
    def n_beta(self) -> int:
        return self.beta_mask.bit_count()

    def occupied(self) -> list[int]:
        """Occupied spin-orbital indices in ascending order."""
        key = self.key
        top = max(self.alpha_mask.bit_length(), self.beta_mask.bit_length())
        return [s for s in range(2 * top) if key >> key_bit(s) & 1]

    def is_occupied(self, s: int) -> bool:
        return bool(self.key >> key_bit(s) & 1)

    def render(self, n_orbitals: int) -> str:
        """Little-endian bit strings, e.g. ``a:1100 b:1100``."""
        a = "".join(str(self.alpha_mask >> p & 1) for p in range(n_orbitals))
        b = "".join(str(self.beta_mask >> p & 1) for p in range(n_orbitals))
        return f"a:{a} b:{b}"

    def __str__(self) -> str:
        width = max(self.alpha_mask.bit_length(), self.beta_mask.bit_length(), 1)
        return self.render(width)


class SignedDeterminant(NamedTuple):
    det: Determinant
    phase: int


@dataclass(frozen=True)
class ExcitationOperator:
    """Particle-hole excitation ``a_a^+ a_i`` or ``a_a^+ a_b^+ a_j a_i``.

    ``occ`` holds the annihilated spin orbitals ``(i,)`` or ``(i, j)`` and
    ``vir`` the created ones ``(a,)`` or ``(a, b)``, both strictly ascending.
    The operator must conserve the spin projection.
    """

    occ: tuple[int, ...]
    vir: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.occ) != len(self.vir) or len(self.occ) not in (1, 2):
            raise ValueError("only single and double excitations are supported")
        if any(x < 0 or x >= 2 * MAX_ORBITALS for x in self.occ + self.vir):
            raise ValueError(f"spin-orbital index out of range in {self}")
        if list(self.occ) != sorted(set(self.occ)) or list(self.vir) != sorted(set(self.vir)):
            raise ValueError(f"indices must be strictly ascending: occ={self.occ} vir={self.vir}")
        if set(self.occ) & set(self.vir):
            raise ValueError(f"annihilated and created orbitals overlap: {self.occ} {self.vir}")
        if sum(s & 1 for s in self.occ) != sum(s & 1 for s in self.vir):
            raise ValueError(f"excitation {self.occ}->{self.vir} does not conserve Sz")

    @classmethod
    def single(cls, i: int, a: int) -> ExcitationOperator:
        return cls((i,), (a,))

    @classmethod
    def double(cls, i: int, j: int, a: int, b: int) -> ExcitationOperator:
        return cls((i, j), (a, b))

    @property
    def kind(self) -> str:
        return "single" if len(self.occ) == 1 else "double"

    @property
    def is_double(self) -> bool:
        return len(self.occ) == 2

    @property
    def i(self) -> int:
        return self.occ[0]

    @property
    def j(self) -> int | None:
        return self.occ[1] if len(self.occ) == 2 else None

    @property
    def a(self) -> int:
        return self.vir[0]

    @property
    def b(self) -> int | None:
        return self.vir[1] if len(self.vir) == 2 else None

    def __str__(self) -> str:
        return f"{','.join(map(str, self.occ))}->{','.join(map(str, self.vir))}"


def hartree_fock_reference(n_orbitals: int, n_alpha: int, n_beta: int) -> Determinant:
    """Aufbau determinant filling the lowest ``n_alpha``/``n_beta`` orbitals."""
    if not 0 < n_orbitals <= MAX_ORBITALS:
        raise ValueError(f"n_orbitals must be in [1, {MAX_ORBITALS}], got {n_orbitals}")
    if not (0 <= n_alpha <= n_orbitals and 0 <= n_beta <= n_orbitals):
        raise ValueError(f"cannot place {n_alpha} alpha / {n_beta} beta electrons in {n_orbitals} orbitals")
    return Determinant((1 << n_alpha) - 1, (1 << n_beta) - 1)


def _apply_string(key: int, annihilate: tuple[int, ...], create: tuple[int, ...]) -> tuple[int, int] | None:
    # Operators act right to left: annihilators in the given order, then creators.
    phase = 1
    for s in annihilate:
        bit = 1 << key_bit(s)
        if not key & bit:
            return None
        if (key & below_mask(s)).bit_count() & 1:
            phase = -phase
        key ^= bit
    for s in create:
        bit = 1 << key_bit(s)
        if key & bit:
            return None
        if (key & below_mask(s)).bit_count() & 1:
            phase = -phase
        key |= bit
    return key, phase


def apply_excitation(det: Determinant, op: ExcitationOperator) -> SignedDeterminant | None:
    """Apply ``a_a^+ a_i`` (single) or ``a_a^+ a_b^+ a_j a_i`` (double) to ``det``.

    Returns ``None`` when an annihilated orbital is empty or a created one is
    already occupied.
    """
    out = _apply_string(det.key, op.occ, op.vir[::-1])
    if out is None:
        return None
    return SignedDeterminant(Determinant.from_key(out[0]), out[1])


def apply_deexcitation(det: Determinant, op: ExcitationOperator) -> SignedDeterminant | None:
    """Apply the adjoint operator ``a_i^+ a_a`` or ``a_i^+ a_j^+ a_b a_a``."""
    out = _apply_string(det.key, op.vir, op.occ[::-1])
    if out is None:
        return None
    return SignedDeterminant(Determinant.from_key(out[0]), out[1])


def excitation_degree(d1: Determinant, d2: Determinant) -> int:
    return ((d1.alpha_mask ^ d2.alpha_mask).bit_count() + (d1.beta_mask ^ d2.beta_mask).bit_count()) // 2


# ---------------------------------------------------------------------------
# vectorized helpers on uint64 key arrays


@lru_cache(maxsize=None)
def key_bit_table() -> np.ndarray:
    """``table[s]`` is the single-bit key mask of spin orbital ``s``."""
    return np.array([1 << key_bit(s) for s in range(2 * MAX_ORBITALS)], dtype=np.uint64)


@lru_cache(maxsize=None)
def below_table() -> np.ndarray:
    return np.array([below_mask(s) for s in range(2 * MAX_ORBITALS)], dtype=np.uint64)


@lru_cache(maxsize=None)
def spin_orbital_of_bit() -> np.ndarray:
    """Inverse of :func:`key_bit`: key bit position -> spin-orbital index."""
    table = np.empty(2 * MAX_ORBITALS, dtype=np.int64)
    for s in range(2 * MAX_ORBITALS):
        table[key_bit(s)] = s
    return table


def popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x)


def lowest_bit(x: np.ndarray) -> np.ndarray:
    return x & (~x + np.uint64(1))


def bit_index(single_bits: np.ndarray) -> np.ndarray:
    """Spin-orbital index of each single-bit key mask."""
    return spin_orbital_of_bit()[popcount(single_bits - np.uint64(1)).astype(np.int64)]


def string_phase(keys: np.ndarray, annihilate, create) -> np.ndarray:
    """Vectorized phase (+1/-1 as float) of an operator string on valid keys.

    The caller guarantees applicability (annihilated orbitals occupied,
    created orbitals empty); ``annihilate``/``create`` are sequences of
    spin-orbital indices or arrays of them aligned with ``keys``.
    """
    bits = key_bit_table()
    below = below_table()
    parity = np.zeros(keys.shape, dtype=np.uint8)
    k = keys.copy()
    for s in annihilate:
        parity ^= (popcount(k & below[s]) & 1).astype(np.uint8)
        k ^= bits[s]
    for s in create:
        parity ^= (popcount(k & below[s]) & 1).astype(np.uint8)
        k ^= bits[s]
    return 1.0 - 2.0 * parity


def occupation_matrix(keys: np.ndarray, n_spin_orbitals: int) -> np.ndarray:
    """Boolean ``(len(keys), n_spin_orbitals)`` occupancy table."""
    bits = key_bit_table()[:n_spin_orbitals]
    return (keys[:, None] & bits[None, :]) != 0


def enumerate_sector(n_orbitals: int, n_alpha: int, n_beta: int) -> np.ndarray:
    """All determinant keys of a fixed (n_alpha, n_beta) sector, sorted."""
    from itertools import combinations

    def masks(n: int) -> list[int]:
        return sorted(sum(1 << p for p in c) for c in combinations(range(n_orbitals), n))

    alpha = np.array(masks(n_alpha), dtype=np.uint64)
    beta = np.array(masks(n_beta), dtype=np.uint64)
    keys = (alpha[:, None] << np.uint64(MAX_ORBITALS)) | beta[None, :]
    return keys.ravel()
