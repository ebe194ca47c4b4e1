"""FCIDUMP reading/writing and the integral store built from it."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .determinant import MAX_ORBITALS, Determinant

log = logging.getLogger(__name__)

_HEADER_START = re.compile(r"^\s*[&$]FCI\b", re.IGNORECASE)
_HEADER_END = re.compile(r"(&END|\$END|/)\s*$", re.IGNORECASE)
_KEYVAL = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=\s*,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|\s*$)")


class FcidumpError(ValueError):
    """Raised for malformed FCIDUMP input; ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def canonical_index(p: int, q: int, r: int, s: int) -> tuple[int, int, int, int]:
    """Representative of the 8-fold symmetry class of ``(pq|rs)``."""
    pq = (p, q) if p >= q else (q, p)
    rs = (r, s) if r >= s else (s, r)
    return pq + rs if pq >= rs else rs + pq


@dataclass(frozen=True, eq=False)
class IntegralStore:
    """Molecular integrals over ``n_orbitals`` spatial orbitals (hartree).

    ``two_electron`` maps 1-based canonical ``(p, q, r, s)`` tuples (see
    :func:`canonical_index`) to chemists'-notation values ``(pq|rs)``.
    """

    n_orbitals: int
    n_electrons: int
    ms2: int
    core_energy: float
    one_electron: np.ndarray
    two_electron: Mapping[tuple[int, int, int, int], float]
    orbsym: tuple[int, ...] = field(default=(), compare=False)
    isym: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        m = self.n_orbitals
        if not 1 <= m <= MAX_ORBITALS:
            raise ValueError(f"n_orbitals must be in [1, {MAX_ORBITALS}], got {m}")
        if not 0 < self.n_electrons <= 2 * m:
            raise ValueError(f"n_electrons={self.n_electrons} incompatible with {m} orbitals")
        if (self.n_electrons + self.ms2) % 2 or abs(self.ms2) > self.n_electrons:
            raise ValueError(f"MS2={self.ms2} incompatible with NELEC={self.n_electrons}")
        h = np.array(self.one_electron, dtype=float)
        if h.shape != (m, m):
            raise ValueError(f"one-electron table has shape {h.shape}, expected {(m, m)}")
        if not np.allclose(h, h.T, rtol=0.0, atol=1e-12):
            raise ValueError("one-electron integrals are not symmetric")
        h.setflags(write=False)
        object.__setattr__(self, "one_electron", h)
        eri = {canonical_index(*k): float(v) for k, v in self.two_electron.items()}
        object.__setattr__(self, "two_electron", MappingProxyType(eri))

    @property
    def n_alpha(self) -> int:
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_beta(self) -> int:
        return (self.n_electrons - self.ms2) // 2

    def h(self, p: int, q: int) -> float:
        """One-electron integral with 1-based indices."""
        self._check(p, q)
        return float(self.one_electron[p - 1, q - 1])

    def eri(self, p: int, q: int, r: int, s: int) -> float:
        """Two-electron integral ``(pq|rs)`` with 1-based indices; 0.0 if unset."""
        self._check(p, q, r, s)
        return self.two_electron.get(canonical_index(p, q, r, s), 0.0)

    def _check(self, *idx: int) -> None:
        for x in idx:
            if not 1 <= x <= self.n_orbitals:
                raise IndexError(f"orbital index {x} outside [1, {self.n_orbitals}]")

    @cached_property
    def dense_eri(self) -> np.ndarray:
        """Full 0-based ``(M, M, M, M)`` array of ``(pq|rs)``."""
        m = self.n_orbitals
        g = np.zeros((m, m, m, m))
        for (p, q, r, s), v in self.two_electron.items():
            p, q, r, s = p - 1, q - 1, r - 1, s - 1
            for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r)):
                g[a, b, c, d] = v
                g[c, d, a, b] = v
        g.setflags(write=False)
        return g

    def scaled(self, one: float = 1.0, two: float = 1.0) -> IntegralStore:
        """Copy with scaled one- and two-electron parts (core energy kept)."""
        return IntegralStore(
            self.n_orbitals,
            self.n_electrons,
            self.ms2,
            self.core_energy,
            self.one_electron * one,
            {k: v * two for k, v in self.two_electron.items()},
        )


def get_two_electron(store: IntegralStore, p: int, q: int, r: int, s: int) -> float:
    return store.eri(p, q, r, s)


def _parse_header(lines: list[str]) -> tuple[dict[str, list[str]], int]:
    if not lines or not _HEADER_START.match(lines[0]):
        raise FcidumpError("missing '&FCI' header", 1)
    chunks = []
    for n, line in enumerate(lines):
        text = line.strip()
        if n == 0:
            text = _HEADER_START.sub("", text, count=1)
        m = _HEADER_END.search(text)
        if m:
            chunks.append(text[: m.start()])
            body = " ".join(chunks).replace("\n", " ")
            fields = {}
            for key, value in _KEYVAL.findall(body):
                vals = [v for v in re.split(r"[,\s]+", value) if v]
                fields[key.upper()] = vals
            return fields, n + 1
        chunks.append(text)
    raise FcidumpError("header is not terminated by '&END' or '/'", len(lines))


def _int_field(fields: dict[str, list[str]], key: str, default: int | None = None) -> int:
    if key not in fields:
        if default is None:
            raise FcidumpError(f"header lacks {key}", 1)
        return default
    try:
        (value,) = fields[key]
        return int(value)
    except ValueError:
        raise FcidumpError(f"header field {key}={fields[key]} is not an integer", 1) from None


def parse_fcidump(text: str) -> IntegralStore:
    """Parse FCIDUMP text (Knowles-Handy layout, 1-based chemists' indices).

    Entries ``E 0 0 0 0`` set the core energy, ``E i j 0 0`` the one-electron
    integral h_ij and ``E i j k l`` the two-electron integral (ij|kl).  Molpro
    style orbital-energy records ``E i 0 0 0`` are accepted and ignored.
    Later duplicates overwrite earlier ones.
    """
    lines = text.splitlines()
    fields, start = _parse_header(lines)
    norb = _int_field(fields, "NORB")
    nelec = _int_field(fields, "NELEC")
    ms2 = _int_field(fields, "MS2", 0)
    if not 1 <= norb <= MAX_ORBITALS:
        raise FcidumpError(f"NORB={norb} outside supported range [1, {MAX_ORBITALS}]", 1)
    try:
        orbsym = tuple(int(v) for v in fields.get("ORBSYM", []))
        isym = int(fields["ISYM"][0]) if fields.get("ISYM") else None
    except ValueError:
        raise FcidumpError("non-integer ORBSYM/ISYM", 1) from None

    core = 0.0
    h = np.zeros((norb, norb))
    eri: dict[tuple[int, int, int, int], float] = {}
    for lineno, line in enumerate(lines[start:], start=start + 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FcidumpError(f"expected 'value i j k l', got {line.strip()!r}", lineno)
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
        except ValueError:
            raise FcidumpError(f"non-numeric value {parts[0]!r}", lineno) from None
        try:
            i, j, k, l = (int(x) for x in parts[1:])
        except ValueError:
            raise FcidumpError(f"non-integer index in {line.strip()!r}", lineno) from None
        for x in (i, j, k, l):
            if not 0 <= x <= norb:
                raise FcidumpError(f"index {x} outside [0, {norb}]", lineno)
        if i == j == k == l == 0:
            core = value
        elif k == 0 and l == 0:
            if j == 0:
                continue  # orbital-energy record
            h[i - 1, j - 1] = h[j - 1, i - 1] = value
        elif 0 in (i, j, k, l):
            raise FcidumpError(f"partially zero index tuple {(i, j, k, l)}", lineno)
        else:
            eri[canonical_index(i, j, k, l)] = value
    try:
        return IntegralStore(norb, nelec, ms2, core, h, eri, orbsym=orbsym, isym=isym)
    except ValueError as exc:
        raise FcidumpError(str(exc), 1) from None


def read_fcidump(path: str | Path) -> IntegralStore:
    return parse_fcidump(Path(path).read_text())


def format_fcidump(store: IntegralStore, tol: float = 0.0) -> str:
    """Serialize ``store`` back to FCIDUMP text; entries with |value| <= tol are skipped."""
    m = store.n_orbitals
    orbsym = store.orbsym or (1,) * m
    out = [
        f" &FCI NORB={m},NELEC={store.n_electrons},MS2={store.ms2},",
        "  ORBSYM=" + ",".join(map(str, orbsym)) + ",",
        f"  ISYM={store.isym if store.isym is not None else 1},",
        " &END",
    ]
    for (p, q, r, s), v in sorted(store.two_electron.items()):
        if abs(v) > tol:
            out.append(f"{v!r:>24} {p:4d} {q:4d} {r:4d} {s:4d}")
    for p in range(m):
        for q in range(p + 1):
            v = float(store.one_electron[p, q])
            if abs(v) > tol:
                out.append(f"{v!r:>24} {p + 1:4d} {q + 1:4d} {0:4d} {0:4d}")
    out.append(f"{store.core_energy!r:>24} {0:4d} {0:4d} {0:4d} {0:4d}")
    return "\n".join(out) + "\n"


def window_orbitals(store: IntegralStore, max_orbitals: int) -> IntegralStore:
    """Keep only the lowest ``max_orbitals`` spatial orbitals (drop highest indices)."""
    if max_orbitals >= store.n_orbitals:
        return store
    if max_orbitals < 1:
        raise ValueError("max_orbitals must be positive")
    if max(store.n_alpha, store.n_beta) > max_orbitals:
        raise ValueError(f"window of {max_orbitals} orbitals cannot hold the occupied space")
    eri = {k: v for k, v in store.two_electron.items() if max(k) <= max_orbitals}
    h = store.one_electron[:max_orbitals, :max_orbitals]
    return IntegralStore(
        max_orbitals,
        store.n_electrons,
        store.ms2,
        store.core_energy,
        h,
        eri,
        orbsym=store.orbsym[:max_orbitals],
        isym=store.isym,
    )


@dataclass(frozen=True)
class OrbitalEnergies:
    """Diagonal Fock elements per spin orbital (``s = 2p + sigma``), hartree."""

    eps: np.ndarray

    def __getitem__(self, s: int) -> float:
        return float(self.eps[s])

    def __len__(self) -> int:
        return len(self.eps)


def spin_fock_matrix(store: IntegralStore, reference: Determinant) -> np.ndarray:
    """Spin-orbital Fock matrix of ``reference`` (block diagonal in spin)."""
    m = store.n_orbitals
    if reference.n_alpha + reference.n_beta != store.n_electrons:
        raise ValueError(
            f"reference holds {reference.n_alpha + reference.n_beta} electrons, store has {store.n_electrons}"
        )
    if reference.alpha_mask >> m or reference.beta_mask >> m:
        raise ValueError("reference occupies orbitals beyond n_orbitals")
    g = store.dense_eri
    occ = {0: [p for p in range(m) if reference.alpha_mask >> p & 1], 1: [p for p in range(m) if reference.beta_mask >> p & 1]}
    dens = {sig: np.zeros(m) for sig in (0, 1)}
    for sig in (0, 1):
        dens[sig][occ[sig]] = 1.0
    fock = np.zeros((2 * m, 2 * m))
    total = dens[0] + dens[1]
    coulomb = np.einsum("pqtt,t->pq", g, total)
    for sig in (0, 1):
        exchange = np.einsum("pttq,t->pq", g, dens[sig])
        fock[sig::2, sig::2] = store.one_electron + coulomb - exchange
    return fock


def orbital_energies(store: IntegralStore, reference: Determinant, check_canonical: bool = False) -> OrbitalEnergies:
    """Fock-diagonal orbital energies of ``reference``.

    With ``check_canonical`` a warning is logged when the largest off-diagonal
    Fock element exceeds 1e-6 hartree (non-canonical orbitals).
    """
    fock = spin_fock_matrix(store, reference)
    if check_canonical:
        off = np.abs(fock - np.diag(np.diag(fock))).max(initial=0.0)
        if off > 1e-6:
            log.warning("orbitals are not canonical: max off-diagonal Fock element %.3e", off)
    eps = np.diag(fock).copy()
    eps.setflags(write=False)
    return OrbitalEnergies(eps)
