"""Coefficient-space substrate: multi-indices, finitely supported spectral
vectors, index sets, projections and rearrangement.

A mode is a tuple of ``d`` signed integers (a point of Z^d).  A spectral
vector stores finitely many nonzero complex coefficients together with a
normalization tag: ``"H1"`` entries are V_k = c_k * vhat_k, ``"Hminus1"``
entries are F_k = fhat_k / c_k, with c_k = sqrt(1 + |k|^2).  Either way the
norm is the plain l2 norm of the stored entries (Parseval).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

import numpy as np

Mode = tuple[int, ...]
IndexSet = frozenset  # frozenset[Mode]; plain frozenset gives the set algebra

H1 = "H1"
HMINUS1 = "Hminus1"
_NORMALIZATIONS = (H1, HMINUS1)

#: below this modulus entries are pruned at construction; effectively never
DEFAULT_DROP_TOL = 1e-300


def mode_norm_sq(k: Mode) -> int:
    return sum(c * c for c in k)


def mode_abs(k: Mode) -> float:
    return math.sqrt(mode_norm_sq(k))


def mode_key(k: Mode):
    """Total-order key: Euclidean norm squared first, lexicographic tie-break.

    Deterministic rearrangement and marking rely on this ordering.
    """
    return (mode_norm_sq(k), k)


def mode_add(k: Mode, h: Mode) -> Mode:
    return tuple(a + b for a, b in zip(k, h))


def mode_sub(k: Mode, h: Mode) -> Mode:
    return tuple(a - b for a, b in zip(k, h))


def scaling(k: Mode) -> float:
    """c_k = sqrt(1 + |k|^2), the H1 rescaling of mode k."""
    return math.sqrt(1.0 + mode_norm_sq(k))


@lru_cache(maxsize=None)
def ball_offsets(d: int, radius: int) -> tuple[Mode, ...]:
    """All lattice points of Z^d with Euclidean norm <= radius, sorted."""
    if radius < 0:
        return ()
    rng = range(-radius, radius + 1)
    pts = [()]
    for _ in range(d):
        pts = [p + (c,) for p in pts for c in rng]
    r2 = radius * radius
    return tuple(sorted((p for p in pts if mode_norm_sq(p) <= r2), key=mode_key))


def ball_indices(d: int, radius: int) -> IndexSet:
    """Index set {k in Z^d : |k| <= radius}."""
    return frozenset(ball_offsets(d, radius))


class SpectralVector:
    """Finitely supported association mode -> complex coefficient.

    Immutable after construction: all operations return new vectors.
    Entries with modulus <= drop_tol (and exact zeros) are never stored.
    """

    __slots__ = ("_entries", "d", "normalization")

    def __init__(self, entries: Mapping[Mode, complex], d: int,
                 normalization: str = H1, drop_tol: float = DEFAULT_DROP_TOL):
        if d < 1:
            raise ValueError(f"dimension must be >= 1, got {d}")
        if normalization not in _NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {_NORMALIZATIONS}")
        clean: dict[Mode, complex] = {}
        for k, z in entries.items():
            k = tuple(int(c) for c in k)
            if len(k) != d:
                raise ValueError(f"mode {k} does not have dimension {d}")
            z = complex(z)
            if abs(z) > drop_tol:
                clean[k] = z
        self._entries = clean
        self.d = d
        self.normalization = normalization

    # -- container protocol -------------------------------------------------

    @property
    def entries(self) -> dict[Mode, complex]:
        """Backing dict; treat as read-only."""
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[Mode]:
        return iter(self._entries)

    def __getitem__(self, k: Mode) -> complex:
        return self._entries.get(tuple(k), 0j)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SpectralVector)
                and self.d == other.d
                and self.normalization == other.normalization
                and self._entries == other._entries)

    def __repr__(self) -> str:
        return (f"SpectralVector(d={self.d}, {self.normalization}, "
                f"{len(self)} modes, norm={self.norm():.6g})")

    def support(self) -> IndexSet:
        return frozenset(self._entries)

    # -- algebra -------------------------------------------------------------

    def _check_compatible(self, other: "SpectralVector"):
        if self.d != other.d or self.normalization != other.normalization:
            raise ValueError("vectors have mismatched dimension or normalization")

    def __add__(self, other: "SpectralVector") -> "SpectralVector":
        self._check_compatible(other)
        out = dict(self._entries)
        for k, z in other._entries.items():
            out[k] = out.get(k, 0j) + z
        return SpectralVector(out, self.d, self.normalization)

    def __sub__(self, other: "SpectralVector") -> "SpectralVector":
        self._check_compatible(other)
        out = dict(self._entries)
        for k, z in other._entries.items():
            out[k] = out.get(k, 0j) - z
        return SpectralVector(out, self.d, self.normalization)

    def __mul__(self, c) -> "SpectralVector":
        c = complex(c)
        return SpectralVector({k: c * z for k, z in self._entries.items()},
                              self.d, self.normalization)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralVector":
        return self * (-1.0)

    # -- norms, projection, rearrangement ------------------------------------

    def norm(self) -> float:
        """Parseval norm sqrt(sum |entry|^2)."""
        if not self._entries:
            return 0.0
        vals = np.fromiter(self._entries.values(), dtype=complex, count=len(self._entries))
        return float(np.sqrt(np.sum(vals.real ** 2 + vals.imag ** 2)))

    def project(self, lam: Iterable[Mode]) -> "SpectralVector":
        """Keep exactly the entries indexed in lam (P_lam; empty set -> 0)."""
        lam = frozenset(lam) if not isinstance(lam, frozenset) else lam
        kept = {k: z for k, z in self._entries.items() if k in lam}
        return SpectralVector(kept, self.d, self.normalization)

    def truncate_radius(self, radius: float) -> "SpectralVector":
        """Keep entries with Euclidean |k| <= radius."""
        r2 = radius * radius
        kept = {k: z for k, z in self._entries.items() if mode_norm_sq(k) <= r2}
        return SpectralVector(kept, self.d, self.normalization)

    def rearrange(self) -> list[tuple[Mode, float]]:
        """(mode, modulus) pairs, moduli non-increasing, ties by mode order."""
        items = [(k, abs(z)) for k, z in self._entries.items()]
        items.sort(key=lambda km: (-km[1],) + mode_key(km[0]))
        return items

    def moduli(self) -> np.ndarray:
        """Rearranged moduli as an array (descending)."""
        return np.array([m for _, m in self.rearrange()], dtype=float)

    # -- serialization --------------------------------------------------------

    def to_text(self) -> str:
        """One header line, then one "k_1 ... k_d re im" line per entry."""
        lines = [f"d={self.d} normalization={self.normalization}"]
        for k in sorted(self._entries, key=mode_key):
            z = self._entries[k]
            comps = " ".join(str(c) for c in k)
            lines.append(f"{comps} {z.real!r} {z.imag!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SpectralVector":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty spectral vector text")
        header = lines[0].split()
        try:
            fields = dict(tok.split("=", 1) for tok in header)
            d = int(fields["d"])
            normalization = fields["normalization"]
        except (ValueError, KeyError) as exc:
            raise ValueError(f"malformed header {lines[0]!r}") from exc
        entries: dict[Mode, complex] = {}
        for ln in lines[1:]:
            toks = ln.split()
            if len(toks) != d + 2:
                raise ValueError(f"expected {d + 2} fields, got {ln!r}")
            k = tuple(int(t) for t in toks[:d])
            entries[k] = complex(float(toks[d]), float(toks[d + 1]))
        return cls(entries, d, normalization)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "SpectralVector":
        with open(path) as fh:
            return cls.from_text(fh.read())


def zero_vector(d: int, normalization: str = H1) -> SpectralVector:
    return SpectralVector({}, d, normalization)


def from_moduli(moduli: Iterable[float], d: int = 1,
                normalization: str = HMINUS1) -> SpectralVector:
    """Place the n-th value at mode (n-1, 0, ..., 0); test/fixture helper."""
    entries = {}
    for n, m in enumerate(moduli):
        k = (n,) + (0,) * (d - 1)
        entries[k] = complex(m)
    return SpectralVector(entries, d, normalization)
