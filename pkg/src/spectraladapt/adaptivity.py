"""Marking and coarsening: bulk chasing on the residual, ball enrichment,
and greedy coarsening of intermediate solutions.

All selections are greedy prefixes of the deterministic rearrangement, which
realizes minimal cardinality exactly because the objective is a sum of
independent nonnegative terms.
"""

from __future__ import annotations

import math

import numpy as np

from .core import IndexSet, SpectralVector, ball_offsets, mode_add, mode_key
from .galerkin import Residual
from .operators import ALGEBRAIC, DecayCertificate, truncation_bound


def _as_vector(r) -> SpectralVector:
    return r.vector if isinstance(r, Residual) else r


def dorfler(r, theta: float, exclude: IndexSet = frozenset()) -> IndexSet:
    """Minimal index set capturing a theta fraction of the residual norm.

    Operates on the residual restricted to the complement of ``exclude``
    (exact Galerkin residuals vanish there anyway; for feasible residuals
    the tiny active-set entries are ignored by definition).
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0,1), got {theta}")
    vec = _as_vector(r)
    items = [(k, abs(z) ** 2) for k, z in vec.entries.items() if k not in exclude]
    total = sum(m for _, m in items)
    if total == 0.0:
        return frozenset()
    items.sort(key=lambda km: (-km[1],) + mode_key(km[0]))
    target = theta * theta * total
    acc = 0.0
    chosen = []
    for k, msq in items:
        acc += msq
        chosen.append(k)
        if acc >= target:
            break
    return frozenset(chosen)


def enrich(lam: IndexSet, j: int, d: int | None = None) -> IndexSet:
    """Dilate by the closed Euclidean ball of radius j around every member."""
    if j < 0:
        raise ValueError("enrichment radius must be >= 0")
    if not lam:
        return frozenset()
    if d is None:
        d = len(next(iter(lam)))
    if j == 0:
        return frozenset(lam)
    offs = ball_offsets(d, j)
    out = set()
    for k in lam:
        for o in offs:
            out.add(mode_add(k, o))
    return frozenset(out)


def e_dorfler(r, theta: float, j: int,
              exclude: IndexSet = frozenset()) -> IndexSet:
    """Bulk chasing followed by ball enrichment.

    The enriched set is not re-intersected with the complement of
    ``exclude``; the caller forms the new active set by union.
    """
    return enrich(dorfler(r, theta, exclude), j)


def coarse(w: SpectralVector, eps: float) -> IndexSet:
    """Minimal set keeping the approximation error of w within 2*eps."""
    if eps <= 0:
        raise ValueError("accuracy must be positive")
    order = w.rearrange()
    if not order:
        return frozenset()
    sq = np.array([m * m for _, m in order])
    # tail_after[n] = sum of squares past the first n entries
    tail_after = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
    budget = 4.0 * eps * eps
    n = int(np.searchsorted(-tail_after, -budget, side="left"))
    while n > 0 and tail_after[n - 1] <= budget:
        n -= 1
    return frozenset(k for k, _ in order[:n])


def select_enrichment_radius(theta: float, inverse_cert: DecayCertificate,
                             alpha_star: float, alpha_upper: float,
                             j_cap: int = 100000, d: int = 1) -> int:
    """Smallest J with psi_inverse(J) <= sqrt((1-theta^2)/(alpha_* alpha^*)).

    The guaranteed error reduction of the enriched marking hinges on this
    truncation level of the inverse.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0,1)")
    if inverse_cert.kind == ALGEBRAIC and inverse_cert.eta <= d:
        raise ValueError(
            "algebraic inverse envelope does not decay (eta_L <= d); "
            "no enrichment radius exists")
    rhs = math.sqrt((1.0 - theta * theta) / (alpha_star * alpha_upper))
    j = 0
    while truncation_bound(inverse_cert, j, d) > rhs:
        j += 1
        if j > j_cap:
            raise ValueError(f"no enrichment radius below cap {j_cap}")
    return j
