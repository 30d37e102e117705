"""Finite Galerkin solves on an active set, residual evaluation and the
residual-based error estimator.

The solve assembles the dense Hermitian system over the active modes and
factorizes directly up to 2048 unknowns; beyond that a diagonally
preconditioned conjugate gradient takes over (the diagonal dominates from
below for admissible operators).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .core import H1, HMINUS1, IndexSet, SpectralVector, mode_key
from .operators import EllipticOperator, apply_operator, truncate_operator, window_matrix

DIRECT_LIMIT = 2048
SOLVER_RTOL = 1e-10


class SolveError(RuntimeError):
    pass


class NonConvergenceError(SolveError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass
class GalerkinSolution:
    coefficients: SpectralVector       # H1-normalized, supported on the set
    index_set: IndexSet
    solver_residual: float             # relative algebraic residual
    work: int                          # assembled entries + cg work


@dataclass
class Residual:
    vector: SpectralVector             # Hminus1-normalized
    exactness: str = "exact"           # "exact" | "feasible"
    gamma_bound: float = 0.0           # certified |r - rtilde| / |rtilde|
    converged: bool = False            # data accuracy exhausted, r ~ 0

    def norm(self) -> float:
        return self.vector.norm()


def solve(op: EllipticOperator, f: SpectralVector, lam: IndexSet,
          rtol: float = SOLVER_RTOL) -> GalerkinSolution:
    """Galerkin solution on the active set lam (Hermitian positive definite)."""
    if not lam:
        raise ValueError("active set must be nonempty")
    if f.normalization != HMINUS1:
        raise ValueError("data must be Hminus1-normalized")
    modes = sorted(lam, key=mode_key)
    n = len(modes)
    A = window_matrix(op, modes)
    b = np.array([f.entries.get(m, 0j) for m in modes], dtype=complex)
    herm_defect = np.max(np.abs(A - A.conj().T)) if n else 0.0
    if herm_defect > 1e-12 * max(1.0, float(np.max(np.abs(A)))):
        raise SolveError(f"assembled matrix is not Hermitian ({herm_defect:.2e})")
    work = n * n
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        x = np.zeros(n, dtype=complex)
        achieved = 0.0
    elif n <= DIRECT_LIMIT:
        try:
            x = scipy.linalg.solve(A, b, assume_a="pos")
        except scipy.linalg.LinAlgError as exc:
            raise SolveError(f"factorization failed: {exc}") from exc
        achieved = float(np.linalg.norm(A @ x - b)) / bnorm
        if achieved > rtol:
            # one refinement step; a coercive system should never need more
            x = x + scipy.linalg.solve(A, b - A @ x, assume_a="pos")
            achieved = float(np.linalg.norm(A @ x - b)) / bnorm
            work += n * n
        if achieved > rtol:
            raise NonConvergenceError(
                f"direct solve stalled at relative residual {achieved:.3e}",
                achieved)
    else:
        diag = np.real(np.diag(A))
        if np.min(diag) <= 0:
            raise SolveError("nonpositive diagonal in assembled matrix")
        M = scipy.sparse.linalg.LinearOperator(
            (n, n), matvec=lambda y: y / diag, dtype=complex)
        iters = 0

        def count(_):
            nonlocal iters
            iters += 1

        x, info = scipy.sparse.linalg.cg(A, b, rtol=rtol / 10.0, atol=0.0,
                                         M=M, maxiter=20 * n, callback=count)
        achieved = float(np.linalg.norm(A @ x - b)) / bnorm
        work += iters * n * n
        if info != 0 or achieved > rtol:
            raise NonConvergenceError(
                f"cg failed (info={info}) at relative residual {achieved:.3e}",
                achieved)
    coeffs = SpectralVector(dict(zip(modes, x)), op.d, H1)
    return GalerkinSolution(coeffs, frozenset(modes), achieved, work)


def residual(op: EllipticOperator, f: SpectralVector,
             sol: GalerkinSolution) -> Residual:
    """Exact residual f - L u for finite data; entries on the active set sit
    at solver-tolerance level."""
    r = f - apply_operator(op, sol.coefficients)
    return Residual(r, "exact", 0.0)


def estimator(r: Residual, lam: IndexSet | None = None) -> float:
    """eta(v; lam) = norm of the residual projected onto lam (all of it when
    lam is None)."""
    if lam is None:
        return r.vector.norm()
    return r.vector.project(lam).norm()


def feasible_residual(op: EllipticOperator, f: SpectralVector,
                      sol: GalerkinSolution, gamma: float,
                      f_tail: float = 0.0) -> Residual:
    """Approximate residual with a certified relative error bound gamma.

    Truncation degrees of the coefficients and the data rise along the
    ladder of stored radii until

        |f - ftilde| + (|nu - nutilde|_inf + |sigma - sigmatilde|_inf)
            * |f| / alpha_*  <=  gamma * |rtilde| .

    Stored-part truncation errors are computed exactly; the certified tail
    bounds of the spectra account for anything beyond storage.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    u = sol.coefficients
    fnorm_true = f.norm() + f_tail
    stability = fnorm_true / op.alpha_star

    radii = sorted({0.0}
                   | {math.sqrt(sum(c * c for c in h))
                      for h in (set(op.nu.entries) | set(op.sigma.entries))}
                   | {math.sqrt(sum(c * c for c in k)) for k in f.entries})
    last = None
    for rad in radii:
        f_t = f.truncate_radius(rad)
        dropped_f = math.sqrt(max(f.norm() ** 2 - f_t.norm() ** 2, 0.0))
        err = (dropped_f + f_tail
               + (op.nu.sup_diff_beyond(rad) + op.sigma.sup_diff_beyond(rad))
               * stability)
        op_t = truncate_operator(op, rad)
        r_t = f_t - apply_operator(op_t, u)
        rnorm = r_t.norm()
        last = (r_t, err, rnorm)
        if err <= gamma * rnorm:
            bound = err / rnorm if rnorm > 0 else 0.0
            return Residual(r_t, "feasible", bound)
    r_t, err, rnorm = last
    # degrees exhausted: either the residual is gone or the data cannot
    # certify this gamma
    if rnorm <= 1e3 * max(sol.solver_residual, 1e-15) * max(f.norm(), 1.0):
        return Residual(r_t, "feasible", gamma, converged=True)
    raise NonConvergenceError(
        f"data resolution cannot certify gamma={gamma:.3g} "
        f"(best bound {err / rnorm:.3g})", err / rnorm)


def energy_inner(op: EllipticOperator, v: SpectralVector,
                 w: SpectralVector) -> complex:
    """Bilinear form a(v, w) on H1-normalized vectors."""
    av = apply_operator(op, v)
    return sum(av.entries.get(k, 0j) * z.conjugate()
               for k, z in w.entries.items())


def energy_norm(op: EllipticOperator, v: SpectralVector) -> float:
    if len(v) == 0:
        return 0.0
    return math.sqrt(max(energy_inner(op, v, v).real, 0.0))
