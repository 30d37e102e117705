"""Adaptive driver loops with full per-iteration tracing.

Five variants share one engine:

* ``adfour``      mark / union / solve / residual
* ``f_adfour``    same, residual replaced by a certified feasible residual
* ``a_adfour``    marking enriched by a ball whose radius comes from the
                  inverse decay certificate
* ``c_adfour``    inner mark/solve loop to a fixed residual reduction, then
                  coarsening and a re-solve
* ``pc_adfour``   enriched-mark prediction, coarsening correction

Energy errors are measured against a reference solution (the manufactured
exact solution when available, otherwise a one-time solve on a large ball).
"""

from __future__ import annotations

import io
import math
import time
import warnings
from dataclasses import dataclass, field

from .core import IndexSet, SpectralVector, ball_indices, zero_vector, H1
from .galerkin import (GalerkinSolution, Residual, energy_norm,
                       feasible_residual, residual, solve)
from .operators import EllipticOperator, inverse_certificate
from .adaptivity import coarse, dorfler, e_dorfler, select_enrichment_radius
from .sparsity import KAPPA, ClassFit

VARIANTS = ("adfour", "f_adfour", "a_adfour", "c_adfour", "pc_adfour")

CSV_HEADER = ("iter,card_lambda,residual_norm,energy_error,estimator,"
              "inner_iters,marked,coarsen_eps,cum_solves,wall_ms")


@dataclass
class Problem:
    operator: EllipticOperator
    data: SpectralVector                 # Hminus1-normalized
    f_tail: float = 0.0                  # certified dual-norm tail of the data
    exact: SpectralVector | None = None  # manufactured solution, if any
    ref_radius: int | None = None        # reference ball when exact is absent
    label: str = ""


@dataclass
class AlgorithmConfig:
    variant: str = "adfour"
    theta: float = 0.5
    tol: float = 0.0
    gamma: float | None = None           # feasible variants only
    enrichment_radius: int | None = None  # None = derive from certificates
    max_outer: int = 50
    max_inner: int = 60
    solver_rtol: float = 1e-10

    def __post_init__(self):
        self.variant = self.variant.replace("-", "_")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0,1)")
        if self.variant == "f_adfour":
            if self.gamma is None or not 0.0 < self.gamma < self.theta:
                raise ValueError("f_adfour needs gamma in (0, theta)")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        if self.tol == 0 and self.max_outer <= 0:
            raise ValueError("set tol > 0 or a positive iteration cap")


def predicted_contraction(config: AlgorithmConfig, alpha_star: float,
                          alpha_upper: float) -> float:
    """Guaranteed per-iteration energy-error reduction factor."""
    th = config.theta
    ratio = alpha_star / alpha_upper
    if config.variant == "adfour":
        return math.sqrt(1.0 - ratio * th * th)
    if config.variant == "f_adfour":
        th_eff = (th - config.gamma) / (1.0 + config.gamma)
        return math.sqrt(1.0 - ratio * th_eff * th_eff)
    if config.variant == "a_adfour":
        return math.sqrt((1.0 - th * th) / ratio)
    # coarsening variants
    return 3.0 / ratio * math.sqrt(1.0 - th * th)


@dataclass
class TraceRow:
    iteration: int
    card_lambda: int
    residual_norm: float
    energy_error: float
    estimator: float
    inner_iters: int
    marked: int
    coarsen_eps: float
    cum_solves: int
    wall_ms: float
    h1_error: float = 0.0
    peak_card: int = 0


@dataclass
class RunTrace:
    variant: str
    theta: float
    gamma: float | None
    enrichment_radius: int | None
    predicted_rho: float
    alpha_star: float
    alpha_upper: float
    rows: list[TraceRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    flagged: bool = False
    termination: str = ""
    label: str = ""

    def energy_ratios(self) -> list[float]:
        errs = [r.energy_error for r in self.rows]
        return [b / a for a, b in zip(errs, errs[1:]) if a > 0]

    def cards(self) -> list[int]:
        return [r.card_lambda for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.rows:
            buf.write(f"{r.iteration},{r.card_lambda},{r.residual_norm:.12g},"
                      f"{r.energy_error:.12g},{r.estimator:.12g},"
                      f"{r.inner_iters},{r.marked},{r.coarsen_eps:.12g},"
                      f"{r.cum_solves},{r.wall_ms:.3f}\n")
        return buf.getvalue()

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


class _Engine:
    """Shared state of one adaptive run."""

    def __init__(self, problem: Problem, config: AlgorithmConfig):
        self.problem = problem
        self.config = config
        self.op = problem.operator
        self.f = problem.data
        self.trace = RunTrace(
            variant=config.variant, theta=config.theta, gamma=config.gamma,
            enrichment_radius=config.enrichment_radius,
            predicted_rho=predicted_contraction(
                config, self.op.alpha_star, self.op.alpha_upper),
            alpha_star=self.op.alpha_star, alpha_upper=self.op.alpha_upper,
            label=problem.label)
        if config.variant in ("c_adfour", "pc_adfour") and self.trace.predicted_rho >= 1:
            msg = (f"predicted factor {self.trace.predicted_rho:.3g} >= 1; "
                   "theta is too small for guaranteed contraction")
            self.trace.notes.append(msg)
            warnings.warn(msg, stacklevel=3)
        self.reference = self._reference_solution()
        self.solves = 0
        self.violations = 0
        self.t0 = time.perf_counter()
        self.last_ms = 0.0

    def _reference_solution(self) -> SpectralVector:
        if self.problem.exact is not None:
            return self.problem.exact
        radius = self.problem.ref_radius
        if radius is None:
            raise ValueError("problem needs either an exact solution or a "
                             "reference ball radius")
        sol = solve(self.op, self.f, ball_indices(self.op.d, radius),
                    rtol=self.config.solver_rtol)
        return sol.coefficients

    def gal(self, lam: IndexSet) -> GalerkinSolution:
        if not lam:
            return GalerkinSolution(zero_vector(self.op.d, H1), frozenset(),
                                    0.0, 0)
        self.solves += 1
        return solve(self.op, self.f, lam, rtol=self.config.solver_rtol)

    def res(self, sol: GalerkinSolution) -> Residual:
        if self.config.variant == "f_adfour":
            return feasible_residual(self.op, self.f, sol, self.config.gamma,
                                     f_tail=self.problem.f_tail)
        return residual(self.op, self.f, sol)

    def record(self, n: int, lam: IndexSet, sol: GalerkinSolution,
               r: Residual, inner: int, marked: int, eps: float,
               peak: int = 0):
        err_vec = self.reference - sol.coefficients
        e_energy = energy_norm(self.op, err_vec)
        e_h1 = err_vec.norm()
        now = (time.perf_counter() - self.t0) * 1000.0
        delta, self.last_ms = now - self.last_ms, now
        self.trace.rows.append(TraceRow(
            iteration=n, card_lambda=len(lam), residual_norm=r.norm(),
            energy_error=e_energy, estimator=r.norm(), inner_iters=inner,
            marked=marked, coarsen_eps=eps, cum_solves=self.solves,
            wall_ms=delta, h1_error=e_h1,
            peak_card=max(peak, len(lam))))
        self._check_contraction()

    def _check_contraction(self):
        rows = self.trace.rows
        if len(rows) < 2:
            return
        a, b = rows[-2].energy_error, rows[-1].energy_error
        if a <= 0:
            return
        if b / a > self.trace.predicted_rho * (1.0 + 1e-6):
            self.violations += 1
            if self.violations >= 3 and not self.trace.flagged:
                self.trace.flagged = True
                self.trace.notes.append(
                    f"contraction bound violated 3 times in a row by "
                    f"iteration {rows[-1].iteration}")
        else:
            self.violations = 0


def _auto_radius(engine: _Engine) -> int:
    cfg, op = engine.config, engine.op
    if cfg.enrichment_radius is not None:
        return cfg.enrichment_radius
    cert = inverse_certificate(op)
    j = select_enrichment_radius(cfg.theta, cert, op.alpha_star,
                                 op.alpha_upper, d=op.d)
    engine.trace.enrichment_radius = j
    engine.trace.notes.append(
        f"enrichment radius J={j} from inverse certificate ({cert})")
    return j


def run(problem: Problem, config: AlgorithmConfig) -> RunTrace:
    """Execute one adaptive run and return its trace."""
    eng = _Engine(problem, config)
    variant = config.variant
    j = _auto_radius(eng) if variant in ("a_adfour", "pc_adfour") else 0

    lam: IndexSet = frozenset()
    sol = GalerkinSolution(zero_vector(problem.operator.d, H1), lam, 0.0, 0)
    r = Residual(problem.data, "exact", 0.0)
    eng.record(0, lam, sol, r, 0, 0, 0.0)

    for n in range(config.max_outer):
        if r.norm() <= config.tol:
            eng.trace.termination = "tolerance reached"
            return eng.trace
        if r.converged:
            eng.trace.termination = "converged within data accuracy"
            return eng.trace

        if variant in ("adfour", "f_adfour"):
            marked = dorfler(r, config.theta, exclude=lam)
            lam = lam | marked
            sol = eng.gal(lam)
            r = eng.res(sol)
            eng.record(n + 1, lam, sol, r, 0, len(marked), 0.0)

        elif variant == "a_adfour":
            marked = e_dorfler(r, config.theta, j, exclude=lam)
            lam = lam | marked
            sol = eng.gal(lam)
            r = eng.res(sol)
            eng.record(n + 1, lam, sol, r, 0, len(marked), 0.0)

        elif variant == "c_adfour":
            target = math.sqrt(1.0 - config.theta ** 2) * r.norm()
            lam_k, r_k = lam, r
            inner = 0
            total_marked = 0
            peak = len(lam)
            while True:
                marked = dorfler(r_k, config.theta, exclude=lam_k)
                total_marked += len(marked)
                lam_k = lam_k | marked
                peak = max(peak, len(lam_k))
                sol_k = eng.gal(lam_k)
                r_k = eng.res(sol_k)
                inner += 1
                if r_k.norm() <= target:
                    break
                if inner >= config.max_inner:
                    eng.trace.flagged = True
                    eng.trace.notes.append(
                        f"inner loop hit the cap at outer iteration {n}")
                    break
            eps = r_k.norm() / math.sqrt(problem.operator.alpha_star)
            lam = coarse(sol_k.coefficients, eps)
            sol = eng.gal(lam)
            r = eng.res(sol)
            eng.record(n + 1, lam, sol, r, inner, total_marked, eps, peak)

        else:  # pc_adfour
            marked = e_dorfler(r, config.theta, j, exclude=lam)
            lam_hat = lam | marked
            sol_hat = eng.gal(lam_hat)
            eps = (math.sqrt(1.0 - config.theta ** 2) / problem.operator.alpha_star
                   * r.norm())
            lam = coarse(sol_hat.coefficients, eps)
            sol = eng.gal(lam)
            r = eng.res(sol)
            eng.record(n + 1, lam, sol, r, 1, len(marked), eps,
                       peak=len(lam_hat))

    eng.trace.termination = ("tolerance reached" if r.norm() <= config.tol
                             else "max iterations reached")
    return eng.trace


# ---------------------------------------------------------------------------
# cardinality bound checking
# ---------------------------------------------------------------------------

@dataclass
class CardinalityReport:
    kind: str
    rows: list[tuple[int, int, float, float]]   # (n, card, error, implied C)
    max_implied: float
    min_implied: float
    growth_flag: bool
    implied_log_c: float | None = None          # exponential variants
    implied_eta_bar: float | None = None        # inner-loop rate diagnostic

    def summary(self) -> str:
        lines = [f"cardinality check: kind={self.kind} "
                 f"max_C={self.max_implied:.4g} min_C={self.min_implied:.4g} "
                 f"growth={'FLAG' if self.growth_flag else 'ok'}"]
        if self.implied_log_c is not None:
            lines.append(f"  implied log C = {self.implied_log_c:.4g}")
        if self.implied_eta_bar is not None:
            lines.append(f"  implied inner-loop rate = {self.implied_eta_bar:.4g}")
        for n, card, err, c in self.rows:
            lines.append(f"  n={n} |set|={card} error={err:.4e} implied={c:.4g}")
        return "\n".join(lines)

    __str__ = summary


def check_cardinality_bounds(trace: RunTrace, fit: ClassFit,
                             alpha_star: float, alpha_upper: float,
                             kappa: float = KAPPA) -> CardinalityReport:
    """Compare |set_n| against the optimal-growth law of the fitted class.

    Algebraic: C_n = |set_n| * error_n^(d/s) / norm^(d/s).
    Exponential: log C_n backed out of the coarsened-cardinality bound
    |set_n| <= kappa (w/eta^(d/t)) (log(norm/error) + log C)^(d/t).
    Flags super-constant growth (implied constant growing past 2x).
    """
    rows = []
    implied_log_c = None
    usable = [r for r in trace.rows
              if r.iteration >= 1 and r.card_lambda > 0 and r.h1_error > 0]
    if not usable:
        return CardinalityReport(fit.kind, [], 0.0, 0.0, False)
    if fit.kind == "algebraic":
        p = fit.params
        expo = p.d / p.s
        for r in usable:
            c = r.card_lambda * r.h1_error ** expo / fit.quasinorm ** expo
            rows.append((r.iteration, r.card_lambda, r.h1_error, c))
    else:
        p = fit.params
        expo = p.d / p.t
        pref = kappa * p.omega / p.eta ** expo
        best = -math.inf
        for r in usable:
            lead = (r.card_lambda / pref) ** (1.0 / expo)
            log_c = lead - math.log(fit.quasinorm / r.h1_error)
            best = max(best, log_c)
            rows.append((r.iteration, r.card_lambda, r.h1_error, log_c))
        implied_log_c = best
    implied = [c for *_ , c in rows]
    max_c, min_c = max(implied), min(implied)
    if fit.kind == "algebraic":
        growth = any(b > 2.0 * a for a, b in zip(implied, implied[1:]))
    else:
        growth = False
    eta_bar = None
    peaks = [r.peak_card for r in usable if r.peak_card > r.card_lambda]
    if fit.kind == "exponential" and peaks:
        k_max = max(r.inner_iters for r in usable)
        eta_bar = fit.params.eta / (1.0 + max(k_max, 1))
    return CardinalityReport(fit.kind, rows, max_c, min_c, growth,
                             implied_log_c, eta_bar)
