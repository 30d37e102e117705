"""Best-N-term errors, algebraic and exponential sparsity-class quasi-norms,
minimal degree-of-freedom counts and empirical class fitting.

Two families of classes are supported, both defined through the
non-increasing rearrangement (v*_n) of the stored moduli:

* algebraic: sup_n n^(1/tau) |v*_n| with 1/tau = s/d + 1/2;
* exponential: sup_n n^((1-tau)/2) exp(eta w^(-tau) n^tau) |v*_n| with
  tau = t/d and w the measure of the d-dimensional unit ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import SpectralVector

#: multiplier used whenever a minimal-DOF bound is reported as a diagnostic
KAPPA = 2.0


class InsufficientDataError(ValueError):
    pass


def unit_ball_measure(d: int, convention: str = "euclidean") -> float:
    """Measure of the unit ball of R^d.

    "euclidean" gives pi^(d/2)/Gamma(d/2+1); "max" gives 2^d, which stays
    above 1 in every dimension.
    """
    if convention == "euclidean":
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    if convention == "max":
        return 2.0 ** d
    raise ValueError(f"unknown ball convention {convention!r}")


@dataclass(frozen=True)
class AlgebraicClassParams:
    s: float
    d: int = 1

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("decay exponent s must be positive")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def inv_tau(self) -> float:
        return self.s / self.d + 0.5

    @property
    def tau(self) -> float:
        return 1.0 / self.inv_tau

    def phi(self, n: float) -> float:
        """Decay law N^(-s/d) for N >= 1 (phi(0) taken as 1 for cutoffs)."""
        return 1.0 if n < 1 else float(n) ** (-self.s / self.d)

    def phi_inverse(self, lam: float) -> float:
        return lam ** (-self.d / self.s)


@dataclass(frozen=True)
class ExponentialClassParams:
    eta: float
    t: float
    d: int = 1
    ball: str = "euclidean"

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("rate eta must be positive")
        if not (0 < self.t <= self.d):
            raise ValueError("t must lie in (0, d]")

    @property
    def tau(self) -> float:
        return self.t / self.d

    @property
    def omega(self) -> float:
        return unit_ball_measure(self.d, self.ball)

    def phi(self, n: float) -> float:
        return math.exp(-self.eta * self.omega ** (-self.tau) * float(n) ** self.tau)

    def phi_inverse(self, lam: float) -> float:
        return (self.omega / self.eta ** (self.d / self.t)) * math.log(1.0 / lam) ** (self.d / self.t)


ClassParams = AlgebraicClassParams | ExponentialClassParams


def best_n_error(v: SpectralVector, n: int) -> float:
    """E_N(v): l2 norm of everything past the N largest rearranged entries."""
    if n < 0:
        raise ValueError("N must be >= 0")
    m = v.moduli()
    if n >= m.size:
        return 0.0
    tail = m[n:] ** 2
    # sum smallest-first for a stable tail
    return float(np.sqrt(np.sum(tail[::-1])))


def tail_errors(v: SpectralVector) -> np.ndarray:
    """E_N(v) for N = 0 .. support size, as one array."""
    m = v.moduli()
    sq = np.concatenate([np.cumsum((m ** 2)[::-1])[::-1], [0.0]])
    return np.sqrt(np.maximum(sq, 0.0))


def algebraic_quasinorm(v: SpectralVector, params: AlgebraicClassParams) -> float:
    m = v.moduli()
    if m.size == 0:
        return 0.0
    n = np.arange(1, m.size + 1, dtype=float)
    return float(np.max(n ** params.inv_tau * m))


def exponential_norm(v: SpectralVector, params: ExponentialClassParams) -> float:
    m = v.moduli()
    if m.size == 0:
        return 0.0
    return float(np.exp(np.max(_exp_log_weighted(m, params))))


def _exp_log_weighted(m: np.ndarray, params: ExponentialClassParams) -> np.ndarray:
    """log of the weighted rearranged moduli; sup of exp of this is the norm.

    Working in logs avoids overflow when the sequence sits outside the class.
    """
    n = np.arange(1, m.size + 1, dtype=float)
    tau = params.tau
    return ((1.0 - tau) / 2.0 * np.log(n)
            + params.eta * params.omega ** (-tau) * n ** tau
            + np.log(m))


def class_norm_from_errors(v: SpectralVector, params: ClassParams) -> float:
    """sup_N E_N(v)/phi(N), the approximation-class quasi-norm (finite sup)."""
    errs = tail_errors(v)
    best = 0.0
    for n, e in enumerate(errs):
        if e > 0.0:
            best = max(best, e / params.phi(n))
    return best


def min_dofs(class_norm: float, eps: float, params: ClassParams) -> int:
    """Minimal number of modes guaranteed to reach accuracy eps.

    ceil(phi^{-1}(eps/class_norm)) + 1; zero when eps already exceeds the
    full-norm bound class_norm * phi(0).
    """
    if eps <= 0 or class_norm <= 0:
        raise ValueError("eps and class_norm must be positive")
    lam = eps / class_norm
    if lam > 1.0:
        return 0
    return int(math.ceil(params.phi_inverse(lam))) + 1


@dataclass
class ClassFit:
    kind: str                       # "algebraic" | "exponential"
    params: ClassParams
    quasinorm: float
    r2: float
    window: tuple[int, int]         # 1-based inclusive range of n used
    extras: dict = field(default_factory=dict)

    def summary(self) -> str:
        if self.kind == "algebraic":
            ptxt = f"s={self.params.s:.6g}"
        else:
            ptxt = f"eta={self.params.eta:.6g},t={self.params.t:.6g}"
        return (f"kind={self.kind} params={ptxt} quasinorm={self.quasinorm:.6g} "
                f"r2={self.r2:.6g} window={self.window[0]}..{self.window[1]}")

    __str__ = summary


def _fit_window(size: int) -> tuple[int, int]:
    # drop the last 10% of entries: finite fixtures truncate ideal sequences
    hi = max(2, size - int(math.ceil(0.1 * size)))
    return 1, hi


def _linear_r2(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else -math.inf)
    return slope, intercept, r2


def fit_class(v: SpectralVector, kind: str, d: int | None = None,
              ball: str = "euclidean") -> ClassFit:
    """Least-squares estimate of the class parameters of a rearranged sequence.

    algebraic: slope of log v*_n against log n gives -1/tau, hence s.
    exponential: grid search t over (0, d] (64 steps, one refinement pass);
    at each t the rate comes from regressing the weight-corrected log moduli
    on n^tau.
    """
    d = d if d is not None else v.d
    m = v.moduli()
    if m.size < 8:
        raise InsufficientDataError(
            f"need at least 8 entries to fit a class, got {m.size}")
    lo, hi = _fit_window(m.size)
    mw = m[lo - 1:hi]
    n = np.arange(lo, hi + 1, dtype=float)
    logm = np.log(mw)

    if kind == "algebraic":
        slope, _, r2 = _linear_r2(np.log(n), logm)
        inv_tau = max(-slope, 0.5 + 1e-9)  # keep s positive
        s = d * (inv_tau - 0.5)
        params = AlgebraicClassParams(s=s, d=d)
        quasi = float(np.max(n ** inv_tau * mw))
        return ClassFit("algebraic", params, quasi, r2, (lo, hi))

    if kind != "exponential":
        raise ValueError(f"unknown class kind {kind!r}")

    omega = unit_ball_measure(d, ball)

    def fit_at(t: float):
        tau = t / d
        y = logm - (tau - 1.0) / 2.0 * np.log(n)
        slope, _, r2 = _linear_r2(omega ** (-tau) * n ** tau, y)
        return -slope, r2

    def scan(ts):
        best = None
        for t in ts:
            eta, r2 = fit_at(t)
            if eta <= 0:
                continue
            if best is None or r2 > best[2]:
                best = (t, eta, r2)
        return best

    grid = [d * (i + 1) / 64.0 for i in range(64)]
    best = scan(grid)
    if best is None:
        raise InsufficientDataError("no exponential rate fits this sequence")
    step = d / 64.0
    refined = scan([min(d, max(step / 64.0, best[0] + step * (j - 32) / 32.0))
                    for j in range(65)])
    if refined is not None and refined[2] >= best[2]:
        best = refined
    t, eta, r2 = best
    params = ExponentialClassParams(eta=eta, t=t, d=d, ball=ball)
    quasi = float(np.exp(np.max(_exp_log_weighted(mw, params)
                                + 0.0)))  # window sup with fitted params
    return ClassFit("exponential", params, quasi, r2, (lo, hi))


def genuine_rate_fit(v: SpectralVector) -> tuple[float, float]:
    """Plain log-linear rate: slope fit of log v*_n against n.

    Returns (rate, r2) with v*_n ~ C exp(-rate * n).  This is the bare
    exponential scale, with no ball-measure weight.
    """
    m = v.moduli()
    if m.size < 8:
        raise InsufficientDataError("need at least 8 entries")
    lo, hi = _fit_window(m.size)
    n = np.arange(lo, hi + 1, dtype=float)
    slope, _, r2 = _linear_r2(n, np.log(m[lo - 1:hi]))
    return -slope, r2
