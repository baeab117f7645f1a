"""Primal-dual prox solvers for ``min_w max_alpha L(w, alpha) + lam * R(w)``.

Three variants share one problem description:

``"dual"``
    Two dual sequences (alpha, beta), each updated by a projected gradient
    step, and one composite (prox) step on w per iteration.
``"dual-fast"``
    As ``"dual"`` but the second dual sequence is extrapolated,
    ``beta_t = alpha_t + sigma (G_a(w_t) - G_a(w_{t-1}))``, with no
    projection.
``"primal"``
    One dual sequence and two primal sequences (w, u); u is extrapolated.

All variants evaluate exactly two partial gradients per iteration after the
first, because ``G_w`` depends only on alpha and ``G_alpha`` only on w.
Outputs are the running averages of the iterates.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .losses import BilinearForm, LossSpec, bilinear_build, lipschitz_c
from .numerics import Dataset
from .projections import DualDomain, dual_support, is_feasible, project_dual_domain
from .regularizers import ConjugateUnavailable, L1, L2Norm, Regularizer, SquaredL2Half

VARIANTS = ("dual", "dual-fast", "primal")


# ---------------------------------------------------------------------------
# Problem description


@dataclass(frozen=True)
class BallDomain:
    """Primal constraint ``||w||_2 <= radius``."""

    radius: float

    def project(self, w):
        nrm = np.linalg.norm(w)
        return w if nrm <= self.radius else w * (self.radius / nrm)


@dataclass(frozen=True)
class BoxDomain:
    """Primal constraint ``lo <= w <= hi`` (must contain 0)."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= 0 <= self.hi:
            raise ValueError("primal box must contain the origin")

    def project(self, w):
        return np.clip(w, self.lo, self.hi)


PrimalDomain = Union[BallDomain, BoxDomain]


def _check_primal_domain(dom, reg: Regularizer):
    # prox followed by projection is the exact constrained prox only for
    # these pairs (radial with radial, separable with separable).
    if dom is None:
        return
    if isinstance(dom, BallDomain):
        ok = type(reg) in (SquaredL2Half, L2Norm) and reg.mask is None
    else:
        ok = type(reg) in (SquaredL2Half, L1)
    if not ok:
        raise ValueError(f"primal domain {dom!r} is not supported with {reg!r}")


@dataclass
class SaddleProblem:
    bilinear: BilinearForm
    domain: DualDomain
    reg: Regularizer
    lam: float
    c: float
    primal_domain: Optional[PrimalDomain] = None
    loss: Optional[LossSpec] = field(default=None, repr=False)
    data: Optional[Dataset] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.c > 0:
            raise ValueError("Lipschitz constant c must be positive")
        if self.domain.size != self.bilinear.dual_size:
            raise ValueError("dual domain size does not match the bilinear form")
        self.reg.value(np.zeros(self.bilinear.primal_size))  # shape check
        _check_primal_domain(self.primal_domain, self.reg)

    @property
    def primal_size(self) -> int:
        return self.bilinear.primal_size

    @property
    def dual_size(self) -> int:
        return self.bilinear.dual_size


def build_erm_problem(
    loss: LossSpec,
    ds: Dataset,
    reg: Regularizer,
    lam: float,
    dual_cap: Optional[float] = None,
    primal_domain: Optional[PrimalDomain] = None,
) -> SaddleProblem:
    """Regularized empirical loss over a dataset as a saddle problem.

    ``c`` is the larger of the two closed-form Lipschitz constants. A zero
    data matrix satisfies the Lipschitz inequalities with any ``c``; 1 is used.
    """
    bf, dom = bilinear_build(loss, ds)
    if dual_cap is not None:
        dom = dom.with_cap(dual_cap)
    c = lipschitz_c(loss, ds, "both")
    if c == 0.0:
        c = 1.0
    return SaddleProblem(bf, dom, reg, lam, c, primal_domain, loss, ds)


def augment_bias(p: SaddleProblem) -> SaddleProblem:
    """Prepend a constant feature so the model learns an unpenalized offset.

    The regularizer ignores slot 0 and ``c`` is recomputed for the enlarged
    rows (``||x_hat|| <= sqrt(1 + R^2)``).
    """
    if p.loss is None or p.data is None:
        raise ValueError("augment_bias needs a problem built from a loss and dataset")
    if p.data.is_multi_output or len(p.bilinear.primal_shape) != 1:
        raise ValueError("augment_bias supports vector-primal problems only")
    if p.primal_domain is not None:
        raise ValueError("augment_bias does not extend a primal domain")
    ds = p.data
    ones = sp.csr_matrix(np.ones((ds.n, 1)))
    Xh = sp.hstack([ones, ds.features], format="csr")
    dsh = Dataset(Xh, ds.labels)
    old_mask = [] if p.reg.mask is None else list(np.asarray(p.reg.mask) + 1)
    reg = p.reg.with_mask([0] + old_mask, ds.d + 1)
    return build_erm_problem(p.loss, dsh, reg, p.lam, p.domain.l1_cap)


# ---------------------------------------------------------------------------
# Objectives and certificates


def primal_objective(p: SaddleProblem, w) -> float:
    """``max_alpha F(w, alpha)``: loss via the support function of ``Q_alpha``."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    bf = p.bilinear
    loss, _ = dual_support(p.domain, bf.grad_alpha(w))
    return float(bf.c0 + bf.b @ w + loss + p.lam * p.reg.value(w))


def worst_dual(p: SaddleProblem, w) -> np.ndarray:
    """``argmax_alpha F(w, alpha)``."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    return dual_support(p.domain, p.bilinear.grad_alpha(w))[1]


def saddle_value(p: SaddleProblem, w, alpha) -> float:
    """``F(w, alpha) = L(w, alpha) + lam R(w)``."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    return p.bilinear.value(w, np.asarray(alpha, dtype=np.float64)) + p.lam * p.reg.value(w)


def _largest_feasible_scale(reg: Regularizer, u0, u1) -> float:
    """Largest ``s`` in [0, 1] with ``||u0 + s u1||_* <= 1`` (norm is convex in s)."""
    if not np.any(u0):
        dn = reg.dual_norm(u1)
        return 0.0 if not math.isfinite(dn) else min(1.0, 1.0 / dn)
    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if reg.dual_norm(u0 + mid * u1) <= 1.0:
            lo = mid
        else:
            hi = mid
    return lo


def dual_certificate(p: SaddleProblem, alpha) -> tuple:
    """Return ``(D(alpha'), flag)``.

    ``D(alpha) = c0 + a.alpha - lam R*((-b - H alpha) / lam)`` is valid when
    the primal variable is unconstrained. For norm regularizers whose
    conjugate is infinite at ``alpha``, ``alpha`` is shrunk toward 0 until the
    argument lands in the dual-norm ball and the flag is ``"scaled"``; the
    result is still a valid lower bound. ``None`` / ``"unavailable"`` when no
    certificate can be formed.
    """
    if p.primal_domain is not None:
        return None, "unavailable"
    alpha = np.asarray(alpha, dtype=np.float64)
    if not is_feasible(p.domain, alpha, tol=0.0):
        alpha = project_dual_domain(p.domain, alpha)
    bf, lam, reg = p.bilinear, p.lam, p.reg
    u0 = -bf.b / lam
    u1 = -bf.H.matvec(alpha) / lam
    base = bf.c0 + bf.a @ alpha
    if not reg.is_norm:
        try:
            rc = reg.conjugate(u0 + u1)
        except ConjugateUnavailable:
            return None, "unavailable"
        if not math.isfinite(rc):
            return None, "unavailable"
        return float(base - lam * rc), ""
    try:
        dn = reg.dual_norm(u0 + u1)
    except ConjugateUnavailable:
        return None, "unavailable"
    if dn <= 1.0:
        return float(base), ""
    if not math.isfinite(dn) or reg.dual_norm(u0) > 1.0:
        return None, "unavailable"
    s = _largest_feasible_scale(reg, u0, u1)
    return float(bf.c0 + s * (bf.a @ alpha)), "scaled"


def dual_objective(p: SaddleProblem, alpha) -> Optional[float]:
    return dual_certificate(p, alpha)[0]


def duality_gap(p: SaddleProblem, w, alpha) -> Optional[float]:
    d = dual_objective(p, alpha)
    return None if d is None else primal_objective(p, w) - d


# ---------------------------------------------------------------------------
# Configuration and results


def default_step_size(c: float, scale: float = 1.0) -> float:
    """``scale * sqrt(1 / (2c))``."""
    if not c > 0:
        raise ValueError("c must be positive")
    if not scale > 0:
        raise ValueError("scale must be positive")
    return scale * math.sqrt(1.0 / (2.0 * c))


@dataclass(frozen=True)
class SingleStep:
    """One step size for both sides: ``gamma`` or ``scale * sqrt(1/(2c))``."""

    scale: float = 1.0
    gamma: Optional[float] = None


@dataclass(frozen=True)
class TwoStep:
    """Primal step ``tau`` and dual step ``sigma`` with ``tau * sigma <= 1/c``."""

    tau: float
    sigma: float

    @classmethod
    def from_ratio(cls, c: float, ratio: float) -> "TwoStep":
        """``tau / sigma = ratio`` and ``tau * sigma = 1 / c``."""
        if not ratio > 0:
            raise ValueError("ratio must be positive")
        g = math.sqrt(1.0 / c)
        r = math.sqrt(ratio)
        return cls(g * r, g / r)


STEP_SCALE_GRID = tuple(2.0 ** k for k in range(-10, 11))
STEP_RATIO_GRID = (1000.0, 100.0, 10.0, 1.0, 0.1, 0.01, 0.001)


@dataclass(frozen=True)
class SolverConfig:
    variant: str = "dual"
    step: Union[SingleStep, TwoStep] = SingleStep()
    max_iter: int = 1000
    gap_tol: Optional[float] = None
    stride: int = 10
    bias: bool = False
    log_at: Optional[Sequence[int]] = None
    keep_iterates: bool = False
    callback: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if isinstance(self.step, SingleStep):
            if not self.step.scale > 0 or (self.step.gamma is not None and not self.step.gamma > 0):
                raise ValueError("step size must be positive")


def step_sizes(p: SaddleProblem, step) -> tuple:
    """Resolve a step scheme to ``(tau, sigma)`` for the problem."""
    if isinstance(step, SingleStep):
        g = step.gamma if step.gamma is not None else default_step_size(p.c, step.scale)
        return g, g
    if not (step.tau > 0 and step.sigma > 0):
        raise ValueError("step sizes must be positive")
    if step.tau * step.sigma > (1.0 / p.c) * (1 + 1e-12):
        raise ValueError(
            f"two-step pair violates tau*sigma <= 1/c: {step.tau * step.sigma:.3g} > {1 / p.c:.3g}"
        )
    return step.tau, step.sigma


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    seconds: float
    primal_obj: float
    dual_obj: Optional[float]
    gap: Optional[float]
    primal_sparsity: float
    dual_sparsity: float
    gap_flag: str = ""


@dataclass
class SolverTrace:
    records: List[TraceRecord] = field(default_factory=list)

    def append(self, rec: TraceRecord):
        if self.records and rec.iteration <= self.records[-1].iteration:
            raise ValueError("trace iterations must be strictly increasing")
        self.records.append(rec)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]


@dataclass
class Solution:
    w: np.ndarray
    alpha: Optional[np.ndarray]
    w_last: np.ndarray
    alpha_last: Optional[np.ndarray]
    iterations: int
    primal_obj: float
    dual_obj: Optional[float]
    gap: Optional[float]
    grad_w_evals: int = 0
    grad_alpha_evals: int = 0
    seconds: float = 0.0
    iterates: Optional[list] = None

    @property
    def best_gap(self) -> Optional[float]:
        return self.gap


def primal_sparsity(reg: Regularizer, w) -> float:
    blocks = reg.blocks(w.size)
    if not blocks:
        return 0.0
    return float(np.mean([not np.any(w[b]) for b in blocks]))


def dual_sparsity(alpha) -> float:
    if alpha is None or alpha.size == 0:
        return 0.0
    return float(np.mean(alpha == 0.0))


class _Recorder:
    """Evaluates objectives at the running averages outside the timed region."""

    def __init__(self, p: SaddleProblem, cfg: SolverConfig):
        self.p, self.cfg = p, cfg
        self.trace = SolverTrace()
        self.log_at = set(cfg.log_at or ())
        self.best_gap = math.inf
        self.last_obj = None
        self.last_obj_iter = 0

    def due(self, t: int) -> bool:
        return t % self.cfg.stride == 0 or t in self.log_at or t == self.cfg.max_iter

    def record(self, t, seconds, w_hat, a_hat, w_t, a_t) -> TraceRecord:
        p = self.p
        pobj = primal_objective(p, w_hat)
        dobj, flag = dual_certificate(p, a_hat) if a_hat is not None else (None, "unavailable")
        gap = None if dobj is None else pobj - dobj
        if gap is not None:
            self.best_gap = min(self.best_gap, gap)
        rec = TraceRecord(t, seconds, pobj, dobj, gap, primal_sparsity(p.reg, w_t),
                          dual_sparsity(a_t), flag)
        self.trace.append(rec)
        if self.cfg.callback is not None:
            self.cfg.callback(t, w_hat, a_hat, w_t, a_t)
        return rec

    def should_stop(self, t, rec: Optional[TraceRecord], w_hat) -> bool:
        tol = self.cfg.gap_tol
        if tol is None:
            return False
        if rec is not None and rec.gap is not None:
            return rec.gap <= tol
        # No certificate: stop on relative objective change < 1e-9 over 100 iterations.
        if t - self.last_obj_iter >= 100:
            obj = rec.primal_obj if rec is not None else primal_objective(self.p, w_hat)
            prev = self.last_obj
            self.last_obj, self.last_obj_iter = obj, t
            if prev is not None and abs(obj - prev) <= 1e-9 * max(1.0, abs(prev)):
                return True
        return False


def _composite(p: SaddleProblem, v, tau):
    w = p.reg.prox(v, tau * p.lam)
    if p.primal_domain is not None:
        w = p.primal_domain.project(w)
    return w


def _finish(p, rec: _Recorder, t, seconds, sum_w, sum_a, w, a, nw, na, iterates):
    w_hat = sum_w / t
    a_hat = sum_a / t
    last = rec.trace.records[-1] if rec.trace.records else None
    if last is None or last.iteration != t:
        last = rec.record(t, seconds, w_hat, a_hat, w, a)
    return Solution(w_hat, a_hat, w.copy(), a.copy(), t, last.primal_obj, last.dual_obj,
                    last.gap, nw, na, seconds, iterates)


def solve_pdprox_dual(p: SaddleProblem, cfg: SolverConfig = SolverConfig()):
    """Run the double-dual variants (``"dual"`` or ``"dual-fast"``).

    Returns ``(Solution, SolverTrace)``.
    """
    if cfg.variant not in ("dual", "dual-fast"):
        raise ValueError(f"solve_pdprox_dual does not run variant {cfg.variant!r}")
    if cfg.bias:
        p = augment_bias(p)
        cfg = replace(cfg, bias=False)
    tau, sigma = step_sizes(p, cfg.step)
    bf, dom = p.bilinear, p.domain
    fast = cfg.variant == "dual-fast"

    w = np.zeros(p.primal_size)
    beta = np.zeros(p.dual_size)
    ga = bf.grad_alpha(w)
    n_gw, n_ga = 0, 1
    sum_w = np.zeros_like(w)
    sum_a = np.zeros_like(beta)
    rec = _Recorder(p, cfg)
    iterates = [] if cfg.keep_iterates else None
    elapsed = 0.0
    t = 0
    alpha = beta
    for t in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        alpha = project_dual_domain(dom, beta + sigma * ga)
        gw = bf.grad_w(alpha)
        w = _composite(p, w - tau * gw, tau)
        ga_new = bf.grad_alpha(w)
        n_gw += 1
        n_ga += 1
        if fast:
            beta = alpha + sigma * (ga_new - ga)
        else:
            beta = project_dual_domain(dom, beta + sigma * ga_new)
        ga = ga_new
        sum_w += w
        sum_a += alpha
        elapsed += time.perf_counter() - t0
        if iterates is not None:
            iterates.append((w.copy(), alpha.copy()))
        r = rec.record(t, elapsed, sum_w / t, sum_a / t, w, alpha) if rec.due(t) else None
        if rec.should_stop(t, r, sum_w / t):
            break
    sol = _finish(p, rec, t, elapsed, sum_w, sum_a, w, alpha, n_gw, n_ga, iterates)
    return sol, rec.trace


def solve_pdprox_primal(p: SaddleProblem, cfg: SolverConfig = SolverConfig(variant="primal")):
    """Run the double-primal variant. Returns ``(Solution, SolverTrace)``."""
    if cfg.variant != "primal":
        raise ValueError(f"solve_pdprox_primal does not run variant {cfg.variant!r}")
    if cfg.bias:
        p = augment_bias(p)
        cfg = replace(cfg, bias=False)
    tau, sigma = step_sizes(p, cfg.step)
    bf, dom = p.bilinear, p.domain

    u = np.zeros(p.primal_size)
    alpha = np.zeros(p.dual_size)
    gw = bf.grad_w(alpha)
    n_gw, n_ga = 1, 0
    sum_w = np.zeros_like(u)
    sum_a = np.zeros_like(alpha)
    rec = _Recorder(p, cfg)
    iterates = [] if cfg.keep_iterates else None
    elapsed = 0.0
    t = 0
    w = u
    for t in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        w = _composite(p, u - tau * gw, tau)
        ga = bf.grad_alpha(w)
        alpha = project_dual_domain(dom, alpha + sigma * ga)
        gw_new = bf.grad_w(alpha)
        n_gw += 1
        n_ga += 1
        u = w + tau * (gw - gw_new)
        gw = gw_new
        sum_w += w
        sum_a += alpha
        elapsed += time.perf_counter() - t0
        if iterates is not None:
            iterates.append((w.copy(), alpha.copy()))
        r = rec.record(t, elapsed, sum_w / t, sum_a / t, w, alpha) if rec.due(t) else None
        if rec.should_stop(t, r, sum_w / t):
            break
    sol = _finish(p, rec, t, elapsed, sum_w, sum_a, w, alpha, n_gw, n_ga, iterates)
    return sol, rec.trace


def solve(p: SaddleProblem, cfg: SolverConfig = SolverConfig()):
    """Dispatch on ``cfg.variant``."""
    if cfg.variant == "primal":
        return solve_pdprox_primal(p, cfg)
    return solve_pdprox_dual(p, cfg)


def tune_step_scale(p: SaddleProblem, cfg: SolverConfig, grid=STEP_SCALE_GRID):
    """Pick the scale from ``grid`` giving the lowest final primal objective."""
    best = None
    for s in grid:
        c = replace(cfg, step=SingleStep(scale=s), callback=None, keep_iterates=False)
        sol, _ = solve(p, c)
        if math.isfinite(sol.primal_obj) and (best is None or sol.primal_obj < best[1]):
            best = (s, sol.primal_obj)
    return best[0]


def tune_step_ratio(p: SaddleProblem, cfg: SolverConfig, grid=STEP_RATIO_GRID):
    """Pick the two-step ratio from ``grid`` giving the lowest final primal objective."""
    best = None
    for r in grid:
        c = replace(cfg, step=TwoStep.from_ratio(p.c, r), callback=None, keep_iterates=False)
        sol, _ = solve(p, c)
        if math.isfinite(sol.primal_obj) and (best is None or sol.primal_obj < best[1]):
            best = (r, sol.primal_obj)
    return best[0]
