"""Reference first-order methods used for comparison.

Work accounting matches the Pdprox solvers: every product with the data
(``H^T w`` or ``H alpha``) counts as one partial-gradient evaluation.
"""

from __future__ import annotations

import math
import time
from typing import Optional

import numpy as np

from .losses import LossSpec
from .numerics import Dataset
from .projections import dual_support
from .regularizers import SquaredL2Half
from .solvers import (
    SaddleProblem,
    Solution,
    SolverTrace,
    TraceRecord,
    build_erm_problem,
    dual_certificate,
    dual_sparsity,
    primal_objective,
    primal_sparsity,
)


def _record(p, t, seconds, w_eval, a_hat, w_t, a_t):
    pobj = primal_objective(p, w_eval)
    dobj, flag = dual_certificate(p, a_hat) if a_hat is not None else (None, "unavailable")
    gap = None if dobj is None else pobj - dobj
    return TraceRecord(t, seconds, pobj, dobj, gap, primal_sparsity(p.reg, w_t),
                       dual_sparsity(a_t), flag)


def solve_subgradient(p: SaddleProblem, steps: int, eta0: float = 1.0, stride: int = 10):
    """Projected subgradient descent on the primal objective.

    Step ``eta0 / sqrt(t)``. The subgradient of the loss term at ``w`` is
    ``b + H alpha(w)`` where ``alpha(w)`` maximizes the bilinear form, so the
    running average of those maximizers doubles as a dual estimate.
    Returns ``(Solution, SolverTrace)`` with the averaged iterate as ``w``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if eta0 < 0:
        raise ValueError("eta0 must be nonnegative")
    bf = p.bilinear
    w = np.zeros(p.primal_size)
    sum_w = np.zeros_like(w)
    sum_a = np.zeros(p.dual_size)
    trace = SolverTrace()
    elapsed = 0.0
    a = sum_a
    for t in range(1, steps + 1):
        t0 = time.perf_counter()
        _, a = dual_support(p.domain, bf.grad_alpha(w))
        g = bf.grad_w(a) + p.lam * p.reg.subgradient(w)
        sum_w += w
        sum_a += a
        w = w - (eta0 / math.sqrt(t)) * g
        if p.primal_domain is not None:
            w = p.primal_domain.project(w)
        elapsed += time.perf_counter() - t0
        if t % stride == 0 or t == steps:
            trace.append(_record(p, t, elapsed, sum_w / t, sum_a / t, w, a))
    last = trace[-1]
    sol = Solution(sum_w / steps, sum_a / steps, w.copy(), a.copy(), steps, last.primal_obj,
                   last.dual_obj, last.gap, steps, steps, elapsed)
    return sol, trace


def solve_pegasos(ds: Dataset, lam: float, steps: int, stride: int = 1,
                  problem: Optional[SaddleProblem] = None):
    """Deterministic (full-gradient) Pegasos for the L2-regularized SVM.

    ``w_{t+1} = Proj[(1 - 1/t) w_t + (1 / (lam t)) (1/n) sum_{y_i w.x_i < 1} y_i x_i]``
    onto the ball of radius ``1/sqrt(lam)``. The trace reports the last
    iterate, which is what the method outputs. Each step is one pass for the
    margins and one for the gradient.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not ds.is_binary() or ds.is_multi_output:
        raise ValueError("Pegasos runs on binary classification data only")
    p = problem or build_erm_problem(LossSpec("hinge"), ds, SquaredL2Half(), lam)
    if p.loss is not None and p.loss.kind != "hinge":
        raise ValueError("Pegasos supports the hinge loss only")
    if not isinstance(p.reg, SquaredL2Half):
        raise ValueError("Pegasos supports the squared L2 regularizer only")
    X, y, n = ds.features, ds.labels, ds.n
    radius = 1.0 / math.sqrt(lam)
    w = np.zeros(ds.d)
    sum_w = np.zeros_like(w)
    trace = SolverTrace()
    elapsed = 0.0
    for t in range(1, steps + 1):
        t0 = time.perf_counter()
        active = (y * (X @ w)) < 1.0
        grad_loss = -(X.T @ (y * active)) / n
        eta = 1.0 / (lam * t)
        w = w - eta * (lam * w + grad_loss)
        nrm = np.linalg.norm(w)
        if nrm > radius:
            w *= radius / nrm
        sum_w += w
        elapsed += time.perf_counter() - t0
        if t % stride == 0 or t == steps:
            trace.append(_record(p, t, elapsed, w, None, w, None))
    last = trace[-1]
    sol = Solution(w.copy(), None, w.copy(), None, steps, last.primal_obj, None, None,
                   steps, steps, elapsed)
    return sol, trace
