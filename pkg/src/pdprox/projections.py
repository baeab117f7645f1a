"""Euclidean projections onto dual feasible sets.

A dual vector is stored example-major: block ``i`` occupies slots
``[i*k, (i+1)*k)``. :class:`DualDomain` describes the per-block set and an
optional global cap ``sum(alpha) <= m`` over nonnegative scalar blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

BISECT_RTOL = 1e-10
BISECT_MAXITER = 500


@dataclass(frozen=True)
class Box:
    """Coordinate-wise bounds; ``lo``/``hi`` are scalars or arrays that
    broadcast against the ``(n, k)`` block layout."""

    lo: Union[float, np.ndarray]
    hi: Union[float, np.ndarray]

    def __post_init__(self):
        if np.any(np.asarray(self.lo) > np.asarray(self.hi)):
            raise ValueError("Box requires lo <= hi")


@dataclass(frozen=True)
class BoxLinear:
    """Per-block set ``{a in [0, s]^k : v . a <= rho}``."""

    s: float
    v: tuple
    rho: float

    def __post_init__(self):
        if self.s <= 0 or self.rho <= 0 or min(self.v) <= 0:
            raise ValueError("BoxLinear requires s > 0, rho > 0 and positive weights")


@dataclass(frozen=True)
class L2Ball:
    radius: float = 1.0


Block = Union[Box, BoxLinear, L2Ball]


@dataclass(frozen=True)
class DualDomain:
    n: int
    k: int
    block: Block
    l1_cap: Optional[float] = None

    def __post_init__(self):
        if self.l1_cap is not None:
            if not isinstance(self.block, Box) or np.any(np.asarray(self.block.lo) != 0):
                raise ValueError("a global l1 cap is only supported over [0, hi] box blocks")
            if np.ndim(self.block.hi) != 0:
                raise ValueError("a global l1 cap requires a scalar box upper bound")
            if self.l1_cap <= 0:
                raise ValueError("l1 cap must be positive")

    @property
    def size(self) -> int:
        return self.n * self.k

    def with_cap(self, m: Optional[float]) -> "DualDomain":
        return DualDomain(self.n, self.k, self.block, m)


def project_box(v, lo, hi) -> np.ndarray:
    if np.any(np.asarray(lo) > np.asarray(hi)):
        raise ValueError("project_box requires lo <= hi")
    return np.clip(np.asarray(v, dtype=np.float64), lo, hi)


def project_l2_ball(v, r: float) -> np.ndarray:
    if r < 0:
        raise ValueError("radius must be nonnegative")
    v = np.asarray(v, dtype=np.float64)
    nrm = np.linalg.norm(v)
    if nrm <= r:
        return v.copy()
    return v * (r / nrm)


def _load(A, eta, v, s):
    return np.clip(A - eta[:, None] * v, 0.0, s) @ v


def _project_box_linear_rows(A: np.ndarray, s: float, v: np.ndarray, rho: float) -> np.ndarray:
    """Row-wise projection onto ``{a in [0,s]^k : v.a <= rho}``.

    Each row gets its own multiplier ``eta``; all rows bisect in lockstep.
    """
    A = np.asarray(A, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    out = np.clip(A, 0.0, s)
    over = out @ v > rho
    if not np.any(over):
        return out
    B = A[over]
    tol = BISECT_RTOL * max(1.0, rho)
    lo = np.zeros(B.shape[0])
    hi = np.max(B / v, axis=1)
    for _ in range(BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        r = _load(B, mid, v, s) - rho
        pos = r > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        if np.all(np.abs(r) <= tol) or np.all(hi - lo <= 1e-16 * np.maximum(1.0, hi)):
            break
    # Polish: solve the linear equation on the active set found at hi.
    Z = B - hi[:, None] * v
    free = (Z > 0) & (Z < s)
    upper = Z >= s
    den = (free * v * v).sum(axis=1)
    num = (free * B * v).sum(axis=1) + s * (upper * v).sum(axis=1) - rho
    with np.errstate(divide="ignore", invalid="ignore"):
        eta_exact = np.where(den > 0, num / den, hi)
    r_exact = np.abs(_load(B, eta_exact, v, s) - rho)
    r_hi = np.abs(_load(B, hi, v, s) - rho)
    eta = np.where((r_exact <= r_hi) & (eta_exact >= 0), eta_exact, hi)
    out[over] = np.clip(B - eta[:, None] * v, 0.0, s)
    return out


def project_box_linear(alpha_hat, s: float, v, rho: float) -> np.ndarray:
    """Project onto ``{a in [0, s]^n : v . a <= rho}`` by thresholding.

    The solution is ``clip(alpha_hat - eta * v, 0, s)`` where ``eta = 0`` if
    the clipped point already satisfies the linear constraint and otherwise
    solves ``sum(clip(alpha_hat - eta*v, 0, s) * v) = rho``. The left-hand
    side is non-increasing in ``eta`` so bisection on
    ``[0, max(alpha_hat / v)]`` finds it.
    """
    a = np.asarray(alpha_hat, dtype=np.float64)
    v = np.broadcast_to(np.asarray(v, dtype=np.float64), a.shape)
    if s <= 0 or rho <= 0 or np.any(v <= 0):
        raise ValueError("project_box_linear requires s > 0, rho > 0, v > 0")
    return _project_box_linear_rows(a[None, :], s, v, rho)[0]


def box_linear_residual(alpha_hat, eta: float, s: float, v, rho: float) -> float:
    """``sum(clip(alpha_hat - eta*v, 0, s) * v) - rho``."""
    a = np.asarray(alpha_hat, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return float(np.clip(a - eta * v, 0.0, s) @ v - rho)


def project_dual_domain(dom: DualDomain, alpha_hat) -> np.ndarray:
    a = np.asarray(alpha_hat, dtype=np.float64)
    if a.shape != (dom.size,):
        raise ValueError(f"dual vector has shape {a.shape}, expected ({dom.size},)")
    A = a.reshape(dom.n, dom.k)
    blk = dom.block
    if dom.l1_cap is not None:
        return project_box_linear(a, float(blk.hi), np.ones_like(a), dom.l1_cap)
    if isinstance(blk, Box):
        out = np.clip(A, blk.lo, blk.hi)
    elif isinstance(blk, BoxLinear):
        out = _project_box_linear_rows(A, blk.s, np.asarray(blk.v, dtype=np.float64), blk.rho)
    elif isinstance(blk, L2Ball):
        nrm = np.linalg.norm(A, axis=1)
        scale = np.where(nrm > blk.radius, blk.radius / np.where(nrm > 0, nrm, 1.0), 1.0)
        out = A * scale[:, None]
    else:
        raise TypeError(f"unknown dual block {blk!r}")
    return out.reshape(-1)


def _knapsack_rows(G: np.ndarray, s, v: np.ndarray, rho: float):
    """Maximize ``g . a`` over ``{a in [0, s]^k, v . a <= rho}`` row-wise.

    Greedy by ratio ``g_i / v_i`` (fractional knapsack), which is exact for
    a single linear budget.
    """
    G = np.asarray(G, dtype=np.float64)
    V = np.broadcast_to(v, G.shape)
    S = np.broadcast_to(np.asarray(s, dtype=np.float64), G.shape)
    ratio = np.where(G > 0, G / V, -np.inf)
    order = np.argsort(-ratio, axis=1, kind="stable")
    Vs = np.take_along_axis(V, order, axis=1)
    Ss = np.take_along_axis(S, order, axis=1)
    Rs = np.take_along_axis(ratio, order, axis=1)
    full = Ss * Vs
    before = np.cumsum(full, axis=1) - full
    take_w = np.clip(rho - before, 0.0, full)
    take_w = np.where(Rs > 0, take_w, 0.0)
    A_sorted = take_w / Vs
    A = np.empty_like(G)
    np.put_along_axis(A, order, A_sorted, axis=1)
    return (A * G).sum(axis=1), A


def dual_support(dom: DualDomain, g) -> tuple:
    """Return ``(max_a g.a, argmax)`` over the dual domain.

    This is the support function of ``Q_alpha``; with ``g = a + H^T w`` it
    evaluates the loss term ``max_alpha L(w, alpha)``.
    """
    g = np.asarray(g, dtype=np.float64)
    G = g.reshape(dom.n, dom.k)
    blk = dom.block
    if dom.l1_cap is not None:
        val, A = _knapsack_rows(g[None, :], float(blk.hi), np.ones(g.size), dom.l1_cap)
        return float(val[0]), A[0]
    if isinstance(blk, Box):
        lo = np.broadcast_to(blk.lo, G.shape)
        hi = np.broadcast_to(blk.hi, G.shape)
        A = np.where(G > 0, hi, lo)
    elif isinstance(blk, BoxLinear):
        _, A = _knapsack_rows(G, blk.s, np.asarray(blk.v, dtype=np.float64), blk.rho)
    elif isinstance(blk, L2Ball):
        nrm = np.linalg.norm(G, axis=1, keepdims=True)
        A = np.where(nrm > 0, blk.radius * G / np.where(nrm > 0, nrm, 1.0), 0.0)
    else:
        raise TypeError(f"unknown dual block {blk!r}")
    A = A.reshape(-1)
    return float(A @ g), A


def is_feasible(dom: DualDomain, alpha, tol: float = 1e-9) -> bool:
    a = np.asarray(alpha, dtype=np.float64)
    A = a.reshape(dom.n, dom.k)
    blk = dom.block
    if isinstance(blk, Box):
        ok = np.all(A >= np.asarray(blk.lo) - tol) and np.all(A <= np.asarray(blk.hi) + tol)
    elif isinstance(blk, BoxLinear):
        v = np.asarray(blk.v)
        ok = (np.all(A >= -tol) and np.all(A <= blk.s + tol)
              and np.all(A @ v <= blk.rho * (1 + tol) + tol))
    else:
        ok = np.all(np.linalg.norm(A, axis=1) <= blk.radius * (1 + tol))
    if dom.l1_cap is not None:
        ok = ok and a.sum() <= dom.l1_cap * (1 + tol)
    return bool(ok)
