"""Non-smooth regularizers: value, prox, convex conjugate and a subgradient.

Every regularizer acts on a flat primal vector. Matrix-valued kinds carry
their ``shape`` and reshape internally (row ``j`` of ``W`` is ``w^j``).

A ``mask`` lists coordinates that the penalty ignores (e.g. a bias slot).
Masked coordinates pass through the prox untouched, contribute nothing to
the value, and make the conjugate infinite unless the matching entries of
its argument vanish.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .numerics import NumericError, thin_svd

COMPOSITE_RTOL = 1e-10
COMPOSITE_MAX_DOUBLINGS = 200
CONJ_SLACK = 1e-9


class ConjugateUnavailable(NotImplementedError):
    """The regularizer has no closed-form conjugate."""


# ---------------------------------------------------------------------------
# l1-ball projection (sort and threshold)


def project_l1_ball(v, r: float) -> np.ndarray:
    """Euclidean projection onto ``{x : ||x||_1 <= r}``."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    v = np.asarray(v, dtype=np.float64)
    return _project_l1_rows(v.reshape(1, -1), np.array([r])).reshape(v.shape)


def _project_l1_rows(V: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Project each row of ``V`` onto the l1 ball of radius ``r[row]``."""
    V = np.asarray(V, dtype=np.float64)
    r = np.broadcast_to(np.asarray(r, dtype=np.float64), (V.shape[0],))
    absV = np.abs(V)
    inside = absV.sum(axis=1) <= r
    out = V.copy()
    if np.all(inside):
        return out
    rows = ~inside
    U = -np.sort(-absV[rows], axis=1)
    css = np.cumsum(U, axis=1)
    j = np.arange(1, U.shape[1] + 1)
    cond = U - (css - r[rows, None]) / j > 0
    # The first entry always qualifies in exact arithmetic; rounding can hide it.
    rho = np.where(cond.any(axis=1), U.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1), 0)
    theta = (css[np.arange(U.shape[0]), rho] - r[rows]) / (rho + 1)
    theta = np.where(r[rows] > 0, np.maximum(theta, 0.0), U[:, 0])
    out[rows] = np.sign(V[rows]) * np.maximum(absV[rows] - theta[:, None], 0.0)
    return out


# ---------------------------------------------------------------------------


class Regularizer:
    """Base class. Subclasses implement the unmasked ``_`` methods."""

    #: ``True`` when R is a norm (conjugate is a dual-ball indicator).
    is_norm = True

    def __init__(self, mask: Optional[Sequence[int]] = None, size: Optional[int] = None):
        self.mask = None if mask is None else np.unique(np.asarray(mask, dtype=int))
        self.size = size

    # -- masking helpers -------------------------------------------------
    def _keep(self, n: int) -> np.ndarray:
        keep = np.ones(n, dtype=bool)
        if self.mask is not None:
            keep[self.mask] = False
        return keep

    def _check(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64).reshape(-1)
        if self.size is not None and w.size != self.size:
            raise ValueError(f"{type(self).__name__} expects {self.size} entries, got {w.size}")
        return w

    def with_mask(self, mask, size: int) -> "Regularizer":
        """Copy of this regularizer acting on ``size`` coordinates, ignoring ``mask``."""
        import copy

        out = copy.copy(self)
        out.mask = np.unique(np.asarray(mask, dtype=int))
        out.size = size
        return out

    # -- public API --------------------------------------------------------
    def value(self, w) -> float:
        w = self._check(w)
        return float(self._value(w[self._keep(w.size)]))

    def prox(self, v, tau: float) -> np.ndarray:
        if not tau > 0:
            raise ValueError("prox step tau must be positive")
        v = self._check(v)
        keep = self._keep(v.size)
        out = v.copy()
        out[keep] = self._prox(v[keep], tau)
        return out

    def conjugate(self, u) -> float:
        """``R*(u)``; ``inf`` outside the domain of the conjugate."""
        u = self._check(u)
        keep = self._keep(u.size)
        if np.any(u[~keep] != 0.0):
            return math.inf
        return float(self._conj(u[keep]))

    def dual_norm(self, u) -> float:
        """Dual norm of ``u`` (norm kinds only); ``inf`` if masked entries are nonzero."""
        u = self._check(u)
        keep = self._keep(u.size)
        if np.any(u[~keep] != 0.0):
            return math.inf
        return float(self._dual_norm(u[keep]))

    def subgradient(self, w) -> np.ndarray:
        w = self._check(w)
        keep = self._keep(w.size)
        g = np.zeros_like(w)
        g[keep] = self._subgrad(w[keep])
        return g

    def blocks(self, n: int) -> list:
        """Index blocks used to report primal sparsity."""
        keep = np.flatnonzero(self._keep(n))
        return [np.array([i]) for i in keep]

    # -- defaults for norm kinds ---------------------------------------------
    def _conj(self, u):
        return 0.0 if self._dual_norm(u) <= 1.0 + CONJ_SLACK else math.inf

    def _dual_norm(self, u):
        raise ConjugateUnavailable(type(self).__name__)

    def __repr__(self):
        return f"{type(self).__name__}()"


class L1(Regularizer):
    def _value(self, w):
        return np.abs(w).sum()

    def _prox(self, v, tau):
        return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)

    def _dual_norm(self, u):
        return np.abs(u).max(initial=0.0)

    def _subgrad(self, w):
        return np.sign(w)


class L2Norm(Regularizer):
    def _value(self, w):
        return np.linalg.norm(w)

    def _prox(self, v, tau):
        nrm = np.linalg.norm(v)
        if nrm <= tau:
            return np.zeros_like(v)
        return (1.0 - tau / nrm) * v

    def _dual_norm(self, u):
        return np.linalg.norm(u)

    def _subgrad(self, w):
        nrm = np.linalg.norm(w)
        return w / nrm if nrm > 0 else np.zeros_like(w)

    def blocks(self, n):
        return [np.flatnonzero(self._keep(n))]


class LInf(Regularizer):
    def _value(self, w):
        return np.abs(w).max(initial=0.0)

    def _prox(self, v, tau):
        # Moreau: prox_{tau ||.||_inf}(v) = v - P_{tau B_1}(v)
        return v - project_l1_ball(v, tau)

    def _dual_norm(self, u):
        return np.abs(u).sum()

    def _subgrad(self, w):
        g = np.zeros_like(w)
        if w.size and np.any(w != 0):
            j = int(np.argmax(np.abs(w)))
            g[j] = np.sign(w[j])
        return g

    def blocks(self, n):
        return [np.flatnonzero(self._keep(n))]


class SquaredL2Half(Regularizer):
    """``R(w) = ||w||^2 / 2``."""

    is_norm = False

    def _value(self, w):
        return 0.5 * (w @ w)

    def _prox(self, v, tau):
        return v / (1.0 + tau)

    def _conj(self, u):
        return 0.5 * (u @ u)

    def _subgrad(self, w):
        return w.copy()


class GroupLasso(Regularizer):
    """``R(w) = sum_g weight_g ||w_g||_2`` with ``weight_g = sqrt(|g|)`` by default.

    ``groups`` index the unmasked coordinates and must partition them.
    """

    def __init__(self, groups, weights=None, mask=None, size=None):
        super().__init__(mask, size)
        self.groups = [np.asarray(g, dtype=int) for g in groups]
        if weights is None:
            weights = [math.sqrt(len(g)) for g in self.groups]
        self.weights = np.asarray(weights, dtype=np.float64)
        if np.any(self.weights <= 0):
            raise ValueError("group weights must be positive")
        allidx = np.sort(np.concatenate(self.groups)) if self.groups else np.array([], int)
        if not np.array_equal(allidx, np.arange(allidx.size)):
            raise ValueError("groups must partition the coordinate index set")
        self._ncoord = allidx.size
        # Segment layout for vectorized reductions.
        self._perm = np.concatenate(self.groups)
        self._starts = np.cumsum([0] + [len(g) for g in self.groups])[:-1]
        self._gid = np.repeat(np.arange(len(self.groups)), [len(g) for g in self.groups])

    def _norms(self, w):
        sq = np.add.reduceat(w[self._perm] ** 2, self._starts)
        return np.sqrt(sq)

    def _value(self, w):
        self._check_len(w)
        return float(self.weights @ self._norms(w))

    def _check_len(self, w):
        if w.size != self._ncoord:
            raise ValueError(f"GroupLasso covers {self._ncoord} coordinates, got {w.size}")

    def _prox(self, v, tau):
        self._check_len(v)
        nrm = self._norms(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            shrink = np.where(nrm > 0, np.maximum(0.0, 1.0 - tau * self.weights / nrm), 0.0)
        out = np.empty_like(v)
        out[self._perm] = v[self._perm] * shrink[self._gid]
        return out

    def _dual_norm(self, u):
        self._check_len(u)
        return float(np.max(self._norms(u) / self.weights, initial=0.0))

    def _subgrad(self, w):
        nrm = self._norms(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(nrm > 0, self.weights / nrm, 0.0)
        out = np.empty_like(w)
        out[self._perm] = w[self._perm] * f[self._gid]
        return out

    def blocks(self, n):
        keep = np.flatnonzero(self._keep(n))
        return [keep[g] for g in self.groups]

    def __repr__(self):
        return f"GroupLasso({len(self.groups)} groups)"


class _RowWise(Regularizer):
    """Penalties on the rows of a ``(d, K)`` matrix."""

    def __init__(self, shape, mask=None, size=None):
        super().__init__(mask, size)
        self.shape = tuple(shape)

    def _rows(self, w):
        if w.size != self.shape[0] * self.shape[1]:
            raise ValueError(f"{type(self).__name__} expects shape {self.shape}, got {w.size} entries")
        return w.reshape(self.shape)

    def blocks(self, n):
        keep = np.flatnonzero(self._keep(n))
        K = self.shape[1]
        return [keep[j * K:(j + 1) * K] for j in range(self.shape[0])]

    def __repr__(self):
        return f"{type(self).__name__}({self.shape[0]}x{self.shape[1]})"


class L21Rows(_RowWise):
    """``R(W) = sum_j ||w^j||_2``."""

    def _value(self, w):
        return np.linalg.norm(self._rows(w), axis=1).sum()

    def _prox(self, v, tau):
        V = self._rows(v)
        nrm = np.linalg.norm(V, axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(nrm > tau, 1.0 - tau / nrm, 0.0)
        return (V * f).reshape(-1)

    def _dual_norm(self, u):
        return np.linalg.norm(self._rows(u), axis=1).max(initial=0.0)

    def _subgrad(self, w):
        W = self._rows(w)
        nrm = np.linalg.norm(W, axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(nrm > 0, W / nrm, 0.0).reshape(-1)


class L1InfRows(_RowWise):
    """``R(W) = sum_j ||w^j||_inf``."""

    def _value(self, w):
        return np.abs(self._rows(w)).max(axis=1).sum()

    def _prox(self, v, tau):
        V = self._rows(v)
        return (V - _project_l1_rows(V, np.full(V.shape[0], tau))).reshape(-1)

    def _dual_norm(self, u):
        return np.abs(self._rows(u)).sum(axis=1).max(initial=0.0)

    def _subgrad(self, w):
        W = self._rows(w)
        G = np.zeros_like(W)
        j = np.argmax(np.abs(W), axis=1)
        r = np.arange(W.shape[0])
        G[r, j] = np.sign(W[r, j])
        return G.reshape(-1)


class ExclusiveLasso(_RowWise):
    """``R(W) = sum_j ||w^j||_1^2``, prox via the row-wise composite bisection."""

    is_norm = False

    def _value(self, w):
        return (np.abs(self._rows(w)).sum(axis=1) ** 2).sum()

    def _prox(self, v, tau):
        V = self._rows(v)
        return _prox_sq_l1_rows(V, tau).reshape(-1)

    def _conj(self, u):
        # (||.||_1^2)^* = ||.||_inf^2 / 4, summed over rows
        return 0.25 * (np.abs(self._rows(u)).max(axis=1) ** 2).sum()

    def _subgrad(self, w):
        W = self._rows(w)
        return (2.0 * np.abs(W).sum(axis=1, keepdims=True) * np.sign(W)).reshape(-1)


class TraceNorm(Regularizer):
    """Sum of singular values of the ``(d1, d2)`` matrix."""

    def __init__(self, shape, mask=None, size=None):
        super().__init__(mask, size)
        self.shape = tuple(shape)

    def _mat(self, w):
        if w.size != self.shape[0] * self.shape[1]:
            raise ValueError(f"TraceNorm expects shape {self.shape}, got {w.size} entries")
        return w.reshape(self.shape)

    def _value(self, w):
        return thin_svd(self._mat(w)).s.sum()

    def _prox(self, v, tau):
        f = thin_svd(self._mat(v))
        s = np.maximum(f.s - tau, 0.0)
        return ((f.U * s) @ f.V.T).reshape(-1)

    def _dual_norm(self, u):
        return thin_svd(self._mat(u)).s.max(initial=0.0)

    def _subgrad(self, w):
        f = thin_svd(self._mat(w))
        pos = f.s > 0
        return (f.U[:, pos] @ f.V[:, pos].T).reshape(-1)

    def __repr__(self):
        return f"TraceNorm({self.shape[0]}x{self.shape[1]})"


# ---------------------------------------------------------------------------
# Composite V(||w||) regularizers


def _bracket_bisect(h, scale: float):
    """Root of the non-increasing ``h`` on ``[0, inf)`` with ``h(0) >= 0``."""
    hi = 1.0
    for _ in range(COMPOSITE_MAX_DOUBLINGS):
        if h(hi) <= 0:
            break
        hi *= 2.0
    else:
        raise NumericError("composite prox: bracket expansion failed")
    lo = 0.0
    tol = COMPOSITE_RTOL * max(1.0, scale)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        r = h(mid)
        if abs(r) <= tol:
            return mid
        if r > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def prox_composite_scalar(inner: Regularizer, vstar_prime, v, tau: float) -> np.ndarray:
    """Minimize ``0.5||w - v||^2 + tau * V(inner(w))``.

    ``V`` enters only through ``vstar_prime``, the derivative of its convex
    conjugate. The minimizer is ``prox_{tau*eta*inner}(v)`` where ``eta``
    solves ``inner(w(eta)) = vstar_prime(eta)``; both sides are monotone, so
    ``eta`` is found by bisection on an expanding bracket.
    """
    if not tau > 0:
        raise ValueError("prox step tau must be positive")
    v = np.asarray(v, dtype=np.float64)

    def w_of(eta):
        return inner.prox(v, tau * eta) if eta > 0 else v.copy()

    def h(eta):
        return inner.value(w_of(eta)) - vstar_prime(eta)

    if h(0.0) <= 0:
        return v.copy()
    eta = _bracket_bisect(h, float(np.linalg.norm(v)))
    return w_of(eta)


def composite_residual(inner: Regularizer, vstar_prime, v, tau: float, eta: float) -> float:
    v = np.asarray(v, dtype=np.float64)
    w = inner.prox(v, tau * eta) if eta > 0 else v
    return inner.value(w) - vstar_prime(eta)


def _prox_sq_l1_rows(V: np.ndarray, tau: float) -> np.ndarray:
    """Row-wise composite prox for ``tau * ||w^j||_1^2``.

    Same bisection as :func:`prox_composite_scalar` with ``V(z) = z^2``
    (``V*'(eta) = eta / 2``), run for all rows in lockstep.
    """
    A = np.abs(V)

    def h(eta):
        return np.maximum(A - tau * eta[:, None], 0.0).sum(axis=1) - 0.5 * eta

    m = V.shape[0]
    lo = np.zeros(m)
    hi = np.ones(m)
    for _ in range(COMPOSITE_MAX_DOUBLINGS):
        grow = h(hi) > 0
        if not np.any(grow):
            break
        hi = np.where(grow, 2.0 * hi, hi)
    else:
        raise NumericError("composite prox: bracket expansion failed")
    tol = COMPOSITE_RTOL * np.maximum(1.0, np.linalg.norm(V, axis=1))
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        r = h(mid)
        done = np.abs(r) <= tol
        lo = np.where(~done & (r > 0), mid, lo)
        hi = np.where(~done & (r <= 0), mid, hi)
        lo = np.where(done, mid, lo)
        hi = np.where(done, mid, hi)
        if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, hi)):
            break
    eta = 0.5 * (lo + hi)
    return np.sign(V) * np.maximum(A - tau * eta[:, None], 0.0)


class CompositeV(Regularizer):
    """``R(w) = V(inner(w))`` with ``V(z) = z**p``, ``p`` in {1, 2}.

    For ``p = 2``: ``V*(eta) = eta^2/4`` and ``V*'(eta) = eta/2`` on
    ``eta >= 0``; the conjugate is ``R*(u) = inner_dual(u)^2 / 4``.
    """

    def __init__(self, inner: Regularizer, p: int = 2, mask=None, size=None):
        super().__init__(mask, size)
        if p not in (1, 2):
            raise ValueError("CompositeV supports V(z) = z**p for p in {1, 2} only")
        if not inner.is_norm:
            raise ValueError("CompositeV needs a norm as the inner penalty")
        self.inner = inner
        self.p = p
        self.is_norm = p == 1

    def vstar_prime(self, eta):
        return 0.5 * max(eta, 0.0)

    def _value(self, w):
        return self.inner.value(w) ** self.p

    def _prox(self, v, tau):
        if self.p == 1:
            return self.inner.prox(v, tau)
        return prox_composite_scalar(self.inner, self.vstar_prime, v, tau)

    def _dual_norm(self, u):
        if self.p != 1:
            raise ConjugateUnavailable("CompositeV with p=2 is not a norm")
        return self.inner.dual_norm(u)

    def _conj(self, u):
        if self.p == 1:
            return super()._conj(u)
        return 0.25 * self.inner.dual_norm(u) ** 2

    def _subgrad(self, w):
        g = self.inner.subgradient(w)
        if self.p == 2:
            g = 2.0 * self.inner.value(w) * g
        return g

    def blocks(self, n):
        return self.inner.blocks(n)

    def __repr__(self):
        return f"CompositeV({self.inner!r}, p={self.p})"


# ---------------------------------------------------------------------------
# Functional API


def reg_value(r: Regularizer, w) -> float:
    return r.value(w)


def reg_prox(r: Regularizer, v, tau: float) -> np.ndarray:
    return r.prox(v, tau)


def reg_conjugate(r: Regularizer, u) -> float:
    return r.conjugate(u)
