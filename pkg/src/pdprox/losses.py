"""Bilinear saddle representations of non-smooth losses.

Each loss is written as ``(1/n) sum_i max_{alpha_i in Delta} f(w, alpha_i; x_i, y_i)``
with ``f`` bilinear, which gives

    L(w, alpha) = c0 + a.alpha + b.w + w.H alpha

The ``1/n`` factor is folded into ``(a, b, H)``. Dual blocks are stored
example-major; for multi-output labels ``(n, K)`` the scalar losses are
applied per output and block ``(i, k)`` sits at position ``i*K + k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .numerics import NORM_SAFETY, Dataset, data_radius, op_norm_sq_estimate
from .projections import Box, BoxLinear, DualDomain, L2Ball

KINDS = ("hinge", "generalized_hinge", "absolute", "eps_insensitive", "piecewise_linear", "l2")

# Dense products beat CSR below this many stored entries (or above this density).
_DENSE_NNZ = 200_000
_DENSE_FILL = 0.25


@dataclass(frozen=True)
class LossSpec:
    """Loss descriptor.

    ``slope`` is the generalized-hinge slope (> 1) or the piecewise-linear
    quantile (in (0, 1)); ``eps`` is the insensitive-tube half width.
    """

    kind: str
    slope: Optional[float] = None
    eps: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown loss {self.kind!r}; expected one of {KINDS}")
        if self.kind == "generalized_hinge" and not (self.slope is not None and self.slope > 1):
            raise ValueError("generalized hinge needs slope a > 1")
        if self.kind == "piecewise_linear" and not (self.slope is not None and 0 < self.slope < 1):
            raise ValueError("piecewise linear loss needs a in (0, 1)")
        if self.kind == "eps_insensitive" and self.eps < 0:
            raise ValueError("eps must be nonnegative")

    @property
    def block_size(self) -> int:
        return 2 if self.kind in ("generalized_hinge", "eps_insensitive", "piecewise_linear") else 1

    @property
    def is_classification(self) -> bool:
        return self.kind in ("hinge", "generalized_hinge")


# ---------------------------------------------------------------------------
# Coupling operators H : dual -> primal


class RowCoupling:
    """``H`` with column ``(i, k, j)`` equal to ``coef[i, k, j] * (x_i (x) e_k)``.

    Products cost two passes over the data matrix regardless of the block size.
    """

    def __init__(self, X: sp.csr_matrix, coef: np.ndarray):
        self.coef = np.asarray(coef, dtype=np.float64)  # (n, K, kk)
        n, d = X.shape
        dense = X.nnz <= _DENSE_NNZ and X.nnz >= _DENSE_FILL * n * d
        self.X = X.toarray() if dense else X
        self.XT = self.X.T if dense else X.T.tocsr()
        self.n, self.K, self.kk = self.coef.shape
        self.d = d
        self.shape = (d * self.K, self.n * self.K * self.kk)

    def matvec(self, alpha: np.ndarray) -> np.ndarray:
        A = alpha.reshape(self.coef.shape)
        Z = (self.coef * A).sum(axis=2)  # (n, K)
        out = self.XT @ Z
        return np.asarray(out).reshape(-1)

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        P = self.X @ w.reshape(self.d, self.K)  # (n, K)
        return (np.asarray(P)[:, :, None] * self.coef).reshape(-1)

    def toarray(self) -> np.ndarray:
        Xd = self.X if isinstance(self.X, np.ndarray) else self.X.toarray()
        H = np.zeros(self.shape)
        for i in range(self.n):
            for k in range(self.K):
                for j in range(self.kk):
                    col = (i * self.K + k) * self.kk + j
                    H[k::self.K, col] = self.coef[i, k, j] * Xd[i]
        return H


class MultiOutputCoupling:
    """``H alpha = X^T A / n`` with ``A`` the ``(n, K)`` reshaped dual."""

    def __init__(self, X: sp.csr_matrix, K: int):
        n, d = X.shape
        self.X = X.toarray() if X.nnz >= _DENSE_FILL * n * d and X.nnz <= _DENSE_NNZ else X
        self.XT = self.X.T if isinstance(self.X, np.ndarray) else X.T.tocsr()
        self.n, self.d, self.K = n, d, K
        self.shape = (d * K, n * K)

    def matvec(self, alpha):
        return np.asarray(self.XT @ alpha.reshape(self.n, self.K)).reshape(-1) / self.n

    def rmatvec(self, w):
        return np.asarray(self.X @ w.reshape(self.d, self.K)).reshape(-1) / self.n

    def toarray(self):
        Xd = self.X if isinstance(self.X, np.ndarray) else self.X.toarray()
        return np.kron(Xd.T, np.eye(self.K)) / self.n


class SparseCoupling:
    """``H`` stored explicitly as a sparse ``(primal, dual)`` matrix."""

    def __init__(self, H):
        self.H = sp.csr_matrix(H)
        self.HT = self.H.T.tocsr()
        self.shape = self.H.shape

    def matvec(self, alpha):
        return self.H @ alpha

    def rmatvec(self, w):
        return self.HT @ w

    def toarray(self):
        return self.H.toarray()


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BilinearForm:
    c0: float
    a: np.ndarray
    b: np.ndarray
    H: object
    primal_shape: tuple

    @property
    def dual_size(self) -> int:
        return self.a.size

    @property
    def primal_size(self) -> int:
        return self.b.size

    def value(self, w, alpha) -> float:
        return float(self.c0 + self.a @ alpha + self.b @ w + w @ self.H.matvec(alpha))

    def grad_w(self, alpha) -> np.ndarray:
        return self.b + self.H.matvec(alpha)

    def grad_alpha(self, w) -> np.ndarray:
        return self.a + self.H.rmatvec(w)


def partial_grad_w(bf: BilinearForm, alpha) -> np.ndarray:
    """``G_w = b + H alpha`` (independent of w)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (bf.dual_size,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({bf.dual_size},)")
    return bf.grad_w(alpha)


def partial_grad_alpha(bf: BilinearForm, w) -> np.ndarray:
    """``G_alpha = a + H^T w`` (independent of alpha)."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape != (bf.primal_size,):
        raise ValueError(f"w has {w.size} entries, expected {bf.primal_size}")
    return bf.grad_alpha(w)


def _labels_2d(ds: Dataset) -> np.ndarray:
    return ds.labels if ds.is_multi_output else ds.labels[:, None]


def bilinear_build(spec: LossSpec, ds: Dataset) -> tuple:
    """Return ``(BilinearForm, DualDomain)`` for the loss on the dataset."""
    n, d = ds.n, ds.d
    Y = _labels_2d(ds)
    K = Y.shape[1]
    primal_shape = (d, K) if ds.is_multi_output else (d,)
    b = np.zeros(d * K)

    if spec.kind == "l2":
        if not ds.is_multi_output:
            raise ValueError("the l2 loss needs (n, K) multi-output labels")
        H = MultiOutputCoupling(ds.features, K)
        a = -Y.reshape(-1) / n
        return BilinearForm(0.0, a, b, H, primal_shape), DualDomain(n, K, L2Ball(1.0))

    if spec.is_classification and not ds.is_binary():
        raise ValueError(f"{spec.kind} loss requires labels in {{-1, +1}}")

    one = np.ones_like(Y)
    if spec.kind == "hinge":
        coef = (-Y / n)[:, :, None]
        a = (one / n)[:, :, None]
        block = Box(0.0, 1.0)
    elif spec.kind == "absolute":
        coef = (one / n)[:, :, None]
        a = (-Y / n)[:, :, None]
        block = Box(-1.0, 1.0)
    elif spec.kind == "generalized_hinge":
        s = spec.slope
        coef = np.stack([-s * Y / n, -Y / n], axis=2)
        a = np.stack([one / n, one / n], axis=2)
        block = BoxLinear(1.0, (1.0, 1.0), 1.0)
    elif spec.kind == "eps_insensitive":
        e = spec.eps
        coef = np.stack([one / n, -one / n], axis=2)
        a = np.stack([(-Y - e) / n, (Y - e) / n], axis=2)
        block = BoxLinear(1.0, (1.0, 1.0), 1.0)
    else:  # piecewise_linear
        q = spec.slope
        coef = np.stack([-q * one / n, (1 - q) * one / n], axis=2)
        a = np.stack([q * Y / n, -(1 - q) * Y / n], axis=2)
        block = BoxLinear(1.0, (1.0, 1.0), 1.0)

    H = RowCoupling(ds.features, coef)
    dom = DualDomain(n * K, spec.block_size, block)
    return BilinearForm(0.0, a.reshape(-1), b, H, primal_shape), dom


def pointwise_loss(spec: LossSpec, pred, y) -> np.ndarray:
    """Closed-form loss for predictions ``pred = w.x`` (array-wise)."""
    pred = np.asarray(pred, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if spec.kind == "hinge":
        return np.maximum(0.0, 1.0 - y * pred)
    if spec.kind == "generalized_hinge":
        m = y * pred
        return np.where(m <= 0, 1.0 - spec.slope * m, np.maximum(0.0, 1.0 - m))
    r = pred - y
    if spec.kind == "absolute":
        return np.abs(r)
    if spec.kind == "eps_insensitive":
        return np.maximum(np.abs(r) - spec.eps, 0.0)
    if spec.kind == "piecewise_linear":
        q = spec.slope
        return np.where(r <= 0, q * -r, (1 - q) * r)
    raise ValueError("pointwise_loss handles scalar-output kinds only")


def primal_loss_value(spec: LossSpec, ds: Dataset, w) -> float:
    """Average closed-form loss ``(1/n) sum_i loss(w; x_i, y_i)``."""
    Y = _labels_2d(ds)
    K = Y.shape[1]
    W = np.asarray(w, dtype=np.float64).reshape(ds.d, K)
    P = np.asarray(ds.features @ W)
    if spec.kind == "l2":
        if not ds.is_multi_output:
            raise ValueError("the l2 loss needs (n, K) multi-output labels")
        return float(np.linalg.norm(P - Y, axis=1).mean())
    return float(pointwise_loss(spec, P, Y).sum() / ds.n)


def lipschitz_c(spec: LossSpec, ds: Dataset, side: str = "both") -> float:
    """Constant ``c`` bounding the partial-gradient Lipschitz inequalities.

    ``side="grad_alpha"`` bounds ``||G_a(w1) - G_a(w2)||^2 <= c ||w1 - w2||^2``,
    ``side="grad_w"`` bounds ``||G_w(a1) - G_w(a2)||^2 <= c ||a1 - a2||^2``,
    ``side="both"`` returns the larger of the two. All constants follow from
    ``||x_i|| <= R`` and Cauchy-Schwarz over the per-example coefficients;
    with multi-output labels the output blocks are orthogonal so the
    single-output constant carries over.
    """
    if side not in ("grad_alpha", "grad_w", "both"):
        raise ValueError(f"unknown side {side!r}")
    if side == "both":
        return max(lipschitz_c(spec, ds, "grad_alpha"), lipschitz_c(spec, ds, "grad_w"))
    R2 = data_radius(ds) ** 2
    n = ds.n
    if spec.kind in ("hinge", "absolute", "l2"):
        return R2 / n
    if spec.kind == "generalized_hinge":
        a = spec.slope
        return (a * a + 1) * R2 / n if side == "grad_alpha" else 2 * a * a * R2 / n
    if spec.kind == "eps_insensitive":
        return 2 * R2 / n
    if spec.kind == "piecewise_linear":
        q = spec.slope
        return (q * q + (1 - q) ** 2) * R2 / n
    raise AssertionError("unreachable")


def operator_c(H, seed: int = 0, iters: int = 100) -> float:
    """Fallback ``c`` from power iteration on ``H`` (inflated for safety)."""
    est = op_norm_sq_estimate(H.matvec, H.rmatvec, H.shape[1], iters=iters, seed=seed)
    return NORM_SAFETY * est


def data_c(H) -> Optional[float]:
    """Exact ``||H||^2`` for a :class:`SparseCoupling` whose columns each have
    a single nonzero (then ``H H^T`` is diagonal)."""
    if not isinstance(H, SparseCoupling):
        return None
    M = H.H
    if np.any(np.diff(M.tocsc().indptr) > 1):
        return None
    return float(np.asarray(M.multiply(M).sum(axis=1)).max(initial=0.0))


__all__ = [
    "BilinearForm", "DualDomain", "LossSpec", "MultiOutputCoupling", "RowCoupling",
    "SparseCoupling", "bilinear_build", "lipschitz_c", "partial_grad_alpha",
    "partial_grad_w", "pointwise_loss", "primal_loss_value", "operator_c", "data_c",
]
