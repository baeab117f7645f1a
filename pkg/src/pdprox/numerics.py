"""Linear algebra primitives and data ingestion.

Sparse matrices are ``scipy.sparse.csr_matrix`` in canonical form (sorted,
duplicate-free column indices). Everything else is plain numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp


class NumericError(RuntimeError):
    """An iterative routine failed to converge within its iteration cap."""


class LibsvmFormatError(ValueError):
    """Malformed libsvm input; carries the 1-based line number."""

    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def as_csr(M) -> sp.csr_matrix:
    """Return `M` as a canonical CSR matrix of float64."""
    out = sp.csr_matrix(M, dtype=np.float64)
    out.sum_duplicates()
    out.sort_indices()
    return out


@dataclass(frozen=True)
class Dataset:
    """Examples stored row-wise.

    ``labels`` is either a length-n vector or an ``(n, K)`` array of
    multi-output targets. ``groups`` optionally partitions the feature
    columns (used by grouped synthetic data).
    """

    features: sp.csr_matrix
    labels: np.ndarray
    groups: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        X = as_csr(self.features)
        y = np.asarray(self.labels, dtype=np.float64)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        n, d = X.shape
        if n < 1 or d < 1:
            raise ValueError(f"dataset must have n >= 1 and d >= 1, got {X.shape}")
        if y.shape[0] != n or y.ndim not in (1, 2):
            raise ValueError(f"labels shape {y.shape} incompatible with n={n}")
        if not np.all(np.isfinite(X.data)) or not np.all(np.isfinite(y)):
            raise ValueError("dataset contains non-finite entries")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_outputs(self) -> int:
        return 1 if self.labels.ndim == 1 else self.labels.shape[1]

    @property
    def is_multi_output(self) -> bool:
        return self.labels.ndim == 2

    def is_binary(self) -> bool:
        return bool(np.all(np.abs(self.labels) == 1.0))


def read_libsvm(path, expected_dim: Optional[int] = None) -> Dataset:
    """Parse a libsvm/svmlight text file.

    Indices are 1-based on disk and must be strictly ascending within a
    line. Blank lines and ``#`` comments are skipped.
    """
    rows, cols, vals, labels = [], [], [], []
    n = 0
    max_idx = 0
    with open(Path(path), "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise LibsvmFormatError(lineno, f"bad label {tokens[0]!r}") from None
            prev = 0
            for tok in tokens[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise LibsvmFormatError(lineno, f"expected idx:val, got {tok!r}")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise LibsvmFormatError(lineno, f"bad feature {tok!r}") from None
                if idx < 1:
                    raise LibsvmFormatError(lineno, f"index {idx} is not 1-based")
                if idx <= prev:
                    raise LibsvmFormatError(lineno, f"indices not ascending at {idx}")
                prev = idx
                rows.append(n)
                cols.append(idx - 1)
                vals.append(val)
            max_idx = max(max_idx, prev)
            labels.append(label)
            n += 1
    if n == 0:
        raise LibsvmFormatError(0, "no examples in file")
    if expected_dim is not None:
        if max_idx > expected_dim:
            raise LibsvmFormatError(0, f"index {max_idx} exceeds expected_dim {expected_dim}")
        d = expected_dim
    else:
        d = max(max_idx, 1)
    X = sp.csr_matrix((vals, (rows, cols)), shape=(n, d))
    return Dataset(X, np.array(labels))


def write_libsvm(ds: Dataset, path) -> None:
    """Write a single-output dataset in libsvm format (1-based indices)."""
    if ds.is_multi_output:
        raise ValueError("libsvm format holds a single label per line")
    X = ds.features
    with open(Path(path), "w") as fh:
        for i in range(ds.n):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            feats = " ".join(
                f"{j + 1}:{float(v)!r}" for j, v in zip(X.indices[lo:hi], X.data[lo:hi]) if v != 0.0
            )
            fh.write(f"{float(ds.labels[i])!r} {feats}".rstrip() + "\n")


def apply(M, x: np.ndarray) -> np.ndarray:
    """Return ``M @ x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (M.shape[1],):
        raise ValueError(f"dimension mismatch: matrix {M.shape} vs vector {x.shape}")
    return np.asarray(M @ x).ravel()


def apply_adjoint(M, v: np.ndarray) -> np.ndarray:
    """Return ``M.T @ v``."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (M.shape[0],):
        raise ValueError(f"dimension mismatch: matrix {M.shape} vs vector {v.shape}")
    return np.asarray(M.T @ v).ravel()


def data_radius(ds: Dataset) -> float:
    """Largest Euclidean row norm of the feature matrix."""
    X = ds.features
    sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    return float(math.sqrt(sq.max()))


@dataclass(frozen=True)
class ThinSVD:
    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.s) @ self.V.T


def _complete_orthonormal(Q: np.ndarray, m: int, r: int) -> np.ndarray:
    # Gram-Schmidt (twice) against the standard basis until r columns exist.
    cols = [Q[:, j] for j in range(Q.shape[1])]
    for e in range(m):
        if len(cols) == r:
            break
        x = np.zeros(m)
        x[e] = 1.0
        for _ in range(2):
            for c in cols:
                x -= (c @ x) * c
        nrm = np.linalg.norm(x)
        if nrm > 1e-8:
            cols.append(x / nrm)
    return np.column_stack(cols) if cols else np.zeros((m, 0))


def thin_svd(M, max_sweeps: int = 80) -> ThinSVD:
    """Thin SVD by one-sided (Hestenes) Jacobi rotations.

    Sweeps visit column pairs in fixed cyclic order, so the result is
    deterministic. Returns ``r = min(m, n)`` singular triplets with
    singular values in descending order.
    """
    A = np.array(M, dtype=np.float64, copy=True)
    if A.ndim != 2:
        raise ValueError("thin_svd expects a 2-D array")
    if not np.all(np.isfinite(A)):
        raise ValueError("thin_svd input has non-finite entries")
    transposed = A.shape[0] < A.shape[1]
    if transposed:
        A = A.T.copy()
    m, n = A.shape
    V = np.eye(n)
    eps = np.finfo(float).eps
    # Pairs whose inner product is below this are orthogonal to working precision.
    floor = eps ** 3 * float(np.sum(A * A))
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai, aj = A[:, i], A[:, j]
                alpha = ai @ ai
                beta = aj @ aj
                gamma = ai @ aj
                # sqrt taken separately so tiny columns do not underflow to 0
                if abs(gamma) <= max(floor, eps * math.sqrt(alpha) * math.sqrt(beta)):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if abs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                A[:, i], A[:, j] = c * ai - s * aj, s * ai + c * aj
                vi, vj = V[:, i].copy(), V[:, j].copy()
                V[:, i], V[:, j] = c * vi - s * vj, s * vi + c * vj
        if not rotated:
            break
    else:
        raise NumericError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")

    sig = np.linalg.norm(A, axis=0)
    order = np.argsort(-sig, kind="stable")
    sig, A, V = sig[order], A[:, order], V[:, order]
    cutoff = max(m, n) * eps * (sig[0] if n else 0.0)
    keep = sig > cutoff
    sig = np.where(keep, sig, 0.0)
    U = _complete_orthonormal(A[:, keep] / sig[keep], m, n)
    if transposed:
        return ThinSVD(V, sig, U)
    return ThinSVD(U, sig, V)


def op_norm_sq_estimate(
    apply_fn: Callable[[np.ndarray], np.ndarray],
    apply_adjoint_fn: Callable[[np.ndarray], np.ndarray],
    dim: int,
    iters: int = 100,
    seed: int = 0,
) -> float:
    """Power-iteration estimate of ``||H||_2^2``.

    The Rayleigh quotient never exceeds the true value; callers that need an
    upper bound inflate it (see :data:`NORM_SAFETY`).
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    for _ in range(iters):
        z = apply_adjoint_fn(apply_fn(x))
        nrm = np.linalg.norm(z)
        if nrm == 0.0:
            return 0.0
        x = z / nrm
    y = apply_fn(x)
    return float(y @ y)


NORM_SAFETY = 1.01


def dense_rows(rows: Sequence[Sequence[float]]) -> sp.csr_matrix:
    """Convenience: CSR matrix from a list of dense rows."""
    return as_csr(np.atleast_2d(np.asarray(rows, dtype=np.float64)))
