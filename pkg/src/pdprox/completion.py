"""Matrix completion with a trace-norm penalty.

The primal variable is the full ``(d1, d2)`` matrix flattened row-major, so
entry ``(i, j)`` sits at ``i * d2 + j``. Two losses over the observed set
``Omega`` are supported:

``"absolute"``
    ``(1/|Omega|) sum |X_ij - Y_ij|``; one dual in ``[-1, 1]`` per entry.
thresholds ``(theta_1 < ... < theta_{L-1})``
    Ordinal ratings ``1..L`` with the immediate-threshold hinge: a rating
    ``r`` is penalized by ``max(0, 1 - (X_ij - theta_{r-1}))`` when ``r > 1``
    and by ``max(0, 1 - (theta_r - X_ij))`` when ``r < L``. Each entry owns
    ``L - 1`` dual slots; slots for non-adjacent thresholds are pinned to 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .losses import BilinearForm, SparseCoupling, data_c
from .projections import Box, DualDomain
from .regularizers import TraceNorm
from .solvers import SaddleProblem


@dataclass(frozen=True)
class TripletData:
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    shape: tuple

    def __post_init__(self):
        r = np.asarray(self.rows, dtype=int)
        c = np.asarray(self.cols, dtype=int)
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "rows", r)
        object.__setattr__(self, "cols", c)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        d1, d2 = self.shape
        if not (r.shape == c.shape == v.shape and r.ndim == 1):
            raise ValueError("rows, cols and values must be equal-length vectors")
        if r.size == 0:
            raise ValueError("no observed entries")
        if np.any(r < 0) or np.any(r >= d1) or np.any(c < 0) or np.any(c >= d2):
            raise ValueError(f"entry index outside shape {self.shape}")
        if np.unique(r * d2 + c).size != r.size:
            raise ValueError("duplicate (row, col) entries")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite observed value")

    @property
    def n_observed(self) -> int:
        return self.rows.size

    @property
    def flat_index(self) -> np.ndarray:
        return self.rows * self.shape[1] + self.cols


def read_triplets(path, shape: Optional[tuple] = None) -> TripletData:
    """Read ``row col value`` lines (0-based indices). Shape defaults to max index + 1."""
    rows, cols, vals = [], [], []
    with open(Path(path)) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'row col value'")
            try:
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                vals.append(float(parts[2]))
            except ValueError:
                raise ValueError(f"line {lineno}: malformed triplet {line!r}") from None
    if not rows:
        raise ValueError("no observed entries")
    if shape is None:
        shape = (max(rows) + 1, max(cols) + 1)
    return TripletData(np.array(rows), np.array(cols), np.array(vals), shape)


def _threshold_layout(td: TripletData, thresholds):
    theta = np.asarray(thresholds, dtype=np.float64)
    if theta.ndim != 1 or theta.size < 1 or np.any(np.diff(theta) <= 0):
        raise ValueError("thresholds must be a strictly increasing sequence")
    L = theta.size + 1
    r = td.values
    if np.any(r != np.round(r)) or np.any(r < 1) or np.any(r > L):
        raise ValueError(f"ratings must be integers in 1..{L}")
    r = r.astype(int)
    k = np.arange(L - 1)[None, :]  # threshold theta_{k+1}
    sign = np.where(k + 1 >= r[:, None], 1.0, -1.0)
    active = (k + 1 == r[:, None] - 1) | (k + 1 == r[:, None])
    return theta, sign, active


def mc_loss_value(td: TripletData, loss: Union[str, Sequence[float]], W) -> float:
    """Closed-form average loss over the observed entries."""
    pred = np.asarray(W, dtype=np.float64).reshape(-1)[td.flat_index]
    if isinstance(loss, str):
        if loss != "absolute":
            raise ValueError(f"unknown matrix-completion loss {loss!r}")
        return float(np.abs(pred - td.values).mean())
    theta, sign, active = _threshold_layout(td, loss)
    terms = np.maximum(0.0, 1.0 - sign * (theta[None, :] - pred[:, None]))
    return float((terms * active).sum() / td.n_observed)


def build_matrix_completion_problem(td: TripletData, loss: Union[str, Sequence[float]],
                                    lam: float) -> SaddleProblem:
    """Saddle problem for ``loss + lam * ||X||_trace``.

    ``loss`` is ``"absolute"`` or a sequence of increasing thresholds.
    """
    m = td.n_observed
    d1, d2 = td.shape
    primal = d1 * d2
    flat = td.flat_index
    if isinstance(loss, str):
        if loss != "absolute":
            raise ValueError(f"unknown matrix-completion loss {loss!r}")
        H = sp.csr_matrix((np.full(m, 1.0 / m), (flat, np.arange(m))), shape=(primal, m))
        a = -td.values / m
        dom = DualDomain(m, 1, Box(-1.0, 1.0))
    else:
        theta, sign, active = _threshold_layout(td, loss)
        k = theta.size
        coef = np.where(active, sign / m, 0.0)
        cols = np.arange(m * k)
        H = sp.csr_matrix((coef.reshape(-1), (np.repeat(flat, k), cols)), shape=(primal, m * k))
        H.eliminate_zeros()
        a = np.where(active, (1.0 - sign * theta[None, :]) / m, 0.0).reshape(-1)
        dom = DualDomain(m, k, Box(0.0, np.where(active, 1.0, 0.0)))
    coupling = SparseCoupling(H)
    bf = BilinearForm(0.0, a, np.zeros(primal), coupling, (d1, d2))
    c = data_c(coupling)
    return SaddleProblem(bf, dom, TraceNorm((d1, d2)), lam, c)
