"""Reproducible synthetic datasets with rows scaled to unit length."""

from __future__ import annotations

import numpy as np

from .numerics import Dataset

SYNTH_KINDS = ("classification", "regression", "grouped", "multitask")


def _unit_rows(rng, n, d):
    X = rng.standard_normal((n, d))
    nrm = np.linalg.norm(X, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return X / nrm


def _sign(z):
    return np.where(z >= 0, 1.0, -1.0)


def gen_synthetic(kind: str, n: int, d: int, noise: float = 0.1, seed: int = 0,
                  group_size: int = 5, n_tasks: int = 4) -> Dataset:
    """Draw a dataset.

    Parameters
    ----------
    kind : {"classification", "regression", "grouped", "multitask"}
        ``classification`` labels are ``sign(x.w_true + noise * z)``;
        ``regression`` targets are ``x.w_true + noise * z``; ``grouped`` is
        classification where only half of the feature groups carry signal
        (``Dataset.groups`` holds the partition); ``multitask`` returns
        ``(n, n_tasks)`` targets from a row-sparse coefficient matrix.
    n, d : int
        Number of examples and features (both >= 1).
    noise : float
        Standard deviation of the additive label noise.
    seed : int
        Seed for ``numpy.random.default_rng``; equal seeds give identical data.
    """
    if kind not in SYNTH_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; expected one of {SYNTH_KINDS}")
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    X = _unit_rows(rng, n, d)

    if kind == "multitask":
        W = rng.standard_normal((d, n_tasks))
        W[rng.random(d) < 0.5] = 0.0
        Y = X @ W + noise * rng.standard_normal((n, n_tasks))
        return Dataset(X, Y)

    w_true = rng.standard_normal(d)
    groups = None
    if kind == "grouped":
        groups = tuple(np.arange(s, min(s + group_size, d)) for s in range(0, d, group_size))
        for g in groups[1::2]:
            w_true[g] = 0.0
    z = X @ w_true + noise * rng.standard_normal(n)
    y = z if kind == "regression" else _sign(z)
    return Dataset(X, y, groups)
