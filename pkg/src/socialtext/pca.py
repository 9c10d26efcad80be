"""Two-component PCA via power iteration (for embedding-space export)."""

from __future__ import annotations

import numpy as np

from .rng import Rng

__all__ = ["pca_2d"]


def _power_iteration(cov: np.ndarray, start: np.ndarray, iters: int = 2000, tol: float = 1e-13):
    v = start / np.linalg.norm(start)
    lam = 0.0
    for _ in range(iters):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            return np.zeros_like(v), 0.0
        w = w / norm
        if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
            v = w
            break
        v = w
    lam = float(v @ cov @ v)
    return v, lam


def pca_2d(x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean-centered projection onto the top two principal components.

    Returns (projection [n, 2], components [2, d], variances [2]).  Needs
    at least 3 points.  Degenerate data (zero variance) projects to the
    origin.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3:
        raise ValueError("pca_2d needs a 2-D array with at least 3 rows")
    n, d = x.shape
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    scale = float(np.trace(cov))
    rng = Rng(2)  # fixed internal seed: the start vector is part of the algorithm
    comps = np.zeros((2, d))
    lams = np.zeros(2)
    work = cov.copy()
    for k in range(2):
        v, lam = _power_iteration(work, rng.normal(size=d))
        if scale > 0 and lam < 1e-12 * scale:
            v, lam = np.zeros(d), 0.0
        comps[k] = v
        lams[k] = lam
        work = work - lam * np.outer(v, v)
    proj = centered @ comps.T
    return proj, comps, lams
