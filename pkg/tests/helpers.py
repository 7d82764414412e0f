"""Shared test oracles and utilities."""

import itertools

import numpy as np

from emsense.ems_design import DesignConfig, stage1_gradient, stage1_objective


def random_row_orthonormal(m, n, rng):
    """Haar-ish random matrix with orthonormal rows."""
    q, r = np.linalg.qr(rng.standard_normal((n, m)))
    return (q * np.where(np.diag(r) >= 0, 1.0, -1.0)).T


def exhaustive_min_l1(a, y, k_max, feas_tol=1e-8):
    """Smallest l1 norm over all exactly-fitting supports of size <= k_max."""
    best = None
    n = a.shape[1]
    for k in range(1, k_max + 1):
        for cols in itertools.combinations(range(n), k):
            sub = a[:, cols]
            sol, *_ = np.linalg.lstsq(sub, y, rcond=None)
            if np.linalg.norm(sub @ sol - y) <= feas_tol * max(np.linalg.norm(y), 1.0):
                l1 = float(np.sum(np.abs(sol)))
                if best is None or l1 < best:
                    best = l1
    return best


def max_fd_gradient_error(seed, trials, cfg=None):
    """Worst componentwise relative error of the analytic Stage I gradient
    against central finite differences with h = 1e-6*|y_i|, sampled at
    points with every |y_i| > 1e-3."""
    if cfg is None:
        cfg = DesignConfig(seed=0)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        m = int(rng.integers(2, 9))
        y = rng.standard_normal(m)
        while np.any(np.abs(y) <= 1e-3):
            bad = np.abs(y) <= 1e-3
            y[bad] = rng.standard_normal(int(bad.sum()))
        c_norm = float(rng.uniform(0.5, 2.0)) * float(np.linalg.norm(y))
        grad = stage1_gradient(y, c_norm, cfg)
        for i in range(m):
            h = 1e-6 * abs(y[i])
            yp, ym = y.copy(), y.copy()
            yp[i] += h
            ym[i] -= h
            fd = (
                stage1_objective(yp, c_norm, cfg)
                - stage1_objective(ym, c_norm, cfg)
            ) / (2 * h)
            rel = abs(grad[i] - fd) / max(abs(fd), abs(grad[i]), 1e-8)
            worst = max(worst, rel)
    return worst
