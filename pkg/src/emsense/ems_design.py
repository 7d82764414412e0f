"""Entropy-maximizing sensing-matrix design.

Two-stage alternating scheme.  Stage I takes each training signal's
current measurement vector and pushes it toward maximum Shannon
entropy while a penalty holds the measurement energy near the signal
energy (the near-isometry constraint).  Stage II finds the
row-orthonormal matrix that best reproduces all the optimized
measurements at once, which is a rectangular orthogonal Procrustes
problem solved by one SVD.  Alternating the stages drives the average
measurement entropy up until it saturates.

The Stage I objective for a measurement vector y with target energy
||c||^2 is

    f(y) = sum_i p_i ln p_i + alpha * sqrt(z^2 + zeta),
    p_i = y_i^2 / ||y||^2,
    z = ((||y||/||c||)^2 - 1)^2 - delta^2,

i.e. negative entropy plus a smoothed absolute value of the isometry
defect.  The penalty vanishes on the shell where the energy ratio
deviates by exactly delta, and the smoothing constant zeta keeps it
differentiable at z = 0.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .entropy_core import ZERO_ENERGY
from .errors import (
    DimensionMismatch,
    InvalidShape,
    NearSingularCoordinate,
    SvdFailure,
    ZeroTrainingColumn,
    ZeroVector,
)

# Relative magnitude below which a coordinate is jittered before the
# entropy gradient is evaluated (the gradient is singular at y_i = 0).
_JITTER_REL = 1e-12

# A stalled iterate with coordinates this far below ||y|| sits at the
# entropy term's degenerate critical manifold (e.g. a one-hot vector,
# a local MAXIMUM of negative entropy where the gradient still
# vanishes).  Re-jittering at this larger floor spreads enough mass to
# escape; it can only decrease the objective, which is checked.
_ESCAPE_REL = 1e-6
_MAX_ESCAPES = 2

# Armijo line search: start step 1, halve on failure, c1 sufficient decrease.
_LS_SHRINK = 0.5
_LS_C1 = 1e-4
_LS_MAX_HALVINGS = 60


@dataclass
class DesignConfig:
    """Knobs of the alternating design loop.

    alpha weighs the isometry penalty against the entropy term, delta
    is the target isometry constant, zeta smooths the penalty's
    absolute value.  The inner (Stage I) solver stops on gradient norm
    inner_grad_tol or after inner_max_iters steps.  early_stop
    optionally ends the outer loop once the average-entropy trace moves
    less than 1e-6 over 5 consecutive iterations.
    """

    alpha: float = 1.0
    delta: float = 0.1
    zeta: float = 1e-15
    outer_iters: int = 100
    inner_max_iters: int = 200
    inner_grad_tol: float = 1e-6
    seed: int = 0
    early_stop: bool = False

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if self.zeta <= 0:
            raise ValueError("zeta must be positive")
        if self.outer_iters < 1 or self.inner_max_iters < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.inner_grad_tol <= 0:
            raise ValueError("inner_grad_tol must be positive")


@dataclass(frozen=True)
class SensingDesign:
    """A learned sensing matrix phi and its effective matrix a = phi @ Psi."""

    phi: np.ndarray
    a: np.ndarray
    m: int
    n: int
    basis_kind: str


@dataclass(frozen=True)
class ConvergenceTrace:
    """Average measurement entropy (nats) after each outer iteration."""

    avg_entropy_per_iter: np.ndarray

    @property
    def final_avg_entropy(self):
        return float(self.avg_entropy_per_iter[-1])


def init_sensing_matrix(m, n, seed):
    """Random matrix with orthonormal rows, deterministic per seed.

    Gaussian entries followed by orthonormalization of the row space.
    """
    if m >= n:
        raise InvalidShape("need m < n, got m=%d n=%d" % (m, n))
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((m, n))
    q, r = np.linalg.qr(g.T)
    signs = np.where(np.diag(r) >= 0.0, 1.0, -1.0)
    return (q * signs).T


def random_gaussian_matrix(m, n, seed, normalize_columns=False):
    """Classical i.i.d. Gaussian sensing matrix, entries N(0, 1/m)."""
    if m >= n:
        raise InvalidShape("need m < n, got m=%d n=%d" % (m, n))
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((m, n)) / math.sqrt(m)
    if normalize_columns:
        mat = mat / np.linalg.norm(mat, axis=0)
    return mat


def _check_measurement(y):
    y = np.asarray(y, dtype=float).ravel()
    energy = float(y @ y)
    if energy < ZERO_ENERGY:
        raise ZeroVector("measurement vector has zero energy")
    return y, energy


def stage1_objective(y, c_norm, cfg):
    """Negative entropy of y plus the smoothed isometry penalty."""
    if c_norm <= 0:
        raise ValueError("c_norm must be positive")
    y, _ = _check_measurement(y)
    return _objective_parts(y, c_norm * c_norm, cfg)[0]


def stage1_gradient(y, c_norm, cfg):
    """Analytic gradient of stage1_objective.

    Requires every |y_i| >= 1e-12 * ||y||: the entropy term's gradient
    is singular at y_i = 0, so callers jitter tiny coordinates first.
    """
    if c_norm <= 0:
        raise ValueError("c_norm must be positive")
    y, energy = _check_measurement(y)
    if np.min(np.abs(y)) < _JITTER_REL * math.sqrt(energy):
        raise NearSingularCoordinate(
            "coordinate magnitude below %g * ||y||; jitter before calling"
            % _JITTER_REL
        )
    c_sq = c_norm * c_norm
    _, energy, p, log_p = _objective_parts(y, c_sq, cfg)
    return _gradient_from_parts(y, c_sq, cfg, energy, p, log_p)


def _jitter(y, rng):
    """Replace near-zero coordinates by sign-random tiny values.

    Magnitude 1e-12*||y|| changes the objective at the 1e-22 level while
    moving the point off the gradient singularity.
    """
    norm = np.linalg.norm(y)
    floor = _JITTER_REL * norm
    mask = np.abs(y) < floor
    if np.any(mask):
        y = y.copy()
        y[mask] = np.where(rng.random(int(np.sum(mask))) < 0.5, -floor, floor)
    return y


def _objective_parts(y, c_sq, cfg):
    """Objective value plus the pieces the gradient reuses.

    Returns (f, energy, p, log_p); p entries below the 0*ln 0 floor get
    log 1 = 0 so the masked term drops out without branching.
    """
    energy = float(y @ y)
    if energy < ZERO_ENERGY:
        return None
    p = y * y / energy
    safe = np.where(p >= 1e-300, p, 1.0)
    log_p = np.log(safe)
    neg_entropy = float(p @ log_p)
    z = (energy / c_sq - 1.0) ** 2 - cfg.delta**2
    f = neg_entropy + cfg.alpha * math.sqrt(z * z + cfg.zeta)
    return f, energy, p, log_p


def _gradient_from_parts(y, c_sq, cfg, energy, p, log_p):
    neg_entropy = float(p @ log_p)
    ratio = energy / c_sq
    z = (ratio - 1.0) ** 2 - cfg.delta**2
    scale = cfg.alpha * z / math.sqrt(z * z + cfg.zeta)
    return (2.0 / energy) * y * (log_p - neg_entropy) + (
        scale * 4.0 * (ratio - 1.0) / c_sq
    ) * y


def _escape_degenerate(y, f, c_sq, cfg, rng):
    """Spread near-zero coordinates to leave a degenerate stationary point.

    Returns the re-jittered iterate and its objective parts, or None
    when there is nothing to escape (no tiny coordinates, or the move
    would increase the objective).
    """
    floor = _ESCAPE_REL * float(np.linalg.norm(y))
    mask = np.abs(y) < floor
    if not np.any(mask):
        return None
    cand = y.copy()
    cand[mask] = np.where(rng.random(int(np.sum(mask))) < 0.5, -floor, floor)
    parts = _objective_parts(cand, c_sq, cfg)
    if parts is None or parts[0] > f:
        return None
    return cand, parts


def maximize_entropy(y0, c_norm, cfg, rng=None):
    """Stage I: descend the penalized negative entropy from y0.

    Gradient descent with Armijo backtracking; the objective never
    increases.  The accepted step size warm-starts the next line
    search (doubled, capped at 1), which matters because the smoothed
    penalty is stiff near its kink.  Stops on gradient norm <=
    cfg.inner_grad_tol, after cfg.inner_max_iters steps, when no
    descent step remains, or when progress falls below rounding level.
    A stall at a degenerate point (some |y_i| near 0, where the
    entropy gradient vanishes yet entropy is locally minimal) is
    escaped by re-jittering those coordinates at a larger floor.
    """
    y0, _ = _check_measurement(y0)
    if c_norm <= 0:
        raise ValueError("c_norm must be positive")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    c_sq = c_norm * c_norm

    y = _jitter(y0, rng)
    f, energy, p, log_p = _objective_parts(y, c_sq, cfg)
    step = 1.0
    escapes = 0
    it = 0
    while it < cfg.inner_max_iters:
        it += 1
        stalled = False
        grad = _gradient_from_parts(y, c_sq, cfg, energy, p, log_p)
        grad_sq = float(grad @ grad)
        if math.sqrt(grad_sq) <= cfg.inner_grad_tol:
            stalled = True
        else:
            step = min(step * 2.0, 1.0)
            accepted = None
            for _ in range(_LS_MAX_HALVINGS):
                cand = y - step * grad
                parts = _objective_parts(cand, c_sq, cfg)
                if parts is not None and parts[0] <= f - _LS_C1 * step * grad_sq:
                    accepted = parts
                    break
                step *= _LS_SHRINK
            if accepted is None:
                stalled = True
            else:
                improvement = f - accepted[0]
                y = cand
                f, energy, p, log_p = accepted
                jittered = _jitter(y, rng)
                if jittered is not y:
                    y = jittered
                    f, energy, p, log_p = _objective_parts(y, c_sq, cfg)
                if improvement < 1e-14 * max(1.0, abs(f)):
                    stalled = True
        if stalled:
            escaped = (
                _escape_degenerate(y, f, c_sq, cfg, rng)
                if escapes < _MAX_ESCAPES
                else None
            )
            if escaped is None:
                break
            escapes += 1
            y, (f, energy, p, log_p) = escaped
            step = 1.0
    return y


def procrustes_rect(c_mat, y_hat):
    """Row-orthonormal matrix A aligning AC with Y.

    With the SVD C Y^T = U S V^T the returned A = V U_M^T (U_M = the M
    leading left singular vectors) maximizes the alignment tr(A C Y^T),
    the only part of ||Y - AC||_F^2 that depends on A when C C^T is a
    multiple of the identity; in that whitened regime (which a large
    near-isotropic training class approaches) it is the exact Frobenius
    minimizer.  Signs are canonicalized (largest-magnitude entry of
    each U column made nonnegative, with the paired V column flipped)
    so factorizations are reproducible.

    Raises SvdFailure when the SVD does not converge or when C Y^T has
    numerical rank below M, which happens when fewer training columns
    than measurements are supplied.
    """
    c_mat = np.asarray(c_mat, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if c_mat.ndim != 2 or y_hat.ndim != 2:
        raise DimensionMismatch("expected 2-D matrices")
    n, l = c_mat.shape
    m = y_hat.shape[0]
    if y_hat.shape[1] != l:
        raise DimensionMismatch(
            "C has %d columns but Y has %d" % (l, y_hat.shape[1])
        )
    if m >= n:
        raise DimensionMismatch("need M < N, got M=%d N=%d" % (m, n))

    try:
        u, s, vt = np.linalg.svd(c_mat @ y_hat.T, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc))
    if s[0] <= 0.0 or s[-1] < 1e-12 * s[0]:
        raise SvdFailure(
            "C Y^T is rank-deficient (sigma_M/sigma_1 = %.3g); "
            "need at least M independent training columns"
            % (s[-1] / s[0] if s[0] > 0 else 0.0)
        )
    peak = u[np.argmax(np.abs(u), axis=0), np.arange(m)]
    flip = np.where(peak < 0.0, -1.0, 1.0)
    u = u * flip
    vt = vt * flip[:, None]
    return vt.T @ u.T


def _column_entropies(meas):
    """Shannon entropy (nats) of each column's energy distribution."""
    energy = np.sum(meas * meas, axis=0)
    if np.any(energy < ZERO_ENERGY):
        raise ZeroVector(
            "measurement column %d has zero energy" % int(np.argmin(energy))
        )
    p = meas * meas / energy
    safe = np.where(p >= 1e-300, p, 1.0)  # log(1) = 0 stands in for 0*ln 0
    return np.maximum(-np.sum(safe * np.log(safe), axis=0), 0.0)


def ems_train(x_mat, basis, m, cfg, threads=None):
    """Learn a sensing matrix for a training set by alternating stages.

    Parameters
    ----------
    x_mat : SignalMatrix or (N, L) array
        Training signals, one per column.
    basis : SparsifyingBasis
    m : int
        Number of measurements, m < N.
    cfg : DesignConfig
    threads : int, optional
        Stage I worker threads.  Columns are optimized independently
        with per-column RNG streams (seed, iteration, column), so the
        result is identical for any thread count.

    Returns
    -------
    (SensingDesign, ConvergenceTrace)
    """
    x = x_mat.data if hasattr(x_mat, "data") else np.asarray(x_mat, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise InvalidShape("training set must be a non-empty 2-D matrix")
    n, l = x.shape
    if m >= n:
        raise InvalidShape("need m < n, got m=%d n=%d" % (m, n))
    if basis.n != n:
        raise DimensionMismatch("basis size %d != signal length %d" % (basis.n, n))
    if threads is None:
        threads = 1

    psi = basis.matrix
    coeffs = psi.T @ x  # Psi is orthonormal, so Psi^{-1} = Psi^T
    col_energy = np.sum(coeffs * coeffs, axis=0)
    bad = np.nonzero(col_energy < ZERO_ENERGY)[0]
    if bad.size:
        raise ZeroTrainingColumn(int(bad[0]))
    c_norms = np.sqrt(col_energy)

    phi = init_sensing_matrix(m, n, cfg.seed)
    a_mat = phi @ psi
    trace = []

    def optimize_column(args):
        k, j, y0 = args
        rng = np.random.default_rng([cfg.seed, k, j])
        return maximize_entropy(y0, c_norms[j], cfg, rng=rng)

    for k in range(1, cfg.outer_iters + 1):
        y_init = a_mat @ coeffs
        jobs = [(k, j, np.ascontiguousarray(y_init[:, j])) for j in range(l)]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                columns = list(pool.map(optimize_column, jobs))
        else:
            columns = [optimize_column(job) for job in jobs]
        y_hat = np.column_stack(columns)

        a_mat = procrustes_rect(coeffs, y_hat)
        phi = a_mat @ psi.T

        trace.append(float(np.mean(_column_entropies(a_mat @ coeffs))))

        if cfg.early_stop and len(trace) >= 6:
            diffs = np.abs(np.diff(trace[-6:]))
            if np.all(diffs < 1e-6):
                break

    design = SensingDesign(phi=phi, a=a_mat, m=m, n=n, basis_kind=basis.kind)
    return design, ConvergenceTrace(avg_entropy_per_iter=np.array(trace))


def write_trace_csv(trace, path):
    """Write the entropy trace as CSV with an iteration column."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,avg_entropy\n")
        for i, h in enumerate(trace.avg_entropy_per_iter, start=1):
            fh.write("%d,%.17g\n" % (i, h))


def worker_count():
    """Worker cap from the EMS_THREADS environment variable (default 1)."""
    try:
        return max(1, int(os.environ.get("EMS_THREADS", "1")))
    except ValueError:
        return 1
