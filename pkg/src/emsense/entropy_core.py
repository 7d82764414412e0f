"""Entropy-based sparsity measures and sensing-matrix diagnostics.

The representation of a signal in an orthonormal basis induces a
probability distribution p_i = |c_i|^2 / ||c||^2; its Shannon entropy
(in nats) measures how concentrated the representation is, and
ceil(exp(H)) is the effective number of coefficients needed to hold
most of the signal energy.  This module computes those quantities plus
the usual matrix diagnostics: mutual coherence, empirical RIP
constants, and a brute-force spark oracle for small matrices.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidShape, TooLarge, ZeroColumn, ZeroVector

# Squared-norm threshold below which a vector counts as zero.
ZERO_ENERGY = 1e-30

# Probabilities below this are treated as exact zeros (0*ln 0 = 0)
# without risking -inf from denormals.
_P_FLOOR = 1e-300

# ceil(exp(H) - CEIL_GUARD): uniform vectors overshoot exp(ln n) = n by a
# few ulps, which would bump the ceiling to n+1.
_CEIL_GUARD = 1e-9


@dataclass(frozen=True)
class ProbDistribution:
    """Energy distribution of a representation: p_i = v_i^2 / ||v||^2."""

    p: np.ndarray


@dataclass(frozen=True)
class EntropyReport:
    """Shannon entropy (nats) of a vector plus its theoretical dimension."""

    entropy: float
    theoretical_dimension: int
    vector_length: int


@dataclass(frozen=True)
class BoundsCheck:
    """Diagnostic for the entropy bounds ln(K) < H(y) <= ln(M).

    k_est and meff are the theoretical dimensions ceil(exp(H)) of the
    coefficient and measurement vectors.  meff_cond_pass checks the
    effective-measurement count condition meff >= 2*k_est.
    """

    h_c: float
    h_y: float
    k_est: int
    m: int
    meff: int
    lemma1_pass: bool
    meff_cond_pass: bool


def _as_vector(v):
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise InvalidShape("empty vector")
    return v


def _energy_distribution(v):
    energy = float(np.dot(v, v))
    if energy < ZERO_ENERGY:
        raise ZeroVector("vector energy %.3g below %g" % (energy, ZERO_ENERGY))
    return v * v / energy


def _entropy_nats(p):
    mask = p >= _P_FLOOR
    h = -float(np.sum(p[mask] * np.log(p[mask])))
    # -0.0 / one-ulp negatives from p_i rounding slightly above 1
    return max(h, 0.0)


def _theoretical_dimension(h, n):
    dim = math.ceil(math.exp(h) - _CEIL_GUARD)
    return min(max(dim, 1), n)


def prob_distribution(v):
    """Probability distribution of a representation vector.

    Raises ZeroVector when the vector carries no energy.
    """
    v = _as_vector(v)
    return ProbDistribution(p=_energy_distribution(v))


def shannon_entropy(v):
    """Shannon entropy of a vector's energy distribution, in nats.

    Returns an EntropyReport carrying the entropy and the theoretical
    dimension ceil(exp(H)), clamped to [1, len(v)].
    """
    v = _as_vector(v)
    p = _energy_distribution(v)
    h = _entropy_nats(p)
    return EntropyReport(
        entropy=h,
        theoretical_dimension=_theoretical_dimension(h, v.size),
        vector_length=v.size,
    )


def check_bounds(c, y):
    """Check the entropy bounds relating coefficients to measurements.

    For a coefficient vector c and its measurement vector y the bounds
    require H(c) <= ln(K) < H(y) <= ln(M) with K = ceil(exp(H(c))),
    plus the effective-count condition M_eff >= 2K.  Pure diagnostic:
    violated bounds set flags, they never raise.
    """
    rep_c = shannon_entropy(c)
    rep_y = shannon_entropy(y)
    h_c, h_y = rep_c.entropy, rep_y.entropy
    k_est = rep_c.theoretical_dimension
    meff = rep_y.theoretical_dimension
    m = rep_y.vector_length
    # 1e-9 slack absorbs the ceiling guard; H(c) <= ln(k_est) is exact
    # in real arithmetic.  The middle inequality is strict by contract.
    lemma1_pass = (
        h_c <= math.log(k_est) + 1e-9
        and math.log(k_est) < h_y
        and h_y <= math.log(m) + 1e-12
    )
    return BoundsCheck(
        h_c=h_c,
        h_y=h_y,
        k_est=k_est,
        m=m,
        meff=meff,
        lemma1_pass=lemma1_pass,
        meff_cond_pass=meff >= 2 * k_est,
    )


def mutual_coherence(a):
    """Largest normalized inner product between distinct columns of a.

    Raises ZeroColumn if any column norm falls below 1e-30, and
    InvalidShape for matrices with fewer than two columns.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] < 2:
        raise InvalidShape("need a 2-D matrix with at least 2 columns")
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms < 1e-30):
        raise ZeroColumn("column %d has zero norm" % int(np.argmin(norms)))
    g = (a / norms).T @ (a / norms)
    np.fill_diagonal(g, 0.0)
    return min(float(np.max(np.abs(g))), 1.0)


def spark_bruteforce(a, rank_tol=1e-10):
    """Smallest number of linearly dependent columns, by enumeration.

    Exponential-time oracle, guarded to N <= 14.  Returns M+1 when no
    dependent subset of size <= M+1 exists (full spark).  Rank of a
    subset counts singular values above rank_tol times the subset's
    largest singular value.
    """
    a = np.asarray(a, dtype=float)
    m, n = a.shape
    if n > 14:
        raise TooLarge("spark enumeration capped at 14 columns, got %d" % n)
    for k in range(2, min(n, m + 1) + 1):
        for cols in itertools.combinations(range(n), k):
            s = np.linalg.svd(a[:, cols], compute_uv=False)
            rank = int(np.sum(s > rank_tol * s[0])) if s[0] > 0.0 else 0
            if rank < k:
                return k
    return m + 1


def empirical_rip_deltas(a, c_mat):
    """Per-column isometry defects |  ||A c||^2 / ||c||^2 - 1 |.

    One value per column of c_mat; callers summarize min/max/median.
    """
    a = np.asarray(a, dtype=float)
    c_mat = np.asarray(c_mat, dtype=float)
    if c_mat.ndim == 1:
        c_mat = c_mat[:, None]
    if a.shape[1] != c_mat.shape[0]:
        raise InvalidShape(
            "matrix is %dx%d but coefficients have %d rows"
            % (a.shape[0], a.shape[1], c_mat.shape[0])
        )
    col_energy = np.sum(c_mat * c_mat, axis=0)
    if np.any(np.sqrt(col_energy) < 1e-30):
        raise ZeroColumn(
            "coefficient column %d has zero norm" % int(np.argmin(col_energy))
        )
    meas_energy = np.sum((a @ c_mat) ** 2, axis=0)
    return np.abs(meas_energy / col_energy - 1.0)
