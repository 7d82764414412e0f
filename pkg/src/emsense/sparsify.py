"""Orthonormal sparsifying bases and analysis/synthesis transforms."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidSize, NotOrthonormal, NotSquare
from .matio import read_matrix

ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class SparsifyingBasis:
    """Orthonormal N x N basis; columns are the basis vectors.

    kind is one of "dct", "identity", "file".
    """

    matrix: np.ndarray
    kind: str

    @property
    def n(self):
        return self.matrix.shape[0]


def dct_basis(n):
    """Orthonormal DCT-II synthesis basis of size n.

    Column 0 is the constant vector 1/sqrt(n); column k >= 1 has entries
    sqrt(2/n) * cos(pi*(2t+1)*k / (2n)) for t = 0..n-1.
    """
    if n < 2:
        raise InvalidSize("basis size must be >= 2, got %d" % n)
    t = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    mat = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * t + 1) * k / (2.0 * n))
    mat[:, 0] = np.sqrt(1.0 / n)
    return SparsifyingBasis(matrix=mat, kind="dct")


def identity_basis(n):
    if n < 2:
        raise InvalidSize("basis size must be >= 2, got %d" % n)
    return SparsifyingBasis(matrix=np.eye(n), kind="identity")


def analyze(basis, x):
    """Coefficients of x in the basis: c = Psi^T x."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != basis.n:
        raise DimensionMismatch(
            "signal length %d != basis size %d" % (x.shape[0], basis.n)
        )
    return basis.matrix.T @ x


def synthesize(basis, c):
    """Signal from coefficients: x = Psi c."""
    c = np.asarray(c, dtype=float)
    if c.shape[0] != basis.n:
        raise DimensionMismatch(
            "coefficient length %d != basis size %d" % (c.shape[0], basis.n)
        )
    return basis.matrix @ c


def load_basis(path):
    """Load a basis from a matrix text file and validate orthonormality."""
    mat = read_matrix(path)
    if mat.shape[0] != mat.shape[1]:
        raise NotSquare("basis must be square, got %dx%d" % mat.shape)
    if mat.shape[0] < 2:
        raise InvalidSize("basis size must be >= 2, got %d" % mat.shape[0])
    gram_err = np.linalg.norm(mat.T @ mat - np.eye(mat.shape[0]))
    if gram_err > ORTHO_TOL:
        raise NotOrthonormal(
            "||Psi^T Psi - I||_F = %.3g exceeds %g" % (gram_err, ORTHO_TOL)
        )
    return SparsifyingBasis(matrix=mat, kind="file")
