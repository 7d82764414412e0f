"""Plain-text matrix files.

Format: first non-comment line holds "rows cols"; the remaining lines
carry the entries row-major, whitespace-separated.  Lines starting
with '#' are ignored.  Values are written with 17 significant digits,
enough to round-trip IEEE doubles exactly.
"""

import numpy as np

from .errors import ParseError


def write_matrix(mat, path):
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    rows, cols = mat.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%d %d\n" % (rows, cols))
        for row in mat:
            fh.write(" ".join("%.17g" % v for v in row) + "\n")


def read_matrix(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()

    header = None
    values = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if header is None:
            if len(tokens) != 2:
                raise ParseError("expected 'rows cols' header", line=lineno)
            try:
                header = (int(tokens[0]), int(tokens[1]))
            except ValueError:
                raise ParseError("non-integer header %r" % stripped, line=lineno)
            if header[0] < 1 or header[1] < 1:
                raise ParseError("non-positive dimensions %r" % stripped, line=lineno)
            continue
        for tok in tokens:
            try:
                values.append(float(tok))
            except ValueError:
                raise ParseError("bad value %r" % tok, line=lineno)

    if header is None:
        raise ParseError("empty matrix file")
    rows, cols = header
    if len(values) != rows * cols:
        raise ParseError(
            "header promises %d values, file has %d" % (rows * cols, len(values))
        )
    return np.array(values, dtype=float).reshape(rows, cols)
