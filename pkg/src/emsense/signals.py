"""Signal generation and ingestion.

Synthetic K-sparse signal sets, exact-SNR white-noise injection, and
8x8 image-block handling backed by a dependency-free PGM reader/writer.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadHeader,
    DimensionMismatch,
    InvalidSparsity,
    NotDivisible,
    UnsupportedFormat,
    ZeroVector,
)
from .entropy_core import ZERO_ENERGY
from .sparsify import synthesize


@dataclass(frozen=True)
class SignalMatrix:
    """Column-stacked real signals, one signal per column."""

    data: np.ndarray
    origin: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.data)):
            raise ValueError("signal matrix contains NaN or Inf entries")

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def l(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image; pixels is a (height, width) uint8 array."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width):
            raise ValueError(
                "pixel array %s does not match %dx%d"
                % (self.pixels.shape, self.width, self.height)
            )


def gen_sparse_signals(n, k, l, basis, seed, amplitude_dist="unit_normal"):
    """Generate l signals of length n that are exactly k-sparse in basis.

    Each column is Psi @ c with c supported on k positions drawn
    uniformly at random.  Amplitudes are i.i.d. standard normal
    ("unit_normal") or random signs ("uniform_pm1").  Column j is drawn
    from its own RNG stream (seed, j), so the set is reproducible
    independent of generation order.
    """
    if not 1 <= k <= n:
        raise InvalidSparsity("k must be in [1, %d], got %d" % (n, k))
    if basis.n != n:
        raise DimensionMismatch("basis size %d != n=%d" % (basis.n, n))
    if amplitude_dist not in ("unit_normal", "uniform_pm1"):
        raise ValueError("unknown amplitude_dist %r" % amplitude_dist)

    base = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    coeffs = np.zeros((n, l))
    for j in range(l):
        rng = np.random.default_rng(base + [j])
        while True:
            support = rng.choice(n, size=k, replace=False)
            if amplitude_dist == "unit_normal":
                amps = rng.standard_normal(k)
            else:
                amps = rng.choice([-1.0, 1.0], size=k)
            if np.any(amps != 0.0):
                break
        coeffs[support, j] = amps
    return SignalMatrix(data=synthesize(basis, coeffs), origin="synthetic")


def add_awgn(x, snr_db, seed):
    """Add white Gaussian noise realizing the target SNR exactly.

    The drawn noise is rescaled so that 10*log10(||x||^2/||e||^2)
    equals snr_db per signal, not just in expectation.  snr_db=inf
    returns the signal unchanged.
    """
    x = np.asarray(x, dtype=float)
    energy = float(np.dot(x.ravel(), x.ravel()))
    if energy < ZERO_ENERGY:
        raise ZeroVector("cannot set an SNR for a zero signal")
    if math.isinf(snr_db) and snr_db > 0:
        return x.copy()
    rng = np.random.default_rng(seed)
    while True:
        e = rng.standard_normal(x.shape)
        e_norm = np.linalg.norm(e)
        if e_norm > 0.0:
            break
    target_norm = math.sqrt(energy) / 10.0 ** (snr_db / 20.0)
    return x + e * (target_norm / e_norm)


_WHITESPACE = frozenset(b" \t\n\r\x0b\x0c")


def _next_token(data, pos):
    n = len(data)
    while pos < n:
        ch = data[pos]
        if ch in _WHITESPACE:
            pos += 1
        elif ch == ord("#"):
            while pos < n and data[pos] not in (10, 13):
                pos += 1
        else:
            break
    if pos >= n:
        raise BadHeader("unexpected end of file in header")
    start = pos
    while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
        pos += 1
    try:
        return data[start:pos].decode("ascii"), pos
    except UnicodeDecodeError:
        raise BadHeader("non-ASCII bytes in header")


def load_pgm(path):
    """Read a PGM image (binary P5 or ASCII P2, maxval 255)."""
    with open(path, "rb") as fh:
        data = fh.read()

    magic, pos = _next_token(data, 0)
    if magic not in ("P2", "P5"):
        raise UnsupportedFormat("not a PGM file (magic %r)" % magic)
    fields = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise BadHeader("non-integer header field %r" % tok)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise BadHeader("bad dimensions %dx%d" % (width, height))
    if maxval != 255:
        raise UnsupportedFormat("only maxval 255 supported, got %d" % maxval)

    count = width * height
    if magic == "P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise BadHeader("missing separator after maxval")
        pos += 1
        raster = data[pos : pos + count]
        if len(raster) < count:
            raise BadHeader(
                "raster truncated: need %d bytes, have %d" % (count, len(raster))
            )
        pixels = np.frombuffer(raster, dtype=np.uint8, count=count)
    else:
        values = np.empty(count, dtype=np.uint8)
        for i in range(count):
            try:
                tok, pos = _next_token(data, pos)
                val = int(tok)
            except (BadHeader, ValueError):
                raise BadHeader("raster truncated or malformed at pixel %d" % i)
            if not 0 <= val <= 255:
                raise BadHeader("pixel value %d out of range" % val)
            values[i] = val
        pixels = values
    return GrayImage(width=width, height=height, pixels=pixels.reshape(height, width))


def save_pgm(img, path, ascii_format=False):
    """Write a PGM image, binary P5 by default or ASCII P2."""
    pixels = np.ascontiguousarray(img.pixels, dtype=np.uint8)
    if ascii_format:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("P2\n%d %d\n255\n" % (img.width, img.height))
            for row in pixels:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
    else:
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (img.width, img.height))
            fh.write(pixels.tobytes())


def image_to_blocks(img, b=8):
    """Vectorize non-overlapping b x b blocks into signal columns.

    Blocks are taken in raster order; each block is flattened
    column-major, so column length is b*b.  Pixel values become floats
    in [0, 255].
    """
    if img.height % b or img.width % b:
        raise NotDivisible(
            "image %dx%d not divisible into %dx%d blocks"
            % (img.width, img.height, b, b)
        )
    rows, cols = img.height // b, img.width // b
    data = np.empty((b * b, rows * cols))
    pixels = img.pixels.astype(float)
    for bi in range(rows):
        for bj in range(cols):
            block = pixels[bi * b : (bi + 1) * b, bj * b : (bj + 1) * b]
            data[:, bi * cols + bj] = block.ravel(order="F")
    return SignalMatrix(data=data, origin="image_blocks")


def blocks_to_image(mat, width, height, b=8):
    """Rebuild an image from block columns, rounding to [0, 255] bytes."""
    if height % b or width % b:
        raise NotDivisible(
            "target %dx%d not divisible into %dx%d blocks" % (width, height, b, b)
        )
    data = mat.data if isinstance(mat, SignalMatrix) else np.asarray(mat, dtype=float)
    rows, cols = height // b, width // b
    if data.shape != (b * b, rows * cols):
        raise DimensionMismatch(
            "expected %dx%d block matrix, got %dx%d"
            % (b * b, rows * cols, data.shape[0], data.shape[1])
        )
    pixels = np.empty((height, width), dtype=np.uint8)
    clipped = np.clip(np.rint(data), 0, 255).astype(np.uint8)
    for bi in range(rows):
        for bj in range(cols):
            block = clipped[:, bi * cols + bj].reshape(b, b, order="F")
            pixels[bi * b : (bi + 1) * b, bj * b : (bj + 1) * b] = block
    return GrayImage(width=width, height=height, pixels=pixels)
