"""Recovery metrics and experiment sweeps.

SRER and PSNR in dB (capped at +300 for exact recovery), plus the
sweep harness that trains/builds sensing matrices, measures held-out
test signals, recovers them, and tabulates mean/std SRER per
(method, M, K, SNR) cell.  Tables serialize to CSV or to
space-delimited .dat files with identical columns.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .ems_design import (
    SensingDesign,
    ems_train,
    init_sensing_matrix,
    random_gaussian_matrix,
)
from .entropy_core import ZERO_ENERGY, empirical_rip_deltas
from .errors import DimensionMismatch, ZeroSignal
from .recovery import basis_pursuit, bpdn, omp, universal_threshold
from .signals import SignalMatrix, add_awgn
from .sparsify import synthesize

SRER_CAP_DB = 300.0

SWEEP_COLUMNS = ("method", "m", "k", "snr_db", "mean_srer_db", "std_srer_db", "n_signals")
RIP_COLUMNS = ("m", "delta_min", "delta_max", "delta_median")


@dataclass(frozen=True)
class SweepRow:
    method: str
    m: int
    k: int
    snr_db: float
    mean_srer_db: float
    std_srer_db: float
    n_signals: int


@dataclass(frozen=True)
class SweepTable:
    rows: tuple

    def __post_init__(self):
        keys = [(r.method, r.m, r.k, r.snr_db) for r in self.rows]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (method, m, k, snr) rows")


@dataclass(frozen=True)
class RipRow:
    m: int
    delta_min: float
    delta_max: float
    delta_median: float


def make_sweep_table(rows):
    """Deterministically ordered table: method, then M, K, SNR ascending."""
    return SweepTable(
        rows=tuple(sorted(rows, key=lambda r: (r.method, r.m, r.k, r.snr_db)))
    )


def srer(x, x_hat):
    """Signal-to-reconstruction-error ratio in dB.

    10*log10(sum x_i^2 / sum (x_i - x_hat_i)^2), capped at +300 dB when
    the error energy is below 1e-30 times the signal energy.
    """
    x = np.asarray(x, dtype=float).ravel()
    x_hat = np.asarray(x_hat, dtype=float).ravel()
    if x.shape != x_hat.shape:
        raise DimensionMismatch(
            "signal length %d != reconstruction length %d" % (x.size, x_hat.size)
        )
    sig = float(x @ x)
    if sig < ZERO_ENERGY:
        raise ZeroSignal("reference signal has zero energy")
    err = x - x_hat
    err_energy = float(err @ err)
    if err_energy < 1e-30 * sig:
        return SRER_CAP_DB
    return 10.0 * math.log10(sig / err_energy)


def psnr(img, img_hat):
    """Peak signal-to-noise ratio between two 8-bit images, in dB."""
    if img.width != img_hat.width or img.height != img_hat.height:
        raise DimensionMismatch(
            "image sizes differ: %dx%d vs %dx%d"
            % (img.width, img.height, img_hat.width, img_hat.height)
        )
    diff = img.pixels.astype(float) - img_hat.pixels.astype(float)
    mse = float(np.mean(diff * diff))
    if mse < 1e-12:
        return SRER_CAP_DB
    return 10.0 * math.log10(255.0**2 / mse)


def _baseline_seed(seed, method_id, m):
    # distinct deterministic stream per (method, M) cell
    return [int(seed), method_id, int(m)]


def build_design(method, train, basis, m, design_cfg, threads=None):
    """Sensing design for one sweep cell.

    "ems" trains on the given set; "gaussian" and "ortho" are the
    untrained baselines (i.i.d. Gaussian, row-orthonormalized Gaussian)
    drawn from streams derived from the design seed, the method, and M.
    """
    n = train.n if isinstance(train, SignalMatrix) else train.shape[0]
    if method == "ems":
        design, _ = ems_train(train, basis, m, design_cfg, threads=threads)
        return design
    if method == "gaussian":
        phi = random_gaussian_matrix(m, n, _baseline_seed(design_cfg.seed, 1, m))
    elif method == "ortho":
        phi = init_sensing_matrix(m, n, _baseline_seed(design_cfg.seed, 2, m))
    else:
        raise ValueError("unknown method %r" % method)
    return SensingDesign(
        phi=phi, a=phi @ basis.matrix, m=m, n=n, basis_kind=basis.kind
    )


def recover_column(a_mat, y, solver, k, recovery_cfg, lam):
    """Dispatch one measurement vector to the named solver."""
    if solver == "omp":
        return omp(a_mat, y, k=k)
    if solver == "bp":
        return basis_pursuit(a_mat, y, recovery_cfg)
    if solver == "bpdn":
        return bpdn(a_mat, y, lam, recovery_cfg)
    raise ValueError("unknown solver %r" % solver)


def _seed_list(seed):
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return [int(seed)]


def _cell_srer(design, basis, test, solver, k, recovery_cfg, lam=0.0, noise=None):
    """SRER of every test signal measured by design.phi and recovered.

    noise, when given, is (snr_db, seed): AWGN is added to each signal
    before measurement but SRER is computed against the clean signal.
    """
    values = []
    for j in range(test.l):
        x = np.ascontiguousarray(test.data[:, j])
        x_in = x
        if noise is not None:
            snr_db, seed = noise
            x_in = add_awgn(x, snr_db, _seed_list(seed) + [j])
        y = design.phi @ x_in
        result = recover_column(design.a, y, solver, k, recovery_cfg, lam)
        values.append(srer(x, synthesize(basis, result.coeffs)))
    return np.array(values)


def sweep_measurements(
    train,
    test,
    basis,
    methods,
    m_values,
    solver,
    design_cfg,
    recovery_cfg=None,
    k=0,
    threads=None,
):
    """Mean/std SRER against the number of measurements M.

    One design per (method, M) trained/built on `train`, evaluated on
    the held-out `test` set.  k labels the test-set sparsity and feeds
    the OMP atom count; it is only a label for bp.
    """
    rows = []
    for method in methods:
        for m in m_values:
            design = build_design(method, train, basis, m, design_cfg, threads)
            vals = _cell_srer(design, basis, test, solver, k, recovery_cfg)
            rows.append(
                SweepRow(
                    method=method,
                    m=int(m),
                    k=int(k),
                    snr_db=math.inf,
                    mean_srer_db=float(np.mean(vals)),
                    std_srer_db=float(np.std(vals)),
                    n_signals=test.l,
                )
            )
    return make_sweep_table(rows)


def sweep_sparsity(
    train_per_k,
    test_per_k,
    basis,
    methods,
    m,
    k_values,
    solver,
    design_cfg,
    recovery_cfg=None,
    threads=None,
):
    """Mean/std SRER against sparsity K at fixed M.

    train_per_k and test_per_k map a K value to a SignalMatrix.  Each
    method is trained ONCE on the concatenation of the per-K training
    sets, then evaluated on each K's test set separately.
    """
    blocks = [train_per_k(k) for k in k_values]
    train = SignalMatrix(
        data=np.hstack([b.data for b in blocks]), origin=blocks[0].origin
    )
    rows = []
    for method in methods:
        design = build_design(method, train, basis, m, design_cfg, threads)
        for k in k_values:
            test = test_per_k(k)
            vals = _cell_srer(design, basis, test, solver, k, recovery_cfg)
            rows.append(
                SweepRow(
                    method=method,
                    m=int(m),
                    k=int(k),
                    snr_db=math.inf,
                    mean_srer_db=float(np.mean(vals)),
                    std_srer_db=float(np.std(vals)),
                    n_signals=test.l,
                )
            )
    return make_sweep_table(rows)


def sweep_noise(
    train,
    test,
    basis,
    methods,
    m_values,
    snr_values,
    solver,
    design_cfg,
    recovery_cfg=None,
    k=0,
    noise_seed=0,
    threads=None,
):
    """Mean/std SRER under additive white Gaussian measurement noise.

    Noise at each target SNR is injected into the test signals before
    measurement; SRER is computed against the clean signals.  bpdn's
    weight is the universal threshold for the injected noise level.
    """
    rows = []
    for method in methods:
        for m in m_values:
            design = build_design(method, train, basis, m, design_cfg, threads)
            for si, snr_db in enumerate(snr_values):
                lam = 0.0
                if solver == "bpdn" and math.isfinite(snr_db):
                    # exact per-signal scaling makes sigma a set-level constant
                    sig_norms = np.linalg.norm(test.data, axis=0)
                    sigma = float(np.mean(sig_norms)) / (
                        10.0 ** (snr_db / 20.0) * math.sqrt(test.n)
                    )
                    lam = universal_threshold(sigma, test.n)
                vals = _cell_srer(
                    design,
                    basis,
                    test,
                    solver,
                    k,
                    recovery_cfg,
                    lam=lam,
                    noise=(snr_db, [int(noise_seed), si]),
                )
                rows.append(
                    SweepRow(
                        method=method,
                        m=int(m),
                        k=int(k),
                        snr_db=float(snr_db),
                        mean_srer_db=float(np.mean(vals)),
                        std_srer_db=float(np.std(vals)),
                        n_signals=test.l,
                    )
                )
    return make_sweep_table(rows)


def rip_table(train, basis, m_values, design_cfg, threads=None):
    """Empirical isometry-constant range per M, one EMS design per M."""
    coeffs = basis.matrix.T @ (
        train.data if isinstance(train, SignalMatrix) else np.asarray(train)
    )
    rows = []
    for m in m_values:
        design, _ = ems_train(train, basis, m, design_cfg, threads=threads)
        deltas = empirical_rip_deltas(design.a, coeffs)
        rows.append(
            RipRow(
                m=int(m),
                delta_min=float(np.min(deltas)),
                delta_max=float(np.max(deltas)),
                delta_median=float(np.median(deltas)),
            )
        )
    return sorted(rows, key=lambda r: r.m)


def _format_value(v):
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _table_cells(table):
    if isinstance(table, SweepTable):
        header = SWEEP_COLUMNS
        rows = [
            (r.method, r.m, r.k, r.snr_db, r.mean_srer_db, r.std_srer_db, r.n_signals)
            for r in table.rows
        ]
    else:  # list of RipRow
        header = RIP_COLUMNS
        rows = [(r.m, r.delta_min, r.delta_max, r.delta_median) for r in table]
    return header, rows


def write_csv(table, path):
    """Write a sweep or RIP table as CSV with a header row."""
    header, rows = _table_cells(table)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_value(v) for v in row])


def write_dat(table, path):
    """gnuplot-friendly variant: same columns, space-delimited, '#' header."""
    header, rows = _table_cells(table)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in rows:
            fh.write(" ".join(_format_value(v) for v in row) + "\n")


def read_csv(path):
    """Parse a sweep CSV written by write_csv back into a SweepTable."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SWEEP_COLUMNS:
            raise ValueError("unexpected header %r" % (header,))
        rows = [
            SweepRow(
                method=rec[0],
                m=int(rec[1]),
                k=int(rec[2]),
                snr_db=float(rec[3]),
                mean_srer_db=float(rec[4]),
                std_srer_db=float(rec[5]),
                n_signals=int(rec[6]),
            )
            for rec in reader
        ]
    return make_sweep_table(rows)
