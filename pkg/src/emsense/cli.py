"""Command-line front end.

Subcommands: train, sense, recover, sweep, info.  Options resolve with
the precedence defaults < config file < command-line flags, and every
run that writes files also writes a sidecar listing the fully resolved
configuration.  The EMS_THREADS environment variable caps Stage I
worker parallelism; it never changes results, only wall time.

Matrix files use the text format of emsense.matio: a "rows cols"
header line followed by row-major whitespace-separated values, with
'#' comment lines ignored.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import ems_design, entropy_core, evaluate, recovery, signals, sparsify
from .errors import EmsError, ZeroVector
from .matio import read_matrix, write_matrix


class UsageError(Exception):
    """Bad arguments or config keys; maps to exit code 2."""


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError("expected a boolean, got %r" % text)


def _parse_int_list(text):
    try:
        return [int(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError:
        raise UsageError("expected comma-separated integers, got %r" % text)


def _parse_float_list(text):
    try:
        return [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError:
        raise UsageError("expected comma-separated numbers, got %r" % text)


def _parse_str_list(text):
    return [tok.strip() for tok in str(text).split(",") if tok.strip()]


# option name -> (type converter, default, help); None default means required
_COMMON_DESIGN_OPTS = {
    "alpha": (float, 1.0, "entropy/penalty trade-off weight"),
    "delta": (float, 0.1, "target isometry constant in (0,1)"),
    "zeta": (float, 1e-15, "penalty smoothing constant"),
    "outer-iters": (int, 100, "alternating iterations"),
    "inner-max-iters": (int, 200, "Stage I gradient steps per signal"),
    "inner-grad-tol": (float, 1e-6, "Stage I gradient-norm stop"),
    "early-stop": (_parse_bool, False, "stop when the entropy trace saturates"),
}

_SOLVER_OPTS = {
    "solver": (str, "bp", "recovery solver: omp | bp | bpdn"),
    "k": (int, 10, "sparsity level (OMP atom count, sweep label)"),
    "lam": (float, 0.0, "BPDN l1 weight"),
    "tol": (float, 1e-7, "solver tolerance"),
    "max-iters": (int, 5000, "solver iteration cap"),
    "rho": (float, 1.0, "ADMM penalty for basis pursuit"),
}

_SUBCOMMAND_OPTS = {
    "train": {
        "data": (str, None, "training data: matrix file or directory of PGM images"),
        "m": (int, None, "number of measurements (rows of phi)"),
        "basis": (str, "dct", "dct | identity | path to a basis matrix file"),
        "seed": (int, 0, "RNG seed"),
        "out": (str, None, "output path for the learned phi matrix"),
        **_COMMON_DESIGN_OPTS,
    },
    "sense": {
        "matrix": (str, None, "sensing matrix phi"),
        "data": (str, None, "signal matrix X"),
        "out": (str, None, "output path for measurements Y = phi X"),
    },
    "recover": {
        "phi": (str, None, "sensing matrix phi"),
        "basis": (str, "dct", "dct | identity | path to a basis matrix file"),
        "measurements": (str, None, "measurement matrix Y"),
        "out": (str, None, "output path for recovered signals"),
        "truth": (str, "", "ground-truth signals; enables per-signal SRER CSV"),
        **_SOLVER_OPTS,
    },
    "sweep": {
        "kind": (str, None, "measurements | sparsity | noise | rip-table"),
        "out": (str, None, "output CSV path"),
        "n": (int, 64, "signal dimension"),
        "m-values": (_parse_int_list, [10, 20, 30], "M grid"),
        "m": (int, 10, "fixed M for the sparsity sweep"),
        "k-values": (_parse_int_list, [1, 5, 10, 15, 20], "K grid (sparsity sweep)"),
        "snr-values": (_parse_float_list, [3.0], "input SNR grid in dB (noise sweep)"),
        "methods": (_parse_str_list, ["ems", "gaussian"], "ems | gaussian | ortho"),
        "basis": (str, "dct", "dct | identity | path to a basis matrix file"),
        "train-size": (int, 200, "training signals per class"),
        "test-size": (int, 100, "held-out test signals"),
        "seed": (int, 0, "base RNG seed"),
        "train-seed": (int, -1, "training-set seed (-1: derive from seed)"),
        "test-seed": (int, -1, "test-set seed (-1: derive from seed)"),
        "noise-seed": (int, -1, "noise seed (-1: derive from seed)"),
        "amplitude-dist": (str, "unit_normal", "unit_normal | uniform_pm1"),
        "dat": (_parse_bool, False, "also write a space-delimited .dat file"),
        **_COMMON_DESIGN_OPTS,
        **_SOLVER_OPTS,
    },
    "info": {
        "phi": (str, None, "sensing matrix phi"),
        "basis": (str, "dct", "dct | identity | path to a basis matrix file"),
        "data": (str, "", "optional signal matrix for entropy/RIP diagnostics"),
    },
}


def _flag(name):
    return "--" + name


def _key(name):
    return name.replace("-", "_")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ems",
        description="Entropy-maximizing sensing-matrix toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "train": cmd_train,
        "sense": cmd_sense,
        "recover": cmd_recover,
        "sweep": cmd_sweep,
        "info": cmd_info,
    }
    for name, opts in _SUBCOMMAND_OPTS.items():
        p = sub.add_parser(name, help="%s subcommand" % name)
        p.add_argument("--config", default=None, help="key=value config file")
        for opt, (conv, default, help_text) in opts.items():
            suffix = "" if default is None else " (default: %s)" % (default,)
            p.add_argument(
                _flag(opt), dest=_key(opt), default=None, help=help_text + suffix
            )
        p.set_defaults(func=handlers[name], spec=opts, parser=p)
    return parser


def _load_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise UsageError(
                    "%s:%d: expected key=value, got %r" % (path, lineno, stripped)
                )
            key, _, value = stripped.partition("=")
            values[key.strip()] = value.strip()
    return values


def resolve_options(args):
    """Apply precedence defaults < config file < flags; reject unknown keys."""
    spec = args.spec
    file_values = _load_config_file(args.config) if args.config else {}
    known = {_key(name): name for name in spec}
    resolved = {}
    for key, raw in file_values.items():
        if _key(key) not in known:
            raise UsageError("unknown config key %r" % key)
    for name, (conv, default, _) in spec.items():
        raw = getattr(args, _key(name))
        if raw is None:
            for key, value in file_values.items():
                if _key(key) == _key(name):
                    raw = value
                    break
        if raw is None:
            if default is None:
                raise UsageError("missing required option %s" % _flag(name))
            resolved[_key(name)] = default
            continue
        if isinstance(raw, str):
            try:
                resolved[_key(name)] = conv(raw)
            except (ValueError, TypeError):
                raise UsageError("bad value %r for %s" % (raw, _flag(name)))
        else:
            resolved[_key(name)] = raw
    return resolved


def _config_text(command, resolved):
    lines = ["command=%s" % command]
    for key in sorted(resolved):
        value = resolved[key]
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        lines.append("%s=%s" % (key.replace("_", "-"), value))
    return "\n".join(lines) + "\n"


def _write_sidecar(command, resolved, out_path):
    stem, _ = os.path.splitext(out_path)
    with open(stem + "_config.txt", "w", encoding="utf-8") as fh:
        fh.write(_config_text(command, resolved))


def _resolve_basis(choice, n):
    if choice == "dct":
        return sparsify.dct_basis(n)
    if choice == "identity":
        return sparsify.identity_basis(n)
    return sparsify.load_basis(choice)


def _load_training_data(path):
    if os.path.isdir(path):
        names = sorted(f for f in os.listdir(path) if f.lower().endswith(".pgm"))
        if not names:
            raise UsageError("no .pgm files in directory %s" % path)
        blocks = [
            signals.image_to_blocks(signals.load_pgm(os.path.join(path, f)))
            for f in names
        ]
        return signals.SignalMatrix(
            data=np.hstack([b.data for b in blocks]), origin="image_blocks"
        )
    return signals.SignalMatrix(data=read_matrix(path), origin="file")


def _design_config(opt):
    return ems_design.DesignConfig(
        alpha=opt["alpha"],
        delta=opt["delta"],
        zeta=opt["zeta"],
        outer_iters=opt["outer_iters"],
        inner_max_iters=opt["inner_max_iters"],
        inner_grad_tol=opt["inner_grad_tol"],
        seed=opt["seed"],
        early_stop=opt["early_stop"],
    )


def _recovery_config(opt):
    return recovery.RecoveryConfig(
        max_iters=opt["max_iters"], tol=opt["tol"], rho=opt["rho"], lam=opt["lam"]
    )


def _check_solver(name):
    if name not in ("omp", "bp", "bpdn"):
        raise UsageError("unknown solver %r (expected omp, bp, or bpdn)" % name)
    return name


def cmd_train(args):
    opt = resolve_options(args)
    train = _load_training_data(opt["data"])
    basis = _resolve_basis(opt["basis"], train.n)
    cfg = _design_config(opt)
    design, trace = ems_design.ems_train(
        train, basis, opt["m"], cfg, threads=ems_design.worker_count()
    )
    out = opt["out"]
    stem, ext = os.path.splitext(out)
    write_matrix(design.phi, out)
    write_matrix(design.a, stem + "_a" + (ext or ".mat"))
    ems_design.write_trace_csv(trace, stem + "_trace.csv")
    _write_sidecar("train", opt, out)
    print(
        "trained m=%d n=%d on %d signals; final avg entropy %.6f nats (ln M = %.6f)"
        % (design.m, design.n, train.l, trace.final_avg_entropy, math.log(design.m))
    )
    return 0


def cmd_sense(args):
    opt = resolve_options(args)
    phi = read_matrix(opt["matrix"])
    x = read_matrix(opt["data"])
    if x.shape[0] != phi.shape[1]:
        raise EmsError(
            "DimensionMismatch: phi is %dx%d but signals have %d rows"
            % (phi.shape[0], phi.shape[1], x.shape[0])
        )
    write_matrix(phi @ x, opt["out"])
    _write_sidecar("sense", opt, opt["out"])
    print("sensed %d signals down to %d measurements" % (x.shape[1], phi.shape[0]))
    return 0


def cmd_recover(args):
    opt = resolve_options(args)
    phi = read_matrix(opt["phi"])
    basis = _resolve_basis(opt["basis"], phi.shape[1])
    y = read_matrix(opt["measurements"])
    if y.shape[0] != phi.shape[0]:
        raise EmsError(
            "DimensionMismatch: phi has %d rows but measurements have %d"
            % (phi.shape[0], y.shape[0])
        )
    a_mat = phi @ basis.matrix
    solver = _check_solver(opt["solver"])
    cfg = _recovery_config(opt)
    coeffs = np.empty((phi.shape[1], y.shape[1]))
    for j in range(y.shape[1]):
        result = evaluate.recover_column(
            a_mat, np.ascontiguousarray(y[:, j]), solver, opt["k"], cfg, opt["lam"]
        )
        coeffs[:, j] = result.coeffs
    x_hat = basis.matrix @ coeffs
    write_matrix(x_hat, opt["out"])
    _write_sidecar("recover", opt, opt["out"])

    if opt["truth"]:
        truth = read_matrix(opt["truth"])
        stem, _ = os.path.splitext(opt["out"])
        with open(stem + "_srer.csv", "w", encoding="utf-8") as fh:
            fh.write("signal,srer_db\n")
            for j in range(truth.shape[1]):
                fh.write("%d,%.17g\n" % (j, evaluate.srer(truth[:, j], x_hat[:, j])))
    print("recovered %d signals with %s" % (y.shape[1], opt["solver"]))
    return 0


def _sweep_seeds(opt):
    seed = opt["seed"]
    train_seed = opt["train_seed"] if opt["train_seed"] >= 0 else seed + 1
    test_seed = opt["test_seed"] if opt["test_seed"] >= 0 else seed + 2
    noise_seed = opt["noise_seed"] if opt["noise_seed"] >= 0 else seed + 3
    if train_seed == test_seed:
        raise UsageError("train and test seeds must differ (held-out test set)")
    return train_seed, test_seed, noise_seed


def cmd_sweep(args):
    opt = resolve_options(args)
    kind = opt["kind"]
    if kind not in ("measurements", "sparsity", "noise", "rip-table"):
        raise UsageError("unknown sweep kind %r" % kind)
    n = opt["n"]
    _check_solver(opt["solver"])
    if opt["amplitude_dist"] not in ("unit_normal", "uniform_pm1"):
        raise UsageError("unknown amplitude-dist %r" % opt["amplitude_dist"])
    basis = _resolve_basis(opt["basis"], n)
    design_cfg = _design_config(opt)
    recovery_cfg = _recovery_config(opt)
    train_seed, test_seed, noise_seed = _sweep_seeds(opt)
    threads = ems_design.worker_count()
    dist = opt["amplitude_dist"]

    def gen(k, size, seed):
        return signals.gen_sparse_signals(n, k, size, basis, seed, dist)

    if kind == "measurements":
        table = evaluate.sweep_measurements(
            gen(opt["k"], opt["train_size"], train_seed),
            gen(opt["k"], opt["test_size"], test_seed),
            basis,
            opt["methods"],
            opt["m_values"],
            opt["solver"],
            design_cfg,
            recovery_cfg,
            k=opt["k"],
            threads=threads,
        )
    elif kind == "sparsity":
        table = evaluate.sweep_sparsity(
            lambda k: gen(k, opt["train_size"], [train_seed, k]),
            lambda k: gen(k, opt["test_size"], [test_seed, k]),
            basis,
            opt["methods"],
            opt["m"],
            opt["k_values"],
            opt["solver"],
            design_cfg,
            recovery_cfg,
            threads=threads,
        )
    elif kind == "noise":
        table = evaluate.sweep_noise(
            gen(opt["k"], opt["train_size"], train_seed),
            gen(opt["k"], opt["test_size"], test_seed),
            basis,
            opt["methods"],
            opt["m_values"],
            opt["snr_values"],
            opt["solver"],
            design_cfg,
            recovery_cfg,
            k=opt["k"],
            noise_seed=noise_seed,
            threads=threads,
        )
    else:  # rip-table
        table = evaluate.rip_table(
            gen(opt["k"], opt["train_size"], train_seed),
            basis,
            opt["m_values"],
            design_cfg,
            threads=threads,
        )

    evaluate.write_csv(table, opt["out"])
    if opt["dat"]:
        stem, _ = os.path.splitext(opt["out"])
        evaluate.write_dat(table, stem + ".dat")
    _write_sidecar("sweep", opt, opt["out"])
    n_rows = len(table.rows) if hasattr(table, "rows") else len(table)
    print("wrote %d table rows to %s" % (n_rows, opt["out"]))
    return 0


def cmd_info(args):
    opt = resolve_options(args)
    phi = read_matrix(opt["phi"])
    m, n = phi.shape
    basis = _resolve_basis(opt["basis"], n)
    a_mat = phi @ basis.matrix
    row_err = np.linalg.norm(a_mat @ a_mat.T - np.eye(m))
    print("phi: %d x %d   basis: %s" % (m, n, basis.kind))
    print("row-orthonormality ||AA^T - I||_F: %.3g" % row_err)
    print("mutual coherence mu(A): %.6f" % entropy_core.mutual_coherence(a_mat))
    if n <= 14:
        print("spark(A): %d" % entropy_core.spark_bruteforce(a_mat))
    if opt["data"]:
        x = read_matrix(opt["data"])
        if x.shape[0] != n:
            raise EmsError(
                "DimensionMismatch: phi is %dx%d but signals have %d rows"
                % (m, n, x.shape[0])
            )
        coeffs = basis.matrix.T @ x
        meas = a_mat @ coeffs
        checks = []
        in_null_space = 0
        for j in range(x.shape[1]):
            try:
                checks.append(entropy_core.check_bounds(coeffs[:, j], meas[:, j]))
            except ZeroVector:
                in_null_space += 1  # entropy undefined for c in N(A)
        print("signals: %d" % x.shape[1])
        if in_null_space:
            print("zero measurement vectors (signal in null space): %d" % in_null_space)
        if checks:
            h_c = np.array([c.h_c for c in checks])
            h_y = np.array([c.h_y for c in checks])
            print(
                "H(c) min/mean/max: %.4f / %.4f / %.4f nats"
                % (h_c.min(), h_c.mean(), h_c.max())
            )
            print(
                "H(y) min/mean/max: %.4f / %.4f / %.4f nats (ln M = %.4f)"
                % (h_y.min(), h_y.mean(), h_y.max(), math.log(m))
            )
            print(
                "entropy bounds pass: %.1f%%   M_eff >= 2K: %.1f%%"
                % (
                    100.0 * np.mean([c.lemma1_pass for c in checks]),
                    100.0 * np.mean([c.meff_cond_pass for c in checks]),
                )
            )
        deltas = entropy_core.empirical_rip_deltas(a_mat, coeffs)
        print(
            "empirical delta min/median/max: %.4f / %.4f / %.4f"
            % (np.min(deltas), np.median(deltas), np.max(deltas))
        )
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        args.parser.print_usage(sys.stderr)
        return 2
    except (EmsError, OSError, ValueError) as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
