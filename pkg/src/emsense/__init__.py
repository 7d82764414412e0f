"""Entropy-maximizing sensing-matrix toolkit for compressed sensing.

Learn a sensing matrix whose measurements of a training class carry
maximum Shannon entropy subject to a near-isometry constraint, then
evaluate it against random baselines with sparse-recovery sweeps.
"""

from .ems_design import (
    ConvergenceTrace,
    DesignConfig,
    SensingDesign,
    ems_train,
    init_sensing_matrix,
    maximize_entropy,
    procrustes_rect,
    random_gaussian_matrix,
    stage1_gradient,
    stage1_objective,
)
from .entropy_core import (
    BoundsCheck,
    EntropyReport,
    ProbDistribution,
    check_bounds,
    empirical_rip_deltas,
    mutual_coherence,
    prob_distribution,
    shannon_entropy,
    spark_bruteforce,
)
from .evaluate import (
    SweepRow,
    SweepTable,
    psnr,
    rip_table,
    srer,
    sweep_measurements,
    sweep_noise,
    sweep_sparsity,
    write_csv,
    write_dat,
)
from .matio import read_matrix, write_matrix
from .recovery import RecoveryConfig, RecoveryResult, basis_pursuit, bpdn, omp
from .signals import (
    GrayImage,
    SignalMatrix,
    add_awgn,
    blocks_to_image,
    gen_sparse_signals,
    image_to_blocks,
    load_pgm,
    save_pgm,
)
from .sparsify import (
    SparsifyingBasis,
    analyze,
    dct_basis,
    identity_basis,
    load_basis,
    synthesize,
)

__all__ = [
    "BoundsCheck",
    "ConvergenceTrace",
    "DesignConfig",
    "EntropyReport",
    "GrayImage",
    "ProbDistribution",
    "RecoveryConfig",
    "RecoveryResult",
    "SensingDesign",
    "SignalMatrix",
    "SparsifyingBasis",
    "SweepRow",
    "SweepTable",
    "add_awgn",
    "analyze",
    "basis_pursuit",
    "blocks_to_image",
    "bpdn",
    "check_bounds",
    "dct_basis",
    "empirical_rip_deltas",
    "ems_train",
    "gen_sparse_signals",
    "identity_basis",
    "image_to_blocks",
    "init_sensing_matrix",
    "load_basis",
    "load_pgm",
    "maximize_entropy",
    "mutual_coherence",
    "omp",
    "prob_distribution",
    "procrustes_rect",
    "psnr",
    "random_gaussian_matrix",
    "read_matrix",
    "rip_table",
    "save_pgm",
    "shannon_entropy",
    "spark_bruteforce",
    "srer",
    "stage1_gradient",
    "stage1_objective",
    "sweep_measurements",
    "sweep_noise",
    "sweep_sparsity",
    "synthesize",
    "write_csv",
    "write_dat",
    "write_matrix",
]

__version__ = "0.1.0"
