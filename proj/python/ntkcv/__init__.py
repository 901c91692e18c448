"""Empirical NTK spectra, RND data selection and the experiment drivers."""

from ntkcv._core import (
    ConvergenceError,
    DataError,
    DimensionError,
    Error,
    UndefinedResult,
    ValidationError,
    __version__,
    compute_ntk,
    config,
    derive_seed,
    git_blob_hash,
    param_count,
    presets,
    run_cli,
    run_comparison,
    run_correlation,
    select_random,
    select_rnd,
    spectrum,
    symmetric_eigenvalues,
    von_neumann_entropy,
)

__all__ = [
    "ConvergenceError",
    "DataError",
    "DimensionError",
    "Error",
    "UndefinedResult",
    "ValidationError",
    "__version__",
    "compute_ntk",
    "config",
    "derive_seed",
    "git_blob_hash",
    "param_count",
    "presets",
    "run_cli",
    "run_comparison",
    "run_correlation",
    "select_random",
    "select_rnd",
    "spectrum",
    "symmetric_eigenvalues",
    "von_neumann_entropy",
]
