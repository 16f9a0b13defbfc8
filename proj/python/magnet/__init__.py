"""Block-sparse Gaussian graphical models for multi-attribute data."""

from ._magnet import (
    Error,
    InputError,
    Layout,
    NumericalError,
    SolverConfig,
    SolverReport,
    StepPolicy,
    bic,
    block_norms,
    estimate,
    fit_path,
    gen_chain,
    gen_nearest_neighbor,
    hamming_distance,
    interpret_edge,
    irrepresentability,
    kkt_residual,
    lambda_grid,
    objective,
    pcc,
    prox_block,
    sample_covariance,
    sample_mvn,
    screen,
    stability_select,
    theta_to_n,
)

__version__ = "0.1.0"
