"""One-step RKHS estimation and Bayesian-bootstrap inference for average
marginal effects in partially linear instrumental-variables models."""

from plriv._core import (
    BootstrapConfig,
    Conditioning,
    ConfigError,
    Dataset,
    DataError,
    Design,
    DgpSpec,
    Fit,
    FitConfig,
    H0Variant,
    Interval,
    KernelFamily,
    KernelSpec,
    LambdaGrid,
    MuFamily,
    MuSpec,
    NumericError,
    PowerRow,
    SelectionResult,
    SimConfig,
    SimReport,
    SizeRow,
    TestResult,
    TwoSlsFit,
    __version__,
    ame,
    bootstrap_draw,
    charfn_value,
    confidence_interval,
    draw_sample,
    empirical_quantile,
    fit,
    geometric_grid,
    h0_deriv,
    h0_value,
    kernel_deriv,
    kernel_value,
    objective_value,
    run_power_curve,
    run_size_experiment,
    select_lambda,
    test,
    true_ame,
    two_sls,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
