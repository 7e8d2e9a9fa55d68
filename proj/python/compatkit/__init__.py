"""Backward-compatibility metrics for model updates, with a toy distillation harness."""

from ._core import (
    CompatkitError,
    ConfigError,
    DomainError,
    EmptyLogError,
    EvalRecord,
    MismatchError,
    ParseError,
    Prediction,
    ShapeError,
    TaskMismatchError,
    UndefinedRatioError,
    check_thresholds,
    compare,
    compat_loss,
    compute_mask,
    default_experiment_config,
    evaluate,
    kl_term,
    mask_strategies,
    parse_log,
    read_log,
    rouge_n,
    run_experiment,
    validate_log,
    write_log,
)

__all__ = [name for name in dir() if not name.startswith("_")]
