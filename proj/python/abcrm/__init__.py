"""Agent-based cross-regulation text classifier."""

from ._abcrm import (
    Confusion,
    Corpus,
    Document,
    Error,
    FeatureScore,
    FeatureSet,
    InvalidArgument,
    Label,
    ParameterSet,
    ParseError,
    Prediction,
    basic_metrics,
    classify_stream,
    evaluate,
    generate_synthetic,
    grid_size,
    load_corpus,
    load_feature_set,
    naive_bayes,
    paired_ttest,
    porter_stem,
    run_experiment,
    save_corpus,
    save_feature_set,
    select_features,
    t_critical,
    tokenize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
