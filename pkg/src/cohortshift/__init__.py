"""Certified distributional counterfactuals for tabular cohorts.

Given a factual sample set, a black-box predictor, and a target output
distribution, the solver edits a budgeted subset of rows per iteration so the
cohort's output distribution approaches the target while the input
distribution stays close to the factual one, and certifies the result with
distribution-free upper confidence limits on both transport costs.
"""

from .errors import (
    CohortShiftError,
    ConfigError,
    CsvParseError,
    DomainValidationError,
    PredictorError,
    SchemaError,
)
from .guidance import GuidanceField, guidance
from .metrics import MetricsReport, evaluate, export_cdf, mmd, write_metrics_json
from .objective import (
    EtaState,
    ImpactScores,
    balance_eta,
    combine,
    narrow_interval,
    row_scores_input,
    row_scores_output,
    top_k,
)
from .predict import (
    ExternalPredictor,
    LinearPredictor,
    LogisticPredictor,
    Predictor,
    PredictorCapabilities,
    StumpEnsemblePredictor,
    external_predictor,
    fit_builtin,
    predictor_from_spec,
)
from .proposals import (
    CandidateBatch,
    ConeParams,
    EmbeddingTables,
    build_embeddings,
    cone_direction,
    genetic_propose,
    monte_carlo_propose,
    propose_categorical_row,
    propose_numeric_row,
)
from .solver import (
    IterationRecord,
    SolveEngine,
    SolveReport,
    SolverConfig,
    certify,
    solve,
)
from .synth import SyntheticTask, make_task, mixed_type_stumps, two_gaussians_linear
from .tabular import (
    CohortMatrix,
    FeatureSchema,
    decode_csv,
    load_csv,
    load_schema,
    project_to_domain,
    save_schema,
    schema_from_json,
    schema_to_json,
)
from .transport import (
    ProjectionSet,
    TransportBundle,
    UclResult,
    quantile_band,
    sample_projections,
    sw2,
    ucl_sw2,
    ucl_w2,
    w2_1d,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateBatch",
    "CohortMatrix",
    "CohortShiftError",
    "ConeParams",
    "ConfigError",
    "CsvParseError",
    "DomainValidationError",
    "EmbeddingTables",
    "EtaState",
    "ExternalPredictor",
    "FeatureSchema",
    "GuidanceField",
    "ImpactScores",
    "IterationRecord",
    "LinearPredictor",
    "LogisticPredictor",
    "MetricsReport",
    "Predictor",
    "PredictorCapabilities",
    "PredictorError",
    "ProjectionSet",
    "SchemaError",
    "SolveEngine",
    "SolveReport",
    "SolverConfig",
    "StumpEnsemblePredictor",
    "SyntheticTask",
    "TransportBundle",
    "UclResult",
    "balance_eta",
    "build_embeddings",
    "certify",
    "combine",
    "cone_direction",
    "decode_csv",
    "evaluate",
    "export_cdf",
    "external_predictor",
    "fit_builtin",
    "genetic_propose",
    "guidance",
    "load_csv",
    "load_schema",
    "make_task",
    "mixed_type_stumps",
    "mmd",
    "monte_carlo_propose",
    "narrow_interval",
    "predictor_from_spec",
    "project_to_domain",
    "propose_categorical_row",
    "propose_numeric_row",
    "quantile_band",
    "row_scores_input",
    "row_scores_output",
    "sample_projections",
    "save_schema",
    "schema_from_json",
    "schema_to_json",
    "solve",
    "sw2",
    "top_k",
    "two_gaussians_linear",
    "ucl_sw2",
    "ucl_w2",
    "w2_1d",
    "write_metrics_json",
]
