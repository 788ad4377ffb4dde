"""Active learning for censored survival data.

Survival models (Cox proportional hazards, random survival forests), a
stacked-autoencoder representation step, an expected-performance-improvement
query strategy with pluggable oracles, and treatment-effect ranking, all
verifiable end to end on synthetic data.
"""

from ._backend import BACKEND
from .active import (
    ActiveLearningState,
    CoxModelClass,
    EpiScore,
    EpiSelector,
    RandomSelector,
    RsfModelClass,
    TimeGrid,
    delta_c,
    epi_score,
    run_active_loop,
    select_query,
)
from .cox import (
    BaselineHazard,
    ConcordanceResult,
    CoxConfig,
    CoxModel,
    breslow_baseline,
    concordance_index,
    fit_cox,
    hazard_at,
    partial_log_likelihood,
    survival_function,
)
from .data import (
    Dataset,
    SplitSpec,
    SurvivalRecord,
    SynthConfig,
    generate,
    load_csv,
    split,
    write_csv,
)
from .oracle import (
    ConditionalSurvivalTable,
    GroundTruthOracle,
    OracleAnswer,
    OracleQuery,
    PROSTATE_TABLE,
    TableOracle,
)
from .rsf import RsfConfig, RsfModel, fit_rsf, predict_mortality
from .sae import SaeConfig, SaeWeights, encode, train_sae
from .treatment import RecommendConfig, TreatmentReport, build_treatment_features, recommend

__version__ = "0.1.0"

__all__ = [
    "ActiveLearningState",
    "BACKEND",
    "BaselineHazard",
    "ConcordanceResult",
    "ConditionalSurvivalTable",
    "CoxConfig",
    "CoxModel",
    "CoxModelClass",
    "Dataset",
    "EpiScore",
    "EpiSelector",
    "GroundTruthOracle",
    "OracleAnswer",
    "OracleQuery",
    "PROSTATE_TABLE",
    "RandomSelector",
    "RecommendConfig",
    "RsfConfig",
    "RsfModel",
    "RsfModelClass",
    "SaeConfig",
    "SaeWeights",
    "SplitSpec",
    "SurvivalRecord",
    "SynthConfig",
    "TableOracle",
    "TimeGrid",
    "TreatmentReport",
    "breslow_baseline",
    "build_treatment_features",
    "concordance_index",
    "delta_c",
    "encode",
    "epi_score",
    "fit_cox",
    "fit_rsf",
    "generate",
    "hazard_at",
    "load_csv",
    "partial_log_likelihood",
    "predict_mortality",
    "recommend",
    "run_active_loop",
    "select_query",
    "split",
    "survival_function",
    "train_sae",
    "write_csv",
]
