"""Identification disclosure risk and utility for partially synthetic microdata."""

from .cart import CartNode, CartTree, SynthesisPlan, fit_tree, synthesize
from .dataset import (
    Dataset,
    Schema,
    VariableSpec,
    VarKind,
    aligned_codes,
    check_compatible,
    load_csv,
    schema_from_json_dict,
    schema_to_json_dict,
    write_csv,
)
from .experiments import (
    DEFAULT_RADII,
    KNOWN_VARS,
    SCENARIOS,
    Box2D,
    BoxSummary,
    MStudyResult,
    Scenario,
    ScenarioOutcome,
    ScenarioStudyResult,
    SweepResult,
    generate_ce_like,
    get_scenario,
    m_study,
    radius_sweep,
    scenario_study,
)
from .propensity import (
    PropensityFit,
    UtilityResult,
    design_matrix,
    fit_logistic,
    propensity_utility,
    utility_from_probs,
)
from .risk import (
    Range,
    RecordRisk,
    RiskConfig,
    RiskResult,
    evaluate,
    evaluate_fast,
    known_match,
    make_range,
    record_risk,
    syn_match,
)

__version__ = "0.1.0"

__all__ = [
    "Box2D",
    "BoxSummary",
    "CartNode",
    "CartTree",
    "DEFAULT_RADII",
    "Dataset",
    "KNOWN_VARS",
    "MStudyResult",
    "PropensityFit",
    "Range",
    "RecordRisk",
    "RiskConfig",
    "RiskResult",
    "SCENARIOS",
    "Scenario",
    "ScenarioOutcome",
    "ScenarioStudyResult",
    "Schema",
    "SweepResult",
    "SynthesisPlan",
    "UtilityResult",
    "VarKind",
    "VariableSpec",
    "aligned_codes",
    "check_compatible",
    "design_matrix",
    "evaluate",
    "evaluate_fast",
    "fit_logistic",
    "fit_tree",
    "generate_ce_like",
    "get_scenario",
    "known_match",
    "load_csv",
    "m_study",
    "make_range",
    "propensity_utility",
    "radius_sweep",
    "record_risk",
    "scenario_study",
    "schema_from_json_dict",
    "schema_to_json_dict",
    "syn_match",
    "synthesize",
    "utility_from_probs",
    "write_csv",
]
