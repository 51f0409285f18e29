"""Two-player zero-sum mean-field LQ stochastic differential games."""

from .model import (
    CoefficientPath,
    Coefficients,
    ControlLaw,
    CostWeights,
    GameSpec,
    TimeGrid,
    ValidationReport,
    embed_perturbation,
    eval_coefficient,
    specialize_no_meanfield,
    validate_spec,
)
from .riccati import (
    ComparisonReport,
    DGWeights,
    GridMismatchError,
    RegularityError,
    RegularityReport,
    RiccatiSolution,
    assemble_dg_weights,
    check_comparison,
    check_strong_regularity,
    riccati_residual,
    solve_control_riccati,
    solve_game_riccati,
    solve_mean_riccati,
    solve_riccati_pair,
    write_riccati_csv,
)
from .synthesis import (
    CostReport,
    FeedbackLaw,
    MCReport,
    MomentPath,
    SaddleReport,
    build_feedback,
    evaluate_functional,
    evaluate_functional_mc,
    propagate_moments,
    stationarity_residual,
    verify_saddle,
    write_feedback_csv,
    write_moments_csv,
)
from .operators import (
    BlockOperator,
    OperatorSection,
    SectionSaddle,
    SignReport,
    build_section,
    check_necessary_condition,
    contraction_norm,
    lemma_psd_gap,
    perturbed_inverse,
    solve_section_saddle,
    write_section_csv,
)
from .perturbation import (
    EpsFamilyReport,
    EpsIterate,
    EpsSchedule,
    build_eps_iterate,
    classify_family,
    control_distance,
    write_family_csv,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientPath",
    "Coefficients",
    "ControlLaw",
    "CostWeights",
    "GameSpec",
    "TimeGrid",
    "ValidationReport",
    "embed_perturbation",
    "eval_coefficient",
    "specialize_no_meanfield",
    "validate_spec",
    "ComparisonReport",
    "DGWeights",
    "GridMismatchError",
    "RegularityError",
    "RegularityReport",
    "RiccatiSolution",
    "assemble_dg_weights",
    "check_comparison",
    "check_strong_regularity",
    "riccati_residual",
    "solve_control_riccati",
    "solve_game_riccati",
    "solve_mean_riccati",
    "solve_riccati_pair",
    "write_riccati_csv",
    "CostReport",
    "FeedbackLaw",
    "MCReport",
    "MomentPath",
    "SaddleReport",
    "build_feedback",
    "evaluate_functional",
    "evaluate_functional_mc",
    "propagate_moments",
    "stationarity_residual",
    "verify_saddle",
    "write_feedback_csv",
    "write_moments_csv",
    "BlockOperator",
    "OperatorSection",
    "SectionSaddle",
    "SignReport",
    "build_section",
    "check_necessary_condition",
    "contraction_norm",
    "lemma_psd_gap",
    "perturbed_inverse",
    "solve_section_saddle",
    "write_section_csv",
    "EpsFamilyReport",
    "EpsIterate",
    "EpsSchedule",
    "build_eps_iterate",
    "classify_family",
    "control_distance",
    "write_family_csv",
    "__version__",
]
