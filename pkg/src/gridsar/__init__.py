"""Grid search-and-rescue POMDP workbench.

Solves grid search-and-rescue POMDPs, computes feature expectations for
solved closed-loop policies and user-proposed open-loop paths, and renders
contrastive explanations of why the solved policy outperforms the
alternative.
"""

from .cases import (
    CaseStudyBundle,
    case_study_scenario,
    case_study_target,
    case_study_user_path,
    run_case_study,
)
from .counterfactual import (
    FeasibilityReport,
    UserPath,
    feasibility_truncate,
    path_to_actions,
    replay_cells,
)
from .domain import (
    ACTIONS,
    BATTERY,
    TARGET_FOUND,
    CellOfInterest,
    SarBelief,
    SarModel,
    SarState,
    Scenario,
    belief_features,
    cell_reachable,
    feature_labels,
    feature_weights,
    home_distance,
    initial_belief,
    is_terminal,
    make_state,
    observation_prob,
    reward,
    scenario_from_doc,
    scenario_id,
    scenario_to_doc,
    state_features,
    transition,
)
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    GridSarError,
    InfeasiblePath,
    InvalidDistribution,
    NonAdjacentStep,
    PathError,
    ScenarioValidationError,
    StayNotSupported,
    TerminalStateStep,
    UnknownTemplateSet,
    UnreachableStratum,
    WrongStartCell,
    ZeroProbabilityObservation,
)
from .explain import (
    ContrastReport,
    ExplanationText,
    RatioFact,
    contrast,
    render_explanation,
)
from .features import (
    FeatureExpectation,
    feature_expectation_closed,
    feature_expectation_mc,
    feature_expectation_open,
    value_from_features,
)
from .pomdp import (
    DiscreteDistribution,
    SuccessorBranch,
    SuccessorSet,
    belief_update,
    enumerate_successors,
    expectimax_value,
)
from .simulate import Trace, TraceStep, replay_path, simulate, trace_to_doc
from .solver import (
    AlphaPolicy,
    AlphaVector,
    SolveBudget,
    load_policy,
    policy_action,
    policy_from_doc,
    policy_to_doc,
    policy_value,
    save_policy,
    solve,
)

__version__ = "0.1.0"
