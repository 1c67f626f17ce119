"""Bundled demonstration scenarios and the end-to-end workflow around them.

Two 5x5 instances ship with the package:

* case 1: one high-value hidden target far from a single low-value cell of
  interest, ample battery. The interesting contrast is an observable bonus
  versus the hidden objective.
* case 2: three cells of interest under a tight battery budget, where the
  richest one cannot be reached at all and user paths toward it get
  truncated.

``run_case_study`` solves the scenario, rolls out the policy against the
reference target, evaluates both feature expectations, and renders the
contrastive explanation, returning everything a report or UI needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from .counterfactual import (
    FeasibilityReport,
    UserPath,
    feasibility_truncate,
    path_to_actions,
)
from .domain import (
    Cell,
    CellOfInterest,
    Scenario,
    feature_labels,
    feature_weights,
    initial_belief,
)
from .explain import ContrastReport, ExplanationText, contrast, render_explanation
from .features import (
    FeatureExpectation,
    feature_expectation_closed,
    feature_expectation_open,
)
from .simulate import Trace, simulate
from .solver import AlphaPolicy, SolveBudget, solve

CASE_IDS = (1, 2)

DEFAULT_CASE_EPSILON = 0.5


def case_study_scenario(case_id: int) -> Scenario:
    if case_id == 1:
        return Scenario(
            grid_size=5,
            start=(1, 1),
            cells_of_interest=(CellOfInterest((1, 5), 3.0),),
            target_weight=500.0,
            battery=25,
            name="case-study-1",
        )
    if case_id == 2:
        return Scenario(
            grid_size=5,
            start=(1, 1),
            cells_of_interest=(
                CellOfInterest((5, 5), 3.0),
                CellOfInterest((4, 1), 1.0),
                CellOfInterest((3, 3), 1.0),
            ),
            target_weight=100.0,
            battery=12,
            name="case-study-2",
        )
    raise ValueError(f"unknown case study {case_id}")


def case_study_target(case_id: int) -> Cell:
    return {1: (5, 5), 2: (1, 5)}[case_id]


def case_study_user_path(case_id: int) -> UserPath:
    if case_id == 1:
        # straight up the left edge, then right along the top to the far corner
        cells = [(1, y) for y in range(1, 6)] + [(x, 5) for x in range(2, 6)]
        return UserPath(tuple(cells))
    if case_id == 2:
        # staircase toward the rich corner through the middle cell of interest
        cells = [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3), (4, 3), (4, 4), (5, 4), (5, 5)]
        return UserPath(tuple(cells))
    raise ValueError(f"unknown case study {case_id}")


@dataclass(frozen=True)
class CaseStudyBundle:
    scenario: Scenario
    policy: AlphaPolicy
    trace: Trace
    user_path: UserPath
    executed_actions: Tuple[str, ...]
    feasibility: FeasibilityReport
    mu_optimal: FeatureExpectation
    mu_user: FeatureExpectation
    value_optimal: float
    value_user: float
    report: ContrastReport
    explanation: ExplanationText

    def table(self) -> dict:
        """Feature-expectation table: one row per policy, one column per feature."""
        return {
            "labels": list(feature_labels(self.scenario)),
            "optimal": [float(v) for v in self.mu_optimal.mu],
            "user": [float(v) for v in self.mu_user.mu],
            "value_optimal": self.value_optimal,
            "value_user": self.value_user,
        }


def run_case_study(
    case_id: int,
    epsilon: float = DEFAULT_CASE_EPSILON,
    budget: Optional[SolveBudget] = None,
    seed: int = 0,
    policy: Optional[AlphaPolicy] = None,
) -> CaseStudyBundle:
    """Full workflow for a bundled case: solve, roll out, contrast, explain."""
    scenario = case_study_scenario(case_id)
    if policy is None:
        policy = solve(scenario, epsilon=epsilon, budget=budget)
    trace = simulate(policy, scenario, seed=seed, true_target=case_study_target(case_id))
    user_path = case_study_user_path(case_id)
    actions = path_to_actions(user_path, scenario)
    executed, feasibility = feasibility_truncate(actions, scenario)
    b0 = initial_belief(scenario)
    mu_user = feature_expectation_open(executed, b0, scenario)
    mu_optimal = feature_expectation_closed(policy, b0)
    alpha = feature_weights(scenario)
    report = contrast(
        mu_optimal,
        mu_user,
        alpha,
        feature_labels(scenario),
        scenario=scenario,
        feasibility=feasibility,
    )
    explanation = render_explanation(report)
    return CaseStudyBundle(
        scenario=scenario,
        policy=policy,
        trace=trace,
        user_path=user_path,
        executed_actions=executed,
        feasibility=feasibility,
        mu_optimal=mu_optimal,
        mu_user=mu_user,
        value_optimal=report.value_optimal,
        value_user=report.value_user,
        report=report,
        explanation=explanation,
    )
