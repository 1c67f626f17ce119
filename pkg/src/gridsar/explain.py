"""Contrast two feature expectations and render a templated explanation.

The numeric side (contrast) fills a report with per-feature weighted
contributions, the dominant contribution gap, and qualitative ratio buckets.
The text side (render_explanation) instantiates fixed sentence templates from
the report; no free-form generation, every numeral traceable to a report
field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .counterfactual import FeasibilityReport
from .domain import Scenario, cell_reachable
from .errors import DimensionMismatch, UnknownTemplateSet
from .features import FeatureExpectation

ZERO_OCCUPANCY_TOL = 1e-9

# Qualitative buckets over the occupancy ratio optimal/user:
# (upper bound, bound inclusive, label).
DEFAULT_RATIO_BUCKETS: Tuple[Tuple[float, bool, str], ...] = (
    (0.05, False, "almost never as often"),
    (0.4, True, "much less often"),
    (0.6, True, "about half as often"),
    (0.9, True, "somewhat less often"),
    (1.1, True, "about as often"),
    (1.8, False, "somewhat more often"),
    (2.75, True, "about twice as often"),
    (4.0, True, "several times as often"),
    (math.inf, True, "many times as often"),
)

BUCKET_NEVER_EITHER = "never under either policy"
BUCKET_ONLY_OPTIMAL = "only under the optimal policy"

# Weighting-rationale sentence fires when the dominant feature's weight
# exceeds every other weight by at least this factor.
WEIGHT_DOMINANCE_FACTOR = 10.0

# Features whose contribution gap falls below this fraction of the total
# value gap are not mentioned beyond the dominant sentence.
DEFAULT_MENTION_THRESHOLD = 0.01


def ratio_bucket(ratio: float, buckets=DEFAULT_RATIO_BUCKETS) -> str:
    for upper, inclusive, label in buckets:
        if ratio < upper or (inclusive and ratio == upper):
            return label
    return buckets[-1][2]


@dataclass(frozen=True)
class RatioFact:
    feature: int
    ratio: Optional[float]  # None when the user occupancy is (near) zero
    bucket: str


@dataclass(frozen=True)
class ContrastReport:
    labels: Tuple[str, ...]
    mu_optimal: np.ndarray
    mu_user: np.ndarray
    alpha: np.ndarray
    contributions_optimal: np.ndarray
    contributions_user: np.ndarray
    value_optimal: float
    value_user: float
    dominant_feature: int
    ratio_facts: Tuple[RatioFact, ...]
    infeasible_features: Tuple[int, ...]
    feasibility: Optional[FeasibilityReport] = None

    def to_doc(self) -> dict:
        return {
            "labels": list(self.labels),
            "mu_optimal": [float(v) for v in self.mu_optimal],
            "mu_user": [float(v) for v in self.mu_user],
            "alpha": [float(v) for v in self.alpha],
            "contributions_optimal": [float(v) for v in self.contributions_optimal],
            "contributions_user": [float(v) for v in self.contributions_user],
            "value_optimal": self.value_optimal,
            "value_user": self.value_user,
            "dominant_feature": self.dominant_feature,
            "ratio_facts": [
                {"feature": f.feature, "ratio": f.ratio, "bucket": f.bucket}
                for f in self.ratio_facts
            ],
            "infeasible_features": list(self.infeasible_features),
            "feasibility": None if self.feasibility is None else self.feasibility.to_doc(),
        }


def _as_mu(mu: Union[FeatureExpectation, np.ndarray]) -> np.ndarray:
    return mu.mu if isinstance(mu, FeatureExpectation) else np.asarray(mu, dtype=float)


def contrast(
    mu_optimal: Union[FeatureExpectation, np.ndarray],
    mu_user: Union[FeatureExpectation, np.ndarray],
    alpha: np.ndarray,
    labels: Sequence[str],
    scenario: Optional[Scenario] = None,
    feasibility: Optional[FeasibilityReport] = None,
    buckets=DEFAULT_RATIO_BUCKETS,
) -> ContrastReport:
    """Pair two feature expectations under the reward weights.

    When ``scenario`` is given, cells of interest no policy can ever occupy
    under the battery budget are flagged as infeasible features (both
    occupancies are necessarily zero there).
    """
    mu_opt = _as_mu(mu_optimal)
    mu_hu = _as_mu(mu_user)
    alpha = np.asarray(alpha, dtype=float)
    if not (mu_opt.shape == mu_hu.shape == alpha.shape):
        raise DimensionMismatch(
            f"feature dimensions differ: {mu_opt.shape}, {mu_hu.shape}, {alpha.shape}"
        )
    if len(labels) != len(alpha):
        raise DimensionMismatch(f"{len(labels)} labels for {len(alpha)} features")
    contrib_opt = alpha * mu_opt
    contrib_hu = alpha * mu_hu
    gaps = contrib_opt - contrib_hu
    dominant = int(np.argmax(np.abs(gaps)))
    facts: List[RatioFact] = []
    for i in range(len(alpha)):
        if mu_hu[i] <= ZERO_OCCUPANCY_TOL:
            if mu_opt[i] <= ZERO_OCCUPANCY_TOL:
                facts.append(RatioFact(i, None, BUCKET_NEVER_EITHER))
            else:
                facts.append(RatioFact(i, None, BUCKET_ONLY_OPTIMAL))
        else:
            ratio = float(mu_opt[i] / mu_hu[i])
            facts.append(RatioFact(i, ratio, ratio_bucket(ratio, buckets)))
    infeasible: List[int] = []
    if scenario is not None:
        for i, coi in enumerate(scenario.cells_of_interest):
            if not cell_reachable(coi.cell, scenario):
                infeasible.append(i)
    return ContrastReport(
        labels=tuple(labels),
        mu_optimal=mu_opt.copy(),
        mu_user=mu_hu.copy(),
        alpha=alpha.copy(),
        contributions_optimal=contrib_opt,
        contributions_user=contrib_hu,
        value_optimal=float(alpha @ mu_opt),
        value_user=float(alpha @ mu_hu),
        dominant_feature=dominant,
        ratio_facts=tuple(facts),
        infeasible_features=tuple(infeasible),
        feasibility=feasibility,
    )


@dataclass(frozen=True)
class ExplanationText:
    sentences: Tuple[str, ...]
    template_ids: Tuple[str, ...]
    substitutions: Tuple[dict, ...] = field(default_factory=tuple)

    @property
    def text(self) -> str:
        return " ".join(self.sentences)

    def to_doc(self) -> dict:
        return {
            "sentences": list(self.sentences),
            "template_ids": list(self.template_ids),
            "substitutions": list(self.substitutions),
            "text": self.text,
        }


def _feature_phrase(report: ContrastReport, index: int) -> str:
    n_cells = len(report.labels) - 2
    label = report.labels[index]
    if index < n_cells:
        return f"visits {label}"
    if index == n_cells:
        return "finds the target"
    return "ends in a battery-critical state"


def render_explanation(
    report: ContrastReport,
    template_set: str = "default-v1",
    mention_threshold: float = DEFAULT_MENTION_THRESHOLD,
) -> ExplanationText:
    """Instantiate the sentence templates of ``template_set`` from a report."""
    if template_set not in TEMPLATE_SETS:
        raise UnknownTemplateSet(template_set)
    return TEMPLATE_SETS[template_set](report, mention_threshold)


def _render_default(report: ContrastReport, mention_threshold: float) -> ExplanationText:
    sentences: List[str] = []
    template_ids: List[str] = []
    subs: List[dict] = []

    gaps = report.contributions_optimal - report.contributions_user
    if np.max(np.abs(gaps)) <= ZERO_OCCUPANCY_TOL:
        return ExplanationText(
            sentences=("Both policies perform identically in expectation.",),
            template_ids=("identical",),
        )

    if report.infeasible_features:
        names = " and ".join(report.labels[i] for i in report.infeasible_features)
        sentences.append(
            f"The battery constraint makes it impossible for either policy to reach {names}."
        )
        template_ids.append("battery-infeasible")
        subs.append(
            {"slot": "names", "value": names, "source": "labels[infeasible_features]"}
        )

    dom = report.dominant_feature
    fact = report.ratio_facts[dom]
    phrase = _feature_phrase(report, dom)
    if fact.bucket == BUCKET_ONLY_OPTIMAL:
        sentence = (
            f"Over all possible target locations, the optimal policy {phrase} "
            "while the user policy essentially never does."
        )
    elif fact.bucket == BUCKET_NEVER_EITHER:
        sentence = f"Neither policy ever {phrase}."
    elif fact.ratio is not None and fact.ratio < 0.9:
        inverse_bucket = ratio_bucket(1.0 / fact.ratio) if fact.ratio > 0 else "many times as often"
        sentence = (
            f"Over all possible target locations, the user policy {phrase} "
            f"{inverse_bucket} as the optimal policy."
        )
    else:
        sentence = (
            f"Over all possible target locations, the optimal policy {phrase} "
            f"{fact.bucket} as the user policy."
        )
    sentences.append(sentence)
    template_ids.append("dominant-frequency")
    subs.append(
        {
            "slot": "dominant",
            "value": fact.bucket,
            "source": f"ratio_facts[{dom}]",
            "mu_optimal": float(report.mu_optimal[dom]),
            "mu_user": float(report.mu_user[dom]),
        }
    )

    value_gap = abs(report.value_optimal - report.value_user)
    for i, fact_i in enumerate(report.ratio_facts):
        if i == dom or i in report.infeasible_features:
            continue
        if abs(gaps[i]) < mention_threshold * value_gap:
            continue
        phrase_i = _feature_phrase(report, i)
        if fact_i.bucket == BUCKET_ONLY_OPTIMAL:
            sentences.append(f"Only the optimal policy ever {phrase_i}.")
        elif fact_i.bucket == BUCKET_NEVER_EITHER:
            continue
        else:
            sentences.append(f"The optimal policy {phrase_i} {fact_i.bucket} as the user policy.")
        template_ids.append("secondary-frequency")
        subs.append({"slot": "secondary", "value": fact_i.bucket, "source": f"ratio_facts[{i}]"})

    alpha_dom = abs(float(report.alpha[dom]))
    others = [abs(float(a)) for i, a in enumerate(report.alpha) if i != dom]
    if (
        others
        and alpha_dom >= WEIGHT_DOMINANCE_FACTOR * max(others)
        and report.value_optimal > report.value_user
        and report.mu_optimal[dom] > report.mu_user[dom]
    ):
        label = report.labels[dom]
        sentences.append(
            f"Since the {label} has a much higher weighting than the other objectives, "
            "the optimal policy will outperform the user policy."
        )
        template_ids.append("weighting")
        subs.append({"slot": "label", "value": label, "source": f"alpha[{dom}]"})

    v_opt = f"{report.value_optimal:.3f}"
    v_user = f"{report.value_user:.3f}"
    sentences.append(
        f"In expectation, the optimal policy is worth {v_opt} versus {v_user} for the user path."
    )
    template_ids.append("values")
    subs.append(
        {
            "slot": "values",
            "value": [v_opt, v_user],
            "source": "value_optimal/value_user",
        }
    )

    return ExplanationText(
        sentences=tuple(sentences),
        template_ids=tuple(template_ids),
        substitutions=tuple(subs),
    )


TEMPLATE_SETS = {"default-v1": _render_default}
