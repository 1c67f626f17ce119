import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridsar import (
    DimensionMismatch,
    UnknownTemplateSet,
    contrast,
    render_explanation,
)
from gridsar.counterfactual import FeasibilityReport
from gridsar.explain import (
    BUCKET_NEVER_EITHER,
    BUCKET_ONLY_OPTIMAL,
    ratio_bucket,
)

# frozen reference rows for the two demonstration instances
ROW1_OPT = np.array([0.036, 0.731, 0.0])
ROW1_USER = np.array([0.684, 0.296, 0.0])
ALPHA1 = np.array([3.0, 500.0, 0.0])
LABELS1 = ["cell [1,5]", "target", "battery"]

ROW2_OPT = np.array([0.0, 0.202, 0.354, 0.550, 0.346])
ROW2_USER = np.array([0.0, 0.0, 0.684, 0.241, 0.559])
ALPHA2 = np.array([3.0, 1.0, 1.0, 100.0, 0.0])
LABELS2 = ["cell [5,5]", "cell [4,1]", "cell [3,3]", "target", "battery"]


class TestRatioBuckets:
    def test_pinned_examples(self):
        assert ratio_bucket(0.731 / 0.296) == "about twice as often"
        assert ratio_bucket(0.04) == "almost never as often"
        assert ratio_bucket(1.0) == "about as often"
        assert ratio_bucket(0.5) == "about half as often"
        assert ratio_bucket(10.0) == "many times as often"

    def test_boundaries(self):
        assert ratio_bucket(1.8) == "about twice as often"
        assert ratio_bucket(2.75) == "about twice as often"
        assert ratio_bucket(2.76) == "several times as often"


class TestContrast:
    def test_case1_rows(self):
        report = contrast(ROW1_OPT, ROW1_USER, ALPHA1, LABELS1)
        assert report.dominant_feature == 1  # target weighs most of the gap
        fact = report.ratio_facts[1]
        assert fact.ratio == pytest.approx(0.731 / 0.296)
        assert fact.bucket == "about twice as often"
        assert report.value_optimal == pytest.approx(float(ALPHA1 @ ROW1_OPT), abs=1e-9)
        assert report.value_user == pytest.approx(float(ALPHA1 @ ROW1_USER), abs=1e-9)

    def test_identical_inputs_zero_gaps(self):
        report = contrast(ROW1_OPT, ROW1_OPT, ALPHA1, LABELS1)
        assert report.value_optimal == report.value_user
        assert np.all(report.contributions_optimal == report.contributions_user)

    def test_case2_infeasible_includes_unreachable_cell(self, case2_scenario):
        report = contrast(ROW2_OPT, ROW2_USER, ALPHA2, LABELS2, scenario=case2_scenario)
        assert report.infeasible_features == (0,)

    def test_never_and_only_buckets(self):
        mu_opt = np.array([0.2, 0.0])
        mu_user = np.array([0.0, 0.0])
        report = contrast(mu_opt, mu_user, np.array([1.0, 1.0]), ["cell [1,1]", "target"])
        assert report.ratio_facts[0].bucket == BUCKET_ONLY_OPTIMAL
        assert report.ratio_facts[1].bucket == BUCKET_NEVER_EITHER

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            contrast(ROW1_OPT, ROW1_USER[:2], ALPHA1, LABELS1)
        with pytest.raises(DimensionMismatch):
            contrast(ROW1_OPT, ROW1_USER, ALPHA1, LABELS1[:2])

    def test_report_doc_is_json_friendly(self):
        import json

        report = contrast(ROW1_OPT, ROW1_USER, ALPHA1, LABELS1)
        doc = report.to_doc()
        assert json.dumps(doc)
        assert doc["dominant_feature"] == 1

    @settings(max_examples=30, deadline=None)
    @given(scale=st.floats(0.01, 1000.0))
    def test_scale_robustness(self, scale):
        base = contrast(ROW1_OPT, ROW1_USER, ALPHA1, LABELS1)
        scaled = contrast(ROW1_OPT, ROW1_USER, ALPHA1 * scale, LABELS1)
        assert scaled.dominant_feature == base.dominant_feature
        assert [f.bucket for f in scaled.ratio_facts] == [f.bucket for f in base.ratio_facts]
        assert (scaled.value_optimal > scaled.value_user) == (
            base.value_optimal > base.value_user
        )


class TestRenderExplanation:
    def test_case1_contains_required_clauses(self):
        report = contrast(ROW1_OPT, ROW1_USER, ALPHA1, LABELS1)
        text = render_explanation(report).text
        assert "finds the target about twice as often" in text
        assert "much higher weighting" in text

    def test_case2_opens_with_battery_sentence(self, case2_scenario):
        feas = FeasibilityReport(8, 6, "battery", (4, 4), ((5, 4), (5, 5)))
        report = contrast(
            ROW2_OPT, ROW2_USER, ALPHA2, LABELS2, scenario=case2_scenario, feasibility=feas
        )
        explanation = render_explanation(report)
        assert "impossible for either policy to reach" in explanation.sentences[0]
        assert "cell [5,5]" in explanation.sentences[0]

    def test_zero_gap_single_sentence(self):
        report = contrast(ROW1_OPT, ROW1_OPT, ALPHA1, LABELS1)
        explanation = render_explanation(report)
        assert explanation.sentences == ("Both policies perform identically in expectation.",)

    def test_deterministic(self):
        report = contrast(ROW1_OPT, ROW1_USER, ALPHA1, LABELS1)
        assert render_explanation(report).text == render_explanation(report).text

    def test_unknown_template_set(self):
        report = contrast(ROW1_OPT, ROW1_USER, ALPHA1, LABELS1)
        with pytest.raises(UnknownTemplateSet):
            render_explanation(report, template_set="nope")

    def test_numerals_trace_to_report(self):
        report = contrast(ROW2_OPT, ROW2_USER, ALPHA2, LABELS2)
        text = render_explanation(report).text
        decimals = re.findall(r"\d+\.\d+", text)
        allowed = {f"{report.value_optimal:.3f}", f"{report.value_user:.3f}"}
        assert decimals  # the value sentence always carries both totals
        assert set(decimals) <= allowed

    def test_user_favored_feature_inverts_phrasing(self):
        # make the cell of interest dominate with the user ahead
        alpha = np.array([500.0, 3.0, 0.0])
        report = contrast(ROW1_OPT, ROW1_USER, alpha, LABELS1)
        assert report.dominant_feature == 0
        text = render_explanation(report).text
        assert "the user policy visits cell [1,5]" in text
