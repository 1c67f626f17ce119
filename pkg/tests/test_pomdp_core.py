import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridsar import (
    BudgetExceeded,
    CellOfInterest,
    DiscreteDistribution,
    InvalidDistribution,
    SarBelief,
    SarModel,
    Scenario,
    ZeroProbabilityObservation,
    belief_update,
    enumerate_successors,
    expectimax_value,
    initial_belief,
)

from oracles import naive_expectimax


def scenario_plain(n=4, battery=12, detect_prob=0.8, target_weight=500.0):
    return Scenario(
        grid_size=n,
        start=(1, 1),
        cells_of_interest=(),
        target_weight=target_weight,
        battery=battery,
        detect_prob=detect_prob,
    )


class TestDiscreteDistribution:
    def test_valid_uniform(self):
        d = DiscreteDistribution.uniform([(1, 1), (2, 1), (1, 2)])
        assert d.prob((2, 1)) == pytest.approx(1 / 3)

    def test_rejects_bad_sum(self):
        with pytest.raises(InvalidDistribution):
            DiscreteDistribution(((1, 1), (2, 1)), (0.5, 0.6))

    def test_rejects_negative(self):
        with pytest.raises(InvalidDistribution):
            DiscreteDistribution(((1, 1), (2, 1)), (1.5, -0.5))

    def test_rejects_duplicates(self):
        with pytest.raises(InvalidDistribution):
            DiscreteDistribution(((1, 1), (1, 1)), (0.5, 0.5))

    def test_from_weights_normalizes(self):
        d = DiscreteDistribution.from_weights([(1, 1), (2, 2)], [2.0, 6.0])
        assert d.probs == (0.25, 0.75)

    def test_support_drops_zeros(self):
        d = DiscreteDistribution(((1, 1), (2, 2)), (0.0, 1.0))
        assert d.support() == (((2, 2), 1.0),)


class TestBeliefUpdate:
    def test_hand_bayes_two_hypotheses(self):
        # adjacent hypothesis keeps no-detect likelihood 0.2, far one keeps 1.0:
        # 0.5*0.2 / (0.5*0.2 + 0.5*1.0) = 1/6
        scenario = scenario_plain()
        model = SarModel(scenario)
        belief = SarBelief((1, 1), 12, DiscreteDistribution(((2, 2), (4, 4)), (0.5, 0.5)))
        posterior = belief_update(belief, "up", None, model)
        assert posterior.robot == (1, 2)
        assert posterior.battery == 11
        assert posterior.target_dist.prob((2, 2)) == pytest.approx(1 / 6, abs=1e-12)
        assert posterior.target_dist.prob((4, 4)) == pytest.approx(5 / 6, abs=1e-12)

    def test_point_mass_stays_point_mass(self):
        scenario = scenario_plain()
        model = SarModel(scenario)
        belief = SarBelief((1, 1), 12, DiscreteDistribution.point_mass((4, 4)))
        posterior = belief_update(belief, "up", None, model)
        assert posterior.target_dist.prob((4, 4)) == 1.0

    def test_survival_conditioning_uniform(self):
        # with detection off, entering a cell only removes its mass: 1/24 elsewhere
        scenario = Scenario(
            grid_size=5,
            start=(1, 1),
            cells_of_interest=(),
            target_weight=500.0,
            battery=25,
            detect_prob=0.0,
        )
        model = SarModel(scenario)
        belief = initial_belief(scenario)
        posterior = belief_update(belief, "up", None, model)
        assert posterior.target_dist.prob((1, 2)) == 0.0
        for cell in posterior.target_dist.items:
            if cell != (1, 2):
                assert posterior.target_dist.prob(cell) == pytest.approx(1 / 24, abs=1e-12)

    def test_zero_probability_observation(self):
        scenario = scenario_plain()
        model = SarModel(scenario)
        belief = SarBelief((1, 1), 12, DiscreteDistribution.point_mass((4, 4)))
        with pytest.raises(ZeroProbabilityObservation):
            belief_update(belief, "up", (4, 4), model)  # far target cannot be detected

    def test_update_equals_normalized_branch_exactly(self):
        scenario = scenario_plain(n=3, battery=6)
        model = SarModel(scenario)
        belief = initial_belief(scenario)
        succ = enumerate_successors(belief, "right", model)
        for branch in succ.branches:
            assert belief_update(belief, "right", branch.observation, model) == branch.belief


class TestEnumerateSuccessors:
    def test_point_mass_adjacent_detection_split(self):
        scenario = scenario_plain()
        model = SarModel(scenario)
        belief = SarBelief((1, 1), 12, DiscreteDistribution.point_mass((2, 2)))
        succ = enumerate_successors(belief, "up", model)  # robot to (1,2), ring holds (2,2)
        probs = {br.observation: br.probability for br in succ.branches}
        assert probs == {(2, 2): pytest.approx(0.8), None: pytest.approx(0.2)}
        assert succ.terminated_mass == 0.0

    def test_full_absorption_empty_branches(self):
        scenario = scenario_plain()
        model = SarModel(scenario)
        belief = SarBelief((1, 1), 12, DiscreteDistribution.point_mass((2, 1)))
        succ = enumerate_successors(belief, "right", model)
        assert succ.branches == ()
        assert succ.terminated_by_cause() == {"target-found": pytest.approx(1.0)}

    def test_single_no_detect_branch_probability(self):
        # detection off: a single no-detect branch misses exactly the entered cell's mass
        scenario = Scenario(
            grid_size=3,
            start=(1, 1),
            cells_of_interest=(),
            target_weight=500.0,
            battery=9,
            detect_prob=0.0,
        )
        model = SarModel(scenario)
        belief = initial_belief(scenario)
        succ = enumerate_successors(belief, "up", model)
        assert len(succ.branches) == 1
        assert succ.branches[0].observation is None
        assert succ.branches[0].probability == pytest.approx(1.0 - 1.0 / 9.0, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(
        weights=st.lists(st.floats(0.01, 5.0), min_size=9, max_size=9),
        action_idx=st.integers(0, 3),
        robot_idx=st.integers(0, 8),
    )
    def test_partition_invariant(self, weights, action_idx, robot_idx):
        scenario = scenario_plain(n=3, battery=7)
        model = SarModel(scenario)
        cells = model.cells
        dist = DiscreteDistribution.from_weights(cells, weights)
        belief = SarBelief(cells[robot_idx], 5, dist)
        action = model.action_ids[action_idx]
        succ = enumerate_successors(belief, action, model)
        total = sum(br.probability for br in succ.branches) + succ.terminated_mass
        assert total == pytest.approx(1.0, abs=1e-9)
        for branch in succ.branches:
            assert sum(branch.belief.target_dist.probs) == pytest.approx(1.0, abs=1e-9)


class TestExpectimax:
    def test_target_in_robot_cell_terminates_at_once(self):
        scenario = scenario_plain()
        model = SarModel(scenario)
        belief = SarBelief((1, 1), 12, DiscreteDistribution.point_mass((1, 1)))
        assert expectimax_value(belief, model, horizon=0) == pytest.approx(500.0)
        assert expectimax_value(belief, model, horizon=5) == pytest.approx(500.0)

    def test_adjacent_target_forced_move(self):
        scenario = scenario_plain()
        model = SarModel(scenario)
        belief = SarBelief((1, 1), 12, DiscreteDistribution.point_mass((2, 1)))
        assert expectimax_value(belief, model, horizon=1) == pytest.approx(475.0, abs=1e-9)
        assert expectimax_value(belief, model, horizon=6) == pytest.approx(475.0, abs=1e-9)

    def test_matches_naive_enumeration_2x2(self):
        scenario = Scenario(
            grid_size=2,
            start=(1, 1),
            cells_of_interest=(CellOfInterest((2, 2), 3.0),),
            target_weight=50.0,
            battery=5,
        )
        model = SarModel(scenario)
        belief = initial_belief(scenario)
        expected = naive_expectimax(
            belief.target_dist.to_dict(), (1, 1), 5, scenario, horizon=3
        )
        assert expectimax_value(belief, model, horizon=3) == pytest.approx(expected, abs=1e-9)

    def test_matches_naive_enumeration_3x3(self):
        scenario = Scenario(
            grid_size=3,
            start=(2, 2),
            cells_of_interest=(CellOfInterest((1, 3), 2.0),),
            target_weight=80.0,
            battery=4,
            detect_prob=0.6,
        )
        model = SarModel(scenario)
        belief = initial_belief(scenario)
        expected = naive_expectimax(
            belief.target_dist.to_dict(), (2, 2), 4, scenario, horizon=4
        )
        assert expectimax_value(belief, model, horizon=4) == pytest.approx(expected, abs=1e-9)

    def test_monotone_in_horizon(self):
        scenario = scenario_plain(n=3, battery=6)
        model = SarModel(scenario)
        belief = initial_belief(scenario)
        values = [expectimax_value(belief, model, horizon=h) for h in range(5)]
        for lo, hi in zip(values, values[1:]):
            assert hi >= lo - 1e-12

    def test_monotone_in_battery(self):
        values = []
        for battery in (3, 5, 7):
            scenario = scenario_plain(n=3, battery=battery)
            model = SarModel(scenario)
            values.append(expectimax_value(initial_belief(scenario), model, horizon=battery))
        assert values[0] <= values[1] + 1e-12 <= values[2] + 2e-12

    def test_budget_guard(self):
        scenario = scenario_plain(n=3, battery=6)
        model = SarModel(scenario)
        with pytest.raises(BudgetExceeded):
            expectimax_value(initial_belief(scenario), model, horizon=6, max_nodes=3)
