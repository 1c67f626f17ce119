import time

import pytest

from gridsar import (
    case_study_scenario,
    feature_expectation_closed,
    initial_belief,
    solve,
)


@pytest.fixture(scope="session")
def case1_scenario():
    return case_study_scenario(1)


@pytest.fixture(scope="session")
def case2_scenario():
    return case_study_scenario(2)


@pytest.fixture(scope="session")
def solve_times():
    """Wall-clock seconds of the session case-study solves, keyed by case id."""
    return {}


@pytest.fixture(scope="session")
def case1_policy(case1_scenario, solve_times):
    started = time.perf_counter()
    policy = solve(case1_scenario, epsilon=0.5)
    solve_times[1] = time.perf_counter() - started
    return policy


@pytest.fixture(scope="session")
def case2_policy(case2_scenario, solve_times):
    started = time.perf_counter()
    policy = solve(case2_scenario, epsilon=0.5)
    solve_times[2] = time.perf_counter() - started
    return policy


@pytest.fixture(scope="session")
def case1_mu_optimal(case1_policy, case1_scenario):
    return feature_expectation_closed(case1_policy, initial_belief(case1_scenario))


@pytest.fixture(scope="session")
def case2_mu_optimal(case2_policy, case2_scenario):
    return feature_expectation_closed(case2_policy, initial_belief(case2_scenario))
