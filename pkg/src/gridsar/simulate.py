"""Episode simulation: closed-loop policy rollouts and open-loop replays.

Traces record, per step t, the state reached after t actions, the reward it
earned (discounted by gamma**t), the observation received on arrival, the
agent's belief after conditioning on survival and that observation, and the
action chosen from it. Replaying a trace's actions and observations through
belief_update reproduces the stored belief snapshots exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .domain import (
    Cell,
    Observation,
    SarBelief,
    SarModel,
    SarState,
    Scenario,
    initial_belief,
    make_state,
    reward,
    scenario_id,
    transition,
    within_detect_radius,
)
from .pomdp import DiscreteDistribution, belief_update
from .solver import AlphaPolicy, policy_action


@dataclass(frozen=True)
class TraceStep:
    t: int
    state: SarState
    action: Optional[str]
    observation: Observation
    reward: float
    discounted_reward: float
    belief: Optional[SarBelief]


@dataclass(frozen=True)
class Trace:
    steps: Tuple[TraceStep, ...]
    terminal_cause: Optional[str]
    discounted_return: float
    seed: int
    true_target: Cell


def _alive_initial_belief(scenario: Scenario) -> Optional[SarBelief]:
    """Initial belief conditioned on not terminating at step 0 (no observation yet)."""
    b0 = initial_belief(scenario)
    dist = b0.target_dist
    weights = [0.0 if item == scenario.start else p for item, p in zip(dist.items, dist.probs)]
    total = sum(weights)
    if total <= 0.0:
        return None
    return SarBelief(
        b0.robot, b0.battery, DiscreteDistribution(dist.items, tuple(w / total for w in weights))
    )


def _sample_observation(state: SarState, scenario: Scenario, rng) -> Observation:
    """Observation emitted on arriving at a non-terminal state."""
    if within_detect_radius(state.robot, state.target, scenario):
        return state.target if rng.random() < scenario.detect_prob else None
    return None


def _run_episode(scenario: Scenario, true_target: Cell, seed: int, next_action, rng=None) -> Trace:
    """Shared episode loop; ``next_action(t, belief)`` returns the action or None to stop."""
    if rng is None:
        rng = np.random.default_rng(seed)
    model = SarModel(scenario)
    gamma = scenario.discount
    state = make_state(scenario.start, true_target, scenario.battery, scenario)
    belief = _alive_initial_belief(scenario)
    observation: Observation = None
    steps: List[TraceStep] = []
    total = 0.0
    t = 0
    while True:
        step_reward = reward(state, None, scenario)
        discounted = (gamma**t) * step_reward
        total += discounted
        if state.terminal_cause is not None:
            steps.append(TraceStep(t, state, None, observation, step_reward, discounted, None))
            return Trace(tuple(steps), state.terminal_cause, total, seed, true_target)
        action = next_action(t, belief)
        steps.append(TraceStep(t, state, action, observation, step_reward, discounted, belief))
        if action is None:
            return Trace(tuple(steps), None, total, seed, true_target)
        nxt = transition(state, action, scenario)
        if nxt.terminal_cause is None:
            observation = _sample_observation(nxt, scenario, rng)
            belief = belief_update(belief, action, observation, model)
        else:
            observation = None
            belief = None
        state = nxt
        t += 1


def simulate(
    policy: AlphaPolicy,
    scenario: Scenario,
    seed: int,
    true_target: Optional[Cell] = None,
) -> Trace:
    """Roll out a solved policy; deterministic given the seed.

    Without ``true_target`` the target cell is sampled from the initial
    belief using the same seed.
    """
    if scenario_id(scenario) != scenario_id(policy.scenario):
        raise ValueError("policy was solved for a different scenario")
    rng = np.random.default_rng(seed)
    if true_target is None:
        b0 = initial_belief(scenario)
        idx = int(rng.choice(len(b0.target_dist.items), p=np.asarray(b0.target_dist.probs)))
        true_target = b0.target_dist.items[idx]
    return _run_episode(
        scenario, true_target, seed, lambda t, belief: policy_action(policy, belief), rng=rng
    )


def replay_path(
    actions: Sequence[str],
    scenario: Scenario,
    true_target: Cell,
    seed: int = 0,
) -> Trace:
    """Execute a fixed action sequence against a known target cell.

    Beliefs and observations are still tracked so the trace reads like a
    policy rollout; the episode stops when the sequence is exhausted or a
    terminal state is reached.
    """
    seq = list(actions)
    return _run_episode(
        scenario, true_target, seed, lambda t, belief: seq[t] if t < len(seq) else None
    )


def trace_to_doc(trace: Trace, scenario: Scenario) -> dict:
    steps = []
    for step in trace.steps:
        belief_doc = None
        if step.belief is not None:
            model_probs = [float(p) for p in step.belief.target_dist.probs]
            belief_doc = {
                "robot": list(step.belief.robot),
                "battery": step.belief.battery,
                "probs": model_probs,
            }
        steps.append(
            {
                "t": step.t,
                "state": {
                    "robot": list(step.state.robot),
                    "target": list(step.state.target),
                    "battery": step.state.battery,
                    "terminal_cause": step.state.terminal_cause,
                },
                "action": step.action,
                "observation": None if step.observation is None else list(step.observation),
                "reward": step.reward,
                "discounted_reward": step.discounted_reward,
                "belief": belief_doc,
            }
        )
    return {
        "format_version": 1,
        "steps": steps,
        "terminal_cause": trace.terminal_cause,
        "discounted_return": trace.discounted_return,
        "seed": trace.seed,
        "true_target": list(trace.true_target),
    }
