"""Feature expectations: expected discounted feature occupancies of a policy.

Two exact evaluators are provided for closed-loop policies and cross-checked
against each other in the test suite:

* per-hypothesis conditioning (the default): for each target hypothesis the
  only randomness left is detection noise, so the conditional expectation is
  enumerated exactly over the binary observation branches and mixed by the
  initial belief;
* direct belief-space recursion: arrival features of the pushed-forward
  belief plus the discounted expectation over observation branches.

Open-loop sequences have a closed form per hypothesis (the robot trajectory
is deterministic, each hypothesis terminates at its first visit), and a
seeded Monte-Carlo estimator supports statistical cross-checks of both.

All expectations are exact in the sense that battery exhaustion bounds every
episode, so no horizon truncation is involved and the residual bound is 0.

Why expected occupancies come out below 1 even for features the policy
always pursues: every step the episode may terminate (the target can be in
any cell the robot enters), which removes probability mass from later steps,
and the survivors' occupancies are shrunk further by discounting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .domain import SarBelief, SarModel, Scenario
from .errors import DimensionMismatch, InfeasiblePath
from .solver import AlphaPolicy

_MASS_TOL = 1e-15


@dataclass(frozen=True)
class FeatureExpectation:
    """Expected discounted feature occupancies, with provenance."""

    mu: np.ndarray
    method: str  # "exact" or "monte-carlo"
    standard_errors: Optional[np.ndarray] = None
    truncation_residual_bound: float = 0.0


def value_from_features(weights: np.ndarray, mu: Union[FeatureExpectation, np.ndarray]) -> float:
    """Policy value as the dot product of reward weights and occupancies."""
    vec = mu.mu if isinstance(mu, FeatureExpectation) else np.asarray(mu, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != vec.shape:
        raise DimensionMismatch(f"weights {weights.shape} vs features {vec.shape}")
    return float(np.dot(weights, vec))


def _initial_parts(b0: SarBelief, model: SarModel):
    """Arrival features of the initial belief plus the surviving alive belief."""
    r0 = model.index[b0.robot]
    k0 = b0.battery
    vec = model.belief_vec(b0)
    nf = len(model.weights)
    phi0 = np.zeros(nf, dtype=float)
    for feat in model.coi_feats[r0]:
        phi0[feat] += 1.0
    phi0[-2] = vec[r0]
    if model.frame_battery_terminal(r0, k0):
        phi0[-1] = 1.0
        return r0, k0, phi0, 0.0, None
    alive = vec.copy()
    alive[r0] = 0.0
    mass = float(alive.sum())
    if mass <= _MASS_TOL:
        return r0, k0, phi0, 0.0, None
    return r0, k0, phi0, mass, alive / mass


def feature_expectation_closed(
    policy: AlphaPolicy,
    b0: SarBelief,
    scenario: Optional[Scenario] = None,
    method: str = "hypothesis",
) -> FeatureExpectation:
    """Exact feature expectation of a solved policy from belief ``b0``.

    ``method`` picks the evaluation route, "hypothesis" (per-target
    conditioning) or "belief" (belief-space recursion); both are exact and
    agree to numerical precision.
    """
    if scenario is not None and scenario != policy.scenario:
        raise ValueError("belief/scenario do not match the policy's scenario")
    model = policy.model
    if method == "hypothesis":
        mu = _closed_by_hypothesis(policy, b0, model)
    elif method == "belief":
        mu = _closed_by_belief_recursion(policy, b0, model)
    else:
        raise ValueError(f"unknown method {method!r}")
    return FeatureExpectation(mu=mu, method="exact")


def _closed_by_hypothesis(policy: AlphaPolicy, b0: SarBelief, model: SarModel) -> np.ndarray:
    gamma = model.discount
    p = model.scenario.detect_prob
    nf = len(model.weights)
    r0 = model.index[b0.robot]
    k0 = b0.battery
    b0_vec = model.belief_vec(b0)
    _, _, phi0, mass, alive = _initial_parts(b0, model)
    mu = phi0.copy()
    if alive is None:
        return mu
    # phi0 already covers step 0 for every hypothesis; per-hypothesis walks
    # cover steps >= 1 for the surviving mass.
    for y in range(model.size):
        weight_y = b0_vec[y]
        if weight_y <= 0.0 or y == r0:
            continue
        mu += weight_y * _hypothesis_walk(policy, model, y, r0, k0, alive, gamma, p, nf)
    return mu


def _hypothesis_walk(
    policy: AlphaPolicy,
    model: SarModel,
    y: int,
    r0: int,
    k0: int,
    alive0: np.ndarray,
    gamma: float,
    p: float,
    nf: int,
) -> np.ndarray:
    """Discounted feature sum of steps >= 1 given the target sits at ``y``.

    Branches on detection outcomes only; branches with identical agent belief
    and frame are merged, which keeps the enumeration small.
    """
    mu = np.zeros(nf, dtype=float)
    branches: Dict[Tuple[int, int, bytes], Tuple[float, np.ndarray]] = {
        (r0, k0, alive0.tobytes()): (1.0, alive0)
    }
    discount = gamma
    while branches:
        nxt: Dict[Tuple[int, int, bytes], Tuple[float, np.ndarray]] = {}
        for (r, k, _), (w, bel) in branches.items():
            a = policy._action_index(r, k, bel)
            r2 = int(model.moves[r, a])
            k2 = k - 1
            battery_terminal = model.frame_battery_terminal(r2, k2)
            for feat in model.coi_feats[r2]:
                mu[feat] += w * discount
            if r2 == y:
                mu[-2] += w * discount
            if battery_terminal:
                mu[-1] += w * discount
            if r2 == y or battery_terminal:
                continue
            if y in model._ring_sets[r2]:
                outcomes = []
                if p > 0.0:
                    outcomes.append((model.cells[y], p))
                if p < 1.0:
                    outcomes.append((None, 1.0 - p))
            else:
                outcomes = [(None, 1.0)]
            for obs, po in outcomes:
                norm, bel2 = model.survive_update(bel, r2, obs)
                if norm <= 0.0:
                    continue
                key = (r2, k2, bel2.tobytes())
                if key in nxt:
                    prev_w, prev_b = nxt[key]
                    nxt[key] = (prev_w + w * po, prev_b)
                else:
                    nxt[key] = (w * po, bel2)
        branches = nxt
        discount *= gamma
    return mu


def _closed_by_belief_recursion(policy: AlphaPolicy, b0: SarBelief, model: SarModel) -> np.ndarray:
    gamma = model.discount
    p = model.scenario.detect_prob
    nf = len(model.weights)
    _, _, phi0, mass, alive = _initial_parts(b0, model)
    if alive is None:
        return phi0.copy()
    memo: Dict[Tuple[int, int, bytes], np.ndarray] = {}

    def recurse(r: int, k: int, bel: np.ndarray) -> np.ndarray:
        key = (r, k, bel.tobytes())
        hit = memo.get(key)
        if hit is not None:
            return hit
        a = policy._action_index(r, k, bel)
        r2 = int(model.moves[r, a])
        k2 = k - 1
        out = np.zeros(nf, dtype=float)
        for feat in model.coi_feats[r2]:
            out[feat] += 1.0
        out[-2] += bel[r2]
        if model.frame_battery_terminal(r2, k2):
            out[-1] += 1.0
            memo[key] = out
            return out
        total = np.zeros(nf, dtype=float)
        w_nd = bel * model.nd_like[r2]
        w_nd[r2] = 0.0
        nd_mass = float(w_nd.sum())
        if nd_mass > _MASS_TOL:
            total += nd_mass * recurse(r2, k2, w_nd / nd_mass)
        if p > 0.0:
            for c in model.ring[r2]:
                m = float(bel[c]) * p
                if m > _MASS_TOL:
                    point = np.zeros(model.size, dtype=float)
                    point[c] = 1.0
                    total += m * recurse(r2, k2, point)
        out += gamma * total
        memo[key] = out
        return out

    r0 = model.index[b0.robot]
    return phi0 + gamma * mass * recurse(r0, b0.battery, alive)


def _open_frames(actions: Sequence[str], b0: SarBelief, model: SarModel):
    """Robot/battery frames visited by an action sequence, with feasibility checks."""
    r = model.index[b0.robot]
    k = b0.battery
    frames = [(r, k)]
    for i, action in enumerate(actions):
        if model.frame_battery_terminal(r, k):
            raise InfeasiblePath(
                f"action {i} steps through a battery-terminal state; "
                "run feasibility_truncate first"
            )
        r = int(model.moves[r, model.action_ids.index(action)])
        k -= 1
        frames.append((r, k))
    return frames


def feature_expectation_open(
    actions: Sequence[str], b0: SarBelief, scenario: Scenario
) -> FeatureExpectation:
    """Exact feature expectation of an open-loop action sequence.

    The robot trajectory is deterministic; each target hypothesis ends the
    episode at its first visit (or at battery termination, whose step still
    counts). If the sequence ends before termination the episode simply
    stops. An empty sequence yields the initial arrival features only.
    """
    model = SarModel(scenario)
    frames = _open_frames(actions, b0, model)
    b0_vec = model.belief_vec(b0)
    nf = len(model.weights)
    mu = np.zeros(nf, dtype=float)
    alive = np.ones(model.size, dtype=bool)
    discount = 1.0
    for (r, k) in frames:
        firing_mass = float(b0_vec[alive].sum())
        for feat in model.coi_feats[r]:
            mu[feat] += discount * firing_mass
        if alive[r]:
            mu[-2] += discount * float(b0_vec[r])
        if model.frame_battery_terminal(r, k):
            mu[-1] += discount * firing_mass
            break
        alive[r] = False
        discount *= model.discount
    return FeatureExpectation(mu=mu, method="exact")


def _open_hypothesis_matrix(actions: Sequence[str], b0: SarBelief, model: SarModel) -> np.ndarray:
    """Per-hypothesis discounted feature sums of an open-loop sequence."""
    frames = _open_frames(actions, b0, model)
    nf = len(model.weights)
    out = np.zeros((model.size, nf), dtype=float)
    for y in range(model.size):
        discount = 1.0
        for (r, k) in frames:
            for feat in model.coi_feats[r]:
                out[y, feat] += discount
            if r == y:
                out[y, -2] += discount
            if model.frame_battery_terminal(r, k):
                out[y, -1] += discount
                break
            if r == y:
                break
            discount *= model.discount
    return out


def feature_expectation_mc(
    policy_or_actions: Union[AlphaPolicy, Sequence[str]],
    b0: SarBelief,
    scenario: Scenario,
    n_rollouts: int,
    seed: int,
) -> FeatureExpectation:
    """Seeded Monte-Carlo estimate of the feature expectation.

    Returns the sample mean of the discounted feature sums over
    ``n_rollouts`` independent episodes, with per-feature standard errors.
    """
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")
    rng = np.random.default_rng(seed)
    model = SarModel(scenario)
    probs = model.belief_vec(b0)
    probs = probs / probs.sum()
    if isinstance(policy_or_actions, AlphaPolicy):
        sums, sq = _mc_closed(policy_or_actions, b0, model, probs, n_rollouts, rng)
    else:
        per_hyp = _open_hypothesis_matrix(policy_or_actions, b0, model)
        counts = rng.multinomial(n_rollouts, probs)
        sums = counts @ per_hyp
        sq = counts @ (per_hyp**2)
    mean = sums / n_rollouts
    if n_rollouts > 1:
        variance = np.maximum(sq - n_rollouts * mean**2, 0.0) / (n_rollouts - 1)
        se = np.sqrt(variance / n_rollouts)
    else:
        se = np.zeros_like(mean)
    return FeatureExpectation(mu=mean, method="monte-carlo", standard_errors=se)


def _mc_closed(policy, b0, model, probs, n_rollouts, rng):
    gamma = model.discount
    p = model.scenario.detect_prob
    nf = len(model.weights)
    r0 = model.index[b0.robot]
    k0 = b0.battery
    sums = np.zeros(nf, dtype=float)
    sq = np.zeros(nf, dtype=float)
    for _ in range(n_rollouts):
        y = int(rng.choice(model.size, p=probs))
        total = np.zeros(nf, dtype=float)
        for feat in model.coi_feats[r0]:
            total[feat] += 1.0
        if y == r0:
            total[-2] += 1.0
        if model.frame_battery_terminal(r0, k0):
            total[-1] += 1.0
        else:
            bel = model.belief_vec(b0)
            bel[r0] = 0.0
            mass = bel.sum()
            if y != r0 and mass > _MASS_TOL:
                bel /= mass
                r, k, discount = r0, k0, gamma
                while True:
                    a = policy._action_index(r, k, bel)
                    r2 = int(model.moves[r, a])
                    k2 = k - 1
                    battery_terminal = model.frame_battery_terminal(r2, k2)
                    for feat in model.coi_feats[r2]:
                        total[feat] += discount
                    if r2 == y:
                        total[-2] += discount
                    if battery_terminal:
                        total[-1] += discount
                    if r2 == y or battery_terminal:
                        break
                    if y in model._ring_sets[r2] and rng.random() < p:
                        obs = model.cells[y]
                    else:
                        obs = None
                    _, bel = model.survive_update(bel, r2, obs)
                    r, k = r2, k2
                    discount *= gamma
        sums += total
        sq += total**2
    return sums, sq
