"""Point-based POMDP solver with certified value bounds.

The belief state factors into a deterministic frame (robot cell, battery) and
a distribution over target hypotheses, so value functions are kept per
(robot, battery) stratum as sets of alpha vectors over the n*n hypotheses.
Battery strictly decreases, which makes the stratum graph a DAG and bounds
every recursion by the battery budget.

Bounds:

* lower bound: alpha vectors. Each stratum starts from the four repeat-action
  vectors plus one "commit to hypothesis c" vector per target cell (the
  optimal known-target route, blind tail appended), and grows by point-based
  backups at explored beliefs. Every vector is the exact value of an
  executable policy, so the pointwise max is a certified lower bound.
* upper bound: known-target optimal values as corner points (information
  relaxation) plus sawtooth interpolation over belief points added during
  exploration.

Exploration walks the belief tree from the initial belief, following the
upper-bound-greedy action and the observation branch with the largest
weighted bound gap, then backs both bounds up along the path. Detection
branches collapse to point-mass beliefs where both bounds are already exact,
so only the no-detection chain is ever descended.

solve() returns a policy whose metadata certifies the achieved gap at the
initial belief; on budget exhaustion the policy is returned with
``converged=False`` rather than raising.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .domain import (
    ACTIONS,
    SarBelief,
    SarModel,
    Scenario,
    scenario_from_doc,
    scenario_id,
    scenario_to_doc,
)
from .errors import UnreachableStratum
from .pomdp import DiscreteDistribution

POLICY_FORMAT_VERSION = 1

_DOMINANCE_TOL = 1e-12
_MASS_TOL = 1e-15
_SAWTOOTH_CAP = 64


@dataclass(frozen=True)
class SolveBudget:
    """Caps on solve effort; exceeding them yields a flagged partial policy."""

    max_explorations: int = 20_000
    max_seconds: Optional[float] = None


@dataclass(frozen=True)
class AlphaVector:
    """One linear value-function piece over target hypotheses, with its action."""

    coefficients: np.ndarray
    action: str


class AlphaPolicy:
    """Solved policy: per-stratum alpha-vector sets plus solve metadata.

    Immutable after construction; safe to share across threads.
    """

    def __init__(
        self,
        scenario: Scenario,
        strata: Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray]],
        epsilon: float,
        value_lower: float,
        value_upper: float,
        iterations: int,
        converged: bool,
    ):
        self.scenario = scenario
        self._strata = strata
        self.epsilon = epsilon
        self.value_lower = value_lower
        self.value_upper = value_upper
        self.iterations = iterations
        self.converged = converged
        self._model = SarModel(scenario)

    @property
    def gap(self) -> float:
        return max(0.0, self.value_upper - self.value_lower)

    @property
    def model(self) -> SarModel:
        return self._model

    def stratum_keys(self):
        return self._strata.keys()

    def vectors(self, robot, battery) -> List[AlphaVector]:
        key = (self._model.index[robot], battery)
        if key not in self._strata:
            raise UnreachableStratum(f"no alpha vectors for robot {robot}, battery {battery}")
        matrix, actions = self._strata[key]
        return [AlphaVector(matrix[i].copy(), ACTIONS[actions[i]]) for i in range(len(actions))]

    # -- internal fast paths (belief given as a dense hypothesis vector) ------

    def _stratum(self, r: int, k: int):
        key = (r, k)
        if key not in self._strata:
            cell = self._model.cells[r]
            raise UnreachableStratum(f"no alpha vectors for robot {cell}, battery {k}")
        return self._strata[key]

    def _action_index(self, r: int, k: int, vec: np.ndarray) -> int:
        matrix, actions = self._stratum(r, k)
        values = matrix @ vec
        best = values.max()
        choice = None
        for i, v in enumerate(values):
            if v == best and (choice is None or actions[i] < actions[choice]):
                choice = i
        return int(actions[choice])

    def _continuation(self, r: int, k: int, vec: np.ndarray) -> float:
        matrix, _ = self._stratum(r, k)
        return float((matrix @ vec).max())


def policy_action(policy: AlphaPolicy, belief: SarBelief) -> str:
    """Action of the maximizing alpha vector; exact ties go to the fixed order."""
    model = policy.model
    r = model.index[belief.robot]
    vec = model.belief_vec(belief)
    return ACTIONS[policy._action_index(r, belief.battery, vec)]


def policy_value(policy: AlphaPolicy, belief: SarBelief) -> float:
    """Certified lower bound on the optimal value from ``belief``.

    The belief is taken as a fresh arrival: its own arrival features count,
    the target-at-robot mass terminates, and the surviving mass continues
    under the stored alpha vectors.
    """
    model = policy.model
    r = model.index[belief.robot]
    k = belief.battery
    vec = model.belief_vec(belief)
    now = float(model.rew_vec(r, k) @ vec)
    if model.frame_battery_terminal(r, k):
        return now
    alive = vec.copy()
    alive[r] = 0.0
    mass = float(alive.sum())
    if mass <= _MASS_TOL:
        return now
    return now + model.discount * mass * policy._continuation(r, k, alive / mass)


class _Stratum:
    __slots__ = ("alphas", "actions", "ptmax", "corner", "pts_b", "pts_v", "pts_gap", "pts_key", "_mat")

    def __init__(self, corner: np.ndarray):
        self.alphas: List[np.ndarray] = []
        self.actions: List[int] = []
        self.ptmax: Optional[np.ndarray] = None
        self.corner = corner
        self.pts_b: List[np.ndarray] = []
        self.pts_v: List[float] = []
        self.pts_gap: List[float] = []
        self.pts_key: Dict[bytes, int] = {}
        self._mat: Optional[np.ndarray] = None

    def matrix(self) -> np.ndarray:
        if self._mat is None:
            self._mat = np.vstack(self.alphas)
        return self._mat

    def add_vector(self, beta: np.ndarray, action: int) -> None:
        for existing in self.alphas:
            if np.all(existing >= beta - _DOMINANCE_TOL):
                return
        keep = [i for i, v in enumerate(self.alphas) if not np.all(beta >= v + _DOMINANCE_TOL)]
        if len(keep) != len(self.alphas):
            self.alphas = [self.alphas[i] for i in keep]
            self.actions = [self.actions[i] for i in keep]
        self.alphas.append(beta)
        self.actions.append(action)
        self._mat = None
        if self.ptmax is None:
            self.ptmax = beta.copy()
        else:
            # dominated removals cannot lower the pointwise max
            self.ptmax = np.maximum(self.ptmax, beta)

    def lb(self, vec: np.ndarray) -> float:
        return float((self.matrix() @ vec).max())

    def ub(self, vec: np.ndarray) -> float:
        base = float(self.corner @ vec)
        if not self.pts_b:
            return base
        pts = np.vstack(self.pts_b)
        gaps = np.asarray(self.pts_gap)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(pts > 0.0, vec / pts, np.inf).min(axis=1)
        return float(min(base, (base + gaps * ratios).min()))

    def add_point(self, vec: np.ndarray, value: float) -> None:
        key = vec.tobytes()
        base = float(self.corner @ vec)
        pos = self.pts_key.get(key)
        if pos is not None:
            if value < self.pts_v[pos]:
                self.pts_v[pos] = value
                self.pts_gap[pos] = value - base
            return
        if value >= base:
            return
        if len(self.pts_b) >= _SAWTOOTH_CAP:
            worst = int(np.argmax(self.pts_gap))
            old_key = self.pts_b[worst].tobytes()
            del self.pts_key[old_key]
            self.pts_b[worst] = vec.copy()
            self.pts_v[worst] = value
            self.pts_gap[worst] = value - base
            self.pts_key[key] = worst
            return
        self.pts_key[key] = len(self.pts_b)
        self.pts_b.append(vec.copy())
        self.pts_v.append(value)
        self.pts_gap.append(value - base)


class _Solver:
    def __init__(self, model: SarModel, epsilon: float, budget: SolveBudget):
        self.model = model
        self.scenario = model.scenario
        self.epsilon = epsilon
        self.budget = budget
        self.gamma = model.discount
        self.p = self.scenario.detect_prob
        self.S = model.size
        self.B = self.scenario.battery
        self.wm = self._known_target_values()
        self.strata: Dict[Tuple[int, int], _Stratum] = {}
        self._blind: Dict[Tuple[int, int, int], np.ndarray] = {}
        self._route: Dict[Tuple[int, int, int], Tuple[int, np.ndarray]] = {}
        self.explorations = 0

    # -- exact known-target dynamic program ------------------------------------

    def _known_target_values(self) -> np.ndarray:
        """wm[k, r, y]: optimal continuation from alive (r, k) with known target y."""
        model = self.model
        wm = np.zeros((self.B + 1, self.S, self.S), dtype=float)
        for k in range(1, self.B + 1):
            for r in range(self.S):
                if model.frame_battery_terminal(r, k):
                    continue
                best = None
                for a in range(len(ACTIONS)):
                    r2 = int(model.moves[r, a])
                    k2 = k - 1
                    q = model.rew_vec(r2, k2).copy()
                    if not model.frame_battery_terminal(r2, k2):
                        cont = self.gamma * wm[k2, r2]
                        q += cont
                        q[r2] = model.rew_vec(r2, k2)[r2]
                    best = q if best is None else np.maximum(best, q)
                wm[k, r] = best
        return wm

    # -- seed vectors -----------------------------------------------------------

    def _blind_vec(self, a: int, r: int, k: int) -> np.ndarray:
        key = (a, r, k)
        vec = self._blind.get(key)
        if vec is None:
            model = self.model
            r2 = int(model.moves[r, a])
            k2 = k - 1
            vec = model.rew_vec(r2, k2).copy()
            if not model.frame_battery_terminal(r2, k2):
                child = self._blind_vec(a, r2, k2).copy()
                child[r2] = 0.0
                vec += self.gamma * child
            vec.setflags(write=False)
            self._blind[key] = vec
        return vec

    def _route_vec(self, r: int, k: int, c: int) -> Tuple[int, np.ndarray]:
        """Value vector of committing to hypothesis c: optimal route to c, blind tail."""
        key = (r, k, c)
        hit = self._route.get(key)
        if hit is None:
            model = self.model
            best_a, best_q = 0, None
            for a in range(len(ACTIONS)):
                r2 = int(model.moves[r, a])
                k2 = k - 1
                q = float(model.rew_vec(r2, k2)[c])
                if r2 != c and not model.frame_battery_terminal(r2, k2):
                    q += self.gamma * float(self.wm[k2, r2, c])
                if best_q is None or q > best_q:
                    best_a, best_q = a, q
            r2 = int(model.moves[r, best_a])
            k2 = k - 1
            vec = model.rew_vec(r2, k2).copy()
            if not model.frame_battery_terminal(r2, k2):
                if r2 == c:
                    cont = self._blind_vec(best_a, r2, k2).copy()
                else:
                    cont = self._route_vec(r2, k2, c)[1].copy()
                cont[r2] = 0.0
                vec += self.gamma * cont
            vec.setflags(write=False)
            hit = (best_a, vec)
            self._route[key] = hit
        return hit

    def ensure_stratum(self, r: int, k: int) -> _Stratum:
        key = (r, k)
        st = self.strata.get(key)
        if st is None:
            st = _Stratum(self.wm[k, r])
            for a in range(len(ACTIONS)):
                beta = self._blind_vec(a, r, k).copy()
                beta[r] = 0.0
                st.add_vector(beta, a)
            for c in range(self.S):
                if c == r:
                    continue
                action, vec = self._route_vec(r, k, c)
                beta = vec.copy()
                beta[r] = 0.0
                st.add_vector(beta, action)
            self.strata[key] = st
        return st

    # -- backups ---------------------------------------------------------------

    def _no_detect_weights(self, vec: np.ndarray, r2: int) -> np.ndarray:
        w = vec * self.model.nd_like[r2]
        w[r2] = 0.0
        return w

    def _q_upper(self, vec: np.ndarray, r: int, k: int, a: int) -> float:
        model = self.model
        r2 = int(model.moves[r, a])
        k2 = k - 1
        arrival = float(model.rew_vec(r2, k2) @ vec)
        if model.frame_battery_terminal(r2, k2):
            return arrival
        cont = 0.0
        ring = model.ring[r2]
        if self.p > 0.0 and len(ring):
            cont += self.p * float(vec[ring] @ self.wm[k2, r2, ring])
        w_nd = self._no_detect_weights(vec, r2)
        mass = float(w_nd.sum())
        if mass > _MASS_TOL:
            st2 = self.ensure_stratum(r2, k2)
            cont += mass * st2.ub(w_nd / mass)
        return arrival + self.gamma * cont

    def _backup(self, vec: np.ndarray, r: int, k: int) -> Tuple[np.ndarray, int]:
        model = self.model
        best = None
        for a in range(len(ACTIONS)):
            r2 = int(model.moves[r, a])
            k2 = k - 1
            beta = model.rew_vec(r2, k2).copy()
            if not model.frame_battery_terminal(r2, k2):
                st2 = self.ensure_stratum(r2, k2)
                w_nd = self._no_detect_weights(vec, r2)
                if float(w_nd.sum()) > _MASS_TOL:
                    alpha_nd = st2.alphas[int(np.argmax(st2.matrix() @ w_nd))]
                else:
                    # zero-mass branch at this belief: any stored vector keeps
                    # the backup a valid executable-policy bound elsewhere
                    alpha_nd = st2.alphas[0]
                cont = model.nd_like[r2] * alpha_nd
                ring = model.ring[r2]
                if self.p > 0.0 and len(ring):
                    cont[ring] += self.p * st2.ptmax[ring]
                cont[r2] = 0.0
                beta += self.gamma * cont
            beta[r] = 0.0
            value = float(beta @ vec)
            if best is None or value > best[0]:
                best = (value, beta, a)
        return best[1], best[2]

    # -- exploration -------------------------------------------------------------

    def _explore(self, vec: np.ndarray, r: int, k: int, depth: int, eps_root: float) -> None:
        st = self.ensure_stratum(r, k)
        threshold = eps_root / (self.gamma ** depth)
        if st.ub(vec) - st.lb(vec) <= threshold:
            return
        model = self.model
        q_ubs = [self._q_upper(vec, r, k, a) for a in range(len(ACTIONS))]
        a_star = int(np.argmax(q_ubs))
        r2 = int(model.moves[r, a_star])
        k2 = k - 1
        if not model.frame_battery_terminal(r2, k2):
            w_nd = self._no_detect_weights(vec, r2)
            mass = float(w_nd.sum())
            if mass > _MASS_TOL:
                child = w_nd / mass
                st2 = self.ensure_stratum(r2, k2)
                child_threshold = eps_root / (self.gamma ** (depth + 1))
                excess = mass * (st2.ub(child) - st2.lb(child) - child_threshold)
                if excess > 0.0:
                    self._explore(child, r2, k2, depth + 1, eps_root)
        beta, action = self._backup(vec, r, k)
        st.add_vector(beta, action)
        new_ub = max(self._q_upper(vec, r, k, a) for a in range(len(ACTIONS)))
        st.add_point(vec, min(st.ub(vec), new_ub))

    # -- main loop ----------------------------------------------------------------

    def solve(self) -> AlphaPolicy:
        model = self.model
        scenario = self.scenario
        r0 = model.start_index
        k0 = self.B
        b0 = model.belief_vec(
            SarBelief(scenario.start, k0, DiscreteDistribution.uniform(model.cells))
        )
        now = float(model.rew_vec(r0, k0) @ b0)
        alive = b0.copy()
        alive[r0] = 0.0
        mass = float(alive.sum())

        converged = False
        started = time.monotonic()
        if mass <= _MASS_TOL or model.frame_battery_terminal(r0, k0):
            lower = upper = now
            converged = True
        else:
            alive /= mass
            root = self.ensure_stratum(r0, k0)
            eps_root = self.epsilon / (self.gamma * mass)
            while True:
                lower = now + self.gamma * mass * root.lb(alive)
                upper = now + self.gamma * mass * root.ub(alive)
                if upper - lower <= self.epsilon:
                    converged = True
                    break
                if self.explorations >= self.budget.max_explorations:
                    break
                if (
                    self.budget.max_seconds is not None
                    and time.monotonic() - started > self.budget.max_seconds
                ):
                    break
                self._explore(alive, r0, k0, 0, eps_root)
                self.explorations += 1

        # Materialize every stratum a policy rollout could visit so that
        # policy_action never lands outside the solved set.
        for k in range(1, self.B + 1):
            for r in range(self.S):
                if not model.frame_battery_terminal(r, k):
                    self.ensure_stratum(r, k)

        strata = {
            key: (st.matrix().copy(), np.asarray(st.actions, dtype=np.int64))
            for key, st in self.strata.items()
        }
        return AlphaPolicy(
            scenario=scenario,
            strata=strata,
            epsilon=self.epsilon,
            value_lower=lower,
            value_upper=max(lower, upper),
            iterations=self.explorations,
            converged=converged,
        )


def default_epsilon(scenario: Scenario) -> float:
    return max(1e-3 * abs(scenario.target_weight), 1e-6)


def solve(
    scenario: Scenario,
    epsilon: Optional[float] = None,
    budget: Optional[SolveBudget] = None,
    seed: int = 0,
) -> AlphaPolicy:
    """Solve a scenario to the requested value gap at the initial belief.

    Deterministic: the algorithm samples nothing, so ``seed`` is accepted for
    interface stability but has no effect. On budget exhaustion the best
    policy found so far is returned with ``converged=False`` and honest
    bounds.
    """
    if epsilon is None:
        epsilon = default_epsilon(scenario)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return _Solver(SarModel(scenario), epsilon, budget or SolveBudget()).solve()


# -- persistence -----------------------------------------------------------------


def policy_to_doc(policy: AlphaPolicy) -> dict:
    model = policy.model
    entries = []
    for (r, k) in sorted(policy.stratum_keys(), key=lambda key: (key[1], key[0])):
        matrix, actions = policy._strata[(r, k)]
        entries.append(
            {
                "robot": list(model.cells[r]),
                "battery": k,
                "actions": [ACTIONS[a] for a in actions],
                "alphas": [[float(v) for v in row] for row in matrix],
            }
        )
    return {
        "format_version": POLICY_FORMAT_VERSION,
        "kind": "gridsar-policy",
        "scenario_id": scenario_id(policy.scenario),
        "scenario": scenario_to_doc(policy.scenario),
        "epsilon": policy.epsilon,
        "converged": policy.converged,
        "iterations": policy.iterations,
        "value_lower": policy.value_lower,
        "value_upper": policy.value_upper,
        "gap": policy.gap,
        "strata": entries,
    }


def policy_from_doc(doc: dict) -> AlphaPolicy:
    if doc.get("format_version") != POLICY_FORMAT_VERSION or doc.get("kind") != "gridsar-policy":
        raise ValueError("not a gridsar policy document")
    scenario = scenario_from_doc(doc["scenario"])
    model = SarModel(scenario)
    strata: Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray]] = {}
    for entry in doc["strata"]:
        r = model.index[tuple(entry["robot"])]
        k = entry["battery"]
        matrix = np.array(entry["alphas"], dtype=float)
        actions = np.array([ACTIONS.index(a) for a in entry["actions"]], dtype=np.int64)
        strata[(r, k)] = (matrix, actions)
    return AlphaPolicy(
        scenario=scenario,
        strata=strata,
        epsilon=doc["epsilon"],
        value_lower=doc["value_lower"],
        value_upper=doc["value_upper"],
        iterations=doc["iterations"],
        converged=doc["converged"],
    )


def save_policy(policy: AlphaPolicy, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(policy_to_doc(policy), fh)


def load_policy(path) -> AlphaPolicy:
    with open(path, "r", encoding="utf-8") as fh:
        return policy_from_doc(json.load(fh))
