"""The search-and-rescue grid POMDP.

A robot sweeps an n x n grid for a stationary hidden target while collecting
bonuses at cells of interest, under a battery budget. Coordinates are
1-indexed ``(x, y)`` with x rightward and y upward; the robot starts at the
scenario start cell with a uniform belief over the target cell.

Dynamics: the four cardinal actions move the robot one cell (moves into a
wall leave the position unchanged); every action costs one battery unit. An
episode ends when the robot enters the target cell, or when the remaining
battery minus the battery needed to return to the start drops below 1. The
terminal step's features still count.

Observations arrive after each action (none before the first): entering the
target cell reveals it perfectly, a cell within the detection radius reports
the true target cell with probability ``detect_prob``, and otherwise nothing
is seen.

Features of a state are indicators [cell-of-interest occupancies..., target
co-location, battery-terminal]; the reward is the dot product of the feature
vector with the scenario weights [bonus weights..., target weight, 0].
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ScenarioValidationError, TerminalStateStep
from .pomdp import DiscreteDistribution

Cell = Tuple[int, int]
Observation = Optional[Cell]  # None means "no detection"

ACTIONS: Tuple[str, ...] = ("up", "down", "left", "right")
ACTION_DELTA: Dict[str, Tuple[int, int]] = {
    "up": (0, 1),
    "down": (0, -1),
    "left": (-1, 0),
    "right": (1, 0),
}

TARGET_FOUND = "target-found"
BATTERY = "battery"

DEFAULT_DETECT_PROB = 0.8
DEFAULT_DISCOUNT = 0.95
SCENARIO_FORMAT_VERSION = 1


@dataclass(frozen=True)
class CellOfInterest:
    cell: Cell
    weight: float


@dataclass(frozen=True)
class Scenario:
    """Full problem definition for one search-and-rescue instance."""

    grid_size: int
    start: Cell
    cells_of_interest: Tuple[CellOfInterest, ...]
    target_weight: float
    battery: int
    detect_prob: float = DEFAULT_DETECT_PROB
    detect_metric: str = "chebyshev"
    discount: float = DEFAULT_DISCOUNT
    name: Optional[str] = None

    def __post_init__(self):
        if self.grid_size < 1:
            raise ScenarioValidationError("grid_size must be >= 1", field="grid_size")
        if not _in_bounds(self.start, self.grid_size):
            raise ScenarioValidationError(f"start {self.start} out of bounds", field="start")
        seen = set()
        for i, coi in enumerate(self.cells_of_interest):
            if not _in_bounds(coi.cell, self.grid_size):
                raise ScenarioValidationError(
                    f"cell of interest {coi.cell} out of bounds",
                    field=f"cells_of_interest.{i}.cell",
                )
            if coi.cell in seen:
                raise ScenarioValidationError(
                    f"duplicate cell of interest {coi.cell}",
                    field=f"cells_of_interest.{i}.cell",
                )
            seen.add(coi.cell)
        if self.battery < 1:
            raise ScenarioValidationError("battery must be >= 1", field="battery")
        if not 0.0 <= self.detect_prob <= 1.0:
            raise ScenarioValidationError("detect_prob must lie in [0, 1]", field="detect_prob")
        if self.detect_metric not in ("chebyshev", "manhattan"):
            raise ScenarioValidationError(
                "detect_metric must be 'chebyshev' or 'manhattan'", field="detect_metric"
            )
        if not 0.0 < self.discount < 1.0:
            raise ScenarioValidationError("discount must lie in (0, 1)", field="discount")

    @property
    def n_features(self) -> int:
        return len(self.cells_of_interest) + 2


@dataclass(frozen=True)
class SarState:
    robot: Cell
    target: Cell
    battery: int
    terminal_cause: Optional[str] = None


@dataclass(frozen=True)
class SarBelief:
    """Belief at the moment the robot occupies ``robot`` with ``battery`` left.

    The target distribution may still carry mass on the robot's own cell (the
    initial belief does); evaluators condition on survival where needed.
    """

    robot: Cell
    battery: int
    target_dist: DiscreteDistribution


def cells_in_order(n: int) -> List[Cell]:
    """All grid cells in the fixed row-major enumeration order."""
    return [(x, y) for y in range(1, n + 1) for x in range(1, n + 1)]


def cell_index(cell: Cell, n: int) -> int:
    x, y = cell
    return (y - 1) * n + (x - 1)


def _in_bounds(cell: Cell, n: int) -> bool:
    x, y = cell
    return 1 <= x <= n and 1 <= y <= n


def home_distance(cell: Cell, start: Cell) -> int:
    """Battery needed to return to the start cell (Manhattan distance)."""
    return abs(cell[0] - start[0]) + abs(cell[1] - start[1])


def move_cell(cell: Cell, action: str, n: int) -> Cell:
    dx, dy = ACTION_DELTA[action]
    nxt = (cell[0] + dx, cell[1] + dy)
    return nxt if _in_bounds(nxt, n) else cell


def _terminal_cause_parts(robot: Cell, target: Cell, battery: int, scenario: Scenario) -> Optional[str]:
    if robot == target:
        return TARGET_FOUND
    if battery - home_distance(robot, scenario.start) < 1:
        return BATTERY
    return None


def is_terminal(state: SarState, scenario: Scenario) -> Optional[str]:
    """Terminal cause of a state: target-found (checked first), battery, or None."""
    return _terminal_cause_parts(state.robot, state.target, state.battery, scenario)


def make_state(robot: Cell, target: Cell, battery: int, scenario: Scenario) -> SarState:
    """Build a SarState with its terminal cause filled in."""
    return SarState(robot, target, battery, _terminal_cause_parts(robot, target, battery, scenario))


def transition(state: SarState, action: str, scenario: Scenario) -> SarState:
    """Deterministic step: move one cell (walls block), battery drops by 1."""
    if state.terminal_cause is not None:
        raise TerminalStateStep(f"cannot step from terminal state {state}")
    robot = move_cell(state.robot, action, scenario.grid_size)
    return make_state(robot, state.target, state.battery - 1, scenario)


def _detect_distance(a: Cell, b: Cell, metric: str) -> int:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) if metric == "chebyshev" else dx + dy


def within_detect_radius(robot: Cell, target: Cell, scenario: Scenario) -> bool:
    return _detect_distance(robot, target, scenario.detect_metric) <= 1


def observation_prob(state: SarState, observation: Observation, scenario: Scenario) -> float:
    """P(observation | arrived state).

    The alphabet is no-detection (None) plus one detection symbol per grid
    cell. Co-location reveals the target perfectly; within the detection
    radius the true cell is reported with probability ``detect_prob``.
    """
    if state.robot == state.target:
        return 1.0 if observation == state.target else 0.0
    if within_detect_radius(state.robot, state.target, scenario):
        if observation == state.target:
            return scenario.detect_prob
        return 1.0 - scenario.detect_prob if observation is None else 0.0
    return 1.0 if observation is None else 0.0


def feature_labels(scenario: Scenario) -> List[str]:
    labels = [f"cell [{c.cell[0]},{c.cell[1]}]" for c in scenario.cells_of_interest]
    return labels + ["target", "battery"]


def feature_weights(scenario: Scenario) -> np.ndarray:
    """Reward weights aligned with the feature vector; battery weight is 0."""
    return np.array(
        [c.weight for c in scenario.cells_of_interest] + [scenario.target_weight, 0.0],
        dtype=float,
    )


def state_features(state: SarState, action: Optional[str], scenario: Scenario) -> np.ndarray:
    """Indicator features of a state; independent of the action taken."""
    n_cells = len(scenario.cells_of_interest)
    out = np.zeros(n_cells + 2, dtype=float)
    for i, coi in enumerate(scenario.cells_of_interest):
        if state.robot == coi.cell:
            out[i] = 1.0
    if state.robot == state.target:
        out[n_cells] = 1.0
    if state.battery - home_distance(state.robot, scenario.start) < 1:
        out[n_cells + 1] = 1.0
    return out


def belief_features(belief: SarBelief, action: Optional[str], scenario: Scenario) -> np.ndarray:
    """Expected features under the target distribution (robot and battery known)."""
    n_cells = len(scenario.cells_of_interest)
    out = np.zeros(n_cells + 2, dtype=float)
    for i, coi in enumerate(scenario.cells_of_interest):
        if belief.robot == coi.cell:
            out[i] = 1.0
    out[n_cells] = belief.target_dist.prob(belief.robot)
    if belief.battery - home_distance(belief.robot, scenario.start) < 1:
        out[n_cells + 1] = 1.0
    return out


def reward(state: SarState, action: Optional[str], scenario: Scenario) -> float:
    return float(np.dot(feature_weights(scenario), state_features(state, action, scenario)))


def initial_belief(scenario: Scenario) -> SarBelief:
    """Robot at the start with full battery; uniform target belief over all cells."""
    return SarBelief(
        robot=scenario.start,
        battery=scenario.battery,
        target_dist=DiscreteDistribution.uniform(cells_in_order(scenario.grid_size)),
    )


def cell_reachable(cell: Cell, scenario: Scenario) -> bool:
    """Whether any policy can ever occupy ``cell``, even as its terminal step.

    Walking a geodesic, the step before arrival is the binding one: it needs
    battery - (d-1) - (d-1) >= 1, i.e. battery >= 2d - 1. Detours only waste
    battery, so this is exact.
    """
    d = home_distance(cell, scenario.start)
    return scenario.battery >= 2 * d - 1


class SarModel:
    """Model handle binding a scenario for the generic belief machinery.

    Also precomputes the index tables the solver and evaluators share: move
    table, distances home, detection rings, no-detection likelihood rows, and
    per-frame arrival-reward vectors over target hypotheses.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.discount = scenario.discount
        n = scenario.grid_size
        self.n = n
        self.size = n * n
        self.cells = cells_in_order(n)
        self.index = {c: i for i, c in enumerate(self.cells)}
        self.start_index = self.index[scenario.start]

        self.moves = np.empty((self.size, len(ACTIONS)), dtype=np.int64)
        for i, cell in enumerate(self.cells):
            for a, action in enumerate(ACTIONS):
                self.moves[i, a] = self.index[move_cell(cell, action, n)]

        self.home = np.array([home_distance(c, scenario.start) for c in self.cells], dtype=np.int64)

        self.ring: List[np.ndarray] = []
        self._ring_sets: List[frozenset] = []
        for i, cell in enumerate(self.cells):
            members = [
                j
                for j, other in enumerate(self.cells)
                if j != i and _detect_distance(cell, other, scenario.detect_metric) <= 1
            ]
            self.ring.append(np.array(members, dtype=np.int64))
            self._ring_sets.append(frozenset(members))

        # Row r: likelihood of seeing nothing at robot cell r, per target hypothesis.
        self.nd_like = np.ones((self.size, self.size), dtype=float)
        for i in range(self.size):
            self.nd_like[i, self.ring[i]] = 1.0 - scenario.detect_prob

        self.weights = feature_weights(scenario)
        self._bonus = np.zeros(self.size, dtype=float)
        for coi in scenario.cells_of_interest:
            self._bonus[self.index[coi.cell]] += coi.weight
        self._battery_weight = float(self.weights[-1])
        self._target_weight = float(scenario.target_weight)
        self._rew_cache: Dict[Tuple[int, bool], np.ndarray] = {}

        self._coi_index = np.array(
            [self.index[c.cell] for c in scenario.cells_of_interest], dtype=np.int64
        )
        # feature indices fired at each robot cell (cells of interest may repeat a cell)
        self.coi_feats: List[List[int]] = [[] for _ in range(self.size)]
        for feat, idx in enumerate(self._coi_index):
            self.coi_feats[int(idx)].append(feat)

    # -- frame helpers -------------------------------------------------------

    def margin(self, r: int, k: int) -> int:
        return k - int(self.home[r])

    def frame_battery_terminal(self, r: int, k: int) -> bool:
        return self.margin(r, k) < 1

    def rew_vec(self, r: int, k: int) -> np.ndarray:
        """Arrival reward at robot index r with battery k, per target hypothesis."""
        term = self.frame_battery_terminal(r, k)
        key = (r, term)
        vec = self._rew_cache.get(key)
        if vec is None:
            vec = np.full(self.size, self._bonus[r], dtype=float)
            if term:
                vec += self._battery_weight
            vec[r] += self._target_weight
            vec.setflags(write=False)
            self._rew_cache[key] = vec
        return vec

    def phi_indices(self, r: int, y: int, k: int) -> np.ndarray:
        """Feature indicator vector for robot index r, target index y, battery k."""
        out = np.zeros(len(self.weights), dtype=float)
        hits = np.nonzero(self._coi_index == r)[0]
        out[hits] = 1.0
        if y == r:
            out[-2] = 1.0
        if self.frame_battery_terminal(r, k):
            out[-1] = 1.0
        return out

    # -- belief vector helpers -----------------------------------------------

    def dist_to_vec(self, dist: DiscreteDistribution) -> np.ndarray:
        vec = np.zeros(self.size, dtype=float)
        for item, p in zip(dist.items, dist.probs):
            vec[self.index[item]] += p
        return vec

    def vec_to_dist(self, vec: np.ndarray) -> DiscreteDistribution:
        return DiscreteDistribution(tuple(self.cells), tuple(float(v) for v in vec))

    def belief_vec(self, belief: SarBelief) -> np.ndarray:
        return self.dist_to_vec(belief.target_dist)

    def survive_update(self, vec: np.ndarray, r2: int, observation: Observation):
        """Condition ``vec`` on surviving arrival at r2 and seeing ``observation``.

        Returns (branch probability, normalized posterior vector).
        """
        if observation is None:
            w = vec * self.nd_like[r2]
            w[r2] = 0.0
        else:
            y = self.index[observation]
            w = np.zeros(self.size, dtype=float)
            if y in self._ring_sets[r2]:
                w[y] = vec[y] * self.scenario.detect_prob
        total = float(w.sum())
        if total <= 0.0:
            return 0.0, w
        return total, w / total

    # -- FactoredPomdpModel protocol ------------------------------------------

    @property
    def action_ids(self) -> Tuple[str, ...]:
        return ACTIONS

    def belief_parts(self, belief: SarBelief):
        return (belief.robot, belief.battery), belief.target_dist

    def make_belief(self, ctx, dist: DiscreteDistribution) -> SarBelief:
        robot, battery = ctx
        return SarBelief(robot, battery, dist)

    def advance(self, ctx, action: str):
        robot, battery = ctx
        return move_cell(robot, action, self.n), battery - 1

    def frame_terminal_cause(self, ctx) -> Optional[str]:
        robot, battery = ctx
        if battery - home_distance(robot, self.scenario.start) < 1:
            return BATTERY
        return None

    def state_terminal_cause(self, ctx, item) -> Optional[str]:
        robot, battery = ctx
        return _terminal_cause_parts(robot, item, battery, self.scenario)

    def observation_probs(self, ctx, item):
        robot, _ = ctx
        if within_detect_radius(robot, item, self.scenario):
            p = self.scenario.detect_prob
            out = []
            if p > 0.0:
                out.append((item, p))
            if p < 1.0:
                out.append((None, 1.0 - p))
            return out
        return [(None, 1.0)]

    def arrival_reward(self, ctx, item) -> float:
        robot, battery = ctx
        return float(self.rew_vec(self.index[robot], battery)[self.index[item]])


# -- scenario (de)serialization ------------------------------------------------


def scenario_to_doc(scenario: Scenario) -> dict:
    doc = {
        "format_version": SCENARIO_FORMAT_VERSION,
        "grid_size": scenario.grid_size,
        "start": list(scenario.start),
        "cells_of_interest": [
            {"cell": list(c.cell), "weight": c.weight} for c in scenario.cells_of_interest
        ],
        "target_weight": scenario.target_weight,
        "battery": scenario.battery,
        "detect_prob": scenario.detect_prob,
        "detect_metric": scenario.detect_metric,
        "discount": scenario.discount,
    }
    if scenario.name is not None:
        doc["name"] = scenario.name
    return doc


def _require(doc: dict, key: str, kind, field_path: str):
    if key not in doc:
        raise ScenarioValidationError(f"missing field {key}", field=field_path)
    value = doc[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioValidationError(f"{key} must be a number", field=field_path)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioValidationError(f"{key} must be an integer", field=field_path)
        return value
    return value


def _parse_cell(raw, field_path: str) -> Cell:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw)
    ):
        raise ScenarioValidationError("cells must be [x, y] integer pairs", field=field_path)
    return (raw[0], raw[1])


def scenario_from_doc(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioValidationError("scenario document must be an object", field="")
    version = doc.get("format_version", SCENARIO_FORMAT_VERSION)
    if version != SCENARIO_FORMAT_VERSION:
        raise ScenarioValidationError(
            f"unsupported format_version {version}", field="format_version"
        )
    grid_size = _require(doc, "grid_size", int, "grid_size")
    start = _parse_cell(_require(doc, "start", None, "start"), "start")
    raw_cois = doc.get("cells_of_interest", [])
    if not isinstance(raw_cois, list):
        raise ScenarioValidationError("cells_of_interest must be a list", field="cells_of_interest")
    cois = []
    for i, raw in enumerate(raw_cois):
        path = f"cells_of_interest.{i}"
        if not isinstance(raw, dict):
            raise ScenarioValidationError("entries must be objects", field=path)
        cell = _parse_cell(_require(raw, "cell", None, f"{path}.cell"), f"{path}.cell")
        weight = _require(raw, "weight", float, f"{path}.weight")
        cois.append(CellOfInterest(cell, weight))
    return Scenario(
        grid_size=grid_size,
        start=start,
        cells_of_interest=tuple(cois),
        target_weight=_require(doc, "target_weight", float, "target_weight"),
        battery=_require(doc, "battery", int, "battery"),
        detect_prob=float(doc.get("detect_prob", DEFAULT_DETECT_PROB)),
        detect_metric=doc.get("detect_metric", "chebyshev"),
        discount=float(doc.get("discount", DEFAULT_DISCOUNT)),
        name=doc.get("name"),
    )


def canonical_scenario_json(scenario: Scenario) -> str:
    return json.dumps(scenario_to_doc(scenario), sort_keys=True, separators=(",", ":"))


def scenario_id(scenario: Scenario) -> str:
    digest = hashlib.sha256(canonical_scenario_json(scenario).encode("utf-8")).hexdigest()
    return digest[:16]
