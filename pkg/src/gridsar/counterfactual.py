"""User-drawn counterfactual paths: translation to actions and feasibility.

A drawn path is an ordered list of cells starting at the scenario start cell,
each consecutive pair Manhattan-adjacent. It translates to one cardinal
action per step and is then truncated to the battery-feasible prefix: the
step that lands on a battery-terminal state is still executed (its features
count), everything after it is cut.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .domain import ACTION_DELTA, BATTERY, Cell, Scenario, home_distance, move_cell
from .errors import NonAdjacentStep, PathError, StayNotSupported, WrongStartCell


@dataclass(frozen=True)
class UserPath:
    cells: Tuple[Cell, ...]


@dataclass(frozen=True)
class FeasibilityReport:
    original_length: int
    executed_length: int
    truncation_cause: Optional[str]  # None or "battery"
    truncated_at_cell: Cell
    unreached_cells: Tuple[Cell, ...]

    def to_doc(self) -> dict:
        return {
            "original_length": self.original_length,
            "executed_length": self.executed_length,
            "truncation_cause": self.truncation_cause,
            "truncated_at_cell": list(self.truncated_at_cell),
            "unreached_cells": [list(c) for c in self.unreached_cells],
        }


_DELTA_ACTION = {delta: action for action, delta in ACTION_DELTA.items()}


def path_to_actions(path: UserPath, scenario: Scenario) -> Tuple[str, ...]:
    """One cardinal action per consecutive cell pair of the path."""
    cells = path.cells
    if not cells:
        raise PathError("path must contain at least the start cell", index=0)
    n = scenario.grid_size
    for i, cell in enumerate(cells):
        if not (1 <= cell[0] <= n and 1 <= cell[1] <= n):
            raise PathError(f"cell {cell} out of bounds", index=i)
    if cells[0] != scenario.start:
        raise WrongStartCell(
            f"path starts at {cells[0]}, scenario starts at {scenario.start}", index=0
        )
    actions: List[str] = []
    for i in range(1, len(cells)):
        prev, cur = cells[i - 1], cells[i]
        delta = (cur[0] - prev[0], cur[1] - prev[1])
        if delta == (0, 0):
            raise StayNotSupported(f"cell {cur} repeats at step {i}", index=i)
        action = _DELTA_ACTION.get(delta)
        if action is None:
            raise NonAdjacentStep(f"cells {prev} -> {cur} are not adjacent", index=i)
        actions.append(action)
    return tuple(actions)


def replay_cells(actions: Sequence[str], scenario: Scenario) -> List[Cell]:
    """Cells visited by an action sequence from the scenario start (walls clamp)."""
    cells = [scenario.start]
    for action in actions:
        cells.append(move_cell(cells[-1], action, scenario.grid_size))
    return cells


def feasibility_truncate(
    actions: Sequence[str], scenario: Scenario
) -> Tuple[Tuple[str, ...], FeasibilityReport]:
    """Cut an action sequence to its battery-feasible prefix.

    The robot/battery dynamics are simulated ignoring the target. A step that
    lands on a battery-terminal state is kept as the final step (the episode
    really does execute it and its features count); all later steps are cut.
    """
    robot = scenario.start
    battery = scenario.battery
    executed: List[str] = []
    for action in actions:
        if battery - home_distance(robot, scenario.start) < 1:
            break
        robot = move_cell(robot, action, scenario.grid_size)
        battery -= 1
        executed.append(action)
        if battery - home_distance(robot, scenario.start) < 1:
            break
    full_cells = replay_cells(actions, scenario)
    unreached: List[Cell] = []
    for cell in full_cells[len(executed) + 1 :]:
        if cell not in unreached:
            unreached.append(cell)
    report = FeasibilityReport(
        original_length=len(actions),
        executed_length=len(executed),
        truncation_cause=None if len(executed) == len(actions) else BATTERY,
        truncated_at_cell=robot,
        unreached_cells=tuple(unreached),
    )
    return tuple(executed), report
