"""Generic machinery for factored finite POMDPs.

Beliefs here are a deterministic frame (everything fixed by the action
history, e.g. robot cell and battery) plus a discrete distribution over the
single hidden component. A model handle supplies the dynamics; see
:class:`FactoredPomdpModel` for the methods it must provide. The concrete
search-and-rescue model lives in :mod:`gridsar.domain`.

Value convention used throughout the package: the reward/feature of step t is
evaluated on the state reached after t actions and discounted by gamma**t.
Step 0 is the initial state itself, and a terminal step still contributes its
arrival reward before the episode stops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Optional, Protocol, Sequence, Tuple

from .errors import BudgetExceeded, InvalidDistribution, ZeroProbabilityObservation

PROB_TOL = 1e-9
ZERO_OBS_TOL = 1e-12

DEFAULT_NODE_BUDGET = 10_000_000


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability distribution over hashable items, in a fixed item order."""

    items: Tuple[Hashable, ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        if len(self.items) != len(self.probs):
            raise InvalidDistribution("items and probs must have equal length")
        if len(set(self.items)) != len(self.items):
            raise InvalidDistribution("support items must be unique")
        for p in self.probs:
            if p < -PROB_TOL:
                raise InvalidDistribution(f"negative probability {p}")
        total = sum(self.probs)
        if abs(total - 1.0) > PROB_TOL:
            raise InvalidDistribution(f"probabilities sum to {total}, expected 1")

    @classmethod
    def from_weights(cls, items: Sequence[Hashable], weights: Sequence[float]) -> "DiscreteDistribution":
        total = sum(weights)
        if total <= 0:
            raise InvalidDistribution("weights must have positive total mass")
        return cls(tuple(items), tuple(w / total for w in weights))

    @classmethod
    def uniform(cls, items: Sequence[Hashable]) -> "DiscreteDistribution":
        n = len(items)
        return cls(tuple(items), tuple(1.0 / n for _ in range(n)))

    @classmethod
    def point_mass(cls, item: Hashable) -> "DiscreteDistribution":
        return cls((item,), (1.0,))

    def prob(self, item: Hashable) -> float:
        try:
            return self.probs[self.items.index(item)]
        except ValueError:
            return 0.0

    def support(self) -> Tuple[Tuple[Hashable, float], ...]:
        """Pairs with nonzero probability, in item order."""
        return tuple((i, p) for i, p in zip(self.items, self.probs) if p > 0.0)

    def to_dict(self) -> dict:
        return dict(zip(self.items, self.probs))


@dataclass(frozen=True)
class SuccessorBranch:
    """One observation branch of a (belief, action) pair."""

    observation: Hashable
    probability: float
    belief: object


@dataclass(frozen=True)
class SuccessorSet:
    """All observation branches plus the probability mass that terminated.

    For a valid model, branch probabilities and terminated mass partition 1.
    """

    branches: Tuple[SuccessorBranch, ...]
    terminated: Tuple[Tuple[str, float], ...]

    @property
    def terminated_mass(self) -> float:
        return sum(m for _, m in self.terminated)

    def terminated_by_cause(self) -> dict:
        return dict(self.terminated)


class FactoredPomdpModel(Protocol):
    """What a domain must provide to use the generic belief machinery."""

    discount: float

    @property
    def action_ids(self) -> Sequence[Hashable]: ...

    def belief_parts(self, belief) -> Tuple[Hashable, DiscreteDistribution]: ...

    def make_belief(self, ctx, dist: DiscreteDistribution): ...

    def advance(self, ctx, action) -> Hashable:
        """Deterministic frame dynamics (robot move, battery decrement)."""
        ...

    def frame_terminal_cause(self, ctx) -> Optional[str]:
        """Terminal cause that applies to every hypothesis, or None."""
        ...

    def state_terminal_cause(self, ctx, item) -> Optional[str]: ...

    def observation_probs(self, ctx, item) -> Iterable[Tuple[Hashable, float]]:
        """Observation distribution at a surviving state."""
        ...

    def arrival_reward(self, ctx, item) -> float: ...


def _successor_weights(belief, action, model):
    """Shared core of enumerate_successors and belief_update.

    Returns (ctx2, obs order, {obs: {item: weight}}, {cause: mass}).
    """
    ctx, dist = model.belief_parts(belief)
    ctx2 = model.advance(ctx, action)
    weights: dict = {}
    obs_order: list = []
    terminated: dict = {}
    for item, p in zip(dist.items, dist.probs):
        if p <= 0.0:
            continue
        cause = model.state_terminal_cause(ctx2, item)
        if cause is not None:
            terminated[cause] = terminated.get(cause, 0.0) + p
            continue
        for obs, po in model.observation_probs(ctx2, item):
            if po <= 0.0:
                continue
            if obs not in weights:
                weights[obs] = {}
                obs_order.append(obs)
            weights[obs][item] = weights[obs].get(item, 0.0) + p * po
    return ctx2, obs_order, weights, terminated


def enumerate_successors(belief, action, model) -> SuccessorSet:
    """All observation branches of taking ``action`` from ``belief``.

    Branch beliefs are survival-conditioned and Bayes-updated; terminated mass
    is reported per cause. Branch probabilities plus terminated mass sum to 1.
    """
    ctx, dist = model.belief_parts(belief)
    ctx2, obs_order, weights, terminated = _successor_weights(belief, action, model)
    branches = []
    for obs in obs_order:
        wmap = weights[obs]
        total = sum(wmap.get(item, 0.0) for item in dist.items)
        if total <= 0.0:
            continue
        probs = tuple(wmap.get(item, 0.0) / total for item in dist.items)
        branch_belief = model.make_belief(ctx2, DiscreteDistribution(dist.items, probs))
        branches.append(SuccessorBranch(obs, total, branch_belief))
    return SuccessorSet(tuple(branches), tuple(sorted(terminated.items())))


def belief_update(belief, action, observation, model):
    """Bayes posterior after taking ``action`` and observing ``observation``.

    Equals the normalized ``observation`` branch of enumerate_successors
    exactly. Raises ZeroProbabilityObservation when the observation has
    (near-)zero likelihood under the belief and action.
    """
    succ = enumerate_successors(belief, action, model)
    for branch in succ.branches:
        if branch.observation == observation and branch.probability >= ZERO_OBS_TOL:
            return branch.belief
    raise ZeroProbabilityObservation(
        f"observation {observation!r} has zero likelihood under this belief/action"
    )


def expectimax_value(belief, model, horizon: int, max_nodes: int = DEFAULT_NODE_BUDGET) -> float:
    """Exact optimal value of ``belief`` over at most ``horizon`` actions.

    Full (action x observation) tree enumeration with memoization on repeated
    beliefs; deterministic. ``horizon`` counts actions, so the arrival rewards
    of steps 0..horizon are included. Raises BudgetExceeded past ``max_nodes``
    (belief, action) expansions.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    ctx, dist = model.belief_parts(belief)
    now = sum(p * model.arrival_reward(ctx, item) for item, p in zip(dist.items, dist.probs))
    if horizon == 0 or model.frame_terminal_cause(ctx) is not None:
        return now
    alive = [
        (item, p)
        for item, p in zip(dist.items, dist.probs)
        if p > 0.0 and model.state_terminal_cause(ctx, item) is None
    ]
    mass = sum(p for _, p in alive)
    if mass <= 0.0:
        return now
    probs = tuple((dict(alive).get(item, 0.0)) / mass for item in dist.items)
    alive_belief = model.make_belief(ctx, DiscreteDistribution(dist.items, probs))

    memo: dict = {}
    counter = [0]

    def continuation(b, h: int) -> float:
        """Best expected sum of the next ``h`` arrival rewards from alive belief b."""
        bctx, bdist = model.belief_parts(b)
        key = (bctx, bdist.probs, h)
        if key in memo:
            return memo[key]
        best = None
        for action in model.action_ids:
            counter[0] += 1
            if counter[0] > max_nodes:
                raise BudgetExceeded(f"expectimax exceeded {max_nodes} node expansions")
            ctx2 = model.advance(bctx, action)
            value = sum(
                p * model.arrival_reward(ctx2, item)
                for item, p in zip(bdist.items, bdist.probs)
                if p > 0.0
            )
            if h > 1:
                succ = enumerate_successors(b, action, model)
                value += model.discount * sum(
                    br.probability * continuation(br.belief, h - 1) for br in succ.branches
                )
            if best is None or value > best:
                best = value
        memo[key] = best
        return best

    return now + model.discount * mass * continuation(alive_belief, horizon)
