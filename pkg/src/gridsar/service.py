"""HTTP API and persistence for the interactive workflow.

Scenarios, solved policies, and per-scenario session histories are stored as
JSON documents under a data directory, keyed by the scenario content hash.
Sessions are append-only; writes to one scenario serialize behind a
per-scenario lock while reads stay lock-free.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Dict, Optional, Tuple

from fastapi import FastAPI, HTTPException, Request
from pydantic import BaseModel, Field

from .counterfactual import UserPath, feasibility_truncate, path_to_actions
from .domain import (
    Scenario,
    canonical_scenario_json,
    feature_labels,
    feature_weights,
    initial_belief,
    scenario_from_doc,
    scenario_id,
    scenario_to_doc,
)
from .errors import PathError, ScenarioValidationError
from .explain import contrast, render_explanation
from .features import (
    FeatureExpectation,
    feature_expectation_closed,
    feature_expectation_open,
    value_from_features,
)
from .simulate import simulate, trace_to_doc
from .solver import AlphaPolicy, SolveBudget, default_epsilon, load_policy, save_policy, solve


class SolveRequest(BaseModel):
    epsilon: Optional[float] = Field(default=None, gt=0)
    budget: Optional[dict] = None


class RolloutRequest(BaseModel):
    seed: int = 0
    true_target: Optional[Tuple[int, int]] = None


class CounterfactualRequest(BaseModel):
    path: list
    epsilon: Optional[float] = Field(default=None, gt=0)


def _budget_from_doc(doc: Optional[dict]) -> SolveBudget:
    if not doc:
        return SolveBudget()
    return SolveBudget(
        max_explorations=int(doc.get("max_explorations", SolveBudget.max_explorations)),
        max_seconds=doc.get("max_seconds"),
    )


class WorkbenchStore:
    """Filesystem-backed store for scenarios, policies, and session history."""

    def __init__(self, data_dir):
        self.root = Path(data_dir)
        for sub in ("scenarios", "policies", "sessions"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._locks: Dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._policies: Dict[str, AlphaPolicy] = {}
        self._mu_optimal: Dict[str, FeatureExpectation] = {}

    def lock_for(self, sid: str) -> threading.Lock:
        with self._locks_guard:
            if sid not in self._locks:
                self._locks[sid] = threading.Lock()
            return self._locks[sid]

    # -- scenarios ---------------------------------------------------------

    def save_scenario(self, scenario: Scenario) -> str:
        sid = scenario_id(scenario)
        path = self.root / "scenarios" / f"{sid}.json"
        if not path.exists():
            path.write_text(canonical_scenario_json(scenario), encoding="utf-8")
        return sid

    def load_scenario(self, sid: str) -> Scenario:
        path = self.root / "scenarios" / f"{sid}.json"
        if not path.exists():
            raise KeyError(sid)
        return scenario_from_doc(json.loads(path.read_text(encoding="utf-8")))

    # -- policies ----------------------------------------------------------

    def policy_key(self, sid: str, epsilon: float) -> str:
        return f"{sid}-eps{epsilon!r}"

    def get_policy(self, scenario: Scenario, epsilon: Optional[float], budget: SolveBudget) -> Tuple[str, AlphaPolicy]:
        sid = scenario_id(scenario)
        eps = epsilon if epsilon is not None else default_epsilon(scenario)
        key = self.policy_key(sid, eps)
        policy = self._policies.get(key)
        if policy is None:
            path = self.root / "policies" / f"{key}.json"
            if path.exists():
                policy = load_policy(path)
            else:
                policy = solve(scenario, epsilon=eps, budget=budget)
                save_policy(policy, path)
            self._policies[key] = policy
        return key, policy

    def mu_optimal(self, key: str, policy: AlphaPolicy) -> FeatureExpectation:
        mu = self._mu_optimal.get(key)
        if mu is None:
            mu = feature_expectation_closed(policy, initial_belief(policy.scenario))
            self._mu_optimal[key] = mu
        return mu

    # -- sessions ----------------------------------------------------------

    def _session_path(self, sid: str) -> Path:
        return self.root / "sessions" / f"{sid}.json"

    def append_session(self, sid: str, entry: dict) -> None:
        path = self._session_path(sid)
        history = []
        if path.exists():
            history = json.loads(path.read_text(encoding="utf-8"))
        history.append(entry)
        path.write_text(json.dumps(history), encoding="utf-8")

    def session_history(self, sid: str) -> list:
        path = self._session_path(sid)
        if not path.exists():
            return []
        return json.loads(path.read_text(encoding="utf-8"))


def _validation_error(field: Optional[str], message: str) -> HTTPException:
    loc = ["body"] + ([p for p in field.split(".") if p] if field else [])
    return HTTPException(status_code=422, detail=[{"loc": loc, "msg": message}])


def create_app(data_dir, frontend_dir=None) -> FastAPI:
    app = FastAPI(title="gridsar", version="0.1.0")
    store = WorkbenchStore(data_dir)
    app.state.store = store

    def _load_or_404(sid: str) -> Scenario:
        try:
            return store.load_scenario(sid)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown scenario {sid}")

    @app.post("/scenarios")
    async def post_scenario(request: Request):
        try:
            doc = await request.json()
        except json.JSONDecodeError:
            raise _validation_error(None, "body must be a JSON object")
        try:
            scenario = scenario_from_doc(doc)
        except ScenarioValidationError as err:
            raise _validation_error(err.field, str(err))
        sid = store.save_scenario(scenario)
        return {"scenario_id": sid}

    @app.get("/scenarios/{sid}")
    def get_scenario(sid: str):
        scenario = _load_or_404(sid)
        return {
            "scenario_id": sid,
            "scenario": scenario_to_doc(scenario),
            "history": store.session_history(sid),
        }

    @app.post("/scenarios/{sid}/solve")
    def post_solve(sid: str, body: SolveRequest):
        scenario = _load_or_404(sid)
        budget = _budget_from_doc(body.budget)
        with store.lock_for(sid):
            key, policy = store.get_policy(scenario, body.epsilon, budget)
        return {
            "policy_id": key,
            "value_lower": policy.value_lower,
            "value_upper": policy.value_upper,
            "gap": policy.gap,
            "epsilon": policy.epsilon,
            "converged": policy.converged,
            "iterations": policy.iterations,
        }

    @app.post("/scenarios/{sid}/rollout")
    def post_rollout(sid: str, body: RolloutRequest):
        scenario = _load_or_404(sid)
        true_target = tuple(body.true_target) if body.true_target is not None else None
        if true_target is not None:
            n = scenario.grid_size
            if not (1 <= true_target[0] <= n and 1 <= true_target[1] <= n):
                raise _validation_error("true_target", f"cell {true_target} out of bounds")
        with store.lock_for(sid):
            _, policy = store.get_policy(scenario, None, SolveBudget())
            trace = simulate(policy, scenario, seed=body.seed, true_target=true_target)
            doc = trace_to_doc(trace, scenario)
            store.append_session(sid, {"type": "rollout", "seed": body.seed, "trace": doc})
        return doc

    @app.post("/scenarios/{sid}/counterfactual")
    def post_counterfactual(sid: str, body: CounterfactualRequest):
        scenario = _load_or_404(sid)
        try:
            cells = tuple((int(c[0]), int(c[1])) for c in body.path)
        except (TypeError, ValueError, IndexError):
            raise _validation_error("path", "path must be a list of [x, y] integer pairs")
        try:
            actions = path_to_actions(UserPath(cells), scenario)
        except PathError as err:
            field = "path" if err.index is None else f"path.{err.index}"
            raise _validation_error(field, str(err))
        executed, report = feasibility_truncate(actions, scenario)
        b0 = initial_belief(scenario)
        mu_user = feature_expectation_open(executed, b0, scenario)
        with store.lock_for(sid):
            key, policy = store.get_policy(scenario, body.epsilon, SolveBudget())
            mu_optimal = store.mu_optimal(key, policy)
            alpha = feature_weights(scenario)
            contrast_report = contrast(
                mu_optimal,
                mu_user,
                alpha,
                feature_labels(scenario),
                scenario=scenario,
                feasibility=report,
            )
            explanation = render_explanation(contrast_report)
            response = {
                "scenario_id": sid,
                "policy_id": key,
                "path": [list(c) for c in cells],
                "actions": list(actions),
                "executed_actions": list(executed),
                "feasibility_report": report.to_doc(),
                "mu_user": [float(v) for v in mu_user.mu],
                "mu_optimal": [float(v) for v in mu_optimal.mu],
                "value_user": value_from_features(alpha, mu_user),
                "value_optimal": value_from_features(alpha, mu_optimal),
                "contrast_report": contrast_report.to_doc(),
                "explanation_text": explanation.to_doc(),
                "labels": feature_labels(scenario),
            }
            store.append_session(sid, {"type": "counterfactual", "response": response})
        return response

    if frontend_dir is not None and Path(frontend_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
