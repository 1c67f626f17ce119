"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 solve budget exceeded.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from .cases import CASE_IDS, run_case_study
from .counterfactual import UserPath, feasibility_truncate, path_to_actions
from .domain import (
    Scenario,
    feature_labels,
    feature_weights,
    initial_belief,
    scenario_from_doc,
)
from .errors import PathError, ScenarioValidationError
from .explain import contrast, render_explanation
from .features import feature_expectation_closed, feature_expectation_open
from .simulate import simulate
from .solver import SolveBudget, save_policy, solve

EXIT_VALIDATION = 2
EXIT_BUDGET = 3


def _load_scenario(path: str) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        click.echo(f"error: cannot read scenario file: {err}", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        return scenario_from_doc(doc)
    except ScenarioValidationError as err:
        where = f" (field {err.field})" if err.field else ""
        click.echo(f"error: invalid scenario{where}: {err}", err=True)
        sys.exit(EXIT_VALIDATION)


def _parse_path(raw: str):
    cells = []
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(",")
        if len(bits) != 2:
            click.echo(f"error: malformed path cell {part!r}", err=True)
            sys.exit(EXIT_VALIDATION)
        try:
            cells.append((int(bits[0]), int(bits[1])))
        except ValueError:
            click.echo(f"error: malformed path cell {part!r}", err=True)
            sys.exit(EXIT_VALIDATION)
    return UserPath(tuple(cells))


def _parse_cell(raw: Optional[str]):
    if raw is None:
        return None
    bits = raw.split(",")
    if len(bits) != 2:
        click.echo(f"error: malformed cell {raw!r}", err=True)
        sys.exit(EXIT_VALIDATION)
    return (int(bits[0]), int(bits[1]))


def _print_table(labels, rows):
    width = max(len(label) for label in labels) + 2
    header = "policy".ljust(12) + "".join(label.ljust(width) for label in labels)
    click.echo(header)
    for name, values in rows:
        line = name.ljust(12) + "".join(f"{v:.3f}".ljust(width) for v in values)
        click.echo(line)


@click.group()
def main():
    """Grid search-and-rescue POMDP workbench."""


@main.command("solve")
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--epsilon", type=float, default=None, help="Target value gap at the initial belief.")
@click.option("--max-explorations", type=int, default=SolveBudget.max_explorations)
@click.option("--max-seconds", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the policy artifact here.")
def solve_cmd(scenario_file, epsilon, max_explorations, max_seconds, out):
    """Solve a scenario and report the certified value bounds."""
    scenario = _load_scenario(scenario_file)
    budget = SolveBudget(max_explorations=max_explorations, max_seconds=max_seconds)
    policy = solve(scenario, epsilon=epsilon, budget=budget)
    click.echo(f"value lower bound: {policy.value_lower:.6f}")
    click.echo(f"value upper bound: {policy.value_upper:.6f}")
    click.echo(f"gap: {policy.gap:.6f} (epsilon {policy.epsilon})")
    click.echo(f"explorations: {policy.iterations}")
    if out:
        save_policy(policy, out)
        click.echo(f"policy written to {out}")
    if not policy.converged:
        click.echo("warning: budget exceeded before reaching the requested gap", err=True)
        sys.exit(EXIT_BUDGET)


@main.command("rollout")
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0)
@click.option("--target", type=str, default=None, help="True target cell as 'x,y' (sampled if omitted).")
@click.option("--epsilon", type=float, default=None)
def rollout_cmd(scenario_file, seed, target, epsilon):
    """Simulate the solved policy once and print the trace."""
    scenario = _load_scenario(scenario_file)
    policy = solve(scenario, epsilon=epsilon)
    trace = simulate(policy, scenario, seed=seed, true_target=_parse_cell(target))
    click.echo(f"true target: {trace.true_target}  seed: {trace.seed}")
    for step in trace.steps:
        belief_note = ""
        if step.observation is not None:
            belief_note = f"  saw target at {step.observation}"
        action = step.action if step.action is not None else "-"
        click.echo(
            f"t={step.t:>3}  robot {step.state.robot}  battery {step.state.battery:>3}  "
            f"action {action:<6} reward {step.reward:.3f}{belief_note}"
        )
    click.echo(f"terminal cause: {trace.terminal_cause}")
    click.echo(f"discounted return: {trace.discounted_return:.3f}")


@main.command("contrast")
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--path", "path_str", required=True, help="Semicolon-separated cells, e.g. '1,1;1,2;2,2'.")
@click.option("--epsilon", type=float, default=None)
def contrast_cmd(scenario_file, path_str, epsilon):
    """Contrast the solved policy against a user path and explain the gap."""
    scenario = _load_scenario(scenario_file)
    try:
        actions = path_to_actions(_parse_path(path_str), scenario)
    except PathError as err:
        click.echo(f"error: invalid path: {err}", err=True)
        sys.exit(EXIT_VALIDATION)
    executed, report = feasibility_truncate(actions, scenario)
    if report.truncation_cause is not None:
        click.echo(
            f"path truncated after {report.executed_length} of {report.original_length} "
            f"actions at {report.truncated_at_cell} (battery)"
        )
    policy = solve(scenario, epsilon=epsilon)
    b0 = initial_belief(scenario)
    mu_user = feature_expectation_open(executed, b0, scenario)
    mu_optimal = feature_expectation_closed(policy, b0)
    alpha = feature_weights(scenario)
    labels = feature_labels(scenario)
    rep = contrast(mu_optimal, mu_user, alpha, labels, scenario=scenario, feasibility=report)
    _print_table(labels, [("optimal", rep.mu_optimal), ("user", rep.mu_user)])
    click.echo(f"value optimal: {rep.value_optimal:.3f}")
    click.echo(f"value user:    {rep.value_user:.3f}")
    click.echo(render_explanation(rep).text)


@main.command("case-study")
@click.argument("case_id", type=click.IntRange(min(CASE_IDS), max(CASE_IDS)))
@click.option("--seed", type=int, default=0)
@click.option("--epsilon", type=float, default=0.5)
def case_study_cmd(case_id, seed, epsilon):
    """Run a bundled case study end to end."""
    bundle = run_case_study(case_id, epsilon=epsilon, seed=seed)
    table = bundle.table()
    click.echo(f"scenario: {bundle.scenario.name}")
    click.echo(
        f"solve: lower {bundle.policy.value_lower:.3f}  upper {bundle.policy.value_upper:.3f}  "
        f"gap {bundle.policy.gap:.4f}"
    )
    if bundle.feasibility.truncation_cause is not None:
        click.echo(
            f"user path truncated after {bundle.feasibility.executed_length} of "
            f"{bundle.feasibility.original_length} actions at {bundle.feasibility.truncated_at_cell}"
        )
    _print_table(table["labels"], [("optimal", table["optimal"]), ("user", table["user"])])
    click.echo(f"value optimal: {table['value_optimal']:.3f}")
    click.echo(f"value user:    {table['value_user']:.3f}")
    click.echo(
        f"rollout: {len(bundle.trace.steps) - 1} actions, terminal {bundle.trace.terminal_cause}, "
        f"return {bundle.trace.discounted_return:.3f}"
    )
    click.echo(bundle.explanation.text)


@main.command("serve")
@click.option("--port", type=int, default=8000)
@click.option("--host", type=str, default="127.0.0.1")
@click.option("--data-dir", type=click.Path(file_okay=False), default="./gridsar-data")
@click.option(
    "--frontend",
    type=click.Path(file_okay=False),
    default=None,
    help="Directory with the built browser UI to serve under /ui.",
)
def serve_cmd(port, host, data_dir, frontend):
    """Run the HTTP API (and UI, if built)."""
    import uvicorn

    from .service import create_app

    if frontend is None:
        candidate = Path.cwd() / "frontend"
        frontend = candidate if candidate.exists() else None
    app = create_app(data_dir, frontend_dir=frontend)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
