/** View models: plain data derived from API payloads, no recomputation.
 * Every number shown in the UI is copied verbatim from the server response. */

import type {
  Cell,
  ContrastReportDoc,
  CounterfactualResponse,
  FeasibilityReportDoc,
  ScenarioDoc,
  TraceDoc,
} from "./types.js";

export interface GridViewModel {
  gridSize: number;
  start: Cell;
  cellsOfInterest: { cell: Cell; weight: number }[];
  /** revealed only after a rollout */
  target: Cell | null;
  optimalPath: Cell[];
  userExecuted: Cell[];
  /** starts at the truncation cell so the gray polyline joins the black one */
  userTruncated: Cell[];
}

export function gridViewModel(
  scenario: ScenarioDoc,
  trace: TraceDoc | null,
  drawnPath: readonly Cell[],
  feasibility: FeasibilityReportDoc | null,
): GridViewModel {
  const optimalPath = trace ? trace.steps.map((s) => s.state.robot) : [];
  let executed: Cell[] = [...drawnPath];
  let truncated: Cell[] = [];
  if (feasibility && feasibility.truncation_cause !== null) {
    const keep = feasibility.executed_length + 1; // cells, not actions
    executed = drawnPath.slice(0, keep);
    truncated = drawnPath.slice(keep - 1);
  }
  return {
    gridSize: scenario.grid_size,
    start: scenario.start,
    cellsOfInterest: scenario.cells_of_interest.map((c) => ({ cell: c.cell, weight: c.weight })),
    target: trace ? trace.true_target : null,
    optimalPath,
    userExecuted: executed,
    userTruncated: truncated,
  };
}

export interface ContrastRow {
  label: string;
  muOptimal: number;
  muUser: number;
  contributionOptimal: number;
  contributionUser: number;
  bucket: string;
}

export interface ContrastViewModel {
  rows: ContrastRow[];
  valueOptimal: number;
  valueUser: number;
  dominantFeature: number;
  sentences: string[];
}

export function contrastViewModel(response: CounterfactualResponse): ContrastViewModel {
  const report: ContrastReportDoc = response.contrast_report;
  const rows = report.labels.map((label, i) => ({
    label,
    muOptimal: report.mu_optimal[i],
    muUser: report.mu_user[i],
    contributionOptimal: report.contributions_optimal[i],
    contributionUser: report.contributions_user[i],
    bucket: report.ratio_facts[i].bucket,
  }));
  return {
    rows,
    valueOptimal: report.value_optimal,
    valueUser: report.value_user,
    dominantFeature: report.dominant_feature,
    sentences: response.explanation_text.sentences,
  };
}
