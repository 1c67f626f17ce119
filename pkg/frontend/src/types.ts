/** Wire formats of the gridsar HTTP API. */

export type Cell = [number, number];

export interface CellOfInterestDoc {
  cell: Cell;
  weight: number;
}

export interface ScenarioDoc {
  format_version?: number;
  grid_size: number;
  start: Cell;
  cells_of_interest: CellOfInterestDoc[];
  target_weight: number;
  battery: number;
  detect_prob?: number;
  detect_metric?: string;
  discount?: number;
  name?: string;
}

export interface FeasibilityReportDoc {
  original_length: number;
  executed_length: number;
  truncation_cause: string | null;
  truncated_at_cell: Cell;
  unreached_cells: Cell[];
}

export interface BeliefDoc {
  robot: Cell;
  battery: number;
  probs: number[];
}

export interface TraceStepDoc {
  t: number;
  state: { robot: Cell; target: Cell; battery: number; terminal_cause: string | null };
  action: string | null;
  observation: Cell | null;
  reward: number;
  discounted_reward: number;
  belief: BeliefDoc | null;
}

export interface TraceDoc {
  format_version: number;
  steps: TraceStepDoc[];
  terminal_cause: string | null;
  discounted_return: number;
  seed: number;
  true_target: Cell;
}

export interface RatioFactDoc {
  feature: number;
  ratio: number | null;
  bucket: string;
}

export interface ContrastReportDoc {
  labels: string[];
  mu_optimal: number[];
  mu_user: number[];
  alpha: number[];
  contributions_optimal: number[];
  contributions_user: number[];
  value_optimal: number;
  value_user: number;
  dominant_feature: number;
  ratio_facts: RatioFactDoc[];
  infeasible_features: number[];
  feasibility: FeasibilityReportDoc | null;
}

export interface ExplanationDoc {
  sentences: string[];
  template_ids: string[];
  text: string;
}

export interface SolveResponse {
  policy_id: string;
  value_lower: number;
  value_upper: number;
  gap: number;
  epsilon: number;
  converged: boolean;
  iterations: number;
}

export interface CounterfactualResponse {
  scenario_id: string;
  policy_id: string;
  path: Cell[];
  actions: string[];
  executed_actions: string[];
  feasibility_report: FeasibilityReportDoc;
  mu_user: number[];
  mu_optimal: number[];
  value_user: number;
  value_optimal: number;
  contrast_report: ContrastReportDoc;
  explanation_text: ExplanationDoc;
  labels: string[];
}

export interface ScenarioEnvelope {
  scenario_id: string;
  scenario: ScenarioDoc;
  history: Array<Record<string, unknown>>;
}
