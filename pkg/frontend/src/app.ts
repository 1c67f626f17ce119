/** Browser wiring: load a scenario, roll the policy out, draw counterfactual
 * paths on the grid, and render the returned contrast. All numbers shown come
 * straight from API payloads. */

import { ApiClient, ApiError } from "./api.js";
import { cellFromPointer, PathBuilder } from "./path.js";
import { CELL_PX, ORIGIN_PX, renderBars, renderExplanation, renderGridSvg } from "./render.js";
import type { Cell, CounterfactualResponse, ScenarioDoc, TraceDoc } from "./types.js";
import { contrastViewModel, gridViewModel } from "./viewmodel.js";

const CASE_1: ScenarioDoc = {
  grid_size: 5,
  start: [1, 1],
  cells_of_interest: [{ cell: [1, 5], weight: 3.0 }],
  target_weight: 500.0,
  battery: 25,
  name: "case-study-1",
};

interface AppState {
  scenarioId: string | null;
  scenario: ScenarioDoc;
  trace: TraceDoc | null;
  lastResponse: CounterfactualResponse | null;
  history: CounterfactualResponse[];
  builder: PathBuilder | null;
  drawing: boolean;
}

const state: AppState = {
  scenarioId: null,
  scenario: CASE_1,
  trace: null,
  lastResponse: null,
  history: [],
  builder: null,
  drawing: false,
};

const api = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function showError(message: string | null): void {
  const banner = el<HTMLDivElement>("error-banner");
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

function drawnPath(): readonly Cell[] {
  return state.builder ? state.builder.cells : [];
}

function redrawGrid(): void {
  const feasibility = state.lastResponse ? state.lastResponse.feasibility_report : null;
  const vm = gridViewModel(state.scenario, state.trace, drawnPath(), feasibility);
  el<HTMLDivElement>("grid-host").innerHTML = renderGridSvg(vm);
  el<HTMLButtonElement>("submit-path").disabled = !(state.builder && state.builder.canSubmit);
}

function redrawContrast(): void {
  const host = el<HTMLDivElement>("contrast-host");
  if (!state.lastResponse) {
    host.innerHTML = "<p class='hint'>Draw a path and submit it to see the comparison.</p>";
    return;
  }
  const vm = contrastViewModel(state.lastResponse);
  host.innerHTML = renderBars(vm) + renderExplanation(vm.sentences);
}

function redrawHistory(): void {
  const host = el<HTMLUListElement>("history-list");
  host.innerHTML = state.history
    .map((entry, i) => {
      const cells = entry.path.map((c) => `[${c[0]},${c[1]}]`).join(" ");
      return `<li>#${i + 1} value ${entry.value_user} vs ${entry.value_optimal} &mdash; ${cells}</li>`;
    })
    .join("");
}

async function loadScenario(): Promise<void> {
  try {
    state.scenario = JSON.parse(el<HTMLTextAreaElement>("scenario-json").value) as ScenarioDoc;
  } catch (err) {
    showError(`scenario JSON does not parse: ${err}`);
    return;
  }
  try {
    const { scenario_id } = await api.postScenario(state.scenario);
    state.scenarioId = scenario_id;
    state.trace = null;
    state.lastResponse = null;
    state.history = [];
    state.builder = new PathBuilder(state.scenario.grid_size, state.scenario.start);
    showError(null);
    el<HTMLSpanElement>("scenario-id").textContent = scenario_id;
    redrawGrid();
    redrawContrast();
    redrawHistory();
  } catch (err) {
    showError(err instanceof ApiError ? err.message : String(err));
  }
}

async function rollout(): Promise<void> {
  if (!state.scenarioId) {
    return;
  }
  const seed = Number(el<HTMLInputElement>("seed").value) || 0;
  try {
    state.trace = await api.rollout(state.scenarioId, seed);
    showError(null);
    redrawGrid();
  } catch (err) {
    showError(err instanceof ApiError ? err.message : String(err));
  }
}

async function submitPath(): Promise<void> {
  if (!state.scenarioId || !state.builder || !state.builder.canSubmit) {
    return;
  }
  try {
    const response = await api.counterfactual(state.scenarioId, state.builder.toWire());
    state.lastResponse = response;
    state.history.push(response);
    showError(null);
    redrawGrid();
    redrawContrast();
    redrawHistory();
  } catch (err) {
    // history stays intact; surface the message without blocking further edits
    showError(err instanceof ApiError ? err.message : String(err));
  }
}

function pointerCell(event: PointerEvent): Cell | null {
  const svg = el<HTMLDivElement>("grid-host").querySelector("svg");
  if (!svg) {
    return null;
  }
  const rect = svg.getBoundingClientRect();
  return cellFromPointer(event.clientX - rect.left, event.clientY - rect.top, {
    gridSize: state.scenario.grid_size,
    cellPx: CELL_PX,
    originPx: ORIGIN_PX,
  });
}

function wirePointerEvents(): void {
  const host = el<HTMLDivElement>("grid-host");
  host.addEventListener("pointerdown", (event) => {
    if (!state.builder) {
      return;
    }
    state.builder.reset();
    state.drawing = true;
    state.builder.extend(pointerCell(event));
    redrawGrid();
  });
  host.addEventListener("pointermove", (event) => {
    if (!state.drawing || !state.builder) {
      return;
    }
    if (state.builder.extend(pointerCell(event))) {
      redrawGrid();
    }
  });
  const stop = () => {
    state.drawing = false;
  };
  host.addEventListener("pointerup", stop);
  host.addEventListener("pointerleave", stop);
}

function main(): void {
  el<HTMLTextAreaElement>("scenario-json").value = JSON.stringify(CASE_1, null, 2);
  el<HTMLButtonElement>("load-scenario").addEventListener("click", () => void loadScenario());
  el<HTMLButtonElement>("run-rollout").addEventListener("click", () => void rollout());
  el<HTMLButtonElement>("submit-path").addEventListener("click", () => void submitPath());
  el<HTMLButtonElement>("clear-path").addEventListener("click", () => {
    state.builder?.reset();
    redrawGrid();
  });
  wirePointerEvents();
  void loadScenario();
}

main();
