/** Thin typed client for the gridsar HTTP API.
 * Counterfactual submissions are queued so at most one is in flight. */

import type {
  Cell,
  CounterfactualResponse,
  ScenarioDoc,
  ScenarioEnvelope,
  SolveResponse,
  TraceDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private queue: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, url: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + url, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      payload = null;
    }
    if (!response.ok) {
      throw new ApiError(response.status, (payload as { detail?: unknown })?.detail ?? payload);
    }
    return payload as T;
  }

  postScenario(doc: ScenarioDoc): Promise<{ scenario_id: string }> {
    return this.request("POST", "/scenarios", doc);
  }

  getScenario(id: string): Promise<ScenarioEnvelope> {
    return this.request("GET", `/scenarios/${id}`);
  }

  solve(id: string, epsilon?: number): Promise<SolveResponse> {
    return this.request("POST", `/scenarios/${id}/solve`, epsilon === undefined ? {} : { epsilon });
  }

  rollout(id: string, seed: number, trueTarget?: Cell): Promise<TraceDoc> {
    const body: Record<string, unknown> = { seed };
    if (trueTarget) {
      body.true_target = trueTarget;
    }
    return this.request("POST", `/scenarios/${id}/rollout`, body);
  }

  /** Queued: a second submission waits for the first to settle. */
  counterfactual(id: string, path: Cell[]): Promise<CounterfactualResponse> {
    const run = () =>
      this.request<CounterfactualResponse>("POST", `/scenarios/${id}/counterfactual`, { path });
    const next = this.queue.then(run, run);
    this.queue = next.catch(() => undefined);
    return next;
  }
}
