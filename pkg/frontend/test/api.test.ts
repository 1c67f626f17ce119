import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { PathBuilder } from "../src/path.js";
import type { Cell } from "../src/types.js";

function fakeFetch(handler: (url: string, init?: RequestInit) => { status?: number; body: unknown }) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const impl = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const { status = 200, body } = handler(url, init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { impl, calls };
}

const CASE1_CELLS: Cell[] = [
  [1, 1], [1, 2], [1, 3], [1, 4], [1, 5],
  [2, 5], [3, 5], [4, 5], [5, 5],
];

describe("ApiClient", () => {
  it("posts exactly the drawn 9-cell path to the counterfactual endpoint", async () => {
    const { impl, calls } = fakeFetch(() => ({ body: { ok: true } }));
    const client = new ApiClient("", impl);
    const builder = new PathBuilder(5, [1, 1]);
    for (const cell of CASE1_CELLS) {
      builder.extend(cell);
    }
    await client.counterfactual("abc", builder.toWire());
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("/scenarios/abc/counterfactual");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ path: CASE1_CELLS });
  });

  it("queues submissions so only one is in flight", async () => {
    const order: string[] = [];
    let release: (() => void) | null = null;
    const gate = new Promise<void>((resolve) => {
      release = resolve;
    });
    const impl = async (url: string): Promise<Response> => {
      const id = url.split("/")[2];
      order.push(`start ${id}`);
      if (order.length === 1) {
        await gate;
      }
      order.push(`end ${id}`);
      return new Response("{}", { status: 200 });
    };
    const client = new ApiClient("", impl);
    const first = client.counterfactual("1", [[1, 1]]);
    const second = client.counterfactual("2", [[1, 1]]);
    // the second request must not start before the first settles
    await Promise.resolve();
    expect(order).toEqual(["start 1"]);
    release!();
    await Promise.all([first, second]);
    expect(order).toEqual(["start 1", "end 1", "start 2", "end 2"]);
  });

  it("raises ApiError with the server detail on 422", async () => {
    const { impl } = fakeFetch(() => ({
      status: 422,
      body: { detail: [{ loc: ["body", "path", "1"], msg: "cells not adjacent" }] },
    }));
    const client = new ApiClient("", impl);
    await expect(client.counterfactual("abc", [[1, 1], [3, 3]])).rejects.toThrowError(ApiError);
  });

  it("keeps the queue usable after a failure", async () => {
    let call = 0;
    const impl = async (): Promise<Response> => {
      call += 1;
      if (call === 1) {
        return new Response(JSON.stringify({ detail: "boom" }), { status: 500 });
      }
      return new Response(JSON.stringify({ fine: true }), { status: 200 });
    };
    const client = new ApiClient("", impl);
    await expect(client.counterfactual("x", [[1, 1]])).rejects.toThrowError(ApiError);
    await expect(client.counterfactual("x", [[1, 1]])).resolves.toEqual({ fine: true });
  });

  it("targets the expected endpoints", async () => {
    const { impl, calls } = fakeFetch(() => ({ body: {} }));
    const client = new ApiClient("http://h", impl);
    await client.postScenario({
      grid_size: 2,
      start: [1, 1],
      cells_of_interest: [],
      target_weight: 1,
      battery: 2,
    });
    await client.getScenario("s1");
    await client.solve("s1", 0.5);
    await client.rollout("s1", 3, [2, 2]);
    expect(calls.map((c) => c.url)).toEqual([
      "http://h/scenarios",
      "http://h/scenarios/s1",
      "http://h/scenarios/s1/solve",
      "http://h/scenarios/s1/rollout",
    ]);
    expect(JSON.parse(String(calls[3].init?.body))).toEqual({ seed: 3, true_target: [2, 2] });
  });
});
