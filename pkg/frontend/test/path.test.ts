import { describe, expect, it } from "vitest";

import { bridge, cellFromPointer, PathBuilder } from "../src/path.js";
import type { Cell } from "../src/types.js";

const CASE1_CELLS: Cell[] = [
  [1, 1], [1, 2], [1, 3], [1, 4], [1, 5],
  [2, 5], [3, 5], [4, 5], [5, 5],
];

describe("PathBuilder", () => {
  it("reproduces the reference 9-cell path from a scripted drag", () => {
    const builder = new PathBuilder(5, [1, 1]);
    // pointer samples: duplicates and small jumps included, as real drags produce
    const samples: (Cell | null)[] = [
      [1, 1], [1, 1], [1, 2], [1, 3], [1, 3], [1, 4], [1, 5],
      [2, 5], [2, 5], [3, 5], [5, 5],
    ];
    for (const sample of samples) {
      builder.extend(sample);
    }
    expect(builder.toWire()).toEqual(CASE1_CELLS);
    expect(builder.canSubmit).toBe(true);
  });

  it("bridges diagonal jumps with an intermediate cell, x leg first", () => {
    const builder = new PathBuilder(5, [1, 1]);
    builder.extend([2, 2]);
    expect(builder.toWire()).toEqual([
      [1, 1],
      [2, 1],
      [2, 2],
    ]);
  });

  it("ignores repeats of the current cell and out-of-grid samples", () => {
    const builder = new PathBuilder(3, [1, 1]);
    expect(builder.extend([1, 1])).toBe(false);
    expect(builder.extend(null)).toBe(false);
    expect(builder.extend([4, 1])).toBe(false);
    expect(builder.toWire()).toEqual([[1, 1]]);
  });

  it("a bare click cannot be submitted", () => {
    const builder = new PathBuilder(5, [1, 1]);
    builder.extend([1, 1]);
    expect(builder.canSubmit).toBe(false);
  });

  it("reset returns to the start cell", () => {
    const builder = new PathBuilder(5, [1, 1]);
    builder.extend([1, 2]);
    builder.reset();
    expect(builder.toWire()).toEqual([[1, 1]]);
  });
});

describe("bridge", () => {
  it("walks x before y", () => {
    expect(bridge([1, 1], [3, 2])).toEqual([
      [2, 1],
      [3, 1],
      [3, 2],
    ]);
  });

  it("is empty for identical cells", () => {
    expect(bridge([2, 2], [2, 2])).toEqual([]);
  });
});

describe("cellFromPointer", () => {
  const geom = { gridSize: 5, cellPx: 64, originPx: 24 };

  it("maps the bottom-left cell", () => {
    // bottom row is the highest pixel band
    expect(cellFromPointer(24 + 10, 24 + 4 * 64 + 10, geom)).toEqual([1, 1]);
  });

  it("maps the top-left cell", () => {
    expect(cellFromPointer(24 + 10, 24 + 10, geom)).toEqual([1, 5]);
  });

  it("returns null outside the grid", () => {
    expect(cellFromPointer(2, 2, geom)).toBeNull();
    expect(cellFromPointer(24 + 5 * 64 + 5, 24 + 10, geom)).toBeNull();
  });
});
