/** Cell-snapped path drawing: pointer motion becomes a Manhattan-adjacent
 * cell path starting at the scenario start cell. Diagonal or skipping pointer
 * jumps are bridged with intermediate cells (x leg first, then y), so the
 * emitted path is always postable. */

import type { Cell } from "./types.js";

export interface GridGeometry {
  gridSize: number;
  cellPx: number;
  /** pixel offset of the grid's outer border inside the SVG */
  originPx: number;
}

/** Map SVG-local pixel coordinates to a 1-indexed cell, or null outside the grid. */
export function cellFromPointer(px: number, py: number, geom: GridGeometry): Cell | null {
  const gx = Math.floor((px - geom.originPx) / geom.cellPx);
  const gyTop = Math.floor((py - geom.originPx) / geom.cellPx);
  if (gx < 0 || gyTop < 0 || gx >= geom.gridSize || gyTop >= geom.gridSize) {
    return null;
  }
  // SVG y grows downward; cell y grows upward.
  return [gx + 1, geom.gridSize - gyTop];
}

export function cellsEqual(a: Cell, b: Cell): boolean {
  return a[0] === b[0] && a[1] === b[1];
}

function inBounds(cell: Cell, gridSize: number): boolean {
  return cell[0] >= 1 && cell[0] <= gridSize && cell[1] >= 1 && cell[1] <= gridSize;
}

/** Intermediate cells bridging a pointer jump: x leg first, then y leg. */
export function bridge(from: Cell, to: Cell): Cell[] {
  const cells: Cell[] = [];
  let [x, y] = from;
  while (x !== to[0]) {
    x += Math.sign(to[0] - x);
    cells.push([x, y]);
  }
  while (y !== to[1]) {
    y += Math.sign(to[1] - y);
    cells.push([x, y]);
  }
  return cells;
}

export class PathBuilder {
  private readonly gridSize: number;
  private readonly start: Cell;
  private _cells: Cell[];

  constructor(gridSize: number, start: Cell) {
    this.gridSize = gridSize;
    this.start = start;
    this._cells = [start];
  }

  get cells(): readonly Cell[] {
    return this._cells;
  }

  /** Paths below two cells translate to no actions and cannot be posted. */
  get canSubmit(): boolean {
    return this._cells.length >= 2;
  }

  reset(): void {
    this._cells = [this.start];
  }

  /** Extend the path toward the cell under the pointer; returns true if it grew. */
  extend(cell: Cell | null): boolean {
    if (cell === null || !inBounds(cell, this.gridSize)) {
      return false;
    }
    const last = this._cells[this._cells.length - 1];
    if (cellsEqual(cell, last)) {
      return false;
    }
    for (const step of bridge(last, cell)) {
      this._cells.push(step);
    }
    return true;
  }

  toWire(): Cell[] {
    return this._cells.map((c) => [c[0], c[1]]);
  }
}
