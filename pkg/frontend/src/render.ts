/** Pure markup builders (SVG for the grid, HTML for the contrast panel).
 * Kept DOM-free so they are testable without a browser. */

import type { Cell } from "./types.js";
import type { ContrastViewModel, GridViewModel } from "./viewmodel.js";

export const CELL_PX = 64;
export const ORIGIN_PX = 24;

function svgXY(cell: Cell, gridSize: number): [number, number] {
  const x = ORIGIN_PX + (cell[0] - 0.5) * CELL_PX;
  const y = ORIGIN_PX + (gridSize - cell[1] + 0.5) * CELL_PX;
  return [x, y];
}

function polyline(cells: readonly Cell[], gridSize: number, cls: string): string {
  if (cells.length < 2) {
    return "";
  }
  const points = cells
    .map((c) => svgXY(c, gridSize))
    .map(([x, y]) => `${x},${y}`)
    .join(" ");
  return `<polyline class="${cls}" points="${points}" fill="none"/>`;
}

export function renderGridSvg(vm: GridViewModel): string {
  const n = vm.gridSize;
  const side = 2 * ORIGIN_PX + n * CELL_PX;
  const parts: string[] = [];
  parts.push(
    `<svg class="grid" width="${side}" height="${side}" viewBox="0 0 ${side} ${side}">`,
  );
  for (let i = 0; i <= n; i++) {
    const offset = ORIGIN_PX + i * CELL_PX;
    parts.push(
      `<line class="grid-line" x1="${offset}" y1="${ORIGIN_PX}" x2="${offset}" y2="${side - ORIGIN_PX}"/>`,
      `<line class="grid-line" x1="${ORIGIN_PX}" y1="${offset}" x2="${side - ORIGIN_PX}" y2="${offset}"/>`,
    );
  }
  for (const coi of vm.cellsOfInterest) {
    const [x, y] = svgXY(coi.cell, n);
    parts.push(
      `<rect class="cell-interest" x="${x - CELL_PX / 2}" y="${y - CELL_PX / 2}" width="${CELL_PX}" height="${CELL_PX}"/>`,
      `<text class="cell-interest-label" x="${x}" y="${y + CELL_PX / 2 - 6}" text-anchor="middle">+${coi.weight}</text>`,
    );
  }
  const [sx, sy] = svgXY(vm.start, n);
  parts.push(`<circle class="start-marker" cx="${sx}" cy="${sy}" r="10"/>`);
  if (vm.target) {
    const [tx, ty] = svgXY(vm.target, n);
    parts.push(`<circle class="target-marker" cx="${tx}" cy="${ty}" r="12"/>`);
  }
  parts.push(polyline(vm.optimalPath, n, "path-optimal"));
  parts.push(polyline(vm.userExecuted, n, "path-user"));
  parts.push(polyline(vm.userTruncated, n, "path-user-truncated"));
  parts.push("</svg>");
  return parts.join("");
}

/** Bars display the payload numbers verbatim; widths are presentation only. */
export function renderBars(vm: ContrastViewModel): string {
  const peak = Math.max(
    1e-12,
    ...vm.rows.map((r) => Math.max(Math.abs(r.muOptimal), Math.abs(r.muUser))),
  );
  const rows = vm.rows
    .map((row, index) => {
      const wOpt = (100 * Math.abs(row.muOptimal)) / peak;
      const wUser = (100 * Math.abs(row.muUser)) / peak;
      return [
        `<tr class="feature-row${index === vm.dominantFeature ? " dominant" : ""}">`,
        `<th scope="row">${row.label}</th>`,
        `<td><div class="bar bar-optimal" style="width:${wOpt}%"></div>` +
          `<span class="bar-value" data-value="${row.muOptimal}">${row.muOptimal}</span></td>`,
        `<td><div class="bar bar-user" style="width:${wUser}%"></div>` +
          `<span class="bar-value" data-value="${row.muUser}">${row.muUser}</span></td>`,
        `</tr>`,
      ].join("");
    })
    .join("");
  return [
    `<table class="contrast-table">`,
    `<thead><tr><th>feature</th><th>optimal</th><th>user</th></tr></thead>`,
    `<tbody>${rows}</tbody>`,
    `<tfoot><tr><th>value</th>`,
    `<td data-value="${vm.valueOptimal}">${vm.valueOptimal}</td>`,
    `<td data-value="${vm.valueUser}">${vm.valueUser}</td>`,
    `</tr></tfoot>`,
    `</table>`,
  ].join("");
}

export function renderExplanation(sentences: readonly string[]): string {
  const body = sentences.map((s) => `<p class="explanation-sentence">${s}</p>`).join("");
  return `<div class="explanation">${body}</div>`;
}
