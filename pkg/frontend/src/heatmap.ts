/**
 * Annotator shift heatmap rendering.
 *
 * Cell color is a pure, monotone function of the accuracy shift: the
 * diagonal (shift 0) always sits at the exact center of the diverging
 * scale, negative shifts cool toward blue, positive warm toward red.
 */
import type { ShiftMatrix } from "./api";

/** Map a shift to [0, 1] with 0 pinned to 0.5; span sets the saturation point. */
export function shiftPosition(shift: number, span: number): number {
  if (span <= 0) {
    throw new Error("span must be positive");
  }
  const clamped = Math.max(-span, Math.min(span, shift));
  return 0.5 + clamped / (2 * span);
}

/** Diverging blue -> white -> red color for one cell. */
export function shiftColor(shift: number, span: number): string {
  const t = shiftPosition(shift, span);
  // interpolate blue (0) -> white (0.5) -> red (1)
  const r = t <= 0.5 ? Math.round(255 * (2 * t)) : 255;
  const b = t <= 0.5 ? 255 : Math.round(255 * (2 - 2 * t));
  const g = t <= 0.5 ? Math.round(255 * (2 * t)) : Math.round(255 * (2 - 2 * t));
  return `rgb(${r}, ${g}, ${b})`;
}

/** Largest absolute shift in the matrix; at least 1 to keep the scale sane. */
export function matrixSpan(matrix: ShiftMatrix): number {
  let span = 1;
  for (const row of matrix.shift) {
    for (const cell of row) {
      if (cell !== null) {
        span = Math.max(span, Math.abs(cell));
      }
    }
  }
  return span;
}

function cellHtml(
  shift: number | null,
  acc: number | null,
  span: number,
): string {
  if (shift === null || acc === null) {
    return `<td class="cell cell-missing">n/a</td>`;
  }
  const sign = shift > 0 ? "+" : "";
  return (
    `<td class="cell" style="background: ${shiftColor(shift, span)}">` +
    `<span class="shift">${sign}${shift.toFixed(1)}</span>` +
    `<span class="acc">${acc.toFixed(1)}</span></td>`
  );
}

/** Render the k x k matrix as an HTML table (rows: trained on, cols: evaluated on). */
export function renderHeatmap(matrix: ShiftMatrix): string {
  const span = matrixSpan(matrix);
  const header = matrix.annotators.map((a) => `<th>${a}</th>`).join("");
  const rows = matrix.annotators
    .map((annotator, i) => {
      const cells = matrix.annotators
        .map((_, j) => cellHtml(matrix.shift[i][j], matrix.acc[i][j], span))
        .join("");
      return `<tr><th>${annotator}</th>${cells}</tr>`;
    })
    .join("");
  return (
    `<table class="heatmap"><thead><tr><th></th>${header}</tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}
