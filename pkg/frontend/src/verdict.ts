/**
 * Verdict panel for a checked item.
 *
 * The bias score is shown exactly as the API returned it (no client-side
 * rounding): auditors compare panel values against the submission log.
 */
import type { GateVerdict } from "./api";

export function renderVerdict(verdict: GateVerdict): string {
  const flagClass = verdict.flagged ? "verdict-flagged" : "verdict-clear";
  const flagText = verdict.flagged ? "FLAGGED" : "clear";
  const explanation =
    verdict.explanation && verdict.explanation.length > 0
      ? `<ul class="explanation">` +
        verdict.explanation
          .map(([feature, weight]) => `<li>${feature}: ${weight.toFixed(3)}</li>`)
          .join("") +
        `</ul>`
      : "";
  return (
    `<div class="verdict ${flagClass}">` +
    `<span class="item-id">${verdict.item_id}</span>` +
    `<span class="bias-score">${String(verdict.bias_score)}</span>` +
    `<span class="predicted">answer ${verdict.predicted_idx}</span>` +
    `<span class="flag">${flagText}</span>` +
    `<span class="model-version">${verdict.model_version}</span>` +
    explanation +
    `</div>`
  );
}
