/**
 * Annotator leaderboard.
 *
 * The gate service already returns annotators sorted (flag rate
 * descending, id ascending); the view renders rows in exactly the
 * payload order and never re-sorts client-side.
 */
import type { AnnotatorStats } from "./api";

export interface LeaderboardRow {
  rank: number;
  annotatorId: string;
  submitted: number;
  flagged: number;
  flagRatePct: string;
}

export function leaderboardRows(stats: AnnotatorStats[]): LeaderboardRow[] {
  return stats.map((s, i) => ({
    rank: i + 1,
    annotatorId: s.annotator_id,
    submitted: s.n_submitted,
    flagged: s.n_flagged,
    flagRatePct: `${(100 * s.flag_rate).toFixed(1)}%`,
  }));
}

export function renderLeaderboard(stats: AnnotatorStats[]): string {
  if (stats.length === 0) {
    return `<p class="leaderboard-empty">No submissions yet.</p>`;
  }
  const rows = leaderboardRows(stats)
    .map(
      (r) =>
        `<tr><td>${r.rank}</td><td>${r.annotatorId}</td>` +
        `<td>${r.submitted}</td><td>${r.flagged}</td><td>${r.flagRatePct}</td></tr>`,
    )
    .join("");
  return (
    `<table class="leaderboard"><thead><tr>` +
    `<th>#</th><th>annotator</th><th>submitted</th><th>flagged</th><th>flag rate</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}
