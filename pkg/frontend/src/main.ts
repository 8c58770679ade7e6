/**
 * Single-page wiring: poll the gate service and keep the three panels
 * (health, leaderboard, shift heatmap) current. All rendering goes
 * through the pure view functions so the page stays testable headless.
 */
import { ApiError, GateClient } from "./api";
import { renderHeatmap } from "./heatmap";
import { renderLeaderboard } from "./leaderboard";

const REFRESH_MS = 10_000;

function panel(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing panel #${id}`);
  }
  return el;
}

async function refresh(client: GateClient): Promise<void> {
  const health = await client.health();
  panel("health").textContent =
    `${health.status} | model ${health.model_version} | ` +
    `${health.log_size} submissions | threshold ${health.flag_threshold}`;

  panel("leaderboard").innerHTML = renderLeaderboard(await client.annotators());

  try {
    panel("heatmap").innerHTML = renderHeatmap(await client.shiftMatrix());
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      panel("heatmap").textContent = "Not enough submissions for a matrix yet.";
    } else {
      throw err;
    }
  }
}

export function start(baseUrl: string = ""): void {
  const client = new GateClient(baseUrl);
  const tick = () =>
    refresh(client).catch((err) => {
      panel("health").textContent = `gate service unreachable: ${err}`;
    });
  tick();
  setInterval(tick, REFRESH_MS);
}

if (typeof document !== "undefined" && document.getElementById("health")) {
  start();
}
