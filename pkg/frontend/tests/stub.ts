/** Stubbed fetch over a canned route table; records every request. */
import type { FetchLike } from "../src/api";

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

export function stubFetch(
  routes: Record<string, { status?: number; body: unknown }>,
): { fetchImpl: FetchLike; requests: RecordedRequest[] } {
  const requests: RecordedRequest[] = [];
  const fetchImpl: FetchLike = async (url, init) => {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    requests.push({
      url: path,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(init.body as string) : null,
    });
    const route = routes[path];
    if (!route) {
      return new Response("not found", { status: 404 });
    }
    return new Response(JSON.stringify(route.body), {
      status: route.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetchImpl, requests };
}

export function sampleVerdict(over: Partial<Record<string, unknown>> = {}) {
  return {
    item_id: "it-1",
    bias_score: 0.7231459,
    predicted_idx: 2,
    flagged: true,
    model_version: "v3",
    explanation: [["zzmk0", 1.25]],
    ...over,
  };
}

export function sampleDraft(over: Partial<Record<string, unknown>> = {}) {
  return {
    item_id: "it-1",
    dataset_id: "demo",
    question: "Why did the lights go out?",
    answers: ["a storm", "a fuse", "a prank", "a test", "a cat"],
    correct_idx: 1,
    annotator_id: "w7",
    source_ref: null,
    ...over,
  };
}
