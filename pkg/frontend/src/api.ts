/**
 * Typed client for the annotation gate service.
 *
 * Talks only to the documented /v1 endpoints; every response is validated
 * against a zod schema before it reaches the UI, so a drifting server
 * fails loudly instead of rendering garbage.
 */
import { z } from "zod";

export const qaDraftSchema = z.object({
  item_id: z.string().min(1),
  dataset_id: z.string().default(""),
  question: z.string(),
  answers: z.array(z.string()).length(5, "expected exactly 5 answers"),
  correct_idx: z.number().int().min(0).max(4),
  annotator_id: z.string().min(1).nullable(),
  source_ref: z.string().nullable().optional(),
});

export const verdictSchema = z.object({
  item_id: z.string(),
  bias_score: z.number(),
  predicted_idx: z.number().int(),
  flagged: z.boolean(),
  model_version: z.string(),
  explanation: z.array(z.tuple([z.string(), z.number()])).nullable(),
});

export const submitResponseSchema = z.object({
  accepted: z.boolean(),
  duplicate: z.boolean(),
  verdict: verdictSchema,
});

export const annotatorStatsSchema = z.object({
  annotator_id: z.string(),
  n_submitted: z.number().int(),
  n_flagged: z.number().int(),
  flag_rate: z.number(),
  mean_bias_score: z.number(),
  last_updated: z.string(),
});

export const shiftMatrixSchema = z.object({
  annotators: z.array(z.string()),
  acc: z.array(z.array(z.number().nullable())),
  shift: z.array(z.array(z.number().nullable())),
});

export const healthSchema = z.object({
  status: z.string(),
  model_version: z.string(),
  log_size: z.number().int(),
  flag_threshold: z.number(),
});

export type QADraft = z.infer<typeof qaDraftSchema>;
export type GateVerdict = z.infer<typeof verdictSchema>;
export type SubmitResponse = z.infer<typeof submitResponseSchema>;
export type AnnotatorStats = z.infer<typeof annotatorStatsSchema>;
export type ShiftMatrix = z.infer<typeof shiftMatrixSchema>;

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`gate service replied ${status}: ${detail}`);
  }
}

export class GateClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const text = await resp.text();
    if (!resp.ok) {
      throw new ApiError(resp.status, text);
    }
    return JSON.parse(text);
  }

  private post(path: string, body: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async checkItem(draft: QADraft): Promise<GateVerdict> {
    return verdictSchema.parse(await this.post("/v1/check", draft));
  }

  async submitItem(draft: QADraft): Promise<SubmitResponse> {
    return submitResponseSchema.parse(await this.post("/v1/items", draft));
  }

  async annotators(): Promise<AnnotatorStats[]> {
    const doc = await this.request("/v1/annotators");
    return z.array(annotatorStatsSchema).parse(doc);
  }

  async shiftMatrix(): Promise<ShiftMatrix> {
    return shiftMatrixSchema.parse(await this.request("/v1/matrix"));
  }

  async health() {
    return healthSchema.parse(await this.request("/v1/health"));
  }
}
