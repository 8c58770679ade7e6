/**
 * Compose form model: drafts are validated locally and only a fully valid
 * five-answer draft can reach the submit endpoint. Server-side validation
 * still applies; this keeps obviously broken drafts off the wire.
 */
import { GateClient, qaDraftSchema, type QADraft, type SubmitResponse } from "./api";

export interface DraftFields {
  item_id: string;
  dataset_id?: string;
  question: string;
  answers: string[];
  correct_idx: number;
  annotator_id: string;
}

export interface ValidationResult {
  valid: boolean;
  errors: string[];
}

export function validateDraft(fields: DraftFields): ValidationResult {
  const errors: string[] = [];
  if (fields.item_id.trim() === "") {
    errors.push("item_id is required");
  }
  if (fields.question.trim() === "") {
    errors.push("question is required");
  }
  if (fields.answers.length !== 5) {
    errors.push(`expected exactly 5 answers, got ${fields.answers.length}`);
  }
  fields.answers.forEach((a, i) => {
    if (a.trim() === "") {
      errors.push(`answer ${i} is empty`);
    }
  });
  if (
    !Number.isInteger(fields.correct_idx) ||
    fields.correct_idx < 0 ||
    fields.correct_idx > 4
  ) {
    errors.push("correct_idx must be an integer in [0, 4]");
  }
  if (fields.annotator_id.trim() === "") {
    errors.push("annotator_id is required");
  }
  return { valid: errors.length === 0, errors };
}

export class ComposeForm {
  constructor(private readonly client: GateClient) {}

  /** Throws with the validation errors instead of calling the API. */
  async submit(fields: DraftFields): Promise<SubmitResponse> {
    const result = validateDraft(fields);
    if (!result.valid) {
      throw new Error(`draft blocked: ${result.errors.join("; ")}`);
    }
    const draft: QADraft = qaDraftSchema.parse({
      ...fields,
      dataset_id: fields.dataset_id ?? "",
      annotator_id: fields.annotator_id,
    });
    return this.client.submitItem(draft);
  }
}
