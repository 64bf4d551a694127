import { z } from "zod";

// Response schemas mirror the service views exactly; every response is
// validated before it reaches a component, so shape drift fails loudly.

export const SpecSchema = z.object({ id: z.string(), text: z.string() });

export const RowSchema = z.object({
  id: z.string(),
  text: z.string(),
  emphasis: z.array(z.string()),
});

export const StoryViewSchema = z.object({
  id: z.string(),
  text: z.string(),
  role: z.string(),
  feature: z.string(),
  reason: z.string(),
  specs: z.array(SpecSchema),
  extraction: z.object({
    verbs: z.array(z.string()),
    nouns: z.array(z.string()),
    unmatched: z.array(z.string()),
  }),
  properties: z.array(z.string()),
  rows: z.array(RowSchema),
});

export const QuestionSchema = z.object({
  defect_type: z.string(),
  text: z.string(),
});

export const PackageViewSchema = z.object({
  package_id: z.string(),
  stories: z.array(StoryViewSchema),
  questions: z.array(QuestionSchema),
  lexicon_source: z.string(),
  lexicon_size: z.number(),
});

export const DocumentCreatedSchema = z.object({
  document_id: z.string(),
  story_ids: z.array(z.string()),
});

export const RecordViewSchema = z.object({
  index: z.number(),
  story_id: z.string(),
  defect_type: z.string(),
  location: z.union([z.string(), z.array(z.string())]),
  note: z.string(),
});

export const SessionViewSchema = z.object({
  session_id: z.string(),
  package_id: z.string(),
  inspector_id: z.string(),
  treatment: z.string(),
  state: z.string(),
  elapsed_minutes: z.number(),
  soft_limit_minutes: z.number(),
  over_soft_limit: z.boolean(),
  defects: z.array(RecordViewSchema),
  record_count: z.number(),
  defect_tally: z.number(),
  duration_minutes: z.number().nullable(),
});

export const FinishViewSchema = z.object({
  forms: z.array(z.unknown()),
  rendered: z.array(z.string()),
  duration_minutes: z.number(),
  record_count: z.number(),
  defect_tally: z.number(),
});

const ErrorEnvelopeSchema = z.object({
  error: z.object({ code: z.string(), message: z.string() }),
});

export type Spec = z.infer<typeof SpecSchema>;
export type Row = z.infer<typeof RowSchema>;
export type StoryView = z.infer<typeof StoryViewSchema>;
export type PackageView = z.infer<typeof PackageViewSchema>;
export type RecordView = z.infer<typeof RecordViewSchema>;
export type SessionView = z.infer<typeof SessionViewSchema>;
export type FinishView = z.infer<typeof FinishViewSchema>;

export interface StoryInput {
  id: string;
  text: string;
  specs: Spec[];
}

export type DefectInput =
  | { story_id: string; defect_type: "O" | "A" | "IF"; location: string }
  | { story_id: string; defect_type: "IS"; location: string[] };

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "ERROR";
  let message = `request failed with status ${response.status}`;
  try {
    const envelope = ErrorEnvelopeSchema.parse(await response.json());
    code = envelope.error.code;
    message = envelope.error.message;
  } catch {
    // non-envelope body: keep the generic message
  }
  return new ApiError(code, message, response.status);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "/api",
    private readonly fetchImpl: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(
    schema: z.ZodType<T>,
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return schema.parse(await response.json());
  }

  createDocument(stories: StoryInput[]) {
    return this.request(DocumentCreatedSchema, "POST", "/documents", {
      stories,
    });
  }

  createPackage(documentId: string) {
    return this.request(PackageViewSchema, "POST", "/packages", {
      document_id: documentId,
    });
  }

  getPackage(packageId: string) {
    return this.request(
      PackageViewSchema,
      "GET",
      `/packages/${encodeURIComponent(packageId)}`,
    );
  }

  startSession(packageId: string, inspectorId: string, treatment: string) {
    return this.request(SessionViewSchema, "POST", "/sessions", {
      package_id: packageId,
      inspector_id: inspectorId,
      treatment,
    });
  }

  getSession(sessionId: string) {
    return this.request(
      SessionViewSchema,
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}`,
    );
  }

  recordDefect(sessionId: string, defect: DefectInput) {
    return this.request(
      RecordViewSchema,
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/defects`,
      defect,
    );
  }

  deleteDefect(sessionId: string, index: number) {
    return this.request(
      z.object({ removed: RecordViewSchema }),
      "DELETE",
      `/sessions/${encodeURIComponent(sessionId)}/defects/${index}`,
    );
  }

  finishSession(sessionId: string) {
    return this.request(
      FinishViewSchema,
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/finish`,
    );
  }
}
