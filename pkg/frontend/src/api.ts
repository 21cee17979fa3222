import { z } from "zod";

/** Payload schemas, mirroring what the survey service emits. */

const attributeSpec = z.object({
  index: z.number().int().nonnegative(),
  label: z.string(),
  levels: z.array(z.string()).min(1),
});

const profileCard = z.object({
  levels: z.array(z.number().int().nonnegative()),
  // attribute label -> level label, ready for display
  description: z.record(z.string(), z.string()),
});

const byoQuestion = z.object({
  schema: z.number().int(),
  phase: z.literal("AwaitingBYO"),
  prompt: z.string(),
  attributes: z.array(attributeSpec).min(1),
});

const choiceQuestion = z.object({
  schema: z.number().int(),
  phase: z.literal("InTournament"),
  prompt: z.string(),
  task_index: z.number().int().min(1),
  total_tasks: z.number().int().min(1),
  left: profileCard,
  right: profileCard,
});

const completionSummary = z.object({
  schema: z.number().int(),
  phase: z.literal("Complete"),
  session_id: z.string(),
  total_tasks: z.number().int().min(1),
  champion: profileCard,
});

const questionPayload = z.discriminatedUnion("phase", [
  byoQuestion,
  choiceQuestion,
  completionSummary,
]);

const createSessionReply = byoQuestion.extend({ session_id: z.string().min(1) });

export type AttributeSpec = z.infer<typeof attributeSpec>;
export type ProfileCard = z.infer<typeof profileCard>;
export type ByoQuestion = z.infer<typeof byoQuestion>;
export type ChoiceQuestion = z.infer<typeof choiceQuestion>;
export type CompletionSummary = z.infer<typeof completionSummary>;
export type QuestionPayload = z.infer<typeof questionPayload>;

export type Side = "left" | "right";

/** Non-2xx reply from the service, with the detail string it sent. */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`service replied ${status}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

/** A reply that parsed as JSON but not as a known payload shape. */
export class PayloadError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PayloadError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface SurveyApiOptions {
  fetchImpl?: FetchLike;
  /** extra attempts after the first, for network failures and 5xx replies */
  retries?: number;
  retryDelayMs?: number;
  keyFactory?: () => string;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function detailOf(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText || "no detail";
  }
}

/**
 * Thin client for the survey service.
 *
 * Submissions carry an Idempotency-Key header. Transient failures (network
 * errors and 5xx replies) are retried with the same key, so a retry can never
 * advance the session twice; 4xx replies are surfaced to the caller as
 * ApiError without retrying.
 */
export class SurveyApi {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;
  private readonly retries: number;
  private readonly retryDelayMs: number;
  private readonly keyFactory: () => string;

  constructor(baseUrl: string, options: SurveyApiOptions = {}) {
    this.base = baseUrl.replace(/\/+$/, "");
    // wrap the global so the call is not made with `this` bound to the client
    this.fetchImpl = options.fetchImpl ?? ((input, init) => fetch(input, init));
    this.retries = options.retries ?? 2;
    this.retryDelayMs = options.retryDelayMs ?? 250;
    this.keyFactory = options.keyFactory ?? (() => crypto.randomUUID());
  }

  newKey(): string {
    return this.keyFactory();
  }

  async createSession(
    studyId: string,
    populationTag: string,
  ): Promise<{ sessionId: string; question: ByoQuestion }> {
    const raw = await this.requestJson(
      `/studies/${encodeURIComponent(studyId)}/sessions`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ population_tag: populationTag }),
      },
    );
    const parsed = createSessionReply.safeParse(raw);
    if (!parsed.success) {
      throw new PayloadError(`unexpected session reply: ${parsed.error.message}`);
    }
    const { session_id, ...question } = parsed.data;
    return { sessionId: session_id, question };
  }

  /** Current question for the session; safe to call any number of times. */
  async next(sessionId: string): Promise<QuestionPayload> {
    const raw = await this.requestJson(
      `/sessions/${encodeURIComponent(sessionId)}/next`,
      { method: "GET" },
    );
    return this.parsePayload(raw);
  }

  async submitByo(
    sessionId: string,
    levels: number[],
    key: string = this.newKey(),
  ): Promise<QuestionPayload> {
    return this.submit(sessionId, key, { type: "byo", levels });
  }

  async submitChoice(
    sessionId: string,
    winner: Side,
    taskIndex: number,
    key: string = this.newKey(),
  ): Promise<QuestionPayload> {
    return this.submit(sessionId, key, {
      type: "choice",
      winner,
      task_index: taskIndex,
    });
  }

  private async submit(
    sessionId: string,
    key: string,
    body: Record<string, unknown>,
  ): Promise<QuestionPayload> {
    const raw = await this.requestJson(
      `/sessions/${encodeURIComponent(sessionId)}/responses`,
      {
        method: "POST",
        headers: {
          "Content-Type": "application/json",
          "Idempotency-Key": key,
        },
        body: JSON.stringify(body),
      },
    );
    return this.parsePayload(raw);
  }

  private parsePayload(raw: unknown): QuestionPayload {
    const parsed = questionPayload.safeParse(raw);
    if (!parsed.success) {
      throw new PayloadError(`unexpected payload: ${parsed.error.message}`);
    }
    return parsed.data;
  }

  private async requestJson(path: string, init: RequestInit): Promise<unknown> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.retries; attempt += 1) {
      if (attempt > 0) await sleep(this.retryDelayMs);
      let response: Response;
      try {
        response = await this.fetchImpl(this.base + path, init);
      } catch (err) {
        lastError = err;
        continue;
      }
      if (response.status >= 500) {
        lastError = new ApiError(response.status, await detailOf(response));
        continue;
      }
      if (!response.ok) {
        throw new ApiError(response.status, await detailOf(response));
      }
      return response.json();
    }
    throw lastError;
  }
}
