/** Typed client for the teaching service. Every response carries the engine
 * revision; the state layer uses it to drop stale poll results. */

export interface TripleView {
  head: string;
  relation: string;
  tail: string;
}

export interface QuestionView {
  id: number;
  text: string;
  state: string;
  created_at: number;
  triple: TripleView;
}

export interface NextQuestionResponse {
  revision: number;
  question: QuestionView | null;
}

export interface AnswerResponse {
  revision: number;
  committed: TripleView;
  added: boolean;
  ack: string;
}

export interface KbStats {
  revision: number;
  entities: number;
  relations: number;
  triples: number;
  sessions_completed: number;
  pending_questions: number;
}

export interface TrainingStatus {
  revision: number;
  mode: string;
  battery: number;
  clock: number;
  acquired_since_last_train: number;
  sessions_completed: number;
  training_due: boolean;
}

export interface SessionMetric {
  session: number;
  triples_trained: number;
  kb_triples: number;
  best_epoch: number;
  stopped_epoch: number;
  best_dev_mrr: number;
  heldout_mrr?: number;
  heldout_hits10?: number;
}

export interface SessionMetricsResponse {
  revision: number;
  sessions: SessionMetric[];
}

/** Server rejection with the HTTP status and the service's detail string. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (typeof body?.detail === "string") detail = body.detail;
        else if (body?.detail) detail = JSON.stringify(body.detail);
      } catch {
        // keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  nextQuestion(): Promise<NextQuestionResponse> {
    return this.request("/api/questions/next");
  }

  answerQuestion(id: number, answer: "yes" | "no", correction?: string): Promise<AnswerResponse> {
    const body: Record<string, string> = { answer };
    if (correction !== undefined) body.correction = correction;
    return this.request(`/api/questions/${id}/answer`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  injectDetection(label: string): Promise<{ revision: number; questions: QuestionView[] }> {
    return this.request("/api/detections", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ label }),
    });
  }

  kbStats(): Promise<KbStats> {
    return this.request("/api/kb/stats");
  }

  trainingStatus(): Promise<TrainingStatus> {
    return this.request("/api/training/status");
  }

  sessionMetrics(): Promise<SessionMetricsResponse> {
    return this.request("/api/metrics/sessions");
  }
}
