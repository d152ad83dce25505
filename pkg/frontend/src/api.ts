// Typed client for the crisprflow HTTP API. The console performs no domain
// logic of its own: every action here maps 1:1 to a documented endpoint.

export interface PromptInput {
  kind: "choice" | "free_text" | "acknowledgment";
  options?: string[];
  artifact?: string;
  requests_sequence?: boolean;
}

export interface Warning {
  kind: string;
  text: string;
  reference?: string;
  matched_term?: string;
}

export interface Prompt {
  task_name: string;
  state_id: string;
  instruction: string;
  input: PromptInput;
  warnings: Warning[];
  status: string;
}

export interface Plan {
  tasks: string[];
  provenance: string;
  repair_log: Record<string, unknown>[];
  thoughts?: string | null;
}

export interface CreateSessionResponse {
  session_id: string;
  status: string;
  plan: Plan;
  prompt: Prompt | null;
  created: boolean;
}

export interface Turn {
  index: number;
  state_id: string;
  responder: string;
  response?: string | null;
  outcome_label?: string | null;
  error?: string | null;
  override: boolean;
  reasoning?: string | null;
  tool_summary?: string | null;
}

export interface SessionView {
  session_id: string;
  mode: string;
  status: string;
  task_queue: string[];
  current_task_index: number;
  current_state_id: string | null;
  needs_review: boolean;
  artifacts: Record<string, unknown>;
  history: Turn[];
  prompt: Prompt | null;
}

export interface TurnResponse {
  outcome: "accepted" | "qa" | "ack_required" | "completed";
  status: string;
  turn?: Turn | null;
  prompt?: Prompt | null;
  report?: Record<string, unknown> | null;
  qa?: QaAnswer | null;
}

export interface AgentDecision {
  kind: "answer" | "handoff";
  answer: string | null;
  handoff_reason: string | null;
  thoughts: string;
}

export interface AutopilotResponse {
  termination?: string | null;
  transcript: Record<string, unknown>[];
  decision?: AgentDecision | null;
  status: string;
  prompt?: Prompt | null;
  report?: Record<string, unknown> | null;
}

export interface QaAnswer {
  answer: string;
  citations: string[];
  scores: Record<string, number>;
  grounded: boolean;
}

export interface OffTargetRequest {
  spacer: string;
  max_mismatches?: number;
  pam_pattern?: string;
  pam_side?: "three_prime" | "five_prime";
  cas_system?: string;
}

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public detail: unknown,
    public status: number,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = `http_${response.status}`;
      let message = response.statusText;
      let detail: unknown = null;
      try {
        const parsed = (await response.json()) as { error?: { code: string; message: string; detail: unknown } };
        if (parsed.error) {
          code = parsed.error.code;
          message = parsed.error.message;
          detail = parsed.error.detail;
        }
      } catch {
        // non-JSON error body; keep the HTTP status text
      }
      throw new ApiError(code, message, detail, response.status);
    }
    return (await response.json()) as T;
  }

  health(): Promise<Record<string, unknown>> {
    return this.request("GET", "/healthz");
  }

  createSession(body: {
    mode: "meta" | "auto";
    request: string;
    meta_task?: string;
    plan?: string[];
    idempotency_key?: string;
  }): Promise<CreateSessionResponse> {
    return this.request("POST", "/sessions", body);
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  submitTurn(sessionId: string, response: string): Promise<TurnResponse> {
    return this.request("POST", `/sessions/${sessionId}/turns`, { response });
  }

  acknowledge(sessionId: string, text = "I acknowledge"): Promise<TurnResponse> {
    return this.request("POST", `/sessions/${sessionId}/ack`, { text });
  }

  override(sessionId: string, response: string): Promise<TurnResponse> {
    return this.request("POST", `/sessions/${sessionId}/override`, { response });
  }

  autopilotPropose(sessionId: string, metaPrompt: string): Promise<AutopilotResponse> {
    return this.request("POST", `/sessions/${sessionId}/autopilot`, {
      meta_prompt: metaPrompt,
      mode: "propose",
    });
  }

  autopilotApply(sessionId: string, decision: AgentDecision): Promise<AutopilotResponse> {
    return this.request("POST", `/sessions/${sessionId}/autopilot`, {
      mode: "apply",
      answer: decision.answer,
      thoughts: decision.thoughts,
    });
  }

  autopilotRun(sessionId: string, metaPrompt: string, stepLimit = 50): Promise<AutopilotResponse> {
    return this.request("POST", `/sessions/${sessionId}/autopilot`, {
      meta_prompt: metaPrompt,
      step_limit: stepLimit,
      mode: "run",
    });
  }

  report(sessionId: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/sessions/${sessionId}/report`);
  }

  // raw bytes of the report, for download / byte-equality with the API
  async reportRaw(sessionId: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/report`, {
      method: "GET",
    });
    if (!response.ok) {
      throw new ApiError(`http_${response.status}`, response.statusText, null, response.status);
    }
    return await response.text();
  }

  qa(question: string, k = 3): Promise<QaAnswer> {
    return this.request("POST", "/qa", { question, k });
  }

  offtarget(body: OffTargetRequest): Promise<Record<string, unknown>> {
    return this.request("POST", "/tools/offtarget", body);
  }

  primers(body: { record_id?: string; region?: string; span?: [number, number] }): Promise<Record<string, unknown>> {
    return this.request("POST", "/tools/primers", body);
  }
}
