// View-state reducer: pure functions mapping API responses onto what the
// console shows. The state mirrors server truth; nothing here decides
// transitions, designs sequences or interprets safety rules.

import type {
  AgentDecision,
  AutopilotResponse,
  CreateSessionResponse,
  Prompt,
  QaAnswer,
  TurnResponse,
  Warning,
} from "./api.js";

export interface ChatItem {
  kind: "prompt" | "answer" | "qa-question" | "qa-answer" | "error" | "info";
  text: string;
  meta?: string;
}

export interface BannerState {
  text: string;
  reference?: string;
  checked: boolean;
}

export interface ViewState {
  sessionId: string | null;
  status: string;
  plan: string[];
  prompt: Prompt | null;
  banner: BannerState | null;
  chat: ChatItem[];
  pendingDecision: AgentDecision | null;
  autopilotNote: string | null;
  report: Record<string, unknown> | null;
  error: { code: string; message: string } | null;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    status: "idle",
    plan: [],
    prompt: null,
    banner: null,
    chat: [],
    pendingDecision: null,
    autopilotNote: null,
    report: null,
    error: null,
  };
}

function bannerFromWarnings(warnings: Warning[], previous: BannerState | null): BannerState | null {
  const gate = warnings.find((w) => w.kind === "human_organism_gate");
  if (!gate) {
    return null;
  }
  // keep the checkbox state only while the same warning stays up
  const checked = previous !== null && previous.text === gate.text ? previous.checked : false;
  return { text: gate.text, reference: gate.reference, checked };
}

function promptItem(prompt: Prompt): ChatItem {
  return {
    kind: "prompt",
    text: prompt.instruction,
    meta: `${prompt.task_name} / ${prompt.state_id}`,
  };
}

function withPrompt(state: ViewState, prompt: Prompt | null): ViewState {
  const next: ViewState = {
    ...state,
    prompt,
    banner: prompt ? bannerFromWarnings(prompt.warnings, state.banner) : null,
  };
  if (prompt) {
    next.chat = [...state.chat, promptItem(prompt)];
  }
  return next;
}

export function applyCreate(_previous: ViewState, response: CreateSessionResponse): ViewState {
  const base: ViewState = {
    ...initialState(),
    sessionId: response.session_id,
    status: response.status,
    plan: response.plan.tasks,
    chat: [
      {
        kind: "info",
        text: `Plan (${response.plan.provenance}): ${response.plan.tasks.join(" -> ")}`,
      },
    ],
  };
  return withPrompt(base, response.prompt ?? null);
}

export function applyTurn(state: ViewState, sent: string, response: TurnResponse): ViewState {
  let next: ViewState = {
    ...state,
    status: response.status,
    pendingDecision: null,
    error: null,
    chat: [...state.chat, { kind: "answer", text: sent }],
  };
  if (response.report) {
    next = { ...next, report: response.report, prompt: null, banner: null };
  } else {
    next = withPrompt(next, response.prompt ?? null);
  }
  return next;
}

export function applyQa(state: ViewState, question: string, answer: QaAnswer): ViewState {
  // a Q&A exchange threads into the chat without touching the wizard
  return {
    ...state,
    chat: [
      ...state.chat,
      { kind: "qa-question", text: question },
      {
        kind: "qa-answer",
        text: answer.answer,
        meta: answer.grounded ? `citations: ${answer.citations.join(", ")}` : "ungrounded",
      },
    ],
  };
}

export function applyProposal(state: ViewState, response: AutopilotResponse): ViewState {
  const decision = response.decision ?? null;
  let note: string | null = null;
  if (decision && decision.kind === "handoff") {
    note = `manual control required (${decision.handoff_reason})`;
  }
  return { ...state, pendingDecision: decision, autopilotNote: note };
}

export function applyAutopilotResult(state: ViewState, response: AutopilotResponse): ViewState {
  let next: ViewState = {
    ...state,
    status: response.status,
    pendingDecision: null,
    autopilotNote: response.termination ? `autopilot: ${response.termination}` : state.autopilotNote,
    error: null,
  };
  if (response.report) {
    next = { ...next, report: response.report, prompt: null, banner: null };
  } else {
    next = withPrompt(next, response.prompt ?? null);
  }
  return next;
}

export function applyError(state: ViewState, code: string, message: string): ViewState {
  return {
    ...state,
    error: { code, message },
    chat: [...state.chat, { kind: "error", text: `[${code}] ${message}` }],
  };
}

export function setBannerChecked(state: ViewState, checked: boolean): ViewState {
  if (!state.banner) {
    return state;
  }
  return { ...state, banner: { ...state.banner, checked } };
}

// The Continue control (which posts /ack) stays disabled until the
// acknowledgment checkbox is ticked; this is the only path to /ack.
export function continueEnabled(state: ViewState): boolean {
  return state.banner !== null && state.banner.checked;
}

export function awaitingAck(state: ViewState): boolean {
  return state.status === "awaiting_ack";
}

const QA_PREFIX = /^\s*q\s*:/i;

export function isQaMessage(text: string): boolean {
  return QA_PREFIX.test(text);
}

export function reportSections(report: Record<string, unknown>): { title: string; body: string }[] {
  const order = [
    "decisions",
    "designed_guides",
    "off_target",
    "primers",
    "protocol",
    "acknowledgments",
    "artifacts",
    "turns",
  ];
  const sections: { title: string; body: string }[] = [];
  for (const key of order) {
    if (key in report && report[key] != null) {
      sections.push({ title: key.replace(/_/g, " "), body: JSON.stringify(report[key], null, 2) });
    }
  }
  return sections;
}
