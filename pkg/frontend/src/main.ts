// Console wiring: client + state + rendering. Served next to the API or
// pointed at it via ?api=<base-url>.

import { ApiError, Client } from "./api.js";
import {
  applyAutopilotResult,
  applyCreate,
  applyError,
  applyProposal,
  applyQa,
  applyTurn,
  initialState,
  isQaMessage,
  setBannerChecked,
  ViewState,
} from "./state.js";
import { Handlers, render } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "";
const client = new Client(apiBase);

let state: ViewState = initialState();
let metaPrompt = "";

function update(next: ViewState): void {
  state = next;
  render(state, handlers);
}

function surface(err: unknown): void {
  if (err instanceof ApiError) {
    update(applyError(state, err.code, err.message));
  } else {
    update(applyError(state, "connection_error", String(err)));
  }
}

async function sendWorkflowAnswer(text: string, override = false): Promise<void> {
  if (!state.sessionId) return;
  try {
    if (isQaMessage(text)) {
      const response = await client.submitTurn(state.sessionId, text);
      if (response.outcome === "qa" && response.qa) {
        update(applyQa(state, text, response.qa));
      }
      return;
    }
    const response = override
      ? await client.override(state.sessionId, text)
      : await client.submitTurn(state.sessionId, text);
    update(applyTurn(state, text, response));
  } catch (err) {
    surface(err);
  }
}

const handlers: Handlers = {
  onChoice: (label) => void sendWorkflowAnswer(label),
  onFreeText: (text) => {
    // typing while a decision card is pending is the override path
    const override = state.pendingDecision !== null && !isQaMessage(text);
    void sendWorkflowAnswer(text, override);
  },
  onAck: () => {
    if (!state.sessionId || !state.banner?.checked) return;
    client
      .acknowledge(state.sessionId)
      .then((response) => update(applyTurn(state, "I acknowledge", response)))
      .catch(surface);
  },
  onBannerToggle: (checked) => update(setBannerChecked(state, checked)),
  onOverride: (text) => void sendWorkflowAnswer(text, true),
  onProposeStep: () => {
    if (!state.sessionId) return;
    client
      .autopilotPropose(state.sessionId, metaPrompt)
      .then((response) => update(applyProposal(state, response)))
      .catch(surface);
  },
  onAcceptDecision: () => {
    if (!state.sessionId || !state.pendingDecision) return;
    client
      .autopilotApply(state.sessionId, state.pendingDecision)
      .then((response) => update(applyAutopilotResult(state, response)))
      .catch(surface);
  },
  onRunAutopilot: () => {
    if (!state.sessionId) return;
    client
      .autopilotRun(state.sessionId, metaPrompt)
      .then((response) => update(applyAutopilotResult(state, response)))
      .catch(surface);
  },
  onDownloadReport: () => {
    if (!state.sessionId) return;
    client
      .reportRaw(state.sessionId)
      .then((raw) => {
        const blob = new Blob([raw], { type: "application/json" });
        const url = URL.createObjectURL(blob);
        const link = document.createElement("a");
        link.href = url;
        link.download = `design-report-${state.sessionId}.json`;
        link.click();
        URL.revokeObjectURL(url);
      })
      .catch(surface);
  },
};

function startFlow(): void {
  const mode = (document.getElementById("mode") as HTMLSelectElement).value;
  const metaTask = (document.getElementById("meta-task") as HTMLSelectElement).value;
  const request = (document.getElementById("request") as HTMLInputElement).value;
  metaPrompt = request;
  const body =
    mode === "meta"
      ? { mode: "meta" as const, request, meta_task: metaTask }
      : { mode: "auto" as const, request };
  client
    .createSession(body)
    .then((response) => update(applyCreate(state, response)))
    .catch(surface);
}

function runOffTargetTool(): void {
  const spacer = (document.getElementById("tool-spacer") as HTMLInputElement).value;
  const cas = (document.getElementById("tool-cas") as HTMLSelectElement).value;
  const out = document.getElementById("tool-output");
  client
    .offtarget({ spacer, max_mismatches: 3, cas_system: cas })
    .then((report) => {
      if (out) out.textContent = JSON.stringify(report, null, 2);
    })
    .catch((err) => {
      if (out && err instanceof ApiError) out.textContent = `[${err.code}] ${err.message}`;
    });
}

document.getElementById("start")?.addEventListener("click", startFlow);
document.getElementById("tool-run")?.addEventListener("click", runOffTargetTool);
render(state, handlers);
