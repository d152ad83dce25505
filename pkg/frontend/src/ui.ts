// DOM rendering: ViewState in, DOM out. No domain decisions are made here.

import type { Prompt } from "./api.js";
import { continueEnabled, reportSections, ViewState } from "./state.js";

export interface Handlers {
  onChoice(label: string): void;
  onFreeText(text: string): void;
  onAck(): void;
  onBannerToggle(checked: boolean): void;
  onOverride(text: string): void;
  onProposeStep(): void;
  onAcceptDecision(): void;
  onRunAutopilot(): void;
  onDownloadReport(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderChat(state: ViewState, root: HTMLElement): void {
  root.replaceChildren();
  for (const item of state.chat) {
    const row = el("div", `chat-item chat-${item.kind}`);
    if (item.meta) {
      row.appendChild(el("div", "chat-meta", item.meta));
    }
    row.appendChild(el("div", "chat-text", item.text));
    root.appendChild(row);
  }
  root.scrollTop = root.scrollHeight;
}

function renderBanner(state: ViewState, root: HTMLElement, handlers: Handlers): void {
  root.replaceChildren();
  if (!state.banner) {
    root.hidden = true;
    return;
  }
  root.hidden = false;
  const box = el("div", "banner-box");
  box.appendChild(el("p", "banner-text", state.banner.text));
  if (state.banner.reference) {
    const link = el("a", "banner-link", "Read the international moratorium");
    link.setAttribute("href", state.banner.reference);
    link.setAttribute("target", "_blank");
    link.setAttribute("rel", "noreferrer");
    box.appendChild(link);
  }
  const label = el("label", "banner-ack");
  const checkbox = el("input") as HTMLInputElement;
  checkbox.type = "checkbox";
  checkbox.id = "ack-checkbox";
  checkbox.checked = state.banner.checked;
  checkbox.addEventListener("change", () => handlers.onBannerToggle(checkbox.checked));
  label.appendChild(checkbox);
  label.appendChild(
    document.createTextNode(" I have read the warning and understand the risks"),
  );
  box.appendChild(label);
  const cont = el("button", "banner-continue", "Continue") as HTMLButtonElement;
  cont.id = "ack-continue";
  cont.disabled = !continueEnabled(state);
  cont.addEventListener("click", () => handlers.onAck());
  box.appendChild(cont);
  root.appendChild(box);
}

function renderInput(state: ViewState, root: HTMLElement, handlers: Handlers): void {
  root.replaceChildren();
  const prompt: Prompt | null = state.prompt;
  if (!prompt || state.report) {
    return;
  }
  if (state.status === "awaiting_ack") {
    // the banner carries the only acknowledgment path
    return;
  }
  if (prompt.input.kind === "choice") {
    const group = el("div", "choices");
    for (const label of prompt.input.options ?? []) {
      const button = el("button", "choice", label);
      button.addEventListener("click", () => handlers.onChoice(label));
      group.appendChild(button);
    }
    root.appendChild(group);
  }
  const form = el("form", "free-text");
  const field = el("input") as HTMLInputElement;
  field.type = "text";
  field.placeholder =
    prompt.input.kind === "choice"
      ? 'Type an answer, an override, or "Q: ..." to ask a question'
      : 'Your answer (or "Q: ..." to ask a question)';
  const send = el("button", "send", "Send") as HTMLButtonElement;
  form.appendChild(field);
  form.appendChild(send);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (field.value.trim()) {
      handlers.onFreeText(field.value);
      field.value = "";
    }
  });
  root.appendChild(form);
}

function renderAutopilot(state: ViewState, root: HTMLElement, handlers: Handlers): void {
  root.replaceChildren();
  if (state.report || !state.sessionId) {
    return;
  }
  const bar = el("div", "autopilot-bar");
  const propose = el("button", "", "Autopilot: propose next step");
  propose.addEventListener("click", () => handlers.onProposeStep());
  const runAll = el("button", "", "Autopilot: run");
  runAll.addEventListener("click", () => handlers.onRunAutopilot());
  bar.appendChild(propose);
  bar.appendChild(runAll);
  root.appendChild(bar);
  if (state.autopilotNote) {
    root.appendChild(el("div", "autopilot-note", state.autopilotNote));
  }
  const decision = state.pendingDecision;
  if (decision) {
    const card = el("div", "decision-card");
    if (decision.kind === "handoff") {
      card.appendChild(
        el("div", "decision-handoff", `Manual control required: ${decision.handoff_reason}`),
      );
      card.appendChild(el("div", "decision-thoughts", decision.thoughts));
    } else {
      card.appendChild(el("div", "decision-answer", `Proposed answer: ${decision.answer}`));
      card.appendChild(el("div", "decision-thoughts", decision.thoughts));
      const accept = el("button", "decision-accept", "Accept");
      accept.addEventListener("click", () => handlers.onAcceptDecision());
      card.appendChild(accept);
      const hint = el(
        "div",
        "decision-override-hint",
        "To override, type your own answer in the input box instead.",
      );
      card.appendChild(hint);
    }
    root.appendChild(card);
  }
}

function renderReport(state: ViewState, root: HTMLElement, handlers: Handlers): void {
  root.replaceChildren();
  if (!state.report) {
    root.hidden = true;
    return;
  }
  root.hidden = false;
  root.appendChild(el("h2", "", "Design report"));
  const download = el("button", "report-download", "Download raw JSON");
  download.addEventListener("click", () => handlers.onDownloadReport());
  root.appendChild(download);
  for (const section of reportSections(state.report)) {
    const details = el("details", "report-section");
    const summary = el("summary", "", section.title);
    details.appendChild(summary);
    const copy = el("button", "copy", "Copy");
    copy.addEventListener("click", () => {
      void navigator.clipboard.writeText(section.body);
    });
    details.appendChild(copy);
    const pre = el("pre", "", section.body);
    details.appendChild(pre);
    root.appendChild(details);
  }
}

export function render(state: ViewState, handlers: Handlers): void {
  const status = document.getElementById("status");
  if (status) {
    status.textContent = state.sessionId
      ? `session ${state.sessionId.slice(0, 8)} - ${state.status}`
      : "no session";
  }
  const planEl = document.getElementById("plan");
  if (planEl) {
    planEl.replaceChildren();
    state.plan.forEach((task, index) => {
      planEl.appendChild(el("li", "plan-step", `${index + 1}. ${task}`));
    });
  }
  const chat = document.getElementById("chat");
  if (chat) renderChat(state, chat);
  const banner = document.getElementById("banner");
  if (banner) renderBanner(state, banner, handlers);
  const input = document.getElementById("input-area");
  if (input) renderInput(state, input, handlers);
  const pilot = document.getElementById("autopilot");
  if (pilot) renderAutopilot(state, pilot, handlers);
  const report = document.getElementById("report");
  if (report) renderReport(state, report, handlers);
  const errorEl = document.getElementById("error");
  if (errorEl) {
    errorEl.textContent = state.error ? `[${state.error.code}] ${state.error.message}` : "";
  }
}
