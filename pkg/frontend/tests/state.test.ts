import { describe, expect, it } from "vitest";

import type { CreateSessionResponse, Prompt, TurnResponse } from "../src/api.js";
import {
  applyCreate,
  applyProposal,
  applyQa,
  applyTurn,
  continueEnabled,
  initialState,
  isQaMessage,
  reportSections,
  setBannerChecked,
} from "../src/state.js";

const gatePrompt: Prompt = {
  task_name: "knockout.StateStep1",
  state_id: "knockout.StateStep1.organism",
  instruction: "Which organism or cell line does this knockout experiment target?",
  input: { kind: "acknowledgment" },
  warnings: [
    {
      kind: "human_organism_gate",
      text: "You indicated a human editing target. Read the moratorium before proceeding.",
      reference: "https://example.test/moratorium",
    },
  ],
  status: "awaiting_ack",
};

const choicePrompt: Prompt = {
  task_name: "knockout.StateStep1",
  state_id: "knockout.StateStep1.system",
  instruction: "Select the CRISPR nuclease system.",
  input: { kind: "choice", options: ["Cas9", "Cas12a"] },
  warnings: [],
  status: "awaiting_input",
};

const created: CreateSessionResponse = {
  session_id: "abc123",
  status: "awaiting_ack",
  plan: {
    tasks: ["knockout.StateStep1", "knockout.StateStep2"],
    provenance: "meta_pipeline",
    repair_log: [],
  },
  prompt: gatePrompt,
  created: true,
};

describe("banner gating", () => {
  it("shows an unchecked banner when the gate warning arrives", () => {
    const state = applyCreate(initialState(), created);
    expect(state.banner).not.toBeNull();
    expect(state.banner!.checked).toBe(false);
    expect(continueEnabled(state)).toBe(false);
  });

  it("enables Continue only after the checkbox is ticked", () => {
    let state = applyCreate(initialState(), created);
    state = setBannerChecked(state, true);
    expect(continueEnabled(state)).toBe(true);
    state = setBannerChecked(state, false);
    expect(continueEnabled(state)).toBe(false);
  });

  it("clears the banner when the next prompt has no warning", () => {
    let state = applyCreate(initialState(), created);
    const turn: TurnResponse = {
      outcome: "accepted",
      status: "awaiting_input",
      prompt: choicePrompt,
    };
    state = applyTurn(state, "I acknowledge", turn);
    expect(state.banner).toBeNull();
    expect(state.prompt!.input.options).toEqual(["Cas9", "Cas12a"]);
  });
});

describe("chat threading", () => {
  it("threads Q&A exchanges without replacing the prompt", () => {
    let state = applyCreate(initialState(), created);
    const before = state.prompt;
    state = applyQa(state, "Q: What is Cas12a?", {
      answer: "A type V nuclease.",
      citations: ["cas12a:0"],
      scores: { "cas12a:0": 2.5 },
      grounded: true,
    });
    expect(state.prompt).toBe(before);
    const kinds = state.chat.map((c) => c.kind);
    expect(kinds).toContain("qa-question");
    expect(kinds).toContain("qa-answer");
  });

  it("recognizes Q: prefixes case- and whitespace-insensitively", () => {
    expect(isQaMessage("Q: What is Cas12a?")).toBe(true);
    expect(isQaMessage("  q:  why TTTV?")).toBe(true);
    expect(isQaMessage("Cas12a")).toBe(false);
    expect(isQaMessage("quit")).toBe(false);
  });
});

describe("autopilot and report views", () => {
  it("marks handoff decisions as manual-control notes", () => {
    let state = applyCreate(initialState(), created);
    state = applyProposal(state, {
      transcript: [],
      status: "awaiting_input",
      decision: {
        kind: "handoff",
        answer: null,
        handoff_reason: "requests_sequence",
        thoughts: "sequence input required",
      },
    });
    expect(state.autopilotNote).toContain("requests_sequence");
    expect(state.pendingDecision!.kind).toBe("handoff");
  });

  it("switches to the report view on completion", () => {
    let state = applyCreate(initialState(), created);
    const done: TurnResponse = {
      outcome: "completed",
      status: "completed",
      report: { decisions: [], designed_guides: [{ spacer: "x" }], artifacts: {}, turns: [] },
    };
    state = applyTurn(state, "I acknowledge", done);
    expect(state.report).not.toBeNull();
    expect(state.prompt).toBeNull();
    const titles = reportSections(state.report!).map((s) => s.title);
    expect(titles[0]).toBe("decisions");
    expect(titles).toContain("designed guides");
  });
});
