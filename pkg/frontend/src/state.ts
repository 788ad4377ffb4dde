// Console view state and its transitions. Every displayed value originates
// from a service response; the transitions never invent data.

import type { PendingQuery, RunStatus } from "./api.js";
import { validateAnswer } from "./validation.js";

export type SubmissionState = "idle" | "sending" | "error";

export interface ConsoleViewState {
  pending: PendingQuery | null;
  answerInput: string;
  status: RunStatus;
  submission: SubmissionState;
  message: string | null; // inline validation or connection banner text
  connected: boolean;
}

export function initialState(): ConsoleViewState {
  return {
    pending: null,
    answerInput: "",
    status: { round: 0, c_index: null, history: [] },
    submission: "idle",
    message: null,
    connected: false,
  };
}

export function queryArrived(state: ConsoleViewState, query: PendingQuery): ConsoleViewState {
  if (state.pending?.query_id === query.query_id) {
    return { ...state, connected: true };
  }
  return {
    ...state,
    pending: query,
    answerInput: "",
    submission: "idle",
    message: null,
    connected: true,
  };
}

export function noQueryPending(state: ConsoleViewState): ConsoleViewState {
  return { ...state, pending: null, connected: true };
}

export function connectionLost(state: ConsoleViewState, reason: string): ConsoleViewState {
  return { ...state, connected: false, message: `Connection problem: ${reason}` };
}

export function answerChanged(state: ConsoleViewState, text: string): ConsoleViewState {
  const next: ConsoleViewState = { ...state, answerInput: text };
  if (state.submission === "error") {
    next.submission = "idle";
    next.message = null;
  }
  return next;
}

// Submit stays disabled until the input passes the same check the server runs.
export function canSubmit(state: ConsoleViewState): boolean {
  if (state.pending === null || state.submission === "sending") {
    return false;
  }
  return validateAnswer(state.answerInput, state.pending.censoring_time).ok;
}

export function submitStarted(state: ConsoleViewState): ConsoleViewState {
  return { ...state, submission: "sending", message: null };
}

export function submitSucceeded(state: ConsoleViewState): ConsoleViewState {
  return { ...state, pending: null, answerInput: "", submission: "idle", message: null };
}

export function submitRejected(state: ConsoleViewState, reason: string): ConsoleViewState {
  return { ...state, submission: "error", message: reason };
}

export function statusUpdated(state: ConsoleViewState, status: RunStatus): ConsoleViewState {
  for (let i = 1; i < status.history.length; i++) {
    const prev = status.history[i - 1];
    const here = status.history[i];
    if (prev !== undefined && here !== undefined && here[0] <= prev[0]) {
      throw new Error(`history rounds must increase: ${prev[0]} then ${here[0]}`);
    }
  }
  return { ...state, status, connected: true };
}
