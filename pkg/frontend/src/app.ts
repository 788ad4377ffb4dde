// DOM wiring: renders the view state and forwards user actions.

import { ApiError, GatewayClient } from "./api.js";
import { ConsolePoller } from "./poller.js";
import {
  ConsoleViewState,
  answerChanged,
  canSubmit,
  connectionLost,
  initialState,
  noQueryPending,
  queryArrived,
  statusUpdated,
  submitRejected,
  submitStarted,
  submitSucceeded,
} from "./state.js";
import { validateAnswer } from "./validation.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function featureRows(features: Record<string, number | string>): string {
  return Object.entries(features)
    .map(([name, value]) => {
      const shown = typeof value === "number" ? value.toPrecision(4) : String(value);
      return `<tr><td>${name}</td><td>${shown}</td></tr>`;
    })
    .join("");
}

function historyLine(history: [number, number][], width = 560, height = 160): string {
  if (history.length === 0) return "";
  const maxRound = Math.max(1, ...history.map(([r]) => r));
  const xs = (r: number) => 10 + (r / maxRound) * (width - 20);
  const ys = (c: number) => height - 10 - Math.min(Math.max(c, 0), 1) * (height - 20);
  const points = history.map(([r, c]) => `${xs(r).toFixed(1)},${ys(c).toFixed(1)}`).join(" ");
  const dots = history
    .map(([r, c]) => `<circle cx="${xs(r).toFixed(1)}" cy="${ys(c).toFixed(1)}" r="3" />`)
    .join("");
  return `<polyline fill="none" stroke="currentColor" stroke-width="1.5" points="${points}" />${dots}`;
}

export function startConsole(baseUrl: string): void {
  const client = new GatewayClient(baseUrl);
  let state = initialState();

  const banner = el<HTMLDivElement>("banner");
  const queryPanel = el<HTMLDivElement>("query-panel");
  const waiting = el<HTMLDivElement>("waiting");
  const features = el<HTMLTableSectionElement>("features");
  const censoring = el<HTMLSpanElement>("censoring");
  const answer = el<HTMLInputElement>("answer");
  const submit = el<HTMLButtonElement>("submit");
  const message = el<HTMLDivElement>("message");
  const roundLabel = el<HTMLSpanElement>("round");
  const cIndexLabel = el<HTMLSpanElement>("c-index");
  const chart = el<SVGElement & HTMLElement>("chart");

  function render(): void {
    banner.hidden = state.connected;
    banner.textContent = state.connected ? "" : (state.message ?? "Connecting...");

    const pending = state.pending;
    queryPanel.hidden = pending === null;
    waiting.hidden = pending !== null;
    if (pending) {
      features.innerHTML = featureRows(pending.original_features);
      censoring.textContent = String(pending.censoring_time);
      answer.min = String(pending.censoring_time);
    }
    if (answer.value !== state.answerInput) answer.value = state.answerInput;
    submit.disabled = !canSubmit(state);
    submit.textContent = state.submission === "sending" ? "Sending..." : "Submit label";
    message.textContent = state.submission === "error" ? (state.message ?? "") : "";

    roundLabel.textContent = String(state.status.round);
    cIndexLabel.textContent =
      state.status.c_index === null ? "-" : state.status.c_index.toFixed(4);
    chart.innerHTML = historyLine(state.status.history);
  }

  function update(next: ConsoleViewState): void {
    state = next;
    render();
  }

  answer.addEventListener("input", () => update(answerChanged(state, answer.value)));

  submit.addEventListener("click", async () => {
    const pending = state.pending;
    if (!pending) return;
    const check = validateAnswer(state.answerInput, pending.censoring_time);
    if (!check.ok) {
      update(submitRejected(state, check.reason));
      return;
    }
    update(submitStarted(state));
    try {
      await client.submitAnswer(pending.query_id, check.eventTime);
      update(submitSucceeded(state));
    } catch (err) {
      const reason = err instanceof ApiError ? err.detail : String(err);
      update(submitRejected(state, reason));
    }
  });

  const poller = new ConsolePoller(client, {
    onQuery: (query) => update(query ? queryArrived(state, query) : noQueryPending(state)),
    onStatus: (status) => update(statusUpdated(state, status)),
    onError: (reason) => update(connectionLost(state, reason)),
  });
  poller.start();
  render();
}
