/** DOM wiring: render the console state, forward clicks to the controller,
 * and poll on a timer (1s default, ?poll=<ms> to change). */

import { ApiClient } from "./api";
import { renderChartSvg } from "./chart";
import { ConsoleController } from "./controller";
import type { ConsoleState } from "./state";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderStats(state: ConsoleState): void {
  const stats = state.stats;
  el("stat-triples").textContent = stats ? String(stats.triples) : "-";
  el("stat-entities").textContent = stats ? String(stats.entities) : "-";
  el("stat-relations").textContent = stats ? String(stats.relations) : "-";
  el("stat-sessions").textContent = stats ? String(stats.sessions_completed) : "-";
  el("revision").textContent = state.revision >= 0 ? `rev ${state.revision}` : "";
}

function renderTraining(state: ConsoleState): void {
  const training = state.training;
  if (!training) {
    el("training-line").textContent = "status unknown";
    return;
  }
  const pieces = [
    `mode: ${training.mode}`,
    `battery: ${training.battery.toFixed(0)}%`,
    `clock: ${training.clock} min`,
    `new facts: ${training.acquired_since_last_train}`,
  ];
  if (training.training_due) pieces.push("training queued");
  el("training-line").textContent = pieces.join("  |  ");
}

function renderQuestion(state: ConsoleState, correction: HTMLInputElement): void {
  const card = el("question-card");
  const idle = el("idle-view");
  if (state.question) {
    card.style.display = "";
    idle.style.display = "none";
    el("question-text").textContent = state.question.text;
  } else {
    card.style.display = "none";
    idle.style.display = "";
    correction.value = "";
  }
  const error = el("inline-error");
  error.textContent = state.inlineError ?? "";
  error.style.display = state.inlineError ? "" : "none";
  (el<HTMLButtonElement>("btn-yes")).disabled = state.submitting;
  (el<HTMLButtonElement>("btn-no")).disabled = state.submitting;
}

function renderAck(state: ConsoleState): void {
  const banner = el("ack-banner");
  if (!state.lastAck) {
    banner.style.display = "none";
    return;
  }
  banner.style.display = "";
  const t = state.lastAck.committed;
  el("ack-text").textContent = state.lastAck.added
    ? `added (${t.head}, ${t.relation}, ${t.tail})`
    : `already knew (${t.head}, ${t.relation}, ${t.tail})`;
}

function renderChart(state: ConsoleState): void {
  const values = state.sessions.map((s) => s.best_dev_mrr);
  el("chart").innerHTML = values.length ? renderChartSvg(values) : "<p>no sessions yet</p>";
  el("chart-caption").textContent = values.length
    ? `best dev MRR over ${values.length} session(s)`
    : "";
}

export function startConsole(baseUrl = "", pollMs = 1000): ConsoleController {
  const api = new ApiClient(baseUrl);
  const controller = new ConsoleController(api);
  const correction = el<HTMLInputElement>("correction");

  controller.subscribe((state) => {
    el("retry-banner").style.display = state.connected ? "none" : "";
    renderStats(state);
    renderTraining(state);
    renderQuestion(state, correction);
    renderAck(state);
    renderChart(state);
  });

  el("btn-yes").addEventListener("click", () => void controller.submit("yes"));
  el("btn-no").addEventListener("click", () => {
    const text = correction.value;
    const problem = controller.validate("no", text);
    if (problem) {
      el("inline-error").textContent = problem;
      el("inline-error").style.display = "";
      return;
    }
    void controller.submit("no", text.trim());
  });
  el("btn-detect").addEventListener("click", () => {
    const input = el<HTMLInputElement>("detect-label");
    const label = input.value.trim();
    if (!label) return;
    input.value = "";
    void api.injectDetection(label).then(() => controller.poll());
  });

  void controller.poll();
  window.setInterval(() => void controller.poll(), pollMs);
  return controller;
}

if (typeof document !== "undefined" && document.getElementById("question-card")) {
  const params = new URLSearchParams(window.location.search);
  const pollMs = Number(params.get("poll") ?? "1000") || 1000;
  startConsole("", pollMs);
}
