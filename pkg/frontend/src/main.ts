// DOM wiring: connects the session socket, keyboard input, canvas renderer,
// banners, event log, and the post-session summary.

import { torCue, warningCue } from "./audio.js";
import { SessionSocket } from "./client.js";
import { DEFAULT_BINDINGS, SteeringInput } from "./input.js";
import { ServerFrame, startFrame } from "./protocol.js";
import { drawScene } from "./render.js";
import {
  ViewState,
  bannerFor,
  checklistRows,
  eventLabel,
  initialView,
  reduce,
  resultRows,
} from "./view.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let view: ViewState = initialView();
const input = new SteeringInput(DEFAULT_BINDINGS);
let socket: SessionSocket | null = null;
let flushTimer: number | null = null;

const canvas = $<HTMLCanvasElement>("scene");
const bannerEl = $<HTMLDivElement>("banner");
const eventsEl = $<HTMLUListElement>("events");
const resultEl = $<HTMLDivElement>("result");
const noticeEl = $<HTMLDivElement>("notice");
const connectBtn = $<HTMLButtonElement>("connect");
const seedInput = $<HTMLInputElement>("seed");

function render(): void {
  drawScene(canvas, view, input.currentSwa);
  const banner = bannerFor(view);
  bannerEl.textContent = banner.text;
  bannerEl.dataset.tone = banner.tone;
  noticeEl.textContent = view.notice ?? "";
  noticeEl.style.display = view.notice ? "block" : "none";
}

function renderEvents(): void {
  eventsEl.innerHTML = "";
  for (const ev of view.events) {
    const li = document.createElement("li");
    li.textContent = `${ev.t.toFixed(2)} s  ${eventLabel(ev.kind)}`;
    eventsEl.appendChild(li);
  }
}

function renderResult(): void {
  resultEl.innerHTML = "";
  const result = view.result;
  if (!result) {
    resultEl.style.display = "none";
    return;
  }
  resultEl.style.display = "block";
  const title = document.createElement("h2");
  title.textContent = result.failed ? "Session failed" : "Test case result";
  resultEl.appendChild(title);

  const table = document.createElement("table");
  for (const [key, value] of resultRows(result)) {
    const row = table.insertRow();
    row.insertCell().textContent = key;
    row.insertCell().textContent = value;
  }
  resultEl.appendChild(table);

  const checks = checklistRows(result);
  if (checks.length) {
    const sub = document.createElement("h3");
    sub.textContent = "Checklist";
    resultEl.appendChild(sub);
    const ctable = document.createElement("table");
    for (const [q, a] of checks) {
      const row = ctable.insertRow();
      row.insertCell().textContent = q;
      row.insertCell().textContent = a;
    }
    resultEl.appendChild(ctable);
  }

  if (result.log_url) {
    const link = document.createElement("a");
    link.href = result.log_url;
    link.download = `${result.session_id ?? "session"}.json`;
    link.textContent = "Download session log";
    resultEl.appendChild(link);
  }
}

function onFrame(frame: ServerFrame): void {
  const before = view;
  view = reduce(view, frame);
  if (frame.type === "EVENT") {
    if (frame.kind === "WARNING") warningCue();
    if (frame.kind === "TOR") torCue();
    renderEvents();
  }
  if (frame.type === "RESULT") {
    stopFlushing();
    renderResult();
  }
  if (frame.type === "CONFIG" && view.config) {
    startFlushing(view.config.broadcast_interval * 1000);
  }
  if (view !== before) render();
}

function startFlushing(intervalMs: number): void {
  stopFlushing();
  flushTimer = window.setInterval(() => {
    const frame = input.flush();
    if (frame && socket) socket.send(frame);
  }, intervalMs);
}

function stopFlushing(): void {
  if (flushTimer !== null) {
    window.clearInterval(flushTimer);
    flushTimer = null;
  }
}

connectBtn.addEventListener("click", () => {
  socket?.close();
  view = initialView();
  input.reset();
  renderEvents();
  renderResult();
  render();
  socket = new SessionSocket({
    onFrame,
    onClose: () => {
      stopFlushing();
      render();
    },
    onConnectError: (message) => {
      view = { ...view, notice: `Connection problem: ${message}` };
      render();
    },
  });
  const seed = Number.parseInt(seedInput.value, 10) || 0;
  socket.connect(window.location.origin, startFrame(seed));
});

window.addEventListener("keydown", (ev) => {
  if (ev.target instanceof HTMLInputElement) return;
  if (input.handleKey(ev.key)) ev.preventDefault();
  render();
});

render();
