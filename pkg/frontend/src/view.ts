// Pure view model: the rendered picture is a function of the frames
// received so far (plus the local steering display value). No physics, no
// label computation happens here.

import {
  ConfigFrame,
  EventFrame,
  EventKind,
  ResultFrame,
  ServerFrame,
  StateFrame,
} from "./protocol.js";

export interface ViewState {
  config: ConfigFrame | null;
  latest: StateFrame | null;
  events: EventFrame[];
  result: ResultFrame | null;
  notice: string | null; // BUSY / ERROR surface
  closed: boolean;
}

export function initialView(): ViewState {
  return { config: null, latest: null, events: [], result: null, notice: null, closed: false };
}

export function reduce(view: ViewState, frame: ServerFrame): ViewState {
  switch (frame.type) {
    case "CONFIG":
      return { ...view, config: frame };
    case "STATE":
      if (view.latest && frame.t < view.latest.t) return view; // stale frame
      return { ...view, latest: frame };
    case "EVENT":
      return { ...view, events: [...view.events, frame] };
    case "RESULT":
      return { ...view, result: frame };
    case "BUSY":
      return { ...view, notice: "Another session is already running.", closed: true };
    case "ERROR":
      return { ...view, notice: `Session error: ${frame.reason}`, closed: true };
  }
}

export const EVENT_LABELS: Record<EventKind, string> = {
  GAP_ENTRY: "Entered unclear lane markings",
  WARNING: "Lane departure warning",
  TOR: "Take-over request issued",
  TAKE_OVER: "Driver took over",
  HAZARD_EAST: "Lane departure east",
  HAZARD_WEST: "Lane departure west",
  MRM_START: "Minimal risk maneuver started",
  MRM_STOPPED: "Vehicle stopped",
  EPISODE_END: "Episode finished",
};

export function eventLabel(kind: EventKind): string {
  return EVENT_LABELS[kind];
}

export interface Banner {
  text: string;
  tone: "idle" | "warning" | "critical" | "driver" | "done";
}

export function bannerFor(view: ViewState): Banner {
  if (view.result) {
    return view.result.failed
      ? { text: `Session failed: ${view.result.error ?? "unknown"}`, tone: "critical" }
      : { text: "Session complete", tone: "done" };
  }
  const mode = view.latest?.mode;
  switch (mode) {
    case "WARNING_ISSUED":
      return { text: "WARNING: unclear lane markings", tone: "warning" };
    case "TOR_ISSUED":
      return { text: "TAKE OVER NOW", tone: "critical" };
    case "DRIVER_CONTROL":
      return { text: "Driver in control", tone: "driver" };
    case "REDUCED_FUNCTIONALITY_MRM":
      return { text: "Minimal risk maneuver", tone: "critical" };
    case "STOPPED":
      return { text: "Vehicle stopped", tone: "done" };
    default:
      return { text: "Automated driving", tone: "idle" };
  }
}

export function hazardSeen(view: ViewState): boolean {
  return view.events.some((e) => e.kind === "HAZARD_EAST" || e.kind === "HAZARD_WEST");
}

/** Table rows for the post-session summary; everything comes from the frame. */
export function resultRows(result: ResultFrame): Array<[string, string]> {
  if (result.failed || !result.record || !result.labels) {
    return [["status", result.error ?? "failed"]];
  }
  const r = result.record;
  const l = result.labels;
  const f = (v: number) => v.toFixed(4);
  return [
    ["TC", String(r.tc)],
    ["TO", String(r.to)],
    ["TO_t2 [s]", f(r.to_t2)],
    ["delta_T2 [s]", f(r.delta_t2)],
    ["DelTO", String(r.del_to)],
    ["SWA [deg]", f(r.swa)],
    ["H", String(r.h)],
    ["H_t3 [s]", f(r.h_t3)],
    ["delta_T3 [s]", f(r.delta_t3)],
    ["steering class", l.steer_class],
    ["misjudgment", String(l.mj)],
    ["false recognition", String(l.fr)],
    ["foreseeable misuse", String(l.fm)],
    ["controllability", l.controllability],
  ];
}

export function checklistRows(result: ResultFrame): Array<[string, string]> {
  if (!result.checklist) return [];
  return Object.entries(result.checklist.answers)
    .sort(([a], [b]) => Number(a) - Number(b))
    .map(([q, answer]) => [`Q${q}`, answer]);
}
