// Session protocol frames, mirroring the server's wire format. The console
// never computes physics or labels: everything displayed originates from
// these frames.

export type AdsMode =
  | "AUTOMATED"
  | "WARNING_ISSUED"
  | "TOR_ISSUED"
  | "DRIVER_CONTROL"
  | "REDUCED_FUNCTIONALITY_MRM"
  | "STOPPED";

export const EVENT_KINDS = [
  "GAP_ENTRY",
  "WARNING",
  "TOR",
  "TAKE_OVER",
  "HAZARD_EAST",
  "HAZARD_WEST",
  "MRM_START",
  "MRM_STOPPED",
  "EPISODE_END",
] as const;

export type EventKind = (typeof EVENT_KINDS)[number];

export interface StateFrame {
  type: "STATE";
  t: number;
  s: number;
  y: number;
  heading: number;
  speed: number;
  mode: AdsMode;
  target_lane: number;
}

export interface EventFrame {
  type: "EVENT";
  t: number;
  kind: EventKind;
}

export interface ConfigFrame {
  type: "CONFIG";
  road: { lane_width: number; marking_gap_start: number; marking_gap_end: number };
  timeline: {
    warning_time: number;
    tor_time: number;
    lane_change_start: number;
    episode_max_duration: number;
  };
  dt: number;
  broadcast_interval: number;
}

export interface CaseRecord {
  tc: number;
  to: number;
  to_t2: number;
  delta_t2: number;
  del_to: number;
  swa: number;
  h: number;
  h_t3: number;
  delta_t3: number;
}

export interface CaseLabels {
  del_to: number;
  steer_class: string;
  mj: number;
  fr: number;
  fm: number;
  controllability: string;
}

export interface Checklist {
  answers: Record<string, string>;
  evidence: Record<string, string>;
}

export interface ResultFrame {
  type: "RESULT";
  failed: boolean;
  record?: CaseRecord;
  labels?: CaseLabels;
  checklist?: Checklist;
  session_id?: string;
  log_url?: string;
  error?: string;
}

export interface BusyFrame {
  type: "BUSY";
}

export interface ErrorFrame {
  type: "ERROR";
  reason: string;
}

export type ServerFrame =
  | StateFrame
  | EventFrame
  | ConfigFrame
  | ResultFrame
  | BusyFrame
  | ErrorFrame;

export const MAX_SWA = 540;

export type ControlFrame =
  | { type: "CONTROL"; kind: "TAKE_OVER" }
  | { type: "CONTROL"; kind: "STEER"; swa: number };

export interface StartFrame {
  type: "START";
  seed: number;
  overrides: Record<string, unknown>;
}

const isFiniteNumber = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);

/** Parse one server frame; unknown or malformed frames yield null. */
export function parseServerFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const frame = data as Record<string, unknown>;
  switch (frame.type) {
    case "STATE": {
      const fields = ["t", "s", "y", "heading", "speed", "target_lane"] as const;
      if (!fields.every((f) => isFiniteNumber(frame[f]))) return null;
      if (typeof frame.mode !== "string") return null;
      return frame as unknown as StateFrame;
    }
    case "EVENT": {
      if (!isFiniteNumber(frame.t)) return null;
      if (!EVENT_KINDS.includes(frame.kind as EventKind)) return null;
      return frame as unknown as EventFrame;
    }
    case "CONFIG":
      if (typeof frame.road !== "object" || typeof frame.timeline !== "object") return null;
      return frame as unknown as ConfigFrame;
    case "RESULT":
      if (typeof frame.failed !== "boolean") return null;
      return frame as unknown as ResultFrame;
    case "BUSY":
      return { type: "BUSY" };
    case "ERROR":
      return { type: "ERROR", reason: String(frame.reason ?? "unknown") };
    default:
      return null;
  }
}

export function takeOverFrame(): ControlFrame {
  return { type: "CONTROL", kind: "TAKE_OVER" };
}

export function steerFrame(swa: number): ControlFrame {
  const clamped = Math.max(-MAX_SWA, Math.min(MAX_SWA, swa));
  return { type: "CONTROL", kind: "STEER", swa: clamped };
}

export function startFrame(seed: number, overrides: Record<string, unknown> = {}): StartFrame {
  return { type: "START", seed, overrides };
}

/** Schema check for outbound control frames (used by the fuzz tests). */
export function isValidControl(frame: unknown): boolean {
  if (typeof frame !== "object" || frame === null) return false;
  const f = frame as Record<string, unknown>;
  if (f.type !== "CONTROL") return false;
  const keys = Object.keys(f).sort();
  if (f.kind === "TAKE_OVER") {
    return keys.join(",") === "kind,type";
  }
  if (f.kind === "STEER") {
    if (keys.join(",") !== "kind,swa,type") return false;
    return isFiniteNumber(f.swa) && Math.abs(f.swa) <= MAX_SWA;
  }
  return false;
}
