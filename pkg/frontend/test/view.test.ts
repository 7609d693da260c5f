import { describe, expect, it } from "vitest";

import {
  ConfigFrame,
  EVENT_KINDS,
  EventFrame,
  ResultFrame,
  StateFrame,
} from "../src/protocol.js";
import {
  bannerFor,
  checklistRows,
  eventLabel,
  hazardSeen,
  initialView,
  reduce,
  resultRows,
} from "../src/view.js";

const state = (t: number, mode: StateFrame["mode"]): StateFrame => ({
  type: "STATE",
  t,
  s: 27.78 * t,
  y: 0,
  heading: 0,
  speed: 27.78,
  mode,
  target_lane: 0,
});

const event = (t: number, kind: EventFrame["kind"]): EventFrame => ({
  type: "EVENT",
  t,
  kind,
});

const RESULT: ResultFrame = {
  type: "RESULT",
  failed: false,
  record: {
    tc: 1, to: 1, to_t2: 10.23, delta_t2: 2.27, del_to: 1,
    swa: 12.5144, h: 0, h_t3: 0, delta_t3: 0,
  },
  labels: {
    del_to: 1, steer_class: "OK", mj: 0, fr: 1, fm: 1,
    controllability: "PROVIDED",
  },
  checklist: {
    answers: { "1": "YES", "2": "YES", "3": "YES", "4": "YES", "5": "YES",
               "6": "N/A", "7": "NO", "8": "NO", "9": "NO", "10": "YES" },
    evidence: {},
  },
  session_id: "session_0001",
  log_url: "/logs/session_0001",
};

describe("view reducer", () => {
  it("renders every event kind with a distinct label", () => {
    const labels = EVENT_KINDS.map(eventLabel);
    expect(labels.every((l) => typeof l === "string" && l.length > 0)).toBe(true);
    expect(new Set(labels).size).toBe(EVENT_KINDS.length);
    let view = initialView();
    for (const [i, kind] of EVENT_KINDS.entries()) {
      view = reduce(view, event(i, kind));
    }
    expect(view.events).toHaveLength(EVENT_KINDS.length);
  });

  it("banner follows the warning -> TOR -> MRM sequence", () => {
    let view = initialView();
    expect(bannerFor(view).tone).toBe("idle");
    view = reduce(view, state(6.05, "WARNING_ISSUED"));
    expect(bannerFor(view).tone).toBe("warning");
    view = reduce(view, state(7.96, "TOR_ISSUED"));
    expect(bannerFor(view).tone).toBe("critical");
    expect(bannerFor(view).text).toMatch(/take over/i);
    view = reduce(view, state(12.96, "REDUCED_FUNCTIONALITY_MRM"));
    expect(bannerFor(view).text).toMatch(/minimal risk/i);
    view = reduce(view, state(26.9, "STOPPED"));
    expect(bannerFor(view).tone).toBe("done");
  });

  it("stale STATE frames are ignored", () => {
    let view = initialView();
    view = reduce(view, state(5.0, "AUTOMATED"));
    view = reduce(view, state(4.0, "AUTOMATED"));
    expect(view.latest!.t).toBe(5.0);
  });

  it("tracks hazards from events", () => {
    let view = initialView();
    expect(hazardSeen(view)).toBe(false);
    view = reduce(view, event(10.4, "HAZARD_WEST"));
    expect(hazardSeen(view)).toBe(true);
  });

  it("BUSY and ERROR surface as notices", () => {
    let view = reduce(initialView(), { type: "BUSY" });
    expect(view.notice).toMatch(/already running/i);
    view = reduce(initialView(), { type: "ERROR", reason: "expected START" });
    expect(view.notice).toMatch(/expected START/);
  });
});

describe("result summary", () => {
  it("shows the record row, labels and controllability verdict", () => {
    const rows = Object.fromEntries(resultRows(RESULT));
    expect(rows["TO_t2 [s]"]).toBe("10.2300");
    expect(rows["delta_T2 [s]"]).toBe("2.2700");
    expect(rows["DelTO"]).toBe("1");
    expect(rows["H"]).toBe("0");
    expect(rows["controllability"]).toBe("PROVIDED");
    expect(rows["false recognition"]).toBe("1");
  });

  it("summary for a non-response session shows TO=0", () => {
    const noTo: ResultFrame = {
      ...RESULT,
      record: { ...RESULT.record!, to: 0, to_t2: 0, delta_t2: 0, del_to: 0 },
      labels: { ...RESULT.labels!, controllability: "NOT_APPLICABLE" },
    };
    const rows = Object.fromEntries(resultRows(noTo));
    expect(rows["TO"]).toBe("0");
    expect(rows["controllability"]).toBe("NOT_APPLICABLE");
  });

  it("failed results degrade to an error row", () => {
    const failed: ResultFrame = { type: "RESULT", failed: true, error: "ABORTED" };
    expect(resultRows(failed)).toEqual([["status", "ABORTED"]]);
  });

  it("checklist rows are ordered by question number", () => {
    const rows = checklistRows(RESULT);
    expect(rows[0][0]).toBe("Q1");
    expect(rows[9]).toEqual(["Q10", "YES"]);
  });

  it("banner reports completion once a result arrives", () => {
    const view = reduce(initialView(), RESULT);
    expect(bannerFor(view).tone).toBe("done");
  });
});

describe("config handling", () => {
  it("stores road geometry for rendering", () => {
    const config: ConfigFrame = {
      type: "CONFIG",
      road: { lane_width: 3.5, marking_gap_start: 167.8, marking_gap_end: 467.8 },
      timeline: {
        warning_time: 6.04, tor_time: 7.96,
        lane_change_start: 4.0, episode_max_duration: 30.0,
      },
      dt: 0.02,
      broadcast_interval: 0.05,
    };
    const view = reduce(initialView(), config);
    expect(view.config!.road.lane_width).toBe(3.5);
  });
});
