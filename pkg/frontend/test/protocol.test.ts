import { describe, expect, it } from "vitest";

import {
  EVENT_KINDS,
  isValidControl,
  parseServerFrame,
  startFrame,
  steerFrame,
  takeOverFrame,
} from "../src/protocol.js";

describe("parseServerFrame", () => {
  it("parses STATE frames", () => {
    const frame = parseServerFrame(
      '{"type":"STATE","t":1.0,"s":27.78,"y":0.1,"heading":0.01,"speed":27.78,"mode":"AUTOMATED","target_lane":0.0}',
    );
    expect(frame).not.toBeNull();
    expect(frame!.type).toBe("STATE");
  });

  it("parses every EVENT kind", () => {
    for (const kind of EVENT_KINDS) {
      const frame = parseServerFrame(`{"type":"EVENT","t":2.5,"kind":"${kind}"}`);
      expect(frame).toMatchObject({ type: "EVENT", kind });
    }
  });

  it("rejects unknown event kinds", () => {
    expect(parseServerFrame('{"type":"EVENT","t":1,"kind":"EXPLOSION"}')).toBeNull();
  });

  it("parses RESULT, BUSY, ERROR and CONFIG", () => {
    expect(
      parseServerFrame('{"type":"RESULT","failed":false,"record":{"tc":1}}'),
    ).toMatchObject({ type: "RESULT", failed: false });
    expect(parseServerFrame('{"type":"BUSY"}')).toEqual({ type: "BUSY" });
    expect(parseServerFrame('{"type":"ERROR","reason":"x"}')).toEqual({
      type: "ERROR",
      reason: "x",
    });
    expect(
      parseServerFrame(
        '{"type":"CONFIG","road":{"lane_width":3.5,"marking_gap_start":1,"marking_gap_end":2},"timeline":{"warning_time":6.04,"tor_time":7.96,"lane_change_start":4,"episode_max_duration":30},"dt":0.02,"broadcast_interval":0.05}',
      ),
    ).toMatchObject({ type: "CONFIG", dt: 0.02 });
  });

  it("ignores garbage and non-finite numbers", () => {
    expect(parseServerFrame("not json")).toBeNull();
    expect(parseServerFrame('{"type":"WHAT"}')).toBeNull();
    expect(parseServerFrame('{"type":"STATE","t":null}')).toBeNull();
  });
});

describe("control frames", () => {
  it("take-over frame is schema-valid", () => {
    expect(isValidControl(takeOverFrame())).toBe(true);
  });

  it("steer frames clamp to the hardware range", () => {
    expect(steerFrame(10000)).toEqual({ type: "CONTROL", kind: "STEER", swa: 540 });
    expect(steerFrame(-10000)).toEqual({ type: "CONTROL", kind: "STEER", swa: -540 });
    expect(isValidControl(steerFrame(123.4))).toBe(true);
  });

  it("validator rejects malformed frames", () => {
    expect(isValidControl({ type: "CONTROL", kind: "STEER", swa: NaN })).toBe(false);
    expect(isValidControl({ type: "CONTROL", kind: "STEER", swa: 600 })).toBe(false);
    expect(isValidControl({ type: "CONTROL", kind: "STEER" })).toBe(false);
    expect(isValidControl({ type: "CONTROL", kind: "TAKE_OVER", extra: 1 })).toBe(false);
    expect(isValidControl({ type: "STATE" })).toBe(false);
  });

  it("start frame carries seed and overrides", () => {
    expect(startFrame(7, { dt: 0.02 })).toEqual({
      type: "START",
      seed: 7,
      overrides: { dt: 0.02 },
    });
  });
});
