import { describe, expect, it } from "vitest";

import { DEFAULT_BINDINGS, SteeringInput } from "../src/input.js";
import { isValidControl } from "../src/protocol.js";

// deterministic PRNG so the fuzz corpus is frozen
function mulberry32(seed: number) {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const FUZZ_KEYS = [
  "t", "Enter", " ", "ArrowLeft", "ArrowRight", "ArrowDown", "a", "d", "s",
  "x", "q", "Escape", "1", "F5", "Shift", "ArrowUp", "", "tt", "A",
];

describe("steering input", () => {
  it("binding arithmetic: increments, decrements, re-center", () => {
    const input = new SteeringInput();
    input.handleKey("ArrowLeft");
    input.handleKey("ArrowLeft");
    input.handleKey("ArrowLeft");
    expect(input.currentSwa).toBe(6);
    expect(input.flush()).toEqual({ type: "CONTROL", kind: "STEER", swa: 6 });
    input.handleKey("ArrowRight");
    expect(input.currentSwa).toBe(4);
    input.handleKey("ArrowDown");
    expect(input.currentSwa).toBe(0);
    expect(input.flush()).toEqual({ type: "CONTROL", kind: "STEER", swa: 0 });
  });

  it("a key press is encoded within the next flush", () => {
    const input = new SteeringInput();
    expect(input.flush()).toBeNull();
    input.handleKey("a");
    expect(input.flush()).not.toBeNull();
    expect(input.flush()).toBeNull(); // nothing pending afterward
  });

  it("take-over is emitted exactly once however often it is pressed", () => {
    const input = new SteeringInput();
    input.handleKey("t");
    input.handleKey("t");
    expect(input.flush()).toEqual({ type: "CONTROL", kind: "TAKE_OVER" });
    input.handleKey("t");
    expect(input.flush()).toBeNull();
  });

  it("steering saturates at the hardware range", () => {
    const input = new SteeringInput();
    for (let i = 0; i < 400; i++) input.handleKey("ArrowLeft");
    expect(input.currentSwa).toBe(540);
    for (let i = 0; i < 900; i++) input.handleKey("ArrowRight");
    expect(input.currentSwa).toBe(-540);
  });

  it("emits only schema-valid frames under 1000 fuzzed key sequences", () => {
    const rand = mulberry32(1234);
    for (let run = 0; run < 1000; run++) {
      const input = new SteeringInput(DEFAULT_BINDINGS);
      let takeovers = 0;
      const presses = 1 + Math.floor(rand() * 60);
      for (let i = 0; i < presses; i++) {
        input.handleKey(FUZZ_KEYS[Math.floor(rand() * FUZZ_KEYS.length)]);
        if (rand() < 0.3) {
          const frame = input.flush(); // at most one frame per tick
          if (frame) {
            expect(isValidControl(frame)).toBe(true);
            if (frame.kind === "TAKE_OVER") takeovers++;
          }
        }
      }
      let frame = input.flush();
      while (frame) {
        expect(isValidControl(frame)).toBe(true);
        if (frame.kind === "TAKE_OVER") takeovers++;
        frame = input.flush();
      }
      expect(takeovers).toBeLessThanOrEqual(1);
      expect(Math.abs(input.currentSwa)).toBeLessThanOrEqual(540);
    }
  });
});
