// Keyboard steering: discrete increments in place of wheel hardware. Key
// presses update local steering state immediately; control frames are
// flushed at most one per broadcast tick.

import { ControlFrame, MAX_SWA, steerFrame, takeOverFrame } from "./protocol.js";

export interface InputBindingConfig {
  takeOverKeys: string[];
  leftKeys: string[];
  rightKeys: string[];
  centerKeys: string[];
  stepDegrees: number;
}

export const DEFAULT_BINDINGS: InputBindingConfig = {
  takeOverKeys: ["t", "Enter", " "],
  leftKeys: ["ArrowLeft", "a"],
  rightKeys: ["ArrowRight", "d"],
  centerKeys: ["ArrowDown", "s"],
  stepDegrees: 2,
};

export class SteeringInput {
  private swa = 0;
  private steerPending = false;
  private takeOverPending = false;
  private takeOverSent = false;

  constructor(private readonly bindings: InputBindingConfig = DEFAULT_BINDINGS) {}

  /** Current local steering angle (for the cockpit display only). */
  get currentSwa(): number {
    return this.swa;
  }

  get hasTakenOver(): boolean {
    return this.takeOverSent;
  }

  /** Feed one key press; returns true when the key is bound. */
  handleKey(key: string): boolean {
    const b = this.bindings;
    if (b.takeOverKeys.includes(key)) {
      if (!this.takeOverSent) this.takeOverPending = true;
      return true;
    }
    if (b.leftKeys.includes(key)) {
      this.swa = Math.min(MAX_SWA, this.swa + b.stepDegrees);
      this.steerPending = true;
      return true;
    }
    if (b.rightKeys.includes(key)) {
      this.swa = Math.max(-MAX_SWA, this.swa - b.stepDegrees);
      this.steerPending = true;
      return true;
    }
    if (b.centerKeys.includes(key)) {
      this.swa = 0;
      this.steerPending = true;
      return true;
    }
    return false;
  }

  /**
   * Emit the pending control frame, if any. Called once per broadcast tick,
   * so at most one frame leaves per tick; the take-over (sent exactly once)
   * takes priority over a steering update.
   */
  flush(): ControlFrame | null {
    if (this.takeOverPending && !this.takeOverSent) {
      this.takeOverPending = false;
      this.takeOverSent = true;
      return takeOverFrame();
    }
    if (this.steerPending) {
      this.steerPending = false;
      return steerFrame(this.swa);
    }
    return null;
  }

  reset(): void {
    this.swa = 0;
    this.steerPending = false;
    this.takeOverPending = false;
    this.takeOverSent = false;
  }
}
