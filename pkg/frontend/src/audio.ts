// Auditory cues for the warning and the take-over request.

let ctx: AudioContext | null = null;

function audioContext(): AudioContext | null {
  if (typeof AudioContext === "undefined") return null;
  if (!ctx) ctx = new AudioContext();
  return ctx;
}

function beep(frequency: number, startIn: number, duration: number): void {
  const ac = audioContext();
  if (!ac) return;
  const osc = ac.createOscillator();
  const gain = ac.createGain();
  osc.frequency.value = frequency;
  osc.connect(gain);
  gain.connect(ac.destination);
  gain.gain.value = 0.12;
  osc.start(ac.currentTime + startIn);
  osc.stop(ac.currentTime + startIn + duration);
}

export function warningCue(): void {
  beep(660, 0, 0.35);
}

export function torCue(): void {
  beep(880, 0, 0.18);
  beep(880, 0.28, 0.18);
  beep(880, 0.56, 0.18);
}
