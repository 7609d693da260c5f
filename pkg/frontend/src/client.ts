// Session socket: newline-delimited JSON frames over a WebSocket.

import { ControlFrame, ServerFrame, StartFrame, parseServerFrame } from "./protocol.js";

/** Split incoming text into lines and hand complete ones to the callback;
 * partial trailing lines are buffered. */
export function createLineParser(onLine: (line: string) => void) {
  let buffer = "";
  return {
    feed(chunk: string): void {
      buffer += chunk;
      const lines = buffer.split("\n");
      buffer = lines.pop() ?? "";
      for (const line of lines) {
        const trimmed = line.trim();
        if (trimmed) onLine(trimmed);
      }
    },
    flushRemainder(): void {
      const trimmed = buffer.trim();
      buffer = "";
      if (trimmed) onLine(trimmed);
    },
  };
}

export interface SessionCallbacks {
  onFrame: (frame: ServerFrame) => void;
  onClose: () => void;
  onConnectError: (message: string) => void;
}

export class SessionSocket {
  private ws: WebSocket | null = null;
  private parser = createLineParser((line) => {
    const frame = parseServerFrame(line);
    if (frame) this.callbacks.onFrame(frame);
  });

  constructor(private readonly callbacks: SessionCallbacks) {}

  connect(baseUrl: string, start: StartFrame): void {
    const wsUrl = baseUrl.replace(/^http/, "ws").replace(/\/$/, "") + "/session";
    try {
      this.ws = new WebSocket(wsUrl);
    } catch (err) {
      this.callbacks.onConnectError(String(err));
      return;
    }
    this.ws.onopen = () => this.sendRaw(start);
    this.ws.onmessage = (ev) => {
      if (typeof ev.data === "string") {
        this.parser.feed(ev.data);
        this.parser.flushRemainder(); // each message carries whole frames
      }
    };
    this.ws.onclose = () => this.callbacks.onClose();
    this.ws.onerror = () => this.callbacks.onConnectError("connection failed");
  }

  send(frame: ControlFrame | { type: "ABORT" }): void {
    this.sendRaw(frame);
  }

  private sendRaw(frame: object): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(frame) + "\n");
    }
  }

  close(): void {
    this.ws?.close();
    this.ws = null;
  }
}
