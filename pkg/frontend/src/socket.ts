// WebSocket session to the service. Outbound envelopes get per-kind
// sequence numbers (the same discipline the service applies to its own
// streams) and microsecond send timestamps; each text frame is one
// JSON envelope with the newline stripped.

import { encodePoseLine, encodeProbeLine } from "./protocol.js";
import type { Vec3 } from "./input.js";

export type SocketStatus = "connecting" | "open" | "closed";

export class ConsoleSocket {
  private ws: WebSocket | null = null;
  private readonly seqs = new Map<string, number>();
  onMessage: (line: string) => void = () => {};
  onStatus: (status: SocketStatus) => void = () => {};

  connect(url = `ws://${location.host}/ws`): void {
    this.seqs.clear(); // each connection is a fresh stream to the service
    this.onStatus("connecting");
    const ws = new WebSocket(url);
    this.ws = ws;
    ws.onopen = () => this.onStatus("open");
    ws.onclose = () => {
      if (this.ws === ws) this.ws = null;
      this.onStatus("closed");
    };
    ws.onmessage = (ev: MessageEvent) => {
      if (typeof ev.data === "string") this.onMessage(ev.data);
    };
  }

  get open(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  private nextSeq(kind: string): number {
    const seq = this.seqs.get(kind) ?? 0;
    this.seqs.set(kind, seq + 1);
    return seq;
  }

  private nowUs(): number {
    return Math.round(performance.timeOrigin * 1000 + performance.now() * 1000);
  }

  sendPose(position: Vec3, grip: number): void {
    if (!this.open) return;
    this.ws!.send(
      encodePoseLine(this.nextSeq("hand_pose"), this.nowUs(), position, grip),
    );
  }

  sendProbe(): void {
    if (!this.open) return;
    const now = this.nowUs();
    this.ws!.send(encodeProbeLine(this.nextSeq("latency_probe"), now, now));
  }

  close(): void {
    this.ws?.close();
    this.ws = null;
  }
}
