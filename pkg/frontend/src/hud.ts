// Session heads-up display: one mutable state object fed envelopes in
// arrival order, and pure view helpers that turn it into drawable data.
// The HUD shows only what actually arrived — force trace from sensor
// frames, RTT from echoed probes, status from episode events.

import type { Envelope } from "./protocol.js";
import type { CompassState, Telemetry } from "./compass.js";
import { applyTelemetry, initialCompass } from "./compass.js";

export interface TracePoint {
  t: number; // session seconds, from the sensor frame itself
  mag: number; // |F| in newtons
}

export const TRACE_WINDOW_S = 10.0;
export const CONTACT_THRESHOLD_N = 2.0;

const TERMINAL_EVENTS = new Set(["success", "fracture", "buckle", "timeout"]);

export class SessionState {
  status = "waiting";
  taskName = "";
  condition = "";
  startedAtMs = 0;
  trace: TracePoint[] = [];
  compass: CompassState = initialCompass("");
  rttMs: number | null = null;
  seqGaps = 0;
  private lastSeq = new Map<string, number>();

  /** Fold one received envelope into the display state. */
  apply(env: Envelope, nowMs: number): void {
    const prev = this.lastSeq.get(env.kind);
    if (prev !== undefined && env.seq > prev + 1) {
      this.seqGaps += env.seq - prev - 1;
    }
    this.lastSeq.set(env.kind, env.seq);

    switch (env.kind) {
      case "episode_event": {
        const event = env.payload["event"];
        if (event === "session_start") {
          this.status = "running";
          this.startedAtMs = nowMs;
          const cond = env.payload["condition"];
          const task = env.payload["task"];
          if (typeof cond === "string") {
            this.condition = cond;
            this.compass = initialCompass(cond);
          }
          if (typeof task === "string") this.taskName = task;
        } else if (typeof event === "string" && TERMINAL_EVENTS.has(event)) {
          this.status = event;
        } else if (event === "abort") {
          this.status = "aborted";
        }
        break;
      }
      case "sensor_frame": {
        const f = env.payload["f"];
        const t = env.payload["t"];
        if (Array.isArray(f) && f.length === 3 && typeof t === "number") {
          const [fx, fy, fz] = f as number[];
          this.trace.push({ t, mag: Math.hypot(fx, fy, fz) });
          const cutoff = t - TRACE_WINDOW_S;
          while (this.trace.length > 0 && this.trace[0].t < cutoff) {
            this.trace.shift();
          }
        }
        break;
      }
      case "device_telemetry": {
        const { t, angle, amplitude } = env.payload as Record<string, unknown>;
        if (
          typeof t === "number" &&
          typeof angle === "number" &&
          typeof amplitude === "number"
        ) {
          const telemetry: Telemetry = { t, angle, amplitude };
          this.compass = applyTelemetry(this.compass, telemetry, nowMs);
        }
        break;
      }
      case "latency_probe": {
        const tProbe = env.payload["t_probe"];
        if (typeof tProbe === "number") {
          this.rttMs = nowMs - tProbe / 1000;
        }
        break;
      }
      default:
        break;
    }
  }

  elapsedS(nowMs: number): number {
    if (this.status === "waiting" || this.startedAtMs === 0) return 0;
    return (nowMs - this.startedAtMs) / 1000;
  }
}

export interface TraceView {
  points: { x: number; y: number }[]; // normalized to [0,1] x [0,1]
  thresholdY: number; // y of the contact-threshold line
  maxN: number; // top of the displayed scale in newtons
}

/** Scale the force trace into the unit square, newest sample at x=1. */
export function traceView(trace: readonly TracePoint[]): TraceView {
  if (trace.length === 0) {
    return { points: [], thresholdY: 1, maxN: CONTACT_THRESHOLD_N * 2 };
  }
  const tEnd = trace[trace.length - 1].t;
  const tStart = tEnd - TRACE_WINDOW_S;
  let maxN = CONTACT_THRESHOLD_N * 2;
  for (const p of trace) maxN = Math.max(maxN, p.mag);
  const points = trace.map((p) => ({
    x: Math.max(0, Math.min(1, (p.t - tStart) / TRACE_WINDOW_S)),
    y: 1 - Math.max(0, Math.min(1, p.mag / maxN)),
  }));
  return { points, thresholdY: 1 - CONTACT_THRESHOLD_N / maxN, maxN };
}

const STATUS_LABELS: Record<string, string> = {
  waiting: "waiting for session",
  running: "running",
  success: "SUCCESS",
  fracture: "FRACTURE",
  buckle: "BUCKLE",
  timeout: "TIMEOUT",
  aborted: "aborted",
};

export function statusLabel(status: string): string {
  return STATUS_LABELS[status] ?? status;
}
