// Session HUD state: status transitions, the rolling force trace, RTT
// readout, and sequence-gap accounting.

import { describe, expect, it } from "vitest";
import {
  CONTACT_THRESHOLD_N,
  SessionState,
  TRACE_WINDOW_S,
  statusLabel,
  traceView,
} from "../src/hud.js";
import type { Envelope } from "../src/protocol.js";

function env(kind: string, payload: Record<string, unknown>, seq = 0): Envelope {
  return { seq, t_send: 0, kind, payload };
}

function sensorFrame(seq: number, t: number, f: [number, number, number]): Envelope {
  return env(
    "sensor_frame",
    { t, tactile: [0, 0, 0], f, tau: [0, 0, 0], pos: [0, 0, 0.05] },
    seq,
  );
}

describe("status transitions", () => {
  it("starts waiting, runs on session_start, ends on a terminal event", () => {
    const s = new SessionState();
    expect(s.status).toBe("waiting");
    s.apply(
      env("episode_event", {
        event: "session_start",
        condition: "C2",
        task: "key",
        seed: 4,
        t: 0,
      }),
      100,
    );
    expect(s.status).toBe("running");
    expect(s.condition).toBe("C2");
    expect(s.taskName).toBe("key");
    expect(s.compass.condition).toBe("C2");
    expect(s.elapsedS(2600)).toBeCloseTo(2.5, 9);

    s.apply(env("episode_event", { event: "fracture", t: 2.5 }, 1), 2600);
    expect(s.status).toBe("fracture");
    expect(statusLabel(s.status)).toBe("FRACTURE");
  });

  it("shows aborts distinctly", () => {
    const s = new SessionState();
    s.apply(env("episode_event", { event: "abort", t: 1.0 }), 0);
    expect(s.status).toBe("aborted");
    expect(statusLabel("aborted")).toBe("aborted");
  });

  it("labels every terminal state", () => {
    expect(statusLabel("success")).toBe("SUCCESS");
    expect(statusLabel("timeout")).toBe("TIMEOUT");
    expect(statusLabel("buckle")).toBe("BUCKLE");
    expect(statusLabel("waiting")).toBe("waiting for session");
  });
});

describe("force trace", () => {
  it("records |F| per frame and prunes beyond the window", () => {
    const s = new SessionState();
    for (let i = 0; i <= 750; i++) {
      s.apply(sensorFrame(i, i * 0.02, [3, 4, 0]), i * 20);
    }
    // 15 s of frames at 50 Hz; only the trailing window survives
    const span = s.trace[s.trace.length - 1].t - s.trace[0].t;
    expect(span).toBeLessThanOrEqual(TRACE_WINDOW_S);
    expect(span).toBeGreaterThan(TRACE_WINDOW_S - 0.1);
    expect(s.trace[0].mag).toBe(5);
  });

  it("scales into the unit square with the threshold line placed", () => {
    const s = new SessionState();
    s.apply(sensorFrame(0, 0.0, [0, 0, 1]), 0);
    s.apply(sensorFrame(1, 0.02, [0, 0, 8]), 20);
    const view = traceView(s.trace);
    expect(view.maxN).toBe(8);
    for (const p of view.points) {
      expect(p.x).toBeGreaterThanOrEqual(0);
      expect(p.x).toBeLessThanOrEqual(1);
      expect(p.y).toBeGreaterThanOrEqual(0);
      expect(p.y).toBeLessThanOrEqual(1);
    }
    expect(view.thresholdY).toBeCloseTo(1 - CONTACT_THRESHOLD_N / 8, 9);
    // newest point sits at the right edge, at the top of the scale
    const last = view.points[view.points.length - 1];
    expect(last.x).toBe(1);
    expect(last.y).toBe(0);
  });

  it("keeps a sane scale with no data", () => {
    const view = traceView([]);
    expect(view.points).toEqual([]);
    expect(view.maxN).toBeGreaterThanOrEqual(CONTACT_THRESHOLD_N);
  });
});

describe("latency and gaps", () => {
  it("derives RTT from an echoed probe timestamp", () => {
    const s = new SessionState();
    // probe left at t=5.000 s (microseconds), echo seen 3.25 ms later
    s.apply(env("latency_probe", { t_probe: 5_000_000 }), 5003.25);
    expect(s.rttMs).toBeCloseTo(3.25, 9);
  });

  it("counts per-kind sequence gaps without flagging interleaving", () => {
    const s = new SessionState();
    s.apply(sensorFrame(0, 0, [0, 0, 0]), 0);
    s.apply(env("haptic_cmd", { theta: 0, amplitude: 0 }, 0), 1);
    s.apply(sensorFrame(1, 0.02, [0, 0, 0]), 20);
    expect(s.seqGaps).toBe(0);
    s.apply(sensorFrame(4, 0.08, [0, 0, 0]), 80);
    expect(s.seqGaps).toBe(2);
    s.apply(env("haptic_cmd", { theta: 0, amplitude: 0 }, 1), 81);
    expect(s.seqGaps).toBe(2);
  });

  it("ignores unknown kinds without crashing", () => {
    const s = new SessionState();
    s.apply(env("future_kind", { x: 1 }), 0);
    expect(s.status).toBe("waiting");
  });
});
