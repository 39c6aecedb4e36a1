// Compass needle state. The needle is a readout, not a computation:
// whatever angle the device telemetry reports is what gets drawn, so
// the display can never disagree with the wearable about where the cue
// points. All this module adds is presentation policy — visibility per
// condition, a frozen style, and staleness when telemetry stops.

export interface Telemetry {
  t: number;
  angle: number; // radians, device frame
  amplitude: number; // 0..1 drive level
}

export interface CompassState {
  telemetry: Telemetry | null;
  receivedAtMs: number; // wall clock of the last telemetry frame
  condition: string;
}

export interface CompassView {
  visible: boolean;
  frozen: boolean;
  stale: boolean;
  needleAngleDeg: number;
  intensity: number; // 0..1; drives glow
  pulsing: boolean; // amplitude > 0 and fresh
}

export const STALE_AFTER_MS = 500;

export function initialCompass(condition = "C4"): CompassState {
  return { telemetry: null, receivedAtMs: 0, condition };
}

export function applyTelemetry(
  state: CompassState,
  telemetry: Telemetry,
  nowMs: number,
): CompassState {
  return { ...state, telemetry, receivedAtMs: nowMs };
}

export function compassView(state: CompassState, nowMs: number): CompassView {
  const { telemetry, condition } = state;
  const stale =
    telemetry === null || nowMs - state.receivedAtMs > STALE_AFTER_MS;
  const angle = telemetry === null ? 0 : telemetry.angle;
  const amplitude = telemetry === null ? 0 : telemetry.amplitude;
  return {
    visible: condition !== "C1",
    frozen: condition === "C2" || condition === "C3",
    stale,
    needleAngleDeg: (angle * 180) / Math.PI,
    intensity: Math.max(0, Math.min(1, amplitude)),
    pulsing: amplitude > 0 && !stale,
  };
}
