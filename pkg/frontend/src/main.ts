// Browser entry point: wires the socket, keyboard steering, and the
// canvas widgets together. All rendering state lives in SessionState;
// this file only draws it and pumps input.

import { decodeEnvelope } from "./protocol.js";
import { compassView } from "./compass.js";
import { SessionState, statusLabel, traceView, CONTACT_THRESHOLD_N } from "./hud.js";
import { SteerInput } from "./input.js";
import { ConsoleSocket } from "./socket.js";

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el;
};

const compassCanvas = $("compass") as HTMLCanvasElement;
const traceCanvas = $("trace") as HTMLCanvasElement;
const banner = $("banner");
const sessionInfo = $("session-info");
const rttEl = $("rtt");
const gapsEl = $("gaps");
const timerEl = $("timer");
const connEl = $("conn");

const state = new SessionState();
const input = new SteerInput();
const socket = new ConsoleSocket();

socket.onStatus = (status) => {
  connEl.textContent = status;
  connEl.className = `conn ${status}`;
  if (status === "closed") {
    setTimeout(() => socket.connect(), 1000);
  }
};
// one clock everywhere: epoch milliseconds, same base the probe
// timestamps are stamped in (microseconds) on the way out
const epochMs = (): number => performance.timeOrigin + performance.now();

socket.onMessage = (line) => {
  try {
    state.apply(decodeEnvelope(line), epochMs());
  } catch (err) {
    console.warn("dropped frame:", err);
  }
};
socket.connect();

window.addEventListener("keydown", (ev) => {
  if (ev.repeat) return;
  if (input.keyDown(ev.code)) ev.preventDefault();
});
window.addEventListener("keyup", (ev) => input.keyUp(ev.code));
window.addEventListener("blur", () => input.reset());

setInterval(() => socket.sendProbe(), 1000);

function drawCompass(nowMs: number): void {
  const ctx = compassCanvas.getContext("2d")!;
  const w = compassCanvas.width;
  const h = compassCanvas.height;
  const cx = w / 2;
  const cy = h / 2;
  const r = Math.min(w, h) / 2 - 12;
  ctx.clearRect(0, 0, w, h);

  const view = compassView(state.compass, nowMs);
  if (!view.visible) {
    ctx.fillStyle = "#556";
    ctx.font = "14px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillText("direction cue disabled", cx, cy);
    return;
  }

  const dim = view.stale || view.frozen;
  ctx.strokeStyle = dim ? "#556" : "#8af";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(cx, cy, r, 0, 2 * Math.PI);
  ctx.stroke();
  for (let i = 0; i < 8; i++) {
    const a = (i * Math.PI) / 4;
    ctx.beginPath();
    ctx.moveTo(cx + 0.88 * r * Math.cos(a), cy - 0.88 * r * Math.sin(a));
    ctx.lineTo(cx + r * Math.cos(a), cy - r * Math.sin(a));
    ctx.stroke();
  }

  // needle: screen y grows downward, device angles are CCW-positive
  const a = (view.needleAngleDeg * Math.PI) / 180;
  const len = r * (0.35 + 0.6 * view.intensity);
  ctx.strokeStyle = dim ? "#667" : view.pulsing ? "#fc6" : "#9ab";
  ctx.lineWidth = 4;
  ctx.lineCap = "round";
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(cx + len * Math.cos(a), cy - len * Math.sin(a));
  ctx.stroke();

  ctx.fillStyle = dim ? "#556" : "#8af";
  ctx.font = "12px system-ui, sans-serif";
  ctx.textAlign = "center";
  if (view.frozen) ctx.fillText("frozen", cx, cy + r + 11);
  else if (view.stale) ctx.fillText("stale", cx, cy + r + 11);
}

function drawTrace(): void {
  const ctx = traceCanvas.getContext("2d")!;
  const w = traceCanvas.width;
  const h = traceCanvas.height;
  ctx.clearRect(0, 0, w, h);
  const view = traceView(state.trace);

  ctx.strokeStyle = "#a55";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(0, view.thresholdY * h);
  ctx.lineTo(w, view.thresholdY * h);
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.fillStyle = "#a55";
  ctx.font = "10px system-ui, sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(`${CONTACT_THRESHOLD_N.toFixed(0)} N`, 4, view.thresholdY * h - 3);
  ctx.fillStyle = "#889";
  ctx.fillText(`${view.maxN.toFixed(1)} N`, 4, 10);

  if (view.points.length > 1) {
    ctx.strokeStyle = "#6d9";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    view.points.forEach((p, i) => {
      if (i === 0) ctx.moveTo(p.x * w, p.y * h);
      else ctx.lineTo(p.x * w, p.y * h);
    });
    ctx.stroke();
  }
}

function frame(): void {
  const nowMs = epochMs();
  const pose = input.sample(nowMs);
  if (pose !== null) socket.sendPose(pose.position, pose.grip);

  drawCompass(nowMs);
  drawTrace();
  banner.textContent = statusLabel(state.status);
  banner.className = `banner ${state.status}`;
  sessionInfo.textContent =
    state.taskName === "" ? "—" : `${state.taskName} / ${state.condition}`;
  rttEl.textContent = state.rttMs === null ? "—" : `${state.rttMs.toFixed(1)} ms`;
  gapsEl.textContent = String(state.seqGaps);
  timerEl.textContent = `${state.elapsedS(nowMs).toFixed(1)} s`;

  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
