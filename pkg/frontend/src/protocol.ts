// Wire protocol client. The service speaks newline-delimited JSON
// envelopes (one per WebSocket text frame, newline stripped) and an
// equivalent binary framing; both decoders here are pinned to the same
// golden fixtures the service's own codec is tested against.
//
// The console never re-encodes arbitrary envelopes — it only produces
// its two outbound kinds (hand_pose, latency_probe), for which the
// canonical byte form (sorted keys, compact separators, Python-style
// float text) is built explicitly.

export interface Envelope {
  seq: number;
  t_send: number;
  kind: string;
  payload: Record<string, unknown>;
}

export class DecodeError extends Error {
  readonly offset: number;

  constructor(message: string, offset: number) {
    super(`${message} at offset ${offset}`);
    this.name = "DecodeError";
    this.offset = offset;
  }
}

export const KINDS = [
  "hand_pose",
  "sensor_frame",
  "haptic_cmd",
  "device_telemetry",
  "episode_event",
  "latency_probe",
  "action",
] as const;

export const WS_PORT = 7422;

// ---------------------------------------------------------------------------
// text codec

function isPlainObject(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

/** Decode one envelope from its JSON line (no trailing newline). */
export function decodeEnvelope(text: string): Envelope {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (err) {
    throw new DecodeError(`bad JSON: ${(err as Error).message}`, 0);
  }
  if (!isPlainObject(obj)) {
    throw new DecodeError("envelope must be a JSON object", 0);
  }
  const { seq, t_send: tSend, kind, payload } = obj as Record<string, unknown>;
  if (typeof seq !== "number" || !Number.isInteger(seq) || seq < 0) {
    throw new DecodeError("seq must be a non-negative integer", 0);
  }
  if (typeof tSend !== "number" || !Number.isInteger(tSend) || tSend < 0) {
    throw new DecodeError("t_send must be a non-negative integer", 0);
  }
  if (typeof kind !== "string" || kind.length === 0) {
    throw new DecodeError("kind must be a non-empty string", 0);
  }
  if (!isPlainObject(payload)) {
    throw new DecodeError("payload must be a JSON object", 0);
  }
  return { seq, t_send: tSend, kind, payload };
}

/** Split a text stream into envelopes; used for replaying saved lines. */
export function decodeLines(text: string): Envelope[] {
  return text
    .split("\n")
    .filter((line) => line.length > 0)
    .map(decodeEnvelope);
}

// ---------------------------------------------------------------------------
// canonical outbound encoding
//
// Matches the service encoder byte for byte: keys sorted, "," / ":"
// separators, floats in Python repr form (shortest round-trip, a ".0"
// suffix on integral values, exponent notation outside [1e-4, 1e16)
// with a sign and at least two exponent digits).

export function formatFloat(x: number): string {
  if (!Number.isFinite(x)) {
    throw new RangeError(`cannot encode non-finite float ${x}`);
  }
  if (Object.is(x, -0)) return "-0.0";
  const ax = Math.abs(x);
  if (x !== 0 && (ax >= 1e16 || ax < 1e-4)) {
    return x.toExponential().replace(/e([+-])(\d)$/, "e$10$2");
  }
  const s = String(x);
  return Number.isInteger(x) ? `${s}.0` : s;
}

function envelopeLine(seq: number, tSend: number, kind: string, payloadJson: string): string {
  return `{"kind":"${kind}","payload":${payloadJson},"seq":${seq},"t_send":${tSend}}`;
}

export function encodePoseLine(
  seq: number,
  tSendUs: number,
  position: readonly [number, number, number],
  grip = 0.0,
): string {
  const p = position.map(formatFloat).join(",");
  return envelopeLine(seq, tSendUs, "hand_pose",
    `{"grip":${formatFloat(grip)},"position":[${p}]}`);
}

export function encodeProbeLine(seq: number, tSendUs: number, tProbeUs: number): string {
  return envelopeLine(seq, tSendUs, "latency_probe",
    `{"t_probe":${Math.trunc(tProbeUs)}}`);
}

// ---------------------------------------------------------------------------
// binary codec (decode only — the console transport is text frames, but
// fixture conformance pins both framings)

const HEAD_SIZE = 1 + 8 + 8; // kind id u8, seq u64, t_send u64
const UNKNOWN_ID = 0xff;

const VEC_LAYOUT: Record<string, readonly (readonly [string, number])[]> = {
  hand_pose: [["position", 3], ["grip", 1]],
  sensor_frame: [["t", 1], ["tactile", 3], ["f", 3], ["tau", 3], ["pos", 3]],
  haptic_cmd: [["theta", 1], ["amplitude", 1]],
  device_telemetry: [["t", 1], ["angle", 1], ["amplitude", 1]],
  action: [["d", 3]],
};

function toSafeInt(v: bigint, what: string, offset: number): number {
  if (v > BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new DecodeError(`${what} exceeds safe integer range`, offset);
  }
  return Number(v);
}

/**
 * Decode one length-prefixed binary frame starting at `offset`;
 * returns the envelope and the offset just past it. Truncation throws.
 */
export function decodeBinary(buf: Uint8Array, offset = 0): [Envelope, number] {
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const need = (n: number, at: number, what: string): void => {
    if (at + n > buf.length) {
      throw new DecodeError(`truncated frame (${what})`, buf.length);
    }
  };

  need(4, offset, "length prefix");
  const bodyLen = view.getUint32(offset);
  const bodyStart = offset + 4;
  need(bodyLen, bodyStart, "body");
  const end = bodyStart + bodyLen;

  need(HEAD_SIZE, bodyStart, "header");
  const kindId = view.getUint8(bodyStart);
  const seq = toSafeInt(view.getBigUint64(bodyStart + 1), "seq", bodyStart + 1);
  const tSend = toSafeInt(view.getBigUint64(bodyStart + 9), "t_send", bodyStart + 9);
  let at = bodyStart + HEAD_SIZE;

  const readJson = (from: number, what: string): [Record<string, unknown>, number] => {
    need(4, from, what);
    const n = view.getUint32(from);
    need(n, from + 4, what);
    const body = new TextDecoder("utf-8", { fatal: true })
      .decode(buf.subarray(from + 4, from + 4 + n));
    let payload: unknown;
    try {
      payload = JSON.parse(body);
    } catch (err) {
      throw new DecodeError(`bad embedded JSON: ${(err as Error).message}`, from + 4);
    }
    if (!isPlainObject(payload)) {
      throw new DecodeError("embedded payload must be an object", from + 4);
    }
    return [payload, from + 4 + n];
  };

  let kind: string;
  let payload: Record<string, unknown>;
  if (kindId === UNKNOWN_ID) {
    need(2, at, "kind name");
    const nameLen = view.getUint16(at);
    need(nameLen, at + 2, "kind name");
    kind = new TextDecoder("utf-8", { fatal: true })
      .decode(buf.subarray(at + 2, at + 2 + nameLen));
    [payload, at] = readJson(at + 2 + nameLen, "opaque payload");
  } else {
    if (kindId >= KINDS.length) {
      throw new DecodeError(`unknown kind id ${kindId}`, bodyStart);
    }
    kind = KINDS[kindId];
    const layout = VEC_LAYOUT[kind];
    if (layout !== undefined) {
      const nFloats = layout.reduce((acc, [, n]) => acc + n, 0);
      need(8 * nFloats, at, "float payload");
      payload = {};
      for (const [field, n] of layout) {
        if (n === 1) {
          payload[field] = view.getFloat64(at);
        } else {
          const vec: number[] = [];
          for (let i = 0; i < n; i++) vec.push(view.getFloat64(at + 8 * i));
          payload[field] = vec;
        }
        at += 8 * n;
      }
    } else if (kind === "latency_probe") {
      need(8, at, "probe payload");
      payload = { t_probe: toSafeInt(view.getBigUint64(at), "t_probe", at) };
      at += 8;
    } else {
      // episode_event
      [payload, at] = readJson(at, "event payload");
    }
  }

  if (at !== end) {
    throw new DecodeError(`frame length mismatch (${end - at} stray bytes)`, at);
  }
  return [{ seq, t_send: tSend, kind, payload }, end];
}

/** Decode a whole binary stream (fixture conformance helper). */
export function decodeBinaryStream(buf: Uint8Array): Envelope[] {
  const out: Envelope[] = [];
  let offset = 0;
  while (offset < buf.length) {
    const [env, next] = decodeBinary(buf, offset);
    out.push(env);
    offset = next;
  }
  return out;
}
