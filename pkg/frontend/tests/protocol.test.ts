// Codec conformance against the shared golden fixtures. The same three
// files pin the service's Python codec, so a pass here means both ends
// agree byte for byte on every message kind.

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import {
  DecodeError,
  decodeBinary,
  decodeBinaryStream,
  decodeEnvelope,
  decodeLines,
  encodePoseLine,
  encodeProbeLine,
  formatFloat,
} from "../src/protocol.js";

const fixture = (name: string): string =>
  fileURLToPath(new URL(`../../tests/fixtures/${name}`, import.meta.url));

const goldenLines = readFileSync(fixture("golden.jsonl"), "utf-8")
  .split("\n")
  .filter((l) => l.length > 0);
const goldenBin = new Uint8Array(readFileSync(fixture("golden.bin")));
const reference = JSON.parse(readFileSync(fixture("golden_envelopes.json"), "utf-8"));

describe("text decoding", () => {
  it("decodes every golden line to the reference envelope", () => {
    expect(goldenLines.length).toBe(reference.length);
    goldenLines.forEach((line, i) => {
      expect(decodeEnvelope(line)).toEqual(reference[i]);
    });
  });

  it("decodes a whole replay file", () => {
    const envs = decodeLines(readFileSync(fixture("replay_c4.jsonl"), "utf-8"));
    expect(envs.length).toBeGreaterThan(40);
    expect(envs[0].kind).toBe("episode_event");
  });

  it("rejects malformed envelopes", () => {
    expect(() => decodeEnvelope("not json")).toThrow(DecodeError);
    expect(() => decodeEnvelope("[1,2]")).toThrow(DecodeError);
    expect(() => decodeEnvelope('{"seq":-1,"t_send":0,"kind":"a","payload":{}}'))
      .toThrow(DecodeError);
    expect(() => decodeEnvelope('{"seq":0.5,"t_send":0,"kind":"a","payload":{}}'))
      .toThrow(DecodeError);
    expect(() => decodeEnvelope('{"seq":0,"t_send":0,"kind":"","payload":{}}'))
      .toThrow(DecodeError);
    expect(() => decodeEnvelope('{"seq":0,"t_send":0,"kind":"a","payload":[]}'))
      .toThrow(DecodeError);
    expect(() => decodeEnvelope('{"seq":0,"t_send":0,"payload":{}}'))
      .toThrow(DecodeError);
  });
});

describe("binary decoding", () => {
  it("decodes the golden stream to the reference envelopes", () => {
    expect(decodeBinaryStream(goldenBin)).toEqual(reference);
  });

  it("raises DecodeError for every truncation of the first frame", () => {
    const view = new DataView(goldenBin.buffer, goldenBin.byteOffset);
    const frameLen = 4 + view.getUint32(0);
    for (let cut = 0; cut < frameLen; cut++) {
      expect(() => decodeBinary(goldenBin.subarray(0, cut))).toThrow(DecodeError);
      try {
        decodeBinary(goldenBin.subarray(0, cut));
      } catch (err) {
        expect((err as DecodeError).offset).toBe(cut);
      }
    }
  });

  it("rejects stray bytes inside a frame", () => {
    const view = new DataView(goldenBin.buffer, goldenBin.byteOffset);
    const frameLen = 4 + view.getUint32(0);
    const padded = new Uint8Array(frameLen + 1);
    padded.set(goldenBin.subarray(0, frameLen));
    new DataView(padded.buffer).setUint32(0, view.getUint32(0) + 1);
    expect(() => decodeBinary(padded)).toThrow(/length mismatch/);
  });

  it("rejects unassigned kind ids", () => {
    const frame = goldenBin.slice(0, 4 + new DataView(goldenBin.buffer).getUint32(0));
    frame[4] = 99;
    expect(() => decodeBinary(frame)).toThrow(/unknown kind id 99/);
  });
});

describe("outbound encoding", () => {
  it("reproduces the golden hand_pose line exactly", () => {
    const want = goldenLines.find((l) => l.includes('"hand_pose"'))!;
    expect(encodePoseLine(3, 60000, [0.01, -0.02, 0.25], 0.5)).toBe(want);
  });

  it("reproduces the golden latency_probe line exactly", () => {
    const want = goldenLines.find((l) => l.includes('"latency_probe"'))!;
    expect(encodeProbeLine(41, 1234567, 998877)).toBe(want);
  });

  it("round-trips freshly encoded poses through the decoder", () => {
    for (let i = 0; i < 200; i++) {
      const pos: [number, number, number] = [
        Math.sin(i) * 0.01,
        -i * 1e-6,
        0.05 + i * 0.001,
      ];
      const env = decodeEnvelope(encodePoseLine(i, i * 16667, pos, 0));
      expect(env.seq).toBe(i);
      expect(env.payload["position"]).toEqual(pos);
    }
  });
});

describe("float text form", () => {
  // These must match the service's JSON encoder digit for digit.
  const cases: [number, string][] = [
    [0, "0.0"],
    [-0, "-0.0"],
    [1, "1.0"],
    [42, "42.0"],
    [-17, "-17.0"],
    [0.5, "0.5"],
    [0.125, "0.125"],
    [0.0001, "0.0001"],
    [0.00009999, "9.999e-05"],
    [1e-5, "1e-05"],
    [3.5e-7, "3.5e-07"],
    [-2.356194490192345, "-2.356194490192345"],
    [0.7853981633974483, "0.7853981633974483"],
    [1e15, "1000000000000000.0"],
    [1e16, "1e+16"],
    [2.5e16, "2.5e+16"],
    [1.5e300, "1.5e+300"],
    [-4.2e-123, "-4.2e-123"],
  ];

  it.each(cases)("formats %s as %s", (x, want) => {
    expect(formatFloat(x)).toBe(want);
  });

  it("refuses non-finite values", () => {
    expect(() => formatFloat(Infinity)).toThrow(RangeError);
    expect(() => formatFloat(NaN)).toThrow(RangeError);
  });
});
