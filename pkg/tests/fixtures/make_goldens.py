#!/usr/bin/env python3
"""Generate the frozen protocol fixtures.

Run once from this directory; the outputs are committed and must never
be regenerated silently — the whole point is that encoder changes show
up as fixture diffs. Three files share one envelope list:

    golden_envelopes.json  documented envelopes (readable reference)
    golden.jsonl           the same envelopes through the text codec
    golden.bin             the same envelopes through the binary codec

The browser client's fixture tests read these files too, so they pin
both sides of the wire to identical bytes.
"""

import json
import pathlib

from forcecompass import protocol

HERE = pathlib.Path(__file__).parent

ENVELOPES = [
    protocol.Envelope(seq=0, t_send=0, kind="episode_event", payload={
        "t": 0.0, "event": "session_start", "task": "key",
        "task_kind": "insertion", "condition": "C4", "seed": 7,
    }),
    protocol.Envelope(seq=0, t_send=0, kind="sensor_frame", payload={
        "t": 0.0, "tactile": [0.0, 0.0, 0.0], "f": [0.0, 0.0, 0.0],
        "tau": [0.0, 0.0, 0.0], "pos": [0.001, -0.002, 0.08],
    }),
    protocol.Envelope(seq=3, t_send=60000, kind="hand_pose", payload={
        "position": [0.01, -0.02, 0.25], "grip": 0.5,
    }),
    protocol.Envelope(seq=2, t_send=40000, kind="haptic_cmd", payload={
        "theta": -2.356194490192345, "amplitude": 0.125,
    }),
    protocol.Envelope(seq=2, t_send=40000, kind="device_telemetry", payload={
        "t": 0.04, "angle": 0.7853981633974483, "amplitude": 0.125,
    }),
    protocol.Envelope(seq=2, t_send=40000, kind="action", payload={
        "d": [0.0025, -0.001, -0.0025],
    }),
    protocol.Envelope(seq=41, t_send=1234567, kind="latency_probe", payload={
        "t_probe": 998877,
    }),
    protocol.Envelope(seq=17, t_send=2840000, kind="sensor_frame", payload={
        "t": 2.84, "tactile": [1.25, -0.5, -3.75], "f": [1.25, -0.5, -6.25],
        "tau": [0.095, 0.2375, 0.0], "pos": [0.0003, -0.0001, 0.0675],
    }),
    protocol.Envelope(seq=1, t_send=4000000, kind="episode_event", payload={
        "t": 4.0, "event": "fracture",
    }),
    # tiny magnitudes exercise exponent formatting on both sides
    protocol.Envelope(seq=5, t_send=100000, kind="haptic_cmd", payload={
        "theta": 1e-05, "amplitude": 3.5e-07,
    }),
    # unknown kinds must survive both codecs opaquely
    protocol.Envelope(seq=9, t_send=77, kind="future_kind", payload={
        "x": [1, 2.5], "note": "forward-compat pass-through ↗",
    }),
]


def main():
    doc = [{"seq": e.seq, "t_send": e.t_send, "kind": e.kind, "payload": e.payload}
           for e in ENVELOPES]
    (HERE / "golden_envelopes.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n")
    (HERE / "golden.jsonl").write_bytes(
        b"".join(protocol.encode_line(e) for e in ENVELOPES))
    (HERE / "golden.bin").write_bytes(
        b"".join(protocol.encode_binary(e) for e in ENVELOPES))
    print(f"wrote {len(ENVELOPES)} envelopes to 3 fixture files")


if __name__ == "__main__":
    main()
