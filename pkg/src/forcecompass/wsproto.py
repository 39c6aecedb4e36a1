"""Minimal WebSocket (RFC 6455) and HTTP plumbing, sans I/O.

Everything here transforms bytes; socket handling lives in the service.
Covers what a single-page operator console needs: the upgrade handshake,
text/binary frames with client masking, ping/pong/close, and a tiny
static-file responder for the console bundle. No extensions, no
compression.
"""

from __future__ import annotations

import base64
import hashlib
import mimetypes
import os
import secrets
import struct
from typing import Iterator, Optional

from .errors import DecodeError

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

_CONTROL_OPS = (OP_CLOSE, OP_PING, OP_PONG)
MAX_MESSAGE_BYTES = 1 << 20


def accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


# ---------------------------------------------------------------------------
# HTTP request head parsing and responses


def parse_request_head(data: bytes) -> tuple[str, str, dict[str, str]]:
    """Parse an HTTP/1.1 request head (must include the blank line)."""
    head, sep, _ = data.partition(b"\r\n\r\n")
    if not sep:
        raise DecodeError("incomplete HTTP request head", offset=len(data))
    lines = head.decode("latin-1").split("\r\n")
    parts = lines[0].split(" ")
    if len(parts) != 3:
        raise DecodeError(f"malformed request line: {lines[0]!r}")
    method, target, _version = parts
    headers: dict[str, str] = {}
    for line in lines[1:]:
        name, colon, value = line.partition(":")
        if not colon:
            raise DecodeError(f"malformed header line: {line!r}")
        headers[name.strip().lower()] = value.strip()
    return method, target, headers


def is_upgrade_request(headers: dict[str, str]) -> bool:
    return (headers.get("upgrade", "").lower() == "websocket"
            and "upgrade" in headers.get("connection", "").lower())


def handshake_response(headers: dict[str, str]) -> bytes:
    """The 101 response completing a client's upgrade request."""
    key = headers.get("sec-websocket-key")
    if not key:
        raise DecodeError("upgrade request missing Sec-WebSocket-Key")
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(key)}\r\n"
        "\r\n"
    ).encode("ascii")


def client_handshake(host: str, path: str = "/", key: Optional[str] = None) -> tuple[bytes, str]:
    """Build a client upgrade request; returns (bytes, nonce key)."""
    if key is None:
        key = base64.b64encode(secrets.token_bytes(16)).decode("ascii")
    req = (
        f"GET {path} HTTP/1.1\r\n"
        f"Host: {host}\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Key: {key}\r\n"
        "Sec-WebSocket-Version: 13\r\n"
        "\r\n"
    ).encode("ascii")
    return req, key


def check_handshake_response(data: bytes, key: str) -> None:
    """Validate the server's 101 response against our nonce."""
    head, sep, _ = data.partition(b"\r\n\r\n")
    if not sep:
        raise DecodeError("incomplete handshake response", offset=len(data))
    lines = head.decode("latin-1").split("\r\n")
    if " 101 " not in lines[0] + " ":
        raise DecodeError(f"handshake rejected: {lines[0]!r}")
    for line in lines[1:]:
        name, _, value = line.partition(":")
        if name.strip().lower() == "sec-websocket-accept":
            if value.strip() != accept_key(key):
                raise DecodeError("Sec-WebSocket-Accept mismatch")
            return
    raise DecodeError("response missing Sec-WebSocket-Accept")


def http_response(status: str, body: bytes, content_type: str = "text/plain") -> bytes:
    head = (
        f"HTTP/1.1 {status}\r\n"
        f"Content-Type: {content_type}\r\n"
        f"Content-Length: {len(body)}\r\n"
        "Connection: close\r\n"
        "\r\n"
    ).encode("ascii")
    return head + body


def serve_static(root: str, url_path: str, prefix: str = "/ui") -> bytes:
    """Resolve a GET under ``prefix`` against ``root`` and build the
    response. Refuses traversal outside the root."""
    if url_path == prefix or url_path == prefix + "/":
        url_path = prefix + "/index.html"
    if not url_path.startswith(prefix + "/"):
        return http_response("404 Not Found", b"not found\n")
    rel = url_path[len(prefix) + 1:].split("?", 1)[0]
    full = os.path.realpath(os.path.join(root, rel))
    if os.path.commonpath([full, os.path.realpath(root)]) != os.path.realpath(root):
        return http_response("403 Forbidden", b"forbidden\n")
    if not os.path.isfile(full):
        return http_response("404 Not Found", b"not found\n")
    ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
    with open(full, "rb") as fh:
        return http_response("200 OK", fh.read(), ctype)


# ---------------------------------------------------------------------------
# frame codec


def encode_frame(opcode: int, payload: bytes, mask: bool = False,
                 mask_key: Optional[bytes] = None) -> bytes:
    """One complete (FIN=1) frame. Clients must mask; servers must not."""
    if opcode in _CONTROL_OPS and len(payload) > 125:
        raise DecodeError("control frame payload exceeds 125 bytes")
    head = bytearray([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if mask else 0x00
    if n < 126:
        head.append(mask_bit | n)
    elif n < (1 << 16):
        head.append(mask_bit | 126)
        head += struct.pack(">H", n)
    else:
        head.append(mask_bit | 127)
        head += struct.pack(">Q", n)
    if not mask:
        return bytes(head) + payload
    if mask_key is None:
        mask_key = secrets.token_bytes(4)
    if len(mask_key) != 4:
        raise DecodeError("mask key must be 4 bytes")
    head += mask_key
    masked = bytes(b ^ mask_key[i % 4] for i, b in enumerate(payload))
    return bytes(head) + masked


def encode_text(text: str, mask: bool = False) -> bytes:
    return encode_frame(OP_TEXT, text.encode("utf-8"), mask=mask)


def encode_close(code: int = 1000, mask: bool = False) -> bytes:
    return encode_frame(OP_CLOSE, struct.pack(">H", code), mask=mask)


class FrameParser:
    """Incremental frame reassembler.

    ``feed`` yields (opcode, payload) for every complete message;
    continuation fragments are joined, control frames pass through
    as-is. ``require_mask`` enforces the server-side rule that client
    frames arrive masked.
    """

    def __init__(self, require_mask: bool):
        self.require_mask = require_mask
        self._buf = b""
        self._offset = 0
        self._frag_op: Optional[int] = None
        self._frag: list[bytes] = []

    def feed(self, data: bytes) -> Iterator[tuple[int, bytes]]:
        self._buf += data
        while True:
            frame = self._next_frame()
            if frame is None:
                return
            fin, opcode, payload = frame
            if opcode in _CONTROL_OPS:
                if not fin:
                    raise DecodeError("fragmented control frame", offset=self._offset)
                yield opcode, payload
            elif opcode == OP_CONT:
                if self._frag_op is None:
                    raise DecodeError("continuation without start", offset=self._offset)
                self._frag.append(payload)
                if sum(map(len, self._frag)) > MAX_MESSAGE_BYTES:
                    raise DecodeError("message too large", offset=self._offset)
                if fin:
                    op, body = self._frag_op, b"".join(self._frag)
                    self._frag_op, self._frag = None, []
                    yield op, body
            else:
                if self._frag_op is not None:
                    raise DecodeError("new message inside fragment", offset=self._offset)
                if fin:
                    yield opcode, payload
                else:
                    self._frag_op, self._frag = opcode, [payload]

    def _next_frame(self) -> Optional[tuple[bool, int, bytes]]:
        buf = self._buf
        if len(buf) < 2:
            return None
        b0, b1 = buf[0], buf[1]
        if b0 & 0x70:
            raise DecodeError("reserved bits set (no extensions negotiated)",
                              offset=self._offset)
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        n = b1 & 0x7F
        at = 2
        if n == 126:
            if len(buf) < at + 2:
                return None
            (n,) = struct.unpack_from(">H", buf, at)
            at += 2
        elif n == 127:
            if len(buf) < at + 8:
                return None
            (n,) = struct.unpack_from(">Q", buf, at)
            at += 8
        if n > MAX_MESSAGE_BYTES:
            raise DecodeError("frame too large", offset=self._offset)
        if masked:
            if len(buf) < at + 4:
                return None
            key = buf[at: at + 4]
            at += 4
        elif self.require_mask:
            raise DecodeError("client frame not masked", offset=self._offset)
        else:
            key = None
        if len(buf) < at + n:
            return None
        payload = buf[at: at + n]
        if key is not None:
            payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        self._buf = buf[at + n:]
        self._offset += at + n
        return fin, opcode, payload
