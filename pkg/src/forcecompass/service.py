"""Networked node graph: TCP + WebSocket endpoints around a SessionCore.

Topology: per-client reader loops feed one ordered inbox; a single core
loop owns the session (sim, pipeline, device) and is the only code that
touches it; per-client writer loops drain outbound queues. The TCP port
carries newline-delimited JSON envelopes; the WebSocket port carries the
same envelopes one-per-text-frame, and also serves the operator console
bundle over plain HTTP under /ui.

Two tick schedules:
  paced — one tick per received hand_pose (default; replaying a recorded
          pose stream reproduces a lockstep run byte for byte)
  clock — a wall-clock 50 Hz timer ticks with latest-wins pose sampling
          (live operation; not bitwise reproducible by nature)
"""

from __future__ import annotations

import asyncio
import sys
from dataclasses import dataclass
from typing import Optional

from . import protocol, wsproto
from .errors import ConfigError, DecodeError
from .protocol import Envelope
from .session import SessionCore, SessionSetup

TICK_PACED = "paced"
TICK_CLOCK = "clock"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    tcp_port: int = protocol.TCP_PORT
    ws_port: int = protocol.WS_PORT
    tick_mode: str = TICK_PACED
    tick_interval: float = 0.02
    ui_root: Optional[str] = None
    log_path: str = "episode.jsonl.gz"

    def __post_init__(self):
        if self.tick_mode not in (TICK_PACED, TICK_CLOCK):
            raise ConfigError(f"unknown tick mode: {self.tick_mode!r}")
        if self.tick_interval <= 0.0:
            raise ConfigError("tick interval must be > 0")


class _Client:
    """One connected peer: an outbound queue plus its transport flavor."""

    _next_id = 0

    def __init__(self, send_env):
        self.send_env = send_env          # callable(Envelope) -> bytes to write
        self.queue: asyncio.Queue = asyncio.Queue()
        self.sent_pose = False
        _Client._next_id += 1
        self.id = _Client._next_id


class Service:
    """The running node graph. Use ``await Service(...).start()`` then
    ``serve_forever()`` or drive it from tests and ``stop()``."""

    def __init__(self, setup: SessionSetup, cfg: ServiceConfig):
        self.cfg = cfg
        self.core = SessionCore(setup)
        self._inbox: asyncio.Queue = asyncio.Queue()
        self._clients: dict[int, _Client] = {}
        self._servers: list[asyncio.AbstractServer] = []
        self._tasks: list[asyncio.Task] = []
        self._log_written = False
        self.tcp_port: Optional[int] = None
        self.ws_port: Optional[int] = None

    # -- lifecycle ----------------------------------------------------------

    async def start(self) -> None:
        self.core.start()
        tcp = await asyncio.start_server(self._handle_tcp, self.cfg.host, self.cfg.tcp_port)
        web = await asyncio.start_server(self._handle_web, self.cfg.host, self.cfg.ws_port)
        self._servers = [tcp, web]
        self.tcp_port = tcp.sockets[0].getsockname()[1]
        self.ws_port = web.sockets[0].getsockname()[1]
        self._tasks.append(asyncio.create_task(self._core_loop()))
        if self.cfg.tick_mode == TICK_CLOCK:
            self._tasks.append(asyncio.create_task(self._clock_loop()))
        print(f"forcecompass service listening tcp={self.tcp_port} ws={self.ws_port}",
              flush=True)

    async def serve_forever(self) -> None:
        try:
            await asyncio.gather(*(s.serve_forever() for s in self._servers))
        except asyncio.CancelledError:
            pass

    async def stop(self) -> None:
        for s in self._servers:
            s.close()
            await s.wait_closed()
        for t in self._tasks:
            t.cancel()
        await asyncio.gather(*self._tasks, return_exceptions=True)
        self._finish_episode(aborted=not self.core.done)

    def _finish_episode(self, aborted: bool) -> None:
        if aborted:
            self._broadcast(self.core.abort())
        if not self._log_written:
            self._log_written = True
            self.core.write_log(self.cfg.log_path)
            print(f"episode log written: {self.cfg.log_path}", flush=True)

    # -- the single consumer that owns the session --------------------------

    async def _core_loop(self) -> None:
        while True:
            source, env = await self._inbox.get()
            if env is None:                      # clock tick
                self._broadcast(self.core.step())
            elif env.kind == "hand_pose":
                client = self._clients.get(source)
                if client is not None:
                    client.sent_pose = True
                self._broadcast(self.core.on_pose(env))
                if self.cfg.tick_mode == TICK_PACED:
                    self._broadcast(self.core.step())
            elif env.kind == "latency_probe":
                client = self._clients.get(source)
                if client is not None:
                    client.queue.put_nowait(self.core.echo_probe(env))
            # any other kind carries no inbound semantics; ignored
            if self.core.done and not self._log_written:
                self._finish_episode(aborted=False)

    async def _clock_loop(self) -> None:
        while True:
            await asyncio.sleep(self.cfg.tick_interval)
            self._inbox.put_nowait((0, None))

    def _broadcast(self, envs: list[Envelope]) -> None:
        for env in envs:
            for c in self._clients.values():
                c.queue.put_nowait(env)

    # -- client plumbing ----------------------------------------------------

    def _attach(self, client: _Client) -> None:
        self._clients[client.id] = client
        # catch-up snapshot so a late subscriber knows the episode context
        for env in self.core.envelopes[:2]:      # session_start + first frame
            client.queue.put_nowait(env)

    def _detach(self, client: _Client) -> None:
        self._clients.pop(client.id, None)
        if client.sent_pose and not self.core.done:
            # the operator vanished: abort and flush, per the log contract
            self._broadcast(self.core.abort())
            self._finish_episode(aborted=False)

    async def _writer_loop(self, client: _Client, writer: asyncio.StreamWriter) -> None:
        try:
            while True:
                env = await client.queue.get()
                writer.write(client.send_env(env))
                await writer.drain()
        except (ConnectionError, asyncio.CancelledError):
            pass

    async def _handle_tcp(self, reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter) -> None:
        client = _Client(protocol.encode_line)
        self._attach(client)
        wtask = asyncio.create_task(self._writer_loop(client, writer))
        decoder = protocol.LineDecoder()
        try:
            while True:
                data = await reader.read(65536)
                if not data:
                    break
                for env in decoder.feed(data):
                    self._inbox.put_nowait((client.id, env))
        except (ConnectionError, DecodeError) as exc:
            if isinstance(exc, DecodeError):
                print(f"client {client.id} dropped: {exc}", file=sys.stderr)
        finally:
            self._detach(client)
            wtask.cancel()
            writer.close()

    # -- the web port: HTTP for /ui, WebSocket for envelopes ----------------

    async def _handle_web(self, reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter) -> None:
        try:
            raw = await self._read_head(reader)
            if raw is None:
                writer.close()
                return
            method, target, headers = wsproto.parse_request_head(raw)
        except DecodeError:
            writer.close()
            return
        # bytes pipelined behind the request head belong to the WS stream
        leftover = raw.partition(b"\r\n\r\n")[2]
        if not wsproto.is_upgrade_request(headers):
            if method == "GET" and self.cfg.ui_root:
                writer.write(wsproto.serve_static(self.cfg.ui_root, target))
            else:
                writer.write(wsproto.http_response("404 Not Found", b"not found\n"))
            await writer.drain()
            writer.close()
            return

        writer.write(wsproto.handshake_response(headers))
        await writer.drain()
        client = _Client(lambda env: wsproto.encode_text(
            protocol.encode_line(env).decode("utf-8").rstrip("\n")))
        self._attach(client)
        wtask = asyncio.create_task(self._writer_loop(client, writer))
        parser = wsproto.FrameParser(require_mask=True)
        try:
            data = leftover
            while True:
                for opcode, payload in parser.feed(data):
                    if opcode == wsproto.OP_CLOSE:
                        writer.write(wsproto.encode_close())
                        await writer.drain()
                        return
                    if opcode == wsproto.OP_PING:
                        writer.write(wsproto.encode_frame(wsproto.OP_PONG, payload))
                        await writer.drain()
                    elif opcode in (wsproto.OP_TEXT, wsproto.OP_BINARY):
                        env = protocol.decode_line(payload + b"\n")
                        self._inbox.put_nowait((client.id, env))
                data = await reader.read(65536)
                if not data:
                    break
        except (ConnectionError, DecodeError) as exc:
            if isinstance(exc, DecodeError):
                print(f"ws client {client.id} dropped: {exc}", file=sys.stderr)
        finally:
            self._detach(client)
            wtask.cancel()
            writer.close()

    @staticmethod
    async def _read_head(reader: asyncio.StreamReader) -> Optional[bytes]:
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = await reader.read(4096)
            if not chunk:
                return None
            data += chunk
            if len(data) > 65536:
                return None
        return data


async def run_service(setup: SessionSetup, cfg: ServiceConfig) -> None:
    """Run until SIGINT/SIGTERM; flushes the episode log on the way out,
    marked aborted if the episode never reached a terminal event."""
    import signal

    stop_event = asyncio.Event()
    loop = asyncio.get_running_loop()
    for sig in (signal.SIGINT, signal.SIGTERM):
        try:
            loop.add_signal_handler(sig, stop_event.set)
        except NotImplementedError:   # non-main thread or exotic platform
            pass

    svc = Service(setup, cfg)
    await svc.start()
    server_task = asyncio.create_task(svc.serve_forever())
    try:
        await stop_event.wait()
    finally:
        server_task.cancel()
        await asyncio.gather(server_task, return_exceptions=True)
        await svc.stop()
