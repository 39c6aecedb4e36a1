"""Shared helpers for the test suite."""

import asyncio
import pathlib
import time

import numpy as np
import pytest

from forcecompass import protocol
from forcecompass.geometry import Rotation3

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def random_rotation(rng: np.random.Generator) -> Rotation3:
    """A uniformly random proper rotation, built independently of the
    package's own helpers (QR of a Gaussian matrix, det fixed to +1)."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))  # make the factorization unique
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return Rotation3(tuple(float(v) for v in q.reshape(-1)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class TcpClient:
    """Line-envelope TCP client for service tests."""

    def __init__(self):
        self.decoder = protocol.LineDecoder()
        self.received = []

    async def connect(self, port):
        self.reader, self.writer = await asyncio.open_connection("127.0.0.1", port)

    async def send(self, env):
        self.writer.write(protocol.encode_line(env))
        await self.writer.drain()

    async def recv_until(self, pred, timeout=5.0):
        """Read frames until pred(envelope) is true; returns that envelope."""
        deadline = time.monotonic() + timeout
        while True:
            for env in self.received:
                if pred(env):
                    return env
            remaining = deadline - time.monotonic()
            data = await asyncio.wait_for(self.reader.read(65536), timeout=remaining)
            if not data:
                raise ConnectionError("server closed the stream")
            self.received.extend(self.decoder.feed(data))

    async def close(self):
        self.writer.close()
        try:
            await self.writer.wait_closed()
        except ConnectionError:
            pass
