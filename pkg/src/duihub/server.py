"""WebSocket transport for the hub.

Clients connect to ``ws://host:port/sync`` and exchange the canonical JSON
frames; the hub cannot tell these sessions apart from simulated ones. Each
connection gets an outbound queue plus a writer task so the hub can emit
frames synchronously from inside its serialization point.
"""

from __future__ import annotations

import asyncio
import logging
import threading
from typing import Optional

from websockets.asyncio.server import ServerConnection, serve

from .hub import Hub

log = logging.getLogger("duihub.server")

SYNC_PATH = "/sync"


async def _handle(hub: Hub, connection: ServerConnection) -> None:
    if connection.request.path != SYNC_PATH:
        await connection.close(code=1008, reason=f"connect to {SYNC_PATH}")
        return
    outbound: asyncio.Queue[bytes] = asyncio.Queue()
    conn_id = hub.connect(outbound.put_nowait)
    log.info("connection %s open from %s", conn_id, connection.remote_address)

    async def writer() -> None:
        while True:
            data = await outbound.get()
            # JSON rides in text frames; browser clients get strings directly
            await connection.send(data.decode("utf-8"))

    writer_task = asyncio.create_task(writer())
    try:
        async for message in connection:
            data = message.encode("utf-8") if isinstance(message, str) else bytes(message)
            hub.receive(conn_id, data)
    finally:
        writer_task.cancel()
        hub.close(conn_id)
        log.info("connection %s closed", conn_id)


async def serve_hub(hub: Hub, host: str = "127.0.0.1", port: int = 8750):
    """Open the listening socket; returns the websockets Server."""
    return await serve(lambda conn: _handle(hub, conn), host, port)


def run_server(hub: Hub, host: str = "127.0.0.1", port: int = 8750) -> None:
    """Serve until interrupted (the `serve` CLI subcommand)."""

    async def main() -> None:
        server = await serve_hub(hub, host, port)
        bound = server.sockets[0].getsockname()
        print(f"duihub listening on ws://{bound[0]}:{bound[1]}{SYNC_PATH}")
        await asyncio.get_running_loop().create_future()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass


class ServerThread:
    """Background server for tests and demos: start(), .port, stop()."""

    def __init__(self, hub: Hub, host: str = "127.0.0.1", port: int = 0):
        self.hub = hub
        self.host = host
        self.port = port
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._thread: Optional[threading.Thread] = None
        self._ready = threading.Event()

    def start(self) -> "ServerThread":
        def runner() -> None:
            loop = asyncio.new_event_loop()
            self._loop = loop
            asyncio.set_event_loop(loop)
            server = loop.run_until_complete(serve_hub(self.hub, self.host, self.port))
            self.port = server.sockets[0].getsockname()[1]
            self._ready.set()
            try:
                loop.run_forever()
            finally:
                server.close()
                loop.run_until_complete(server.wait_closed())
                loop.close()

        self._thread = threading.Thread(target=runner, daemon=True)
        self._thread.start()
        if not self._ready.wait(timeout=10):
            raise RuntimeError("server did not come up")
        return self

    @property
    def url(self) -> str:
        return f"ws://{self.host}:{self.port}{SYNC_PATH}"

    def stop(self) -> None:
        if self._loop is not None:
            self._loop.call_soon_threadsafe(self._loop.stop)
        if self._thread is not None:
            self._thread.join(timeout=10)
