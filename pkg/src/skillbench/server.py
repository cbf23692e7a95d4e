"""WebSocket front end: one Session per connection, tick loop per session.

Ticks are stamped with ideal grid times (k * dt), so the session logic stays
deterministic; wall-clock pacing only schedules when those ticks fire.  A
time_scale below 1.0 runs sessions faster than real time for headless use.
"""
from __future__ import annotations

import asyncio
import datetime
import itertools
import json
import logging
from typing import Optional

import websockets

from .model import TrialConfig
from .service import Session
from .store import SessionStore

log = logging.getLogger(__name__)


def _now_iso() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


class AssessmentServer:
    def __init__(
        self,
        store_path: Optional[str] = None,
        default_config: Optional[TrialConfig] = None,
        tick_rate_hz: float = 50.0,
        time_scale: float = 1.0,
    ) -> None:
        self.store_path = store_path
        self.default_config = default_config or TrialConfig()
        self.dt = 1.0 / tick_rate_hz
        self.time_scale = time_scale
        self._ids = itertools.count(1)
        self._sessions: set[Session] = set()

    async def handler(self, websocket) -> None:
        store = SessionStore(self.store_path) if self.store_path else None
        session = Session(
            store=store,
            session_id=f"s-{next(self._ids)}",
            default_config=self.default_config,
            wall_time=_now_iso,
        )
        self._sessions.add(session)
        send_lock = asyncio.Lock()

        async def send_all(messages) -> None:
            async with send_lock:
                for m in messages:
                    await websocket.send(json.dumps(m))

        async def tick_loop() -> None:
            loop = asyncio.get_running_loop()
            start = loop.time()
            for k in itertools.count(1):
                await asyncio.sleep(
                    max(0.0, start + k * self.dt * self.time_scale - loop.time())
                )
                await send_all(session.handle_tick(k * self.dt))

        ticker = asyncio.create_task(tick_loop())
        try:
            async for raw in websocket:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    msg = None
                await send_all(session.handle_message(msg))
        except websockets.ConnectionClosed:
            pass
        finally:
            ticker.cancel()
            session.abort_for_shutdown()
            self._sessions.discard(session)
            if store is not None:
                store.close()

    async def serve(self, host: str, port: int) -> None:
        async with websockets.serve(self.handler, host, port):
            log.info("listening on ws://%s:%d", host, port)
            await asyncio.Future()


def run_server(
    host: str,
    port: int,
    store_path: Optional[str],
    default_config: Optional[TrialConfig] = None,
    time_scale: float = 1.0,
) -> None:
    server = AssessmentServer(
        store_path=store_path, default_config=default_config, time_scale=time_scale
    )
    try:
        asyncio.run(server.serve(host, port))
    except KeyboardInterrupt:
        log.info("shutting down")
