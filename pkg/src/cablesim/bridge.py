"""WebSocket teleoperation bridge.

One simulation engine is shared by all clients of a session. The first
client to connect controls the run; later clients observe. State
snapshots are published at 30 Hz of simulated time with latest-wins
delivery: a slow reader skips frames, it never builds a queue. Commands
are validated, clamped to the advertised safety limits, applied at the
next tick boundary, and recorded so a session can be replayed into a
byte-identical run log.

Wire format: JSON ``{"v": 1, "type": ..., "seq": ..., "payload": ...}``
in both directions over ``/session``.
"""

from __future__ import annotations

import asyncio
import contextlib
import math
import time

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .harness import Scenario, SimEngine

PROTOCOL_VERSION = 1
SNAPSHOT_HZ = 30
MAX_FORCE = 200.0   # N, magnitude clamp on commanded (fx, fz)
MAX_MOMENT = 50.0   # N*m, clamp on commanded my

_COMMAND_TYPES = {"apply_wrench", "set_target", "set_mode", "pause", "resume"}


class CommandError(ValueError):
    """Client message failed validation; the session continues."""


def _number(payload: dict, key: str, default=None) -> float:
    if key not in payload:
        if default is None:
            raise CommandError(f"missing field {key!r}")
        return float(default)
    value = payload[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) \
            or not math.isfinite(value):
        raise CommandError(f"field {key!r} must be a finite number")
    return float(value)


def parse_command(msg_type: str, payload: dict) -> tuple[dict, bool]:
    """Translate a wire command into an engine command.

    Returns (engine command, clamped flag). Raises CommandError on any
    malformed input.
    """
    if not isinstance(payload, dict):
        raise CommandError("payload must be an object")
    if msg_type == "apply_wrench":
        fx = _number(payload, "fx", 0.0)
        fz = _number(payload, "fz", 0.0)
        my = _number(payload, "my", 0.0)
        hold_ms = _number(payload, "hold_ms", 0.0)
        if hold_ms < 0 or hold_ms > 60_000:
            raise CommandError("hold_ms must be in [0, 60000]")
        clamped = False
        magnitude = math.hypot(fx, fz)
        if magnitude > MAX_FORCE:
            scale = MAX_FORCE / magnitude
            fx, fz = fx * scale, fz * scale
            clamped = True
        if abs(my) > MAX_MOMENT:
            my = math.copysign(MAX_MOMENT, my)
            clamped = True
        return ({"kind": "apply_wrench", "fx": fx, "fz": fz, "my": my,
                 "hold_ms": hold_ms}, clamped)
    if msg_type == "set_target":
        return ({"kind": "set_target", "x": _number(payload, "x"),
                 "z": _number(payload, "z")}, False)
    if msg_type == "set_mode":
        mode = payload.get("mode")
        if mode not in ("hold", "amplify", "teleop"):
            raise CommandError("mode must be hold, amplify, or teleop")
        cmd = {"kind": "set_mode", "mode": mode}
        if mode == "amplify":
            gain = _number(payload, "gain", 0.0)
            if gain < 0:
                raise CommandError("gain must be nonnegative")
            cmd["gain"] = gain
        return (cmd, False)
    if msg_type == "pause":
        return ({"kind": "pause"}, False)
    if msg_type == "resume":
        return ({"kind": "resume"}, False)
    raise CommandError(f"unknown command type {msg_type!r}")


class _ClientSlot:
    """Latest-wins outbound mailbox for one websocket."""

    def __init__(self):
        self.latest: dict | None = None
        self.event = asyncio.Event()

    def offer(self, message: dict):
        self.latest = message
        self.event.set()


class BridgeSession:
    """Engine plus connected clients; one session per served scenario."""

    def __init__(self, scenario: Scenario, realtime_factor: float = 0.0):
        if realtime_factor < 0:
            raise ValueError("realtime_factor must be nonnegative")
        self.engine = SimEngine(scenario)
        self.realtime_factor = realtime_factor
        self.slots: list[_ClientSlot] = []
        self.controller: _ClientSlot | None = None
        self.task: asyncio.Task | None = None
        self.snapshots_published = 0  # total, including pause refreshes
        self.run_snapshots = 0        # 30 Hz simulated-time publishes only
        self._seq = 0

    # -- messages -----------------------------------------------------------

    def _message(self, msg_type: str, payload: dict) -> dict:
        self._seq += 1
        return {"v": PROTOCOL_VERSION, "type": msg_type, "seq": self._seq,
                "payload": payload}

    def hello_payload(self, role: str) -> dict:
        scenario = self.engine.scenario
        xs = [m.anchor[0] for m in scenario.modules]
        zs = [m.anchor[1] for m in scenario.modules]
        return {
            "role": role,
            "scenario": {
                "name": scenario.name,
                "description": scenario.description,
                "n_modules": scenario.n_modules,
                "payload_mass": scenario.payload.mass,
                "duration": scenario.duration,
                "inner_hz": scenario.rates.inner_hz,
            },
            "limits": {"max_force": MAX_FORCE, "max_moment": MAX_MOMENT},
            "workspace": {"x_min": min(xs), "x_max": max(xs),
                          "z_min": 0.0, "z_max": max(zs)},
            "snapshot_hz": SNAPSHOT_HZ,
        }

    def _broadcast(self, message: dict):
        for slot in self.slots:
            slot.offer(message)

    def publish_state(self):
        self._broadcast(self._message("state", self.engine.snapshot()))
        self.snapshots_published += 1

    # -- engine pacing --------------------------------------------------------

    async def run_engine(self):
        """Advance the simulation, publishing snapshots at 30 Hz of
        simulated time (wall time while paused or finished)."""
        engine = self.engine
        inner_hz = engine.scenario.rates.inner_hz
        start_wall = time.monotonic()
        start_tick = engine.tick
        while True:
            if engine.paused or engine.done:
                engine.step()  # applies queued commands; time stays frozen
                self.publish_state()
                await asyncio.sleep(1.0 / SNAPSHOT_HZ)
                if engine.paused or engine.done:
                    # Wall-clock reference restarts when the run resumes.
                    start_wall = time.monotonic()
                    start_tick = engine.tick
                continue
            tick = engine.tick
            engine.step()
            if tick * SNAPSHOT_HZ >= self.run_snapshots * inner_hz:
                self.run_snapshots += 1
                self.publish_state()
            if self.realtime_factor > 0:
                virtual = (engine.tick - start_tick) / inner_hz
                lag = virtual / self.realtime_factor \
                    - (time.monotonic() - start_wall)
                if lag > 0:
                    await asyncio.sleep(lag)
            elif engine.tick % 200 == 0:
                await asyncio.sleep(0)

    # -- client handling -------------------------------------------------------

    def attach(self, slot: _ClientSlot) -> str:
        self.slots.append(slot)
        if self.controller is None:
            self.controller = slot
            return "controller"
        return "observer"

    def detach(self, slot: _ClientSlot):
        if slot in self.slots:
            self.slots.remove(slot)
        if self.controller is slot:
            self.controller = self.slots[0] if self.slots else None

    def handle_command(self, slot: _ClientSlot, message) -> dict:
        """Validate, clamp, and queue one client message; returns the
        reply to send. Never raises on bad input."""
        if not isinstance(message, dict):
            return self._message("error", {"message": "expected an object"})
        seq = message.get("seq")
        msg_type = message.get("type")
        try:
            if msg_type not in _COMMAND_TYPES:
                raise CommandError(f"unknown command type {msg_type!r}")
            if slot is not self.controller:
                raise CommandError("read-only session: another client "
                                   "holds control")
            command, clamped = parse_command(msg_type,
                                             message.get("payload") or {})
        except CommandError as err:
            payload = {"message": str(err)}
            if seq is not None:
                payload["command_seq"] = seq
            return self._message("error", payload)
        self.engine.inject_command(command)
        payload = {"applied_at_tick": self.engine.tick, "clamped": clamped}
        if seq is not None:
            payload["command_seq"] = seq
        return self._message("ack", payload)


def create_app(scenario: Scenario, realtime_factor: float = 0.0) -> FastAPI:
    """FastAPI app serving one bridge session at ws://.../session."""
    session = BridgeSession(scenario, realtime_factor)

    @contextlib.asynccontextmanager
    async def lifespan(_app):
        yield
        if session.task is not None:
            session.task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await session.task

    app = FastAPI(title="cablesim teleoperation bridge", lifespan=lifespan)
    app.state.session = session

    async def _sender(ws: WebSocket, slot: _ClientSlot):
        # A send can lose the race against the peer closing the socket;
        # that is an ordinary end of the stream, not an error.
        try:
            while True:
                await slot.event.wait()
                slot.event.clear()
                message = slot.latest
                if message is not None:
                    await ws.send_json(message)
        except WebSocketDisconnect:
            pass

    @app.websocket("/session")
    async def session_endpoint(ws: WebSocket):
        await ws.accept()
        slot = _ClientSlot()
        role = session.attach(slot)
        if session.task is None:
            session.task = asyncio.create_task(session.run_engine())
        sender = asyncio.create_task(_sender(ws, slot))
        try:
            await ws.send_json(
                session._message("hello", session.hello_payload(role)))
            while True:
                try:
                    message = await ws.receive_json()
                except (ValueError, KeyError):
                    await ws.send_json(session._message(
                        "error", {"message": "malformed JSON message"}))
                    continue
                await ws.send_json(session.handle_command(slot, message))
        except WebSocketDisconnect:
            pass
        finally:
            # Detach first: even if the sender ends badly, the session
            # must never keep a slot for a closed socket.
            session.detach(slot)
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender

    return app


def serve_scenario(scenario: Scenario, host: str = "127.0.0.1",
                   port: int = 8712, realtime_factor: float = 1.0):
    """Blocking entry point used by the command line."""
    import uvicorn

    uvicorn.run(create_app(scenario, realtime_factor), host=host, port=port,
                log_level="warning")
