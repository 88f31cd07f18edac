"""Live websocket bridge between the simulator and external clients.

Wire protocol: JSON text messages with the envelope ``{type, seq, payload}``.

* ``hello`` (server -> client, once): robot/human capsule geometry, the
  active controller parameters and the tick period, so clients need no
  separate fetch.
* ``frame`` (server -> clients, once per tick): self-contained state frame
  with capsule poses, EEF/goal points, clearance, witness points and the
  controller diagnostics.
* ``command`` (client -> server): payload ``{action, ...}`` with actions
  ``set_human_target`` (capsule_id, a, b, max_speed), ``pause``,
  ``resume``, ``reset`` and ``set_param`` (name, value).
* ``ack`` / ``nack`` (server -> issuing client): mirrors the command seq;
  nack carries ``{reason}``.

Commands are queued and applied at tick boundaries, so no torn state is
observable.  The simulation loop never blocks on client I/O: frames go to
bounded per-client queues (overflow drops the oldest frame) and a client
whose socket stays unwritable for ``stall_timeout`` seconds is dropped.
"""

from __future__ import annotations

import asyncio
import json
import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .control import ParamError, params_from_dict
from .sim import Scenario, Simulation

log = logging.getLogger("capguard.bridge")


def _caps_payload(capsules):
    return [{"id": c.name, "a": list(c.a), "b": list(c.b), "r": c.radius}
            for c in capsules]


def build_state_frame(sim: Simulation) -> dict:
    """Self-contained state frame for the latest tick."""
    from .kinematics import robot_capsules

    rec = sim.trace.records[-1]
    prox = sim.last_prox
    robot = robot_capsules(sim.scenario.model, rec.q)
    human = sim.live_human.capsules() if sim.live_human is not None else []
    return {
        "t": rec.t,
        "robot_capsules": _caps_payload(robot),
        "human_capsules": _caps_payload(human),
        "p_e": list(rec.p_e),
        "p_g": list(rec.p_g),
        "d_min": None if math.isinf(rec.d_min) else rec.d_min,
        "r1": list(prox.r1) if prox else None,
        "r2": list(prox.r2) if prox else None,
        "closest_pair": rec.closest_pair,
        "v_rel": rec.v_rel,
        "v_rep_mod": rec.v_rep_mod,
        "gamma": rec.gamma,
        "beta": rec.beta,
        "mode": str(rec.mode),
        "qdot_cmd": list(rec.qdot_cmd),
    }


class _Client:
    """Outbound side of one connection: bounded queue + writer task."""

    def __init__(self, ws, backlog: int):
        self.ws = ws
        self.queue: asyncio.Queue[str] = asyncio.Queue(maxsize=backlog)
        self.dropped_frames = 0

    def offer(self, message: str):
        try:
            self.queue.put_nowait(message)
        except asyncio.QueueFull:
            # keep the freshest frames; the stalled writer will be reaped
            try:
                self.queue.get_nowait()
            except asyncio.QueueEmpty:
                pass
            self.dropped_frames += 1
            self.queue.put_nowait(message)


class BridgeServer:
    """Runs a live simulation and serves it to websocket clients."""

    def __init__(self, scenario: Scenario, host: str = "127.0.0.1", port: int = 8765,
                 backlog: int = 50, stall_timeout: float = 3.0, realtime: bool = True):
        self.scenario = scenario
        self.host = host
        self.port = port
        self.backlog = backlog
        self.stall_timeout = stall_timeout
        self.realtime = realtime
        self.sim = Simulation(scenario, live=True)
        self.paused = False
        self._clients: dict[object, _Client] = {}
        self._commands: asyncio.Queue = asyncio.Queue()
        self._seq = 0
        self.server = None

    # -- command handling -------------------------------------------------

    def apply_command(self, payload: dict) -> tuple[bool, str]:
        """Validate and apply one command at a tick boundary."""
        action = payload.get("action")
        if action == "pause":
            self.paused = True
            return True, ""
        if action == "resume":
            self.paused = False
            return True, ""
        if action == "reset":
            self.sim.reset()
            return True, ""
        if action == "set_param":
            name = payload.get("name")
            try:
                new = params_from_dict({name: payload.get("value")},
                                       base=self.sim.controller.params)
            except (ParamError, TypeError) as exc:
                return False, str(exc)
            self.sim.controller.params = new
            self.sim.task.params = new
            return True, ""
        if action == "set_human_target":
            if self.sim.live_human is None:
                return False, "scenario has no human to steer"
            try:
                self.sim.live_human.set_target(
                    payload["capsule_id"],
                    np.asarray(payload["a"], float).reshape(3),
                    np.asarray(payload["b"], float).reshape(3),
                    float(payload.get("max_speed", self.sim.live_human.speed_limit)))
            except (KeyError, TypeError, ValueError) as exc:
                return False, str(exc)
            return True, ""
        return False, f"unknown action {action!r}"

    # -- broadcasting ------------------------------------------------------

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def broadcast(self, kind: str, payload: dict):
        message = json.dumps({"type": kind, "seq": self._next_seq(),
                              "payload": payload})
        for client in list(self._clients.values()):
            client.offer(message)

    def _hello_payload(self) -> dict:
        from .kinematics import robot_capsules

        sim = self.sim
        human = sim.live_human.capsules() if sim.live_human is not None else []
        return {
            "model": sim.scenario.model.name,
            "dt": sim.controller.params.dt,
            "robot_capsules": _caps_payload(robot_capsules(sim.scenario.model, sim.q)),
            "human_capsules": _caps_payload(human),
            "params": sim.controller.params.to_dict(),
            "human_speed_limit": sim.scenario.human_speed_limit,
        }

    # -- connection handling -----------------------------------------------

    async def _writer(self, client: _Client):
        try:
            while True:
                message = await client.queue.get()
                await asyncio.wait_for(self.ws_send(client.ws, message),
                                       timeout=self.stall_timeout)
        except asyncio.CancelledError:
            raise
        except asyncio.TimeoutError:
            log.warning("dropping stalled client (no progress for %.1fs)",
                        self.stall_timeout)
            await self._drop_client(client.ws)
        except Exception as exc:
            log.debug("writer stopped: %s", exc)
            await self._drop_client(client.ws)

    async def _drop_client(self, ws):
        self._clients.pop(ws, None)
        try:
            await ws.close()
        except Exception:
            pass

    @staticmethod
    async def ws_send(ws, message: str):
        await ws.send(message)

    async def _handle_client(self, ws):
        client = _Client(ws, self.backlog)
        self._clients[ws] = client
        client.offer(json.dumps({"type": "hello", "seq": self._next_seq(),
                                 "payload": self._hello_payload()}))
        writer = asyncio.create_task(self._writer(client))
        try:
            async for raw in ws:
                try:
                    envelope = json.loads(raw)
                    if envelope.get("type") != "command":
                        raise ValueError(f"unexpected message type {envelope.get('type')!r}")
                    seq = envelope.get("seq", 0)
                    payload = envelope.get("payload") or {}
                except (json.JSONDecodeError, ValueError, AttributeError) as exc:
                    client.offer(json.dumps({"type": "nack", "seq": 0,
                                             "payload": {"reason": str(exc)}}))
                    continue
                await self._commands.put((client, seq, payload))
        except Exception:
            pass
        finally:
            writer.cancel()
            self._clients.pop(ws, None)

    # -- main loop -----------------------------------------------------------

    async def _drain_commands(self):
        while not self._commands.empty():
            client, seq, payload = self._commands.get_nowait()
            ok, reason = self.apply_command(payload)
            kind = "ack" if ok else "nack"
            body = {} if ok else {"reason": reason}
            client.offer(json.dumps({"type": kind, "seq": seq, "payload": body}))
            log.debug("command %s -> %s %s", payload.get("action"), kind, reason)

    async def tick_loop(self):
        dt = self.sim.controller.params.dt
        next_deadline = time.monotonic()
        while True:
            await self._drain_commands()
            if not self.paused:
                self.sim.tick()
                self.broadcast("frame", build_state_frame(self.sim))
            if self.realtime:
                next_deadline += dt
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_deadline = time.monotonic()
            else:
                await asyncio.sleep(0)

    async def serve_forever(self):
        from websockets.asyncio.server import serve

        async with serve(self._handle_client, self.host, self.port) as server:
            self.server = server
            sock = next(iter(server.sockets))
            self.port = sock.getsockname()[1]
            log.info("serving %s on ws://%s:%d", self.scenario.name,
                     self.host, self.port)
            await self.tick_loop()
