"""Live-mode wrapper: one engine thread, a serialized command queue, and
wall-clock pacing of the virtual clock.

Clients (HTTP handlers) never touch the engine directly: mutations travel
through `submit`, reads go through the lock at dispatch boundaries. Every
applied command is recorded with its sim-time instant so a session can be
re-driven headlessly by `replay_commands`.
"""

from __future__ import annotations

import queue
import threading
import time
from concurrent.futures import Future
from typing import Any

from ..engine import Engine
from ..kernel import QUIESCENCE
from ..scenario_io import Scenario


class LiveEngine:
    def __init__(
        self,
        scenario: Scenario,
        mode: str = "dynamic",
        speed: float = 60.0,
        start_paused: bool = False,
    ):
        self.engine = Engine(scenario, mode=mode, allow_commands=True)
        self.speed = speed
        self.paused = start_paused
        self._lock = threading.RLock()
        self._commands: "queue.Queue[tuple[dict[str, Any], Future]]" = queue.Queue()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, name="flowline-engine", daemon=True)
        self._wall_anchor = time.monotonic()
        self._sim_anchor = 0

    # ----- lifecycle -----

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread.is_alive():
            self._thread.join(timeout=5)

    # ----- client API (thread-safe) -----

    def submit(self, command: dict[str, Any]) -> dict[str, Any]:
        """Queue a command for the engine thread; blocks for the acknowledgment."""
        future: Future = Future()
        self._commands.put((command, future))
        return future.result(timeout=30)

    def snapshot(self) -> dict[str, Any]:
        with self._lock:
            return self.engine.snapshot()

    def gantt(self) -> list[dict[str, Any]]:
        with self._lock:
            return self.engine.gantt()

    def proposals(self) -> list[dict[str, Any]]:
        with self._lock:
            return self.engine.snapshot()["pending_proposals"]

    def events_after(self, after_seq: int) -> list[dict[str, Any]]:
        with self._lock:
            return [r for r in self.engine.log.records if r["seq"] > after_seq]

    def command_records(self) -> list[dict[str, Any]]:
        with self._lock:
            return list(self.engine.command_log)

    # ----- engine thread -----

    def _loop(self) -> None:
        self._rebase()
        while not self._stop.is_set():
            self._drain_commands()
            if not self.paused:
                target = self._wall_target()
                with self._lock:
                    if target > self.engine.now():
                        self.engine.advance_to(target)
            time.sleep(0.02)

    def _drain_commands(self) -> None:
        while True:
            try:
                command, future = self._commands.get_nowait()
            except queue.Empty:
                return
            try:
                with self._lock:
                    ack = self.engine.apply_command(command)
                    self._apply_clock_semantics(command)
                future.set_result(ack)
            except Exception as exc:  # surfaced as the HTTP error
                future.set_exception(exc)

    def _apply_clock_semantics(self, command: dict[str, Any]) -> None:
        if command.get("kind") != "Clock":
            return
        op = command.get("op", "")
        if op == "pause":
            self.paused = True
        elif op == "resume":
            self.paused = False
            self._rebase()
        elif op.startswith("step:"):
            self.engine.advance_to(self.engine.now() + int(op[5:]))
            self._rebase()
        elif op.startswith("speed:"):
            self.speed = float(op[6:])
            self._rebase()

    def _rebase(self) -> None:
        self._wall_anchor = time.monotonic()
        self._sim_anchor = self.engine.now()

    def _wall_target(self) -> int:
        elapsed = time.monotonic() - self._wall_anchor
        return self._sim_anchor + int(elapsed * self.speed / 60.0)


def replay_commands(
    scenario: Scenario,
    commands: list[dict[str, Any]],
    mode: str = "dynamic",
    run_to_quiescence: bool = True,
) -> Engine:
    """Re-drive a recorded live session headlessly and deterministically.

    Each command is applied at its recorded sim instant; clock step commands
    advance the clock exactly as the live loop did. Pacing commands
    (pause/resume/speed) only affect wall-clock mapping, so replay logs them
    without further effect.
    """
    engine = Engine(scenario, mode=mode, allow_commands=True)
    for record in commands:
        engine.advance_to(record["at"])
        engine.apply_command(record["command"])
        command = record["command"]
        if command.get("kind") == "Clock" and command.get("op", "").startswith("step:"):
            engine.advance_to(record["at"] + int(command["op"][5:]))
    if run_to_quiescence:
        engine.run(QUIESCENCE)
    return engine
