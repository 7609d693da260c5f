"""Interactive driver-in-the-loop session server.

Serves the browser console's static files at / and a newline-delimited JSON
frame protocol over a WebSocket upgrade at /session. One session runs at a
time; the simulation loop is the single owner of all episode state and
applies inbound control frames at the next tick, so a live episode is
step-for-step replayable from its recorded action log.
"""

from __future__ import annotations

import asyncio
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse

from .classify import classify_episode, detect_fm_online
from .drivers import MAX_SWA, session_log_from_trace
from .errors import FmsimError
from .scenario import EpisodeRunner, SimConfig
from .testmanager import (
    evaluate_checklist,
    sim_config_from_dict,
    sim_config_to_dict,
)
from . import traceio

SERVE_DT = 0.02  # 50 Hz step cadence
BROADCAST_INTERVAL = 0.05  # 20 Hz state broadcast

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>fmsim console</title></head>
<body><h1>fmsim session server</h1>
<p>The driver console assets are not built. Connect a protocol client to
<code>/session</code>, or build the frontend and pass its dist directory via
<code>--static</code>.</p></body></html>
"""


class LiveDriver:
    """Driver instance fed by inbound control frames.

    A take-over press is sticky until a take-over request is pending, so a
    slightly early press takes effect at the request instead of being lost.
    Steering frames overwrite the pending command, which is applied at the
    next tick and held until changed.
    """

    def __init__(self):
        self._pending_take_over = False
        self._taken_over = False
        self._steer: float | None = None

    def inject(self, control: dict):
        kind = control.get("kind")
        if kind == "TAKE_OVER":
            self._pending_take_over = True
        elif kind == "STEER":
            swa = float(control["swa"])
            self._steer = max(-MAX_SWA, min(MAX_SWA, swa))

    def act(self, t: float, tor_time: float | None, ideal: float):
        from .drivers import ActionKind, DriverAction, NONE_ACTION

        if self._pending_take_over and not self._taken_over and tor_time is not None:
            self._pending_take_over = False
            self._taken_over = True
            return DriverAction(kind=ActionKind.TAKE_OVER)
        if self._taken_over and self._steer is not None:
            return DriverAction(kind=ActionKind.STEER, swa=self._steer)
        return NONE_ACTION


@dataclass
class SessionStore:
    """Append-only capture of interactive sessions."""

    out_dir: Path
    next_index: int = 1
    records: list = field(default_factory=list)

    def __post_init__(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / "sessions").mkdir(exist_ok=True)

    def save(self, config: SimConfig, seed: int, trace, record, labels, detector) -> str:
        session_id = f"session_{self.next_index:04d}"
        log = session_log_from_trace(trace)
        payload = {
            "session_id": session_id,
            "seed": seed,
            "config": sim_config_to_dict(config),
            "actions": log,
        }
        path = self.out_dir / "sessions" / f"{session_id}.json"
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        self.records.append((record, labels, detector))
        records_csv = traceio.render_records_csv([r for r, _, _ in self.records])
        (self.out_dir / "records.csv").write_text(records_csv, encoding="utf-8")
        extended = traceio.render_extended_jsonl(self.records)
        (self.out_dir / "extended.jsonl").write_text(extended, encoding="utf-8")
        self.next_index += 1
        return session_id

    def log_path(self, session_id: str) -> Path:
        return self.out_dir / "sessions" / f"{session_id}.json"


def _finite(value) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value)


def _frame(obj: dict) -> str:
    return json.dumps(obj) + "\n"


def parse_inbound(raw: str) -> dict:
    """Parse and validate one inbound frame; unknown fields are dropped."""
    data = json.loads(raw)
    if not isinstance(data, dict):
        raise ValueError("frame must be a JSON object")
    ftype = data.get("type")
    if ftype == "START":
        seed = data.get("seed", 0)
        if not isinstance(seed, int):
            raise ValueError("START.seed must be an integer")
        overrides = data.get("overrides", {})
        if not isinstance(overrides, dict):
            raise ValueError("START.overrides must be an object")
        return {"type": "START", "seed": seed, "overrides": overrides}
    if ftype == "CONTROL":
        kind = data.get("kind")
        if kind == "TAKE_OVER":
            return {"type": "CONTROL", "kind": "TAKE_OVER"}
        if kind == "STEER":
            if not _finite(data.get("swa")):
                raise ValueError("CONTROL.swa must be a finite number")
            return {"type": "CONTROL", "kind": "STEER", "swa": float(data["swa"])}
        raise ValueError(f"unknown CONTROL kind {kind!r}")
    if ftype == "ABORT":
        return {"type": "ABORT"}
    raise ValueError(f"unknown frame type {ftype!r}")


def create_app(
    base_config: SimConfig | None = None,
    out_dir: Path | str = "serve-out",
    static_dir: Path | str | None = None,
    time_scale: float = 1.0,
) -> FastAPI:
    """Build the session server application.

    time_scale stretches wall-clock pacing (1.0 = real time, 0 = no pacing);
    simulation timestamps are unaffected.
    """
    app = FastAPI(title="fmsim session server")
    if base_config is None:
        base_config = sim_config_from_dict({"dt": SERVE_DT})
    store = SessionStore(out_dir=Path(out_dir))
    app.state.base_config = base_config
    app.state.store = store
    app.state.time_scale = time_scale
    app.state.session_active = False
    static_path = Path(static_dir) if static_dir else None

    @app.get("/")
    async def index():
        if static_path is not None and (static_path / "index.html").exists():
            return FileResponse(static_path / "index.html")
        return HTMLResponse(_PLACEHOLDER_PAGE)

    @app.get("/static/{asset:path}")
    async def static_asset(asset: str):
        if static_path is None:
            return JSONResponse({"error": "no static assets configured"}, status_code=404)
        target = (static_path / asset).resolve()
        if not str(target).startswith(str(static_path.resolve())) or not target.is_file():
            return JSONResponse({"error": "not found"}, status_code=404)
        return FileResponse(target)

    @app.get("/logs/{session_id}")
    async def session_log(session_id: str):
        path = store.log_path(session_id)
        if not path.exists():
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return FileResponse(path, media_type="application/json")

    @app.websocket("/session")
    async def session(ws: WebSocket):
        await ws.accept()
        if app.state.session_active:
            await ws.send_text(_frame({"type": "BUSY"}))
            await ws.close()
            return
        app.state.session_active = True
        try:
            await _run_session(app, ws)
        finally:
            app.state.session_active = False

    return app


async def _run_session(app: FastAPI, ws: WebSocket):
    store: SessionStore = app.state.store
    try:
        raw = await ws.receive_text()
        start = parse_inbound(raw)
        if start["type"] != "START":
            await ws.send_text(_frame({"type": "ERROR", "reason": "expected START"}))
            await ws.close()
            return
        config = sim_config_from_dict(start["overrides"], base=app.state.base_config)
        seed = start["seed"]
    except WebSocketDisconnect:
        return
    except (ValueError, FmsimError) as exc:
        await ws.send_text(_frame({"type": "ERROR", "reason": str(exc)}))
        await ws.close()
        return

    await ws.send_text(
        _frame(
            {
                "type": "CONFIG",
                "road": {
                    "lane_width": config.road.lane_width,
                    "marking_gap_start": config.road.marking_gap_start,
                    "marking_gap_end": config.road.marking_gap_end,
                },
                "timeline": {
                    "warning_time": config.timeline.warning_time,
                    "tor_time": config.timeline.tor_time,
                    "lane_change_start": config.timeline.lane_change_start,
                    "episode_max_duration": config.timeline.episode_max_duration,
                },
                "dt": config.dt,
                "broadcast_interval": BROADCAST_INTERVAL,
            }
        )
    )

    driver = LiveDriver()
    runner = EpisodeRunner(config, driver)
    inbound: asyncio.Queue = asyncio.Queue()
    aborted = False
    disconnected = False

    async def reader():
        nonlocal disconnected
        try:
            while True:
                raw_frame = await ws.receive_text()
                await inbound.put(raw_frame)
        except WebSocketDisconnect:
            disconnected = True

    reader_task = asyncio.create_task(reader())
    time_scale = app.state.time_scale
    wall_start = time.monotonic()
    next_broadcast = 0.0
    protocol_error: str | None = None

    try:
        while not runner.finished:
            # Apply pending controls at the tick boundary.
            while not inbound.empty():
                raw_frame = inbound.get_nowait()
                try:
                    frame = parse_inbound(raw_frame)
                except ValueError as exc:
                    protocol_error = str(exc)
                    break
                if frame["type"] == "CONTROL":
                    driver.inject(frame)
                elif frame["type"] == "ABORT":
                    aborted = True
                else:
                    protocol_error = "session already started"
            if protocol_error or aborted or disconnected:
                break

            events = runner.advance()
            for ev in events:
                await ws.send_text(
                    _frame({"type": "EVENT", "t": ev.t, "kind": ev.kind.value})
                )
            if runner.t >= next_broadcast - 1e-9 or runner.finished:
                sample = runner.trace.samples[-1]
                await ws.send_text(
                    _frame(
                        {
                            "type": "STATE",
                            "t": sample.t,
                            "s": sample.state.s,
                            "y": sample.state.y,
                            "heading": sample.state.heading,
                            "speed": sample.state.speed,
                            "mode": sample.mode.value,
                            "target_lane": runner.target_lane,
                        }
                    )
                )
                next_broadcast += BROADCAST_INTERVAL

            if time_scale > 0 and not runner.finished:
                target_wall = wall_start + (runner.t + config.dt) / time_scale
                delay = target_wall - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    await asyncio.sleep(0)
            else:
                await asyncio.sleep(0)

        if protocol_error:
            await ws.send_text(_frame({"type": "ERROR", "reason": protocol_error}))
            await ws.close()
            return
        if disconnected:
            return
        if aborted:
            await ws.send_text(
                _frame({"type": "RESULT", "failed": True, "error": "ABORTED"})
            )
            await ws.close()
            return

        trace = runner.trace
        record, labels, ideal_at_to = classify_episode(
            trace, config.timeline.tor_time, store.next_index, config
        )
        detector = detect_fm_online(trace, ideal_at_to, seed)
        checklist = evaluate_checklist(trace, record, labels, config)
        session_id = store.save(config, seed, trace, record, labels, detector)
        await ws.send_text(
            _frame(
                {
                    "type": "RESULT",
                    "failed": False,
                    "record": record.to_dict(),
                    "labels": labels.to_dict(),
                    "checklist": checklist.to_dict(),
                    "session_id": session_id,
                    "log_url": f"/logs/{session_id}",
                }
            )
        )
        await ws.close()
    except WebSocketDisconnect:
        pass
    except FmsimError as exc:
        try:
            await ws.send_text(
                _frame({"type": "RESULT", "failed": True, "error": str(exc)})
            )
            await ws.close()
        except Exception:
            pass
    finally:
        reader_task.cancel()
