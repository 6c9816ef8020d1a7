"""HTTP/WebSocket service around the simulator.

REST endpoints run batch scenarios and expose health/config; the ``/ws``
socket carries the full-duplex session protocol. One controlling client
at a time: later connections get a structured rejection. A client
dropping (or violating the protocol) closes its socket but never stops
the simulation.
"""

from __future__ import annotations

import asyncio
import json
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..config import ConfigError, RunConfig, config_from_dict, config_hash
from ..scenarios import RUNNERS, run_scenario
from ..trace import write_trace
from .schemas import ProtocolError, RunRequest, RunResponse, decode_command
from .session import InteractiveSession


def create_app(cfg: RunConfig | None = None, snapshot_rate: float = 60.0,
               frontend_dir: str | Path | None = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if cfg is not None:
            app.state.session = InteractiveSession(cfg, snapshot_rate=snapshot_rate)
            app.state.session.start()
        else:
            app.state.session = None
        app.state.ws_client = None
        yield
        if app.state.session is not None:
            app.state.session.stop()

    app = FastAPI(title="ficsim", version=__version__, lifespan=lifespan)

    @app.get("/health")
    def health():
        session = app.state.session
        return {"status": "ok", "version": __version__,
                "sim_t": None if session is None else session.arm_sim.state.t}

    @app.get("/scenarios")
    def scenarios():
        return {"scenarios": sorted(RUNNERS)}

    @app.post("/runs", response_model=RunResponse)
    def runs(req: RunRequest):
        try:
            run_cfg = config_from_dict(req.config)
        except ConfigError as exc:
            return JSONResponse(status_code=422,
                                content={"error": "config", "message": str(exc)})
        if run_cfg.scenario not in RUNNERS:
            return JSONResponse(status_code=422,
                                content={"error": "config",
                                         "message": f"{run_cfg.scenario!r} is not a batch scenario"})
        result = run_scenario(run_cfg)
        paths: list[str] = []
        if req.save_trace:
            out = Path(req.out_dir or ".")
            out.mkdir(parents=True, exist_ok=True)
            for name, tr in result.traces.items():
                p = out / f"{run_cfg.scenario}_{name}.csv"
                write_trace(tr, p)
                paths.append(str(p))
        return RunResponse(scenario=run_cfg.scenario,
                           config_hash=config_hash(run_cfg),
                           metrics=json.loads(json.dumps(result.metrics, default=str)),
                           trace_paths=paths)

    @app.get("/session/record")
    def session_record():
        session = app.state.session
        if session is None:
            return JSONResponse(status_code=404,
                                content={"error": "no-session",
                                         "message": "service started without an interactive session"})
        return session.session_record()

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session: InteractiveSession | None = app.state.session
        if session is None:
            await ws.send_text(ProtocolError("no-session",
                                             "service has no interactive session").reply())
            await ws.close(code=1008)
            return
        if app.state.ws_client is not None:
            await ws.send_text(ProtocolError(
                "session-busy", "another client already controls this session").reply())
            await ws.close(code=1008)
            return
        app.state.ws_client = ws
        await ws.send_text(session.hello().model_dump_json())

        async def sender():
            last_seq = -1
            poll = 1.0 / (4.0 * session.snapshot_rate)
            while True:
                snap = session.latest_snapshot()
                if snap is not None and snap.seq != last_seq:
                    last_seq = snap.seq
                    await ws.send_text(snap.model_dump_json())
                await asyncio.sleep(poll)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    session.enqueue(decode_command(text))
                except ProtocolError as exc:
                    await ws.send_text(exc.reply())
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            app.state.ws_client = None

    if frontend_dir is None:
        candidate = Path(__file__).resolve().parents[4] / "frontend" / "dist"
        frontend_dir = candidate if candidate.exists() else None
    if frontend_dir is not None and Path(frontend_dir).exists():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True),
                  name="frontend")

    return app
