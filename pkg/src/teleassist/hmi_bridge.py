"""Browser bridge for the operator console.

Serves the static console bundle and relays frames verbatim between a
WebSocket (one text message per frame, no trailing newline) and the
vehicle's newline-delimited TCP session socket, so the browser speaks the
byte-identical protocol.

Requires the optional hmi extra (fastapi, uvicorn, websockets):
    pip install teleassist[hmi]

Typical use, with a vehicle waiting on the default port:
    teleassist run --scenario B --listen 127.0.0.1:8700 --time-limit 600
    teleassist-hmi --connect 127.0.0.1:8700 --port 8080

No postponed annotation evaluation here: the endpoint signature must carry
the real WebSocket type for the framework to inject it.
"""

import argparse
import asyncio
import logging
import os
import sys

log = logging.getLogger(__name__)


def _frontend_root() -> str:
    here = os.path.dirname(os.path.abspath(__file__))
    candidates = [
        os.path.join(os.path.dirname(os.path.dirname(here)), "frontend"),
        os.path.join(os.getcwd(), "frontend"),
    ]
    for c in candidates:
        if os.path.isfile(os.path.join(c, "index.html")):
            return c
    return candidates[-1]


def build_app(vehicle_host: str, vehicle_port: int, root: str):
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
    from fastapi.responses import FileResponse
    from fastapi.staticfiles import StaticFiles

    app = FastAPI()

    @app.websocket("/ws")
    async def bridge(ws: WebSocket):
        await ws.accept()
        try:
            reader, writer = await asyncio.open_connection(vehicle_host, vehicle_port)
        except OSError as exc:
            log.error("cannot reach the vehicle at %s:%d: %s", vehicle_host, vehicle_port, exc)
            await ws.close(code=1011)
            return
        log.info("console connected; bridging to %s:%d", vehicle_host, vehicle_port)

        async def ws_to_tcp():
            try:
                while True:
                    text = await ws.receive_text()
                    writer.write(text.encode("utf-8") + b"\n")
                    await writer.drain()
            except WebSocketDisconnect:
                pass

        async def tcp_to_ws():
            while True:
                line = await reader.readline()
                if not line:
                    break
                await ws.send_text(line.decode("utf-8").rstrip("\n"))

        pumps = [asyncio.create_task(ws_to_tcp()), asyncio.create_task(tcp_to_ws())]
        try:
            await asyncio.wait(pumps, return_when=asyncio.FIRST_COMPLETED)
        finally:
            for task in pumps:
                task.cancel()
            writer.close()
            try:
                await ws.close()
            except RuntimeError:
                pass
            log.info("console disconnected")

    @app.get("/")
    async def index():
        return FileResponse(os.path.join(root, "index.html"))

    dist = os.path.join(root, "dist")
    if os.path.isdir(dist):
        app.mount("/dist", StaticFiles(directory=dist), name="dist")
    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="teleassist-hmi",
                                     description="serve the operator console and bridge it "
                                                 "to a vehicle session socket")
    parser.add_argument("--connect", default=os.environ.get("TELEASSIST_CONNECT", "127.0.0.1:8700"),
                        help="vehicle session socket HOST:PORT")
    parser.add_argument("--port", type=int, default=int(os.environ.get("TELEASSIST_HMI_PORT", 8080)))
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--root", default=None, help="frontend directory (index.html + dist/)")
    args = parser.parse_args(argv)

    try:
        import uvicorn
    except ImportError:
        print("the hmi bridge needs the optional dependencies: pip install teleassist[hmi]",
              file=sys.stderr)
        return 1

    host, _, port = args.connect.rpartition(":")
    root = args.root or _frontend_root()
    if not os.path.isfile(os.path.join(root, "index.html")):
        print(f"no console bundle under {root}; build it with: cd frontend && npm run build",
              file=sys.stderr)
        return 1
    app = build_app(host or "127.0.0.1", int(port), root)
    logging.basicConfig(level=logging.INFO)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
