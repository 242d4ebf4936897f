"""Serve an unpaced teleop session for the console integration test.

Binds a free port, prints ``READY <port>`` once accepting, then waits
until a client attached, the run finished, and all clients left; at
that point it writes the run log CSV to --out and exits 0.
"""

import argparse
import dataclasses
import socket
import sys
import threading
import time

import uvicorn

from cablesim import presets
from cablesim.bridge import create_app


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", required=True)
    parser.add_argument("--duration", type=float, default=30.0)
    args = parser.parse_args()

    scenario = dataclasses.replace(presets.teleop(), duration=args.duration)
    app = create_app(scenario, realtime_factor=0.0)

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    config = uvicorn.Config(app, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run,
                              kwargs={"sockets": [sock]}, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15.0
    while not server.started:
        if time.monotonic() > deadline:
            print("server failed to start", file=sys.stderr)
            return 1
        time.sleep(0.01)
    print(f"READY {port}", flush=True)

    seen_client = False
    deadline = time.monotonic() + 300.0
    while time.monotonic() < deadline:
        session = getattr(app.state, "session", None)
        if session is not None:
            seen_client = seen_client or session.controller is not None
            if seen_client and session.engine.done and not session.slots:
                with open(args.out, "w") as fh:
                    fh.write(session.engine.log.to_csv())
                server.should_exit = True
                thread.join(timeout=5.0)
                return 0
        time.sleep(0.05)
    print("timed out waiting for the session to finish", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
