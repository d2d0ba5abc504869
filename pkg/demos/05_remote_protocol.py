"""Query a suspect model over HTTP exactly as a real audit would.

The wire protocol is one endpoint: POST /predict with a JSON body holding a
sample id and the base64 VTR1 bytes of a video; the response is a full
posterior, a top-K list, or a bare label. This demo serves a synthetic
member model on a local port, audits it remotely, and checks the remote
report agrees with querying the same model in-process.
"""

import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from videoaudit import (
    AuditConfig,
    RemoteOracle,
    SyntheticOracleSpec,
    VideoTensor,
    audit,
    make_suspect,
    make_synthetic_dataset,
    prepare_audit,
    response_to_wire,
)


def serve(oracle):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def do_POST(self):
            body = self.rfile.read(int(self.headers.get("Content-Length", 0)))
            try:
                payload = json.loads(body)
                video = VideoTensor.from_bytes(
                    base64.b64decode(payload["video_b64"])
                )
                wire = response_to_wire(oracle.query(video, payload.get("id")))
                status = 200
            except Exception as exc:
                wire, status = {"error": str(exc)}, 400
            blob = json.dumps(wire).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server


def main():
    cfg = AuditConfig(n_c=101)
    samples = make_synthetic_dataset(800, (4, 8, 8, 3), cfg.n_c, seed=5)
    _, manifest, pair = prepare_audit(samples, cfg)
    suspect = make_suspect(
        SyntheticOracleSpec("member", n_c=cfg.n_c, seed=9), manifest, pair
    )

    server = serve(suspect)
    host, port = server.server_address
    url = f"http://{host}:{port}"
    print("serving a synthetic member model at", url)

    try:
        remote = audit(RemoteOracle(url), manifest, pair, cfg)
        local = audit(suspect, manifest, pair, cfg)
    finally:
        server.shutdown()
        server.server_close()

    print(f"remote audit: decision={remote.decision} p={remote.p_value:.3g} "
          f"({remote.query_count} queries)")
    print("agrees with in-process audit:",
          remote.decision == local.decision
          and remote.delta_s_M == local.delta_s_M)


if __name__ == "__main__":
    main()
