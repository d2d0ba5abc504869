"""Run the bridge from the command line: ``oracle-bridge --config bridge.cfg``."""

import argparse
import sys

from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oracle-bridge",
        description="Serve a video-recognition model behind /predict.",
    )
    parser.add_argument("--config", required=True, help="flat key=value file")
    args = parser.parse_args(argv)
    try:
        server = serve(args.config)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    host, port = server.address
    print(f"serving /predict on http://{host}:{port} "
          f"(mode={server.config.mode})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
