"""Command line: serve a fixture file over the measurement-tool protocol."""

from __future__ import annotations

import argparse
import sys

from .server import make_server
from .store import FixtureFormatError, FixtureStore


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="cxr-tool-server", description=__doc__)
    parser.add_argument("--fixtures", required=True, help="fixture-format annotation file")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8421)
    args = parser.parse_args(argv)

    try:
        store = FixtureStore(args.fixtures)
    except FixtureFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    server = make_server(store, args.host, args.port)
    host, port = server.server_address[:2]
    print(f"serving {len(store.studies)} studies from {args.fixtures} on {host}:{port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
