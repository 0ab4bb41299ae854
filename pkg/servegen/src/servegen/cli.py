"""Command-line entry: servegen --model hf:<name> --port 8765"""

from __future__ import annotations

import argparse
import os

from .config import ServerConfig
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="servegen",
        description="Serve a code model behind the fault-localization generation protocol.",
    )
    parser.add_argument("--model", default=os.environ.get("SERVEGEN_MODEL", "stub"),
                        help="'stub' or 'hf:<model-name-or-path>'")
    parser.add_argument("--device", default=os.environ.get("SERVEGEN_DEVICE", "cpu"))
    parser.add_argument("--beam-width", type=int, default=10)
    parser.add_argument("--max-context", type=int, default=4096)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=int(os.environ.get("SERVEGEN_PORT", "8765")))
    args = parser.parse_args(argv)
    config = ServerConfig(
        model_id=args.model,
        device=args.device,
        beam_width=args.beam_width,
        max_context=args.max_context,
        host=args.host,
        port=args.port,
    )
    serve(config)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
