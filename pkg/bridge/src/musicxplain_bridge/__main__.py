"""Entry point: `musicxplain-bridge --config bridge.json`."""

from __future__ import annotations

import argparse
import sys

from .config import BridgeConfigError, load_bridge_config
from .model import BridgeModelError
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="musicxplain-bridge",
        description="Serve a pretrained text+audio classifier over the "
        "newline-JSON predictor protocol (stdin/stdout).",
    )
    parser.add_argument("--config", required=True, help="JSON bridge config file")
    ns = parser.parse_args(argv)

    try:
        config = load_bridge_config(ns.config)
    except BridgeConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        serve(config)
    except BridgeModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BrokenPipeError, KeyboardInterrupt):
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
