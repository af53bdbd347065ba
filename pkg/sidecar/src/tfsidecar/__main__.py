"""``tf-sidecar`` entry point: parse config flags and serve with uvicorn."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import SidecarConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tf-sidecar")
    parser.add_argument("--ner-model", default="hash")
    parser.add_argument("--embed-model", default="hash:64")
    parser.add_argument("--port", type=int, default=8900)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--max-batch", type=int, default=64)
    parser.add_argument("--device", choices=("cpu", "gpu"), default="cpu")
    args = parser.parse_args(argv)
    config = SidecarConfig(
        ner_model_id=args.ner_model,
        embed_model_id=args.embed_model,
        port=args.port,
        max_batch=args.max_batch,
        device=args.device,
    )
    uvicorn.run(create_app(config), host=args.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
