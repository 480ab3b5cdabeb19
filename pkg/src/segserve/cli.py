"""Operational command line.

``serve`` runs the HTTP service; ``segment``, ``diagnose``, and ``metrics``
are offline runs of the same kernels. Every flag falls back to a
``SEGSERVE_``-prefixed environment variable (e.g. ``--addr`` /
``SEGSERVE_ADDR``).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .config import (
    DEFAULT_LAMBDA,
    DEFAULT_QUEUE_CAPACITY,
    DEFAULT_THETA,
    DEFAULT_WINDOW,
    DEFAULT_WORKERS,
    ServiceConfig,
)
from .errors import InvalidInput, SegServeError
from .fusion import FusionStrategy
from .metrics import auroc
from .pipelines import WeightProvider, run_diagnosis, segment_payload


def _env(name: str, fallback):
    return os.environ.get(f"SEGSERVE_{name}", fallback)


def _parse_window(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        window = (int(w), int(h))
    except ValueError:
        raise InvalidInput(f"window must look like 64x64, got {text!r}")
    if window[0] < 1 or window[1] < 1:
        raise InvalidInput("window dimensions must be positive")
    return window


def _parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise InvalidInput(f"addr must look like host:port, got {text!r}")
    return host, int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segserve",
        description="Segmentation and dual-modal diagnosis service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--addr", default=_env("ADDR", "127.0.0.1:8000"))
    serve.add_argument("--data-root", default=_env("DATA_ROOT", "./segserve-data"))
    serve.add_argument("--queue-capacity", type=int,
                       default=int(_env("QUEUE_CAPACITY", DEFAULT_QUEUE_CAPACITY)))
    serve.add_argument("--workers", type=int,
                       default=int(_env("WORKERS", DEFAULT_WORKERS)))
    serve.add_argument("--window", default=_env("WINDOW", "%dx%d" % DEFAULT_WINDOW))
    serve.add_argument("--theta", type=float,
                       default=float(_env("THETA", DEFAULT_THETA)))
    serve.add_argument("--weights", default=_env("WEIGHTS", None))

    segment = sub.add_parser("segment", help="segment one image or MIV1 volume")
    segment.add_argument("input")
    segment.add_argument("output")
    segment.add_argument("--window", default=_env("WINDOW", "%dx%d" % DEFAULT_WINDOW))
    segment.add_argument("--theta", type=float,
                         default=float(_env("THETA", DEFAULT_THETA)))

    diag = sub.add_parser("diagnose", help="classify a dual-modal image pair")
    diag.add_argument("image_f")
    diag.add_argument("image_o")
    diag.add_argument("--strategy", default=_env("STRATEGY", "feature_weighted"),
                      choices=[s.value for s in FusionStrategy])
    diag.add_argument("--lambda", dest="lam", type=float,
                      default=(lambda v: float(v) if v is not None else None)(
                          _env("LAMBDA", None)))
    diag.add_argument("--weights", default=_env("WEIGHTS", None))

    met = sub.add_parser("metrics", help="AUROC over a score,label CSV")
    met.add_argument("scores_csv")
    return parser


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    host, port = _parse_addr(args.addr)
    config = ServiceConfig(
        data_root=Path(args.data_root),
        queue_capacity=args.queue_capacity,
        workers=args.workers,
        window=_parse_window(args.window),
        theta=args.theta,
        weights_path=Path(args.weights) if args.weights else None,
    )
    uvicorn.run(create_app(config), host=host, port=port)
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    payload = Path(args.input).read_bytes()
    artifact = segment_payload(payload, _parse_window(args.window), args.theta)
    Path(args.output).write_bytes(artifact.payload)
    print(f"wrote {args.output} ({len(artifact.payload)} bytes)")
    return 0


def cmd_diagnose(args: argparse.Namespace) -> int:
    config = ServiceConfig(
        data_root=Path("."),
        weights_path=Path(args.weights) if args.weights else None,
        default_lambda=DEFAULT_LAMBDA,
    )
    provider = WeightProvider(config)
    result = run_diagnosis(
        Path(args.image_f).read_bytes(),
        Path(args.image_o).read_bytes(),
        FusionStrategy.parse(args.strategy),
        args.lam,
        provider,
    )
    print(json.dumps(result))
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    scores: list[float] = []
    labels: list[int] = []
    with open(args.scores_csv, newline="") as fp:
        reader = csv.DictReader(fp)
        if reader.fieldnames != ["score", "label"]:
            raise InvalidInput(
                f"expected header 'score,label', got {reader.fieldnames}"
            )
        for row in reader:
            scores.append(float(row["score"]))
            label = int(row["label"])
            if label not in (0, 1):
                raise InvalidInput(f"label must be 0 or 1, got {label}")
            labels.append(label)
    result = {
        "auroc": auroc(scores, labels),
        "count": len(scores),
        "positives": sum(labels),
        "negatives": len(labels) - sum(labels),
    }
    print(json.dumps(result))
    return 0


_COMMANDS = {
    "serve": cmd_serve,
    "segment": cmd_segment,
    "diagnose": cmd_diagnose,
    "metrics": cmd_metrics,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SegServeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
