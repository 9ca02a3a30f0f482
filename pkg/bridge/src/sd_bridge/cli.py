"""The bridge command: encode | generate | evaluate, each driven by a JSON
job file. Exit code 0 on success, 1 on any bridge failure."""

from __future__ import annotations

import argparse
import sys

from .encoding import encode
from .errors import BridgeError
from .evaluation import evaluate
from .generation import generate
from .jobs import EncodeJob, EvaluateJob, GenerateJob


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bridge",
        description="Encoder/diffusion adapter: real models on one side, NPY files on the other.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("encode", "generate", "evaluate"):
        p = sub.add_parser(name)
        p.add_argument("--job", required=True, help="JSON job file")
    args = parser.parse_args(argv)
    try:
        if args.command == "encode":
            out = encode(EncodeJob.from_file(args.job))
        elif args.command == "generate":
            out = generate(GenerateJob.from_file(args.job))
        else:
            out = evaluate(EvaluateJob.from_file(args.job))
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
