"""wavehost-sidecar command line: serve, make-fixtures, validate."""

from __future__ import annotations

import argparse
import sys

from .models import make_fixtures
from .server import serve
from .validate import validate


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wavehost-sidecar",
        description="Host serialized audio models over the ADLP stdio protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="serve one model directory on stdin/stdout")
    p.add_argument("model_dir")

    p = sub.add_parser("make-fixtures", help="write the serialized fixture model repos")
    p.add_argument("out_dir")

    p = sub.add_parser("validate", help="contributor check for a model directory")
    p.add_argument("model_dir")

    args = parser.parse_args(argv)

    if args.command == "serve":
        return serve(args.model_dir)
    if args.command == "make-fixtures":
        for repo_dir in make_fixtures(args.out_dir):
            print(repo_dir)
        return 0
    checks = validate(args.model_dir)
    for check in checks:
        print(check.line())
    ok = all(c.passed for c in checks)
    print("model is valid" if ok else "model failed validation")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
