#!/usr/bin/env python3
"""Run the shipped verification suite in configs/.

Each config exercises one headline property of the library through the
batch front-end; the pass/fail matrix lands on stdout and per-run
artifacts under --output.
"""

import argparse
import sys
from pathlib import Path

from jumpkernel.cli import verify_suite

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--configs", default=str(ROOT / "configs"))
    parser.add_argument("--output", default="out/suite")
    parser.add_argument("--jobs", type=int, default=4)
    args = parser.parse_args()
    return verify_suite(args.configs, args.output, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
