#!/usr/bin/env python3
"""End-to-end demo: generate a pure doubly commuting tuple, build its
truncated dilation into the vector-valued polydisc Hardy space, and run
the full verification suite, printing the report.

Usage:
    python3 scripts/run_suite_demo.py [--dims 2,3] [--radius 0.4]
                                      [--seed 7] [--format text|json]
"""

import argparse
import os
import sys
import tempfile

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dcmodel.cli import emit_report, generate_demo, run_full_suite, save_tuple_file


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="2,3", help="factor dimensions, comma separated")
    ap.add_argument("--radius", type=float, default=0.4)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--format", choices=("text", "json"), default="text")
    args = ap.parse_args()

    dims = [int(x) for x in args.dims.split(",")]
    T, meta = generate_demo("tensor", dims, args.radius, args.seed)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "tuple.json")
        save_tuple_file(path, T, meta)
        report, code = run_full_suite(path)
    print(emit_report(report, args.format))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
