#!/usr/bin/env python3
"""Run every built-in demo end to end and summarise the verdicts.

Each demo simulates its scenario, writes transcript/report/config files
under the output directory, and re-audits its own transcript. The script
exits nonzero if any demo misbehaves, so it doubles as a smoke test:

    python3 scripts/run_demos.py [--out-dir DIR] [--prime-bits N]
"""

import argparse
import sys
from pathlib import Path

from groupauth.cli import DEMOS, main


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="demo-output",
                        help="directory tree for per-demo artifacts")
    parser.add_argument("--prime-bits", type=int, default=None,
                        help="override every demo's modulus size")
    args = parser.parse_args(argv)

    results = {}
    for name in sorted(DEMOS):
        command = ["demo", name,
                   "--out-dir", str(Path(args.out_dir) / name)]
        if args.prime_bits is not None:
            command += ["--prime-bits", str(args.prime_bits)]
        print("=" * 72)
        results[name] = main(command)
        print()

    print("=" * 72)
    width = max(len(name) for name in results)
    failures = 0
    for name, code in sorted(results.items()):
        status = "ok" if code == 0 else "FAILED (exit %d)" % code
        failures += code != 0
        print("%-*s  %s" % (width, name, status))
    print("%d/%d demos behaved as expected" % (len(results) - failures,
                                               len(results)))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(run())
