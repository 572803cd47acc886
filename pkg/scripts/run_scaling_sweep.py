#!/usr/bin/env python3
"""Run the classical size-of-chaos sweep and write the artifact directory."""

import argparse
import sys

from chaoscope.cli import Config, run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/scaling_sweep.txt")
    ap.add_argument("--out", default="out/scaling_sweep")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    cfg = Config.load(args.config)
    rc = run(cfg, args.out, jobs=args.jobs)
    print(f"artifacts in {args.out} (exit {rc})")
    sys.exit(rc)


if __name__ == "__main__":
    main()
