"""Run every bundled preset and write CSV + SVG pairs into one directory.

    python scripts/reproduce_figures.py --outdir figures --threads 4
"""
import argparse
import sys
import time
from pathlib import Path

from qradar import cli

COMMAND = {"fig1b": "fisher", "fig4a": "estimate", "fig4b": "estimate",
           "fig5": "crb-sweep", "fig6a": "fisher", "fig6b": "fisher"}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--outdir", type=Path, default=Path("figures"))
    ap.add_argument("--only", nargs="*", choices=sorted(COMMAND), default=sorted(COMMAND))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    status = 0
    for name in args.only:
        t0 = time.perf_counter()
        code = cli.main([COMMAND[name], "--preset", name, "--threads", str(args.threads),
                         "--out", str(args.outdir / f"{name}.csv"),
                         "--svg", str(args.outdir / f"{name}.svg")])
        print(f"{name:6s} exit={code} {time.perf_counter() - t0:6.1f} s")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
