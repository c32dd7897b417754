"""Run named presets (all of them by default) into one directory each."""

import argparse
import time
from pathlib import Path

from fdrays import cli
from fdrays.config import config_from_mapping, list_presets


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help="preset names; empty means every preset")
    ap.add_argument("--out", default="runs/figures")
    args = ap.parse_args()
    names = args.names or [p.name for p in list_presets()]
    root = Path(args.out)
    for name in names:
        start = time.perf_counter()
        info = cli.run(config_from_mapping({"preset": name}), root / name)
        print(f"{name:24s} {time.perf_counter() - start:7.2f} s  {info['summary']}")


if __name__ == "__main__":
    main()
