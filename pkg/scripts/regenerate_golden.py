#!/usr/bin/env python3
"""Regenerate the pinned machine-mode outputs of the demo corpus."""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from cohist.cli import run_text
from cohist.demos import DEMOS, demo_text


def main() -> None:
    golden = pathlib.Path(__file__).resolve().parents[1] / "tests" / "golden"
    golden.mkdir(exist_ok=True)
    for name in DEMOS:
        report, status = run_text(demo_text(name), machine=True)
        (golden / f"{name}.txt").write_text(report)
        print(f"{name}: status {status}, {len(report.splitlines())} lines")


if __name__ == "__main__":
    main()
