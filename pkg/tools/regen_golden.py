"""Rewrite the CLI golden reports in tests/golden.

Run from the repository root after an intentional change to a report:

    python3 tools/regen_golden.py
"""
from __future__ import annotations

import contextlib
import io
import os
import shlex
import sys
from pathlib import Path

from newmodp.cli import main

CASES = {
    "space-15-4-Q": "space --level 15 --weight 4 --ring Q",
    "space-1-0": "space --level 1 --weight 0",
    "space-15-4-F7": "space --level 15 --weight 4 --ring F7",
    "space-graded-1-2": "space --level 1 --p 2 --kmax 36",
    "newformthm-5-3-7-4": "verify newformthm --N 5 --ell 3 --p 7 --k 4",
    "newformthm-1-3-2-graded": "verify newformthm --N 1 --ell 3 --p 2 --kmax 24",
    "identities-5-3-7-4": "verify identities --N 5 --ell 3 --p 7 --k 4",
    "keyker-5-3-7-4": "verify keyker --N 5 --ell 3 --p 7 --k 4",
    "levelraising-5-3-7-4": "verify levelraising --N 5 --ell 3 --p 7 --k 4",
    "levelraising-1-3-5-12": "verify levelraising --N 1 --ell 3 --p 5 --k 12",
    "span-5-3-7-4": "verify span --N 5 --ell 3 --p 7 --k 4",
    "filtration-standard-1-3-2": "verify filtration-standard --N 1 --ell 3 --p 2 --kmax 36",
    "filtration-monsky-1-3-2": "verify filtration-monsky --N 1 --ell 3 --p 2 --kmax 36",
    "filtration-monsky-5-3-7": "verify filtration-monsky --N 5 --ell 3 --p 7",
    "examples-mod5-level3": "examples mod5-level3",
    "examples-mod7-level15": "examples mod7-level15",
}

MASKED = ("timing_seconds = ", "toolchain = ")


def masked(text: str) -> str:
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith(MASKED))


def render(command: str) -> tuple[int, str]:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(shlex.split(command))
    return code, buf.getvalue()


def main_regen(dest: Path) -> None:
    os.environ.pop("NEWMODP_FIXTURES", None)
    dest.mkdir(parents=True, exist_ok=True)
    for name, command in CASES.items():
        code, text = render(command)
        (dest / f"{name}.txt").write_text(f"# exit = {code}\n" + masked(text), encoding="utf-8")
        print(f"{name}: exit {code}")


if __name__ == "__main__":
    main_regen(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "tests" / "golden")
