"""Regenerate tests/golden from tests/golden/MANIFEST.

Run after an intended change to an emitted artifact, then review the diff.
"""

import contextlib
import io
import sys
from pathlib import Path

from c1pvass import cli

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"
FIXTURES = ROOT / "tests" / "fixtures"


def entries():
    for line in (GOLDEN / "MANIFEST").read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            name, args = line.split("\t")
            *flags, fixture = args.split()
            yield name, flags + [str(FIXTURES / fixture)]


def render(argv) -> str:
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = cli.main(argv)
    if code != 0:
        raise SystemExit(f"{' '.join(argv)} exited with {code}")
    return out.getvalue()


def main() -> int:
    for name, argv in entries():
        (GOLDEN / name).write_text(render(argv))
        print(f"wrote {name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
