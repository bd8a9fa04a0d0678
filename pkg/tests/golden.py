"""Golden-directory comparison for CLI runs.

Set HARMORED_REGEN_GOLDENS=1 to rewrite a golden from the current output.
"""

import os
import shutil
from pathlib import Path

from harmored.cli import main

ROOT = Path(__file__).resolve().parents[1]
GOLDENS = Path(__file__).parent / "goldens"


def run_config(name: str, out: Path) -> int:
    return main(["run", str(ROOT / "configs" / f"{name}.json"), "--out", str(out)])


def compare_to_golden(name: str, out: Path) -> list[str]:
    """Names of files whose bytes differ from (or are missing in) the golden."""
    golden = GOLDENS / name
    if os.environ.get("HARMORED_REGEN_GOLDENS") == "1":
        shutil.rmtree(golden, ignore_errors=True)
        shutil.copytree(out, golden)
    produced = sorted(p.name for p in out.iterdir())
    expected = sorted(p.name for p in golden.iterdir()) if golden.is_dir() else []
    diffs = sorted(set(produced) ^ set(expected))
    for f in set(produced) & set(expected):
        if (out / f).read_bytes() != (golden / f).read_bytes():
            diffs.append(f)
    return sorted(diffs)
