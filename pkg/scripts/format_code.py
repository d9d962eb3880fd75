#!/usr/bin/env python3
"""
Code quality runner for the Impact Resonance Toolkit.

Formats and checks the two packages, the entry points and the scripts, then
loads every shipped configuration in configs/ so a stale example fails the
run as well. Tools run as `python -m <tool>` with the interpreter running
this script; their settings live in pyproject.toml and .flake8.

Usage:
    python scripts/format_code.py                  # format, then check
    python scripts/format_code.py --check          # check only
    python scripts/format_code.py --only black mypy
"""

import argparse
import subprocess  # nosec B404
import sys
from pathlib import Path
from typing import List, NamedTuple, Optional

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from vibroimpact.exceptions import ConfigError  # noqa: E402
from vibroimpact.serializers import load_config  # noqa: E402

PACKAGES = ["vibroimpact", "impact_resonance"]
SOURCES = PACKAGES + ["scripts", "impactres.py", "run_tests.py"]


class Tool(NamedTuple):
    name: str
    args: List[str]
    # extra arguments in --check mode; None means the tool only checks
    check_args: Optional[List[str]] = None

    def command(self, check: bool) -> List[str]:
        args = list(self.args)
        if self.check_args is not None and check:
            args += self.check_args
        return [sys.executable, "-m", self.name, *args]


TOOLS = [
    Tool("isort", SOURCES, ["--check-only", "--diff"]),
    Tool("black", SOURCES, ["--check", "--diff"]),
    Tool("flake8", SOURCES),
    Tool("mypy", PACKAGES),
    Tool("bandit", ["-q", "-r", *PACKAGES, "-c", "pyproject.toml"]),
]


def run_tool(tool: Tool, check: bool) -> bool:
    """Run one tool from the project root and print its verdict."""
    cmd = tool.command(check)
    print(f"\n🔄 {tool.name}: {' '.join(cmd[1:])}")
    try:
        result = subprocess.run(  # nosec B603
            cmd, cwd=ROOT, capture_output=True, text=True
        )
    except OSError as e:
        print(f"❌ {tool.name} could not start: {e}")
        return False

    output = (result.stdout + result.stderr).strip()
    if result.returncode != 0:
        print(f"❌ {tool.name} failed (exit {result.returncode})")
        if output:
            print(output)
        return False
    print(f"✅ {tool.name}")
    return True


def check_configs() -> bool:
    """Load every configs/*.json through the run-configuration validator."""
    print("\n🔄 configs: validating shipped run configurations")
    paths = sorted((ROOT / "configs").glob("*.json"))
    failures = []
    for path in paths:
        try:
            load_config(path)
        except ConfigError as e:
            failures.append(f"{path.name}: {e}")
    for failure in failures:
        print(f"   {failure}")
    if failures:
        print(f"❌ configs: {len(failures)} of {len(paths)} invalid")
        return False
    print(f"✅ configs ({len(paths)} files)")
    return True


def main() -> int:
    parser = argparse.ArgumentParser(description="Format and check the toolkit")
    parser.add_argument(
        "--check", action="store_true", help="report problems without editing files"
    )
    parser.add_argument(
        "--only",
        nargs="+",
        choices=[tool.name for tool in TOOLS] + ["configs"],
        help="run only these steps",
    )
    args = parser.parse_args()

    selected = set(args.only or [tool.name for tool in TOOLS] + ["configs"])
    mode = "check" if args.check else "format"
    print(f"🛠️  Impact Resonance Toolkit quality run ({mode})")

    results = {
        tool.name: run_tool(tool, args.check)
        for tool in TOOLS
        if tool.name in selected
    }
    if "configs" in selected:
        results["configs"] = check_configs()

    failed = [name for name, ok in results.items() if not ok]
    print("\n" + "=" * 50)
    print(f"📊 {len(results) - len(failed)}/{len(results)} steps passed")
    if failed:
        print(f"⚠️  Failed: {', '.join(failed)}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
