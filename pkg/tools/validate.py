#!/usr/bin/env python3
"""
Repository sanity checks.

Verifies that the files the docs reference exist and that the sample
experiment still loads with the current configuration schema.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from swarm_sacrifice.config import load_config
from swarm_sacrifice.errors import SwarmError


def main(repo_root: Optional[Path] = None) -> int:
    repo_root = repo_root or Path(__file__).resolve().parent.parent

    required_paths = [
        repo_root / "README.md",
        repo_root / "DESIGN.md",
        repo_root / "requirements.txt",
        repo_root / "pytest.ini",
        repo_root / "experiment.sample.json",
        repo_root / "tools" / "swarm_sacrifice" / "main.py",
        repo_root / "tests",
    ]

    optional_paths = [
        repo_root / "experiment.local.json",
        repo_root / "LICENSE",
    ]

    errors: list[str] = []
    warnings: list[str] = []

    for path in required_paths:
        if not path.exists():
            errors.append(f"Missing required path: {path.relative_to(repo_root)}")

    for path in optional_paths:
        if not path.exists():
            warnings.append(f"Missing optional path: {path.relative_to(repo_root)}")

    for name in ("experiment.sample.json", "experiment.local.json"):
        path = repo_root / name
        if path.exists():
            try:
                load_config(path)
            except SwarmError as e:
                errors.append(f"{name} does not load: {e}")

    if errors:
        print("[FAIL] Validation errors:")
        for error in errors:
            print(f"- {error}")
    else:
        print("[OK] Required files present, sample experiment loads.")

    if warnings:
        print("\n[WARN] Optional checks:")
        for warning in warnings:
            print(f"- {warning}")

    return 1 if errors else 0


if __name__ == "__main__":
    raise SystemExit(main())
