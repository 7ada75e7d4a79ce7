#!/usr/bin/env python3
"""Regenerate docs/openapi.json from the live FastAPI app.

Run after changing routes or request/response models; the test suite
fails if the committed description drifts from the code.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from claimcheck.loop import LoopStore, create_app, scripted_detector  # noqa: E402


def main() -> None:
    app = create_app(LoopStore(), scripted_detector({}))
    target = REPO / "docs" / "openapi.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(app.openapi(), indent=2, sort_keys=True)
                      + "\n", encoding="utf-8")
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
