"""Atomic file writes and JSON loading with located parse errors."""

from __future__ import annotations

import json
import math
import tempfile
from pathlib import Path
from typing import Any

from graphipm.errors import ParseError


def atomic_write_text(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        mode="w",
        encoding="utf-8",
        dir=path.parent,
        delete=False,
        suffix=".tmp"
    ) as tmp_file:
        tmp_file.write(text)
        tmp_path = Path(tmp_file.name)
    tmp_path.replace(path)
    return path


def atomic_write_json(path: Path, data: Any) -> Path:
    text = json.dumps(data, indent=2, ensure_ascii=False, allow_nan=False)
    return atomic_write_text(path, text + "\n")


def load_json(path: Path) -> Any:
    """Read a JSON document; syntax errors become :class:`ParseError` with a line."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"File not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid JSON in {path.name}: {e.msg}", line=e.lineno) from e


def bound_to_json(value: float) -> float | None:
    """Infinite bounds are persisted as ``null``."""
    return None if math.isinf(value) else float(value)


def bound_from_json(value: Any, default: float, field: str) -> float:
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"Expected a number or null, got {value!r}", field=field)
    return float(value)
