"""Line-oriented JSON reading with line numbers in every error."""

from __future__ import annotations

import json
from typing import Iterator

__all__ = ["JsonlError", "read_jsonl"]


class JsonlError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


def read_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (lineno, object) for every non-blank line of a JSONL file."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(path, lineno, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise JsonlError(path, lineno, "expected a JSON object")
            yield lineno, obj
