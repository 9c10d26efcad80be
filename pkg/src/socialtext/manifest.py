"""Run manifests: every command records what it resolved, read and wrote."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone

__all__ = ["sha256_file", "write_json_atomic", "make_manifest"]

MANIFEST_SCHEMA = 1


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json_atomic(path, obj) -> None:
    """Write JSON to a temp file and rename into place."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, sort_keys=True, indent=1)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def make_manifest(
    command: str,
    config: dict,
    inputs: list,
    outputs: list,
    seed: int | None,
    version: str,
    elapsed_seconds: float,
) -> dict:
    return {
        "schema_version": MANIFEST_SCHEMA,
        "tool": "socialtext",
        "version": version,
        "command": command,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "elapsed_seconds": elapsed_seconds,
    }
