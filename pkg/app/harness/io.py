# app/harness/io.py
"""
CSV tables and the run manifest.

Every emitted file is recorded in manifest.json with its sha256 digest, next
to the tool version, the resolved config, the seed and the wall-clock time.
"""

import csv
import hashlib
import json
import time
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from pydantic import ValidationError

from app.config import TOOL_VERSION
from app.errors import OutputError
from app.logger import log
from app.schemas import RunConfig

MANIFEST_NAME = "manifest.json"


def ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {path}: {e}")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow(["" if v is None else v for v in row])
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}")
    log(f"Wrote {path}", "DEBUG")
    return path


def read_csv(path: Path) -> List[Dict[str, str]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as e:
        raise OutputError(f"cannot read {path}: {e}")


def file_digest(path: Path) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            sha.update(block)
    return sha.hexdigest()


def write_manifest(
    out_dir: Path,
    command: str,
    config: RunConfig,
    started: float,
    files: Sequence[Path],
) -> Path:
    manifest = {
        "tool_version": TOOL_VERSION,
        "command": command,
        "seed": config.seed,
        "duration_s": round(time.perf_counter() - started, 6),
        "config": config.model_dump(mode="json"),
        "files": {Path(f).name: file_digest(Path(f)) for f in files},
    }
    path = out_dir / MANIFEST_NAME
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}")
    return path


def validate_manifest(path: Path) -> RunConfig:
    """
    Re-hash every listed file and re-parse the stored config.
    Returns the config; raises ValueError on any mismatch.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)

    for name, digest in manifest["files"].items():
        target = path.parent / name
        if not target.exists():
            raise ValueError(f"manifest lists missing file {name}")
        if file_digest(target) != digest:
            raise ValueError(f"digest mismatch for {name}")

    try:
        config = RunConfig.model_validate(manifest["config"])
    except ValidationError as e:
        raise ValueError(f"stored config no longer validates: {e}")
    if config.seed != manifest["seed"]:
        raise ValueError("seed in manifest differs from the stored config")
    return config
