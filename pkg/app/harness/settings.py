# app/harness/settings.py
"""
Central loader that merges the JSON config file, the method preset and
command-line overrides into one validated RunConfig.

Precedence (lowest → highest): method preset, config file, --set overrides,
dedicated flags (--seed, --trials, --out, --workers).
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from pydantic import ValidationError

from app.config import DEFAULT_CONFIG_PATH, READOUT_OUTPUT_DIR, READOUT_WORKERS
from app.errors import ConfigError
from app.model_config import METHOD_CONFIGS, get_method_defaults
from app.schemas import RunConfig


# =========================================================
# RAW TREE
# =========================================================
def read_config_file(path: Optional[Path] = None) -> Dict[str, Any]:
    path = Path(path) if path else DEFAULT_CONFIG_PATH
    try:
        with open(path, "r", encoding="utf-8") as fh:
            tree = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON in {path}: {e}")
    if not isinstance(tree, dict):
        raise ConfigError("config", "top level must be an object")
    return tree


def _parse_value(text: str) -> Any:
    """JSON literal if it parses (numbers, true/false/null, lists), else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(tree: Dict[str, Any], assignment: str) -> None:
    """Apply one `a.b.c=value` override in place."""
    if "=" not in assignment:
        raise ConfigError(assignment, "override must look like key=value")
    key, _, raw = assignment.partition("=")
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(assignment, "empty key")

    node = tree
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(key, f"'{part}' is not an object")
        node = child
    node[parts[-1]] = _parse_value(raw.strip())


def merge_tree(base: Dict[str, Any], patch: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; values in `patch` win."""
    merged = dict(base)
    for key, value in patch.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_tree(merged[key], value)
        else:
            merged[key] = value
    return merged


def _merge_preset(tree: Dict[str, Any], method: str) -> Dict[str, Any]:
    """Fill protocol / rates / ramsey gaps from the method preset."""
    try:
        preset = get_method_defaults(method)
    except KeyError:
        raise ConfigError("method", f"unknown method '{method}', expected one of {sorted(METHOD_CONFIGS)}")

    merged = dict(tree)
    merged["method"] = method
    merged["protocol"] = {"method": method, **preset["protocol"], **(tree.get("protocol") or {})}
    merged["rates"] = {**preset["rates"], **(tree.get("rates") or {})}

    # an absent ramsey.method follows the run's method; an explicit null is the reference run
    ramsey = dict(tree.get("ramsey") or {})
    ramsey.setdefault("method", method)
    merged["ramsey"] = ramsey
    return merged


# =========================================================
# VALIDATION
# =========================================================
def _to_config_error(error: ValidationError) -> ConfigError:
    first = error.errors()[0]
    field = ".".join(str(p) for p in first.get("loc", ())) or "config"
    return ConfigError(field, first.get("msg", "invalid value"))


def build_run_config(tree: Dict[str, Any]) -> RunConfig:
    method = str(tree.get("method", "fluorescence")).lower()
    merged = _merge_preset(tree, method)
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise _to_config_error(e)


def load_run_config(
    path: Optional[Path] = None,
    overrides: Iterable[str] = (),
    method: Optional[str] = None,
    seed: Optional[int] = None,
    trials: Optional[int] = None,
    output_dir: Optional[str] = None,
    workers: Optional[int] = None,
) -> RunConfig:
    tree = read_config_file(path)
    tree.setdefault("workers", max(READOUT_WORKERS, 1))
    tree.setdefault("output_dir", READOUT_OUTPUT_DIR)

    if method is not None:
        tree["method"] = method
    for assignment in overrides:
        apply_override(tree, assignment)

    flags = {"seed": seed, "trials": trials, "output_dir": output_dir, "workers": workers}
    tree.update({k: v for k, v in flags.items() if v is not None})
    return build_run_config(tree)


def resolved_tree(config: RunConfig) -> Dict[str, Any]:
    """JSON-ready dump that re-parses to an equal RunConfig."""
    return config.model_dump(mode="json")
