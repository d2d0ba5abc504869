"""Bridge configuration: a flat key=value file, unknown keys rejected."""

from __future__ import annotations

import importlib
from dataclasses import dataclass
from pathlib import Path

MODES = ("full", "topk", "label")

_KEYS = {
    "model": str,          # loader path "package.module:callable"
    "resize_h": int,
    "resize_w": int,
    "frame_count": int,
    "host": str,
    "port": int,
    "mode": str,
    "k": int,
    "workers": int,
    "n_c": int,            # optional: validate the model's output length
    "stub_probs": str,     # consumed by the bundled stub loaders
    "stub_table": str,
}


@dataclass(frozen=True)
class BridgeConfig:
    model: str
    resize_h: int = 224
    resize_w: int = 224
    frame_count: int = 16
    host: str = "127.0.0.1"
    port: int = 8080
    mode: str = "full"
    k: int = 5
    workers: int = 2
    n_c: int | None = None
    extras: tuple = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.resize_h < 1 or self.resize_w < 1 or self.frame_count < 1:
            raise ValueError("resize dims and frame_count must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.mode == "topk" and self.n_c is not None and self.k >= self.n_c:
            raise ValueError("topk k must be smaller than the class count")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def extra(self, key: str, default=None):
        return dict(self.extras).get(key, default)


def parse_flat_file(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _KEYS[key](raw.strip())
    return values


def load_config(path) -> BridgeConfig:
    values = parse_flat_file(path)
    if "model" not in values:
        raise ValueError("config must set model = package.module:callable")
    extras = tuple(
        (k, values.pop(k)) for k in ("stub_probs", "stub_table") if k in values
    )
    return BridgeConfig(extras=extras, **values)


def resolve_loader(spec: str):
    """Import ``package.module:callable`` and return the callable."""
    module_name, sep, attr = spec.partition(":")
    if not sep or not module_name or not attr:
        raise ValueError(
            f"model spec must look like 'package.module:callable', got {spec!r}"
        )
    module = importlib.import_module(module_name)
    try:
        return getattr(module, attr)
    except AttributeError as exc:
        raise ValueError(f"{module_name} has no attribute {attr!r}") from exc
