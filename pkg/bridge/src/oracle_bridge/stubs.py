"""Built-in stub model loaders for tests and smoke runs.

A loader takes the BridgeConfig and returns ``model(clip) -> probs`` where
``clip`` is the preprocessed float32 array. Real deployments point the
``model`` key at their own loader instead.
"""

import hashlib
import json
from pathlib import Path

import numpy as np


def fixed_vector(config):
    """Always answer one probability vector (config key ``stub_probs``)."""
    raw = config.extra("stub_probs")
    if not raw:
        raise ValueError("fixed_vector needs stub_probs = p1,p2,...")
    probs = [float(x) for x in raw.split(",")]

    def model(clip):
        return probs

    return model


def clip_table(config):
    """Look up probs by SHA-256 of the preprocessed clip bytes.

    ``stub_table`` points at a JSON map {sha256-hex: [probs]}. Useful for
    byte-exact protocol equivalence tests.
    """
    path = config.extra("stub_table")
    if not path:
        raise ValueError("clip_table needs stub_table = <json path>")
    table = json.loads(Path(path).read_text())

    def model(clip):
        key = hashlib.sha256(np.ascontiguousarray(clip).tobytes()).hexdigest()
        if key not in table:
            raise KeyError(f"no stub prediction for clip {key[:12]}...")
        return table[key]

    return model


def brightness_probe(config):
    """A tiny deterministic 'model': probability mass follows mean brightness.

    Demonstrates a real callable without any ML dependency; class count
    comes from ``n_c`` (default 10).
    """
    n_c = config.n_c or 10

    def model(clip):
        mean = float(clip.mean())
        winner = min(int(mean * n_c), n_c - 1)
        probs = np.full(n_c, (1.0 - 0.6) / (n_c - 1))
        probs[winner] = 0.6
        return probs

    return model
