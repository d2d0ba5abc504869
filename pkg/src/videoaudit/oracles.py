"""Prediction oracles: one interface over file tables, remote models, and sims.

Every oracle answers ``query(video, sample_id)`` with an
:class:`OracleResponse` in one of three modes: a full posterior, an ordered
top-K list, or a bare label. Responses are matched to requests by sample id,
never by arrival order, so oracles are safe to query concurrently.
"""

from __future__ import annotations

import base64
import json
import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    MissingPredictionError,
    QueryBudgetExceededError,
    QueryError,
)
from .video import VideoTensor

_SUM_TOL = 1e-6

MODE_FULL = "full"
MODE_TOPK = "topk"
MODE_LABEL = "label"


@dataclass(frozen=True)
class PosteriorVector:
    """A class-probability vector; ``quantized`` relaxes the sum-to-one check."""

    probs: tuple
    quantized: bool = False

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if len(probs) < 2:
            raise ValueError("a posterior needs at least 2 classes")
        if any(p < 0.0 for p in probs):
            raise ValueError("posterior entries must be >= 0")
        if not self.quantized and abs(sum(probs) - 1.0) > _SUM_TOL:
            raise ValueError(
                f"unquantized posterior must sum to 1, got {sum(probs)!r}"
            )
        object.__setattr__(self, "probs", probs)

    @property
    def n_c(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class OracleResponse:
    """One of: full posterior, ordered (label, rank) top-K list, bare label."""

    mode: str
    full: PosteriorVector | None = None
    topk: tuple | None = None
    label: int | None = None

    def __post_init__(self):
        if self.mode == MODE_FULL:
            if self.full is None:
                raise ValueError("full mode requires a posterior")
        elif self.mode == MODE_TOPK:
            if not self.topk:
                raise ValueError("topk mode requires a non-empty list")
            entries = tuple((int(lbl), int(rank)) for lbl, rank in self.topk)
            ranks = sorted(r for _, r in entries)
            if ranks != list(range(1, len(entries) + 1)):
                raise ValueError(
                    f"topk ranks must be 1..K without gaps, got {ranks}"
                )
            labels = [lbl for lbl, _ in entries]
            if len(set(labels)) != len(labels):
                raise ValueError("topk labels must be distinct")
            object.__setattr__(self, "topk", entries)
        elif self.mode == MODE_LABEL:
            if self.label is None:
                raise ValueError("label mode requires a label")
            object.__setattr__(self, "label", int(self.label))
        else:
            raise ValueError(f"unknown response mode {self.mode!r}")


def full_response(probs, quantized: bool = False) -> OracleResponse:
    return OracleResponse(MODE_FULL, full=PosteriorVector(probs, quantized))


def topk_response(pairs) -> OracleResponse:
    return OracleResponse(MODE_TOPK, topk=tuple(pairs))


def label_response(label: int) -> OracleResponse:
    return OracleResponse(MODE_LABEL, label=label)


def quantize_posterior(p: PosteriorVector, decimals: int) -> PosteriorVector:
    """Round each probability half-up to ``decimals`` places.

    The result is flagged quantized because the rounded entries need not sum
    to one any more. Idempotent at a fixed decimal count.
    """
    if decimals < 0 or int(decimals) != decimals:
        raise ValueError("decimals must be a non-negative integer")
    scale = 10.0 ** decimals
    rounded = tuple(math.floor(p_i * scale + 0.5) / scale for p_i in p.probs)
    return PosteriorVector(rounded, quantized=True)


def quantize_response(r: OracleResponse, decimals: int) -> OracleResponse:
    """Quantize a full-mode response; top-K and label responses pass through."""
    if r.mode != MODE_FULL:
        return r
    return OracleResponse(MODE_FULL, full=quantize_posterior(r.full, decimals))


def true_label_prob(r: OracleResponse, label: int, n_c: int) -> float:
    """Scalar score a response assigns to the true label.

    Full mode reads the posterior entry. Top-K mode weights rank r by 1/r,
    normalized by the K-th harmonic number so scores are comparable to
    probabilities. Label-only scores 1 on a match, else 0.
    """
    if not 0 <= label < n_c:
        raise ValueError(f"label {label} out of range for {n_c} classes")
    if r.mode == MODE_FULL:
        if label >= r.full.n_c:
            raise ValueError(
                f"label {label} out of range for posterior of size {r.full.n_c}"
            )
        return r.full.probs[label]
    if r.mode == MODE_TOPK:
        k = len(r.topk)
        harmonic = sum(1.0 / i for i in range(1, k + 1))
        for lbl, rank in r.topk:
            if lbl == label:
                return (1.0 / rank) / harmonic
        return 0.0
    return 1.0 if r.label == label else 0.0


def query(oracle, video: VideoTensor, sample_id: str | None = None) -> OracleResponse:
    """Ask an oracle for its prediction on one video."""
    return oracle.query(video, sample_id)


# --- wire schema ------------------------------------------------------------
#
# POST /predict with JSON {"id": str, "video_b64": base64 of VTR1 bytes}
# -> 200 with one of
#   {"mode": "full",  "probs": [...]}
#   {"mode": "topk",  "topk": [{"label": int, "rank": int}, ...]}
#   {"mode": "label", "label": int}
# Anything else is a query error.


def response_to_wire(r: OracleResponse) -> dict:
    if r.mode == MODE_FULL:
        return {"mode": MODE_FULL, "probs": list(r.full.probs)}
    if r.mode == MODE_TOPK:
        return {
            "mode": MODE_TOPK,
            "topk": [{"label": lbl, "rank": rank} for lbl, rank in r.topk],
        }
    return {"mode": MODE_LABEL, "label": r.label}


def response_from_wire(payload, quantized: bool = False) -> OracleResponse:
    """Parse and validate a wire-schema response dict."""
    if not isinstance(payload, dict):
        raise QueryError(f"response must be a JSON object, got {type(payload)}")
    mode = payload.get("mode")
    try:
        if mode == MODE_FULL:
            probs = payload.get("probs")
            if not isinstance(probs, list):
                raise QueryError("full mode requires a 'probs' list")
            return full_response(probs, quantized=quantized)
        if mode == MODE_TOPK:
            entries = payload.get("topk")
            if not isinstance(entries, list):
                raise QueryError("topk mode requires a 'topk' list")
            pairs = [(e["label"], e["rank"]) for e in entries]
            return topk_response(pairs)
        if mode == MODE_LABEL:
            label = payload.get("label")
            if not isinstance(label, int):
                raise QueryError("label mode requires an integer 'label'")
            return label_response(label)
    except QueryError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise QueryError(f"malformed oracle response: {exc}") from exc
    raise QueryError(f"unknown response mode {mode!r}")


class FileBackedOracle:
    """Predictions from a JSON map of sample id -> wire-schema response."""

    def __init__(self, table: dict, quantized: bool = False):
        self._responses = {
            key: response_from_wire(value, quantized=quantized)
            for key, value in table.items()
        }

    @classmethod
    def from_path(cls, path, quantized: bool = False) -> "FileBackedOracle":
        return cls(json.loads(Path(path).read_text()), quantized=quantized)

    def query(self, video: VideoTensor, sample_id: str | None = None) -> OracleResponse:
        if sample_id is None or sample_id not in self._responses:
            raise MissingPredictionError(
                f"no stored prediction for sample {sample_id!r}"
            )
        return self._responses[sample_id]


class RemoteOracle:
    """HTTP client for the /predict wire protocol.

    Transport failures and 5xx responses are retried with exponential
    backoff; schema violations and other statuses fail immediately.
    Verification never guesses: persistent failure raises.
    """

    def __init__(self, base_url: str, retries: int = 3, backoff: float = 0.25,
                 timeout: float = 30.0, quantized: bool = False):
        import requests

        self._requests = requests
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.quantized = quantized

    def query(self, video: VideoTensor, sample_id: str | None = None) -> OracleResponse:
        body = {
            "id": sample_id or "",
            "video_b64": base64.b64encode(video.to_bytes()).decode("ascii"),
        }
        url = self.base_url + "/predict"
        last_exc = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._requests.post(url, json=body, timeout=self.timeout)
            except self._requests.RequestException as exc:
                last_exc = QueryError(f"transport failure querying {url}: {exc}")
            else:
                if resp.status_code == 200:
                    try:
                        payload = resp.json()
                    except ValueError as exc:
                        raise QueryError(
                            f"non-JSON body from {url}: {exc}"
                        ) from exc
                    return response_from_wire(payload, quantized=self.quantized)
                if 500 <= resp.status_code < 600:
                    last_exc = QueryError(
                        f"server error {resp.status_code} from {url}"
                    )
                else:
                    raise QueryError(
                        f"unexpected status {resp.status_code} from {url}"
                    )
            if attempt < self.retries:
                time.sleep(self.backoff * (2 ** attempt))
        raise last_exc


class BudgetedOracle:
    """Caps the number of queries an audit may issue; thread-safe."""

    def __init__(self, inner, limit: int):
        if limit < 1:
            raise ValueError("query limit must be >= 1")
        self._inner = inner
        self._limit = limit
        self._used = 0
        self._lock = threading.Lock()

    @property
    def used(self) -> int:
        return self._used

    def query(self, video: VideoTensor, sample_id: str | None = None) -> OracleResponse:
        with self._lock:
            if self._used >= self._limit:
                raise QueryBudgetExceededError(
                    f"query budget of {self._limit} exhausted"
                )
            self._used += 1
        return self._inner.query(video, sample_id)


class QuantizingOracle:
    """Wraps any oracle and rounds full-posterior outputs to fixed decimals."""

    def __init__(self, inner, decimals: int):
        self._inner = inner
        self._decimals = decimals

    def query(self, video: VideoTensor, sample_id: str | None = None) -> OracleResponse:
        return quantize_response(self._inner.query(video, sample_id),
                                 self._decimals)
