"""Copyright verification: threshold estimation and the signed-rank decision.

The suspect model is queried with both variants of every reference-set
sample to estimate (and clip) the decision threshold, then with both
variants of every modification-set sample; a one-sided Wilcoxon signed-rank
test decides whether the modification-set differences fall significantly
below the threshold. Low-probability pairs are post-processed to just above
the reference mean so weak models cannot trigger false accusations.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    AuditPowerWarning,
    ConfigurationError,
    IntegrityError,
    QueryBudgetExceededError,
    QueryError,
    VideoAuditError,
)
from .oracles import BudgetedOracle, true_label_prob
from .pipeline import (
    ASSIGN_MODIFICATION,
    ASSIGN_REFERENCE,
    AuditConfig,
    DatasetManifest,
    DatasetPair,
)

DECISION_MISUSE = "misuse"
DECISION_NO_MISUSE = "no_misuse"

EXIT_NO_MISUSE = 0
EXIT_MISUSE = 3
EXIT_ERROR = 1

ZERO_TOL = 1e-12
EXACT_MAX_N = 20


class AuditAbortedError(VideoAuditError):
    """Oracle failure mid-audit; carries partial progress telemetry."""

    def __init__(self, message, queries_done=0, phase=None):
        super().__init__(message)
        self.queries_done = queries_done
        self.phase = phase


def reference_threshold(delta_s_R, H: float):
    """Mean reference difference and its clipped version.

    Returns ``(h_bar, h)`` with ``h = clip(h_bar, -H, H)``. ``H`` may be
    infinite, which disables clipping.
    """
    if len(delta_s_R) == 0:
        raise ConfigurationError("reference difference sequence is empty")
    h_bar = float(np.mean(delta_s_R))
    h = min(max(h_bar, -H), H)
    return h_bar, float(h)


def postprocess_diff(p_mod: float, p_orig: float, B: float, beta: float,
                     h_bar: float) -> float:
    """Difference for one modification pair, with the low-probability rule.

    When both variants score below B the raw difference carries no signal,
    so it is replaced by ``(1 + beta) * h_bar`` -- slightly above the
    (unclipped) reference mean -- steering the test away from rejection.
    """
    if p_mod < B and p_orig < B:
        return (1.0 + beta) * h_bar
    return p_orig - p_mod


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ascending ranks 1..n with average ranks on exact ties."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_tail_probability(ranks: np.ndarray, w: float) -> float:
    """P(W' >= w) over all 2^n symmetric sign assignments, exactly.

    Works in doubled-rank integer space (average ranks are multiples of
    one half) via a generating-function table, so tied ranks are handled
    without approximation.
    """
    ranks2 = [int(round(2.0 * r)) for r in ranks]
    total = sum(ranks2)
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in ranks2:
        nxt = counts.copy()
        nxt[r:] += counts[: total + 1 - r]
        counts = nxt
    target = int(round(2.0 * w))
    target = max(target, 0)
    tail = int(counts[target:].sum()) if target <= total else 0
    return tail / float(2 ** len(ranks2))


def _normal_tail_probability(ranks: np.ndarray, w: float, n: int) -> float:
    """Normal approximation of P(W' >= w) with tie and continuity correction."""
    mu = n * (n + 1) / 4.0
    sigma_sq = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    sigma_sq -= float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    if sigma_sq <= 0.0:
        return 1.0 if w <= mu else 0.0
    z = (w - 0.5 - mu) / math.sqrt(sigma_sq)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass(frozen=True)
class WilcoxonResult:
    W: float
    n_effective: int
    p_value: float
    reject: bool
    method: str
    degenerate: bool


def wilcoxon_one_sided(delta_s_M, h: float, alpha: float, *,
                       method: str = "auto") -> WilcoxonResult:
    """One-sided signed-rank test of whether differences fall below ``h``.

    Differences within ``ZERO_TOL`` of ``h`` are excluded; the statistic W
    sums the ranks of negative ``d_i = delta - h``, so large W is evidence
    of misuse. The null distribution is computed exactly (full 2^n sign
    enumeration) for n <= 20 and via the tie-corrected normal approximation
    with continuity correction beyond; ``method`` can force either regime.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("alpha must lie in (0, 1)")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")

    d = np.asarray(delta_s_M, dtype=np.float64) - h
    d = d[np.abs(d) >= ZERO_TOL]
    n = len(d)
    if n == 0:
        return WilcoxonResult(
            W=0.0, n_effective=0, p_value=1.0, reject=False,
            method="degenerate", degenerate=True,
        )

    if 0.5 ** n > alpha:
        warnings.warn(
            f"n_effective={n} cannot reject at alpha={alpha}: the smallest "
            f"attainable p-value is 2^-{n}",
            AuditPowerWarning,
            stacklevel=2,
        )

    ranks = _average_ranks(np.abs(d))
    w = float(np.sum(ranks[d < 0.0]))

    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N):
        p = _exact_tail_probability(ranks, w)
        used = "exact"
    else:
        p = _normal_tail_probability(ranks, w, n)
        used = "normal"

    p = float(min(max(p, 0.0), 1.0))
    return WilcoxonResult(
        W=w, n_effective=n, p_value=p, reject=bool(p < alpha),
        method=used, degenerate=False,
    )


@dataclass(frozen=True)
class AuditReport:
    """Everything the verification phase produced, decision included."""

    delta_s_R: tuple
    h_bar: float
    h: float
    delta_s_M: tuple
    postprocessed_count: int
    W: float
    n_effective: int
    p_value: float
    decision: str
    query_count: int
    degenerate: bool
    method: str
    config_hash: str
    created_at: str

    def to_dict(self) -> dict:
        return {
            "delta_s_R": list(self.delta_s_R),
            "h_bar": self.h_bar,
            "h": self.h,
            "delta_s_M": list(self.delta_s_M),
            "postprocessed_count": self.postprocessed_count,
            "W": self.W,
            "n_effective": self.n_effective,
            "p_value": self.p_value,
            "decision": self.decision,
            "query_count": self.query_count,
            "degenerate": self.degenerate,
            "method": self.method,
            "config_hash": self.config_hash,
            "created_at": self.created_at,
        }

    @property
    def exit_code(self) -> int:
        return EXIT_MISUSE if self.decision == DECISION_MISUSE else EXIT_NO_MISUSE


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = int(epoch) if epoch is not None else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(now))


def _collect_scores(oracle, manifest, pair, ids, cfg, jobs, counter, phase):
    """True-label scores of both variants for each id, keyed by sample id."""
    tasks = []
    for sid in ids:
        entry = manifest.entry(sid)
        tasks.append((sid, "pub", pair.published[sid], entry.label))
        tasks.append((sid, "unpub", pair.unpublished[sid], entry.label))

    def one(task):
        sid, side, video, label = task
        resp = oracle.query(video, f"{sid}#{side}")
        return sid, side, true_label_prob(resp, label, cfg.n_c)

    results = {}
    try:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                for sid, side, score in pool.map(one, tasks):
                    results[sid, side] = score
                    counter[0] += 1
        else:
            for task in tasks:
                sid, side, score = one(task)
                results[sid, side] = score
                counter[0] += 1
    except QueryBudgetExceededError:
        raise
    except QueryError as exc:
        raise AuditAbortedError(
            f"oracle failure during {phase} queries "
            f"({counter[0]} queries completed): {exc}",
            queries_done=counter[0],
            phase=phase,
        ) from exc
    return results


def audit(suspect, manifest: DatasetManifest, pair: DatasetPair,
          cfg: AuditConfig, *, jobs: int = 1,
          method: str = "auto") -> AuditReport:
    """Run the full verification phase against a suspect oracle.

    Reference pairs yield ``P(published original) - P(unpublished modified)``
    and set the clipped threshold; modification pairs yield
    ``P(unpublished original) - P(published modified)`` with the
    low-probability rule applied; the signed-rank test decides.
    """
    ref_ids = manifest.ids_for(ASSIGN_REFERENCE)
    mod_ids = manifest.ids_for(ASSIGN_MODIFICATION)
    if not ref_ids or not mod_ids:
        raise ConfigurationError(
            "manifest must contain non-empty reference and modification sets"
        )
    missing = [
        sid for sid in ref_ids + mod_ids
        if sid not in pair.published or sid not in pair.unpublished
    ]
    if missing:
        raise IntegrityError(f"pair lacks videos for samples {missing[:5]}")

    oracle = suspect
    if cfg.query_limit is not None:
        oracle = BudgetedOracle(suspect, cfg.query_limit)

    counter = [0]
    ref_scores = _collect_scores(
        oracle, manifest, pair, ref_ids, cfg, jobs, counter, "reference"
    )
    delta_s_R = [
        ref_scores[sid, "pub"] - ref_scores[sid, "unpub"] for sid in ref_ids
    ]
    h_bar, h = reference_threshold(delta_s_R, cfg.H)

    mod_scores = _collect_scores(
        oracle, manifest, pair, mod_ids, cfg, jobs, counter, "modification"
    )
    delta_s_M = []
    postprocessed = 0
    for sid in mod_ids:
        p_orig = mod_scores[sid, "unpub"]
        p_mod = mod_scores[sid, "pub"]
        if cfg.postprocess:
            value = postprocess_diff(p_mod, p_orig, cfg.B, cfg.beta, h_bar)
            if p_mod < cfg.B and p_orig < cfg.B:
                postprocessed += 1
        else:
            value = p_orig - p_mod
        delta_s_M.append(value)

    test = wilcoxon_one_sided(delta_s_M, h, cfg.alpha, method=method)
    decision = (
        DECISION_MISUSE
        if test.reject and test.n_effective >= 1
        else DECISION_NO_MISUSE
    )
    return AuditReport(
        delta_s_R=tuple(delta_s_R),
        h_bar=h_bar,
        h=h,
        delta_s_M=tuple(delta_s_M),
        postprocessed_count=postprocessed,
        W=test.W,
        n_effective=test.n_effective,
        p_value=test.p_value,
        decision=decision,
        query_count=counter[0],
        degenerate=test.degenerate,
        method=test.method,
        config_hash=cfg.config_hash(),
        created_at=_timestamp(),
    )
