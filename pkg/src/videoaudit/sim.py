"""Synthetic suspect models and the audit evaluation harness.

None of this trains anything: a synthetic oracle assigns deterministic,
seeded true-label scores to the byte-exact variants of a dataset pair, so
the full publication/verification loop can be exercised end to end. Videos
are matched by content hash, never by sample id -- the simulator models a
black box that only sees pixels.

Behavior families:

* ``member`` -- trained on the published dataset: any published variant
  scores ``base_true_prob`` on its true label, its unpublished counterpart
  scores ``base_true_prob - gap``.
* ``non_member`` -- never saw either variant: both sides of a pair share one
  common draw near ``1/sqrt(n_c)``, so paired differences vanish.
* ``weak`` -- barely-competent model: every score sits below ``B = 1/n_c``.
  Reference pairs keep a small degradation gap while the amplification-
  selected modification pairs are indistinguishable to the model, which is
  exactly the false-positive mechanism the post-processing rule suppresses.
* ``inflated_ref`` -- a clean model whose reference differences are
  inflated (~``ref_diff``) while modification differences sit lower
  (~``mod_diff``); trips the test when threshold clipping is disabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .oracles import (
    BudgetedOracle,
    full_response,
    label_response,
    quantize_response,
    topk_response,
)
from .perlin import derive_seed
from .pipeline import (
    ASSIGN_MODIFICATION,
    AuditConfig,
    DatasetManifest,
    DatasetPair,
    Sample,
    prepare_audit,
)
from .verify import DECISION_MISUSE, audit
from .video import VideoTensor

BEHAVIOR_MEMBER = "member"
BEHAVIOR_NON_MEMBER = "non_member"
BEHAVIOR_WEAK = "weak"
BEHAVIOR_INFLATED_REF = "inflated_ref"
_BEHAVIORS = (
    BEHAVIOR_MEMBER,
    BEHAVIOR_NON_MEMBER,
    BEHAVIOR_WEAK,
    BEHAVIOR_INFLATED_REF,
)

MODE_FULL = "full"
MODE_TOPK = "topk"
MODE_LABEL = "label"

# Smallest modification set that can ever reject at alpha=0.01: the exact
# one-sided test attains p = 2^-n, and 2^-6 > 0.01 >= 2^-7.
MIN_POWER_N = 7


@dataclass(frozen=True)
class SyntheticOracleSpec:
    behavior: str
    n_c: int
    base_true_prob: float = 0.95
    gap: float = 0.4
    noise_sigma: float = 0.02
    seed: int = 0
    quantize_decimals: int | None = None
    query_limit: int | None = None
    mode: str = MODE_FULL
    topk_k: int = 5
    ref_diff: float = 0.3
    mod_diff: float = 0.1
    weak_shrink: float = 0.5

    def __post_init__(self):
        if self.behavior not in _BEHAVIORS:
            raise ConfigurationError(f"unknown behavior {self.behavior!r}")
        if self.n_c < 2:
            raise ConfigurationError("n_c must be >= 2")
        if not 0.0 <= self.base_true_prob <= 1.0:
            raise ConfigurationError("base_true_prob must lie in [0, 1]")
        if self.gap < 0 or self.base_true_prob - self.gap < 0:
            raise ConfigurationError("need 0 <= gap <= base_true_prob")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")
        if self.mode not in (MODE_FULL, MODE_TOPK, MODE_LABEL):
            raise ConfigurationError(f"unknown response mode {self.mode!r}")
        if self.topk_k < 1 or self.topk_k >= self.n_c:
            raise ConfigurationError("topk_k must lie in [1, n_c)")
        if not 0.0 < self.weak_shrink < 1.0:
            raise ConfigurationError("weak_shrink must lie in (0, 1)")


def _unit_normal(seed: int, *parts) -> float:
    rng = np.random.default_rng(derive_seed(seed, *parts))
    return float(rng.standard_normal())


def _unit_uniform(seed: int, *parts) -> float:
    rng = np.random.default_rng(derive_seed(seed, *parts))
    return float(rng.random())


class SyntheticOracle:
    """Deterministic score model over one dataset pair; see module docstring."""

    def __init__(self, spec: SyntheticOracleSpec, manifest: DatasetManifest,
                 pair: DatasetPair):
        self.spec = spec
        self._label = {e.sample_id: e.label for e in manifest.entries}
        self._assignment = {e.sample_id: e.assignment for e in manifest.entries}
        self._lookup = {}
        for sid, video in pair.published.items():
            self._lookup[video.content_hash()] = (sid, "published")
        for sid, video in pair.unpublished.items():
            self._lookup[video.content_hash()] = (sid, "unpublished")

    # -- score model ---------------------------------------------------------

    def _true_label_score(self, sid: str, side: str, key: str) -> float:
        spec = self.spec
        if spec.behavior == BEHAVIOR_MEMBER:
            base = (
                spec.base_true_prob
                if side == "published"
                else spec.base_true_prob - spec.gap
            )
            score = base + spec.noise_sigma * _unit_normal(spec.seed, key)
        elif spec.behavior == BEHAVIOR_NON_MEMBER:
            center = 1.0 / math.sqrt(spec.n_c)
            score = center + spec.noise_sigma * _unit_normal(spec.seed, sid)
        elif spec.behavior == BEHAVIOR_WEAK:
            b = 1.0 / spec.n_c
            draw = b * (0.25 + 0.5 * _unit_uniform(spec.seed, sid))
            if self._assignment.get(sid) == ASSIGN_MODIFICATION:
                score = draw
            else:
                is_original = (
                    side == "published"
                ) == (self._assignment.get(sid) != ASSIGN_MODIFICATION)
                score = draw if is_original else draw * spec.weak_shrink
        else:  # inflated_ref
            if self._assignment.get(sid) == ASSIGN_MODIFICATION:
                anchor, gap = 0.5, spec.mod_diff
            else:
                anchor, gap = 0.6, spec.ref_diff
            is_original = (
                side == "published"
            ) == (self._assignment.get(sid) != ASSIGN_MODIFICATION)
            base = anchor if is_original else anchor - gap
            score = base + spec.noise_sigma * _unit_normal(spec.seed, key)
        return min(max(score, 0.0), 1.0)

    def _fallback_score(self, key: str) -> float:
        center = 1.0 / math.sqrt(self.spec.n_c)
        score = center + self.spec.noise_sigma * _unit_normal(
            self.spec.seed, "unknown", key
        )
        return min(max(score, 0.0), 1.0)

    def _member_rank(self, side: str) -> int:
        """Rank of the true label in top-K mode for a member model.

        Published variants were memorized (rank 1); unpublished counterparts
        degrade with the score gap. A sum-to-one posterior with a true-label
        score above 0.5 can never rank below first, so rank degradation is
        modeled explicitly rather than derived from the full posterior.
        """
        if side == "published" or self.spec.gap == 0:
            return 1
        k = self.spec.topk_k
        return min(k, 1 + math.ceil(self.spec.gap * k))

    # -- response assembly ---------------------------------------------------

    def _distractors(self, true_label: int, count: int):
        out = []
        c = true_label
        while len(out) < count:
            c = (c + 1) % self.spec.n_c
            if c != true_label:
                out.append(c)
        return out

    def _respond(self, score: float, true_label: int, rank: int):
        spec = self.spec
        if spec.mode == MODE_FULL:
            probs = [(1.0 - score) / (spec.n_c - 1)] * spec.n_c
            probs[true_label] = score
            resp = full_response(probs)
            if spec.quantize_decimals is not None:
                resp = quantize_response(resp, spec.quantize_decimals)
            return resp
        k = spec.topk_k
        if rank <= k:
            fillers = self._distractors(true_label, k - 1)
            labels = fillers[: rank - 1] + [true_label] + fillers[rank - 1:]
        else:
            labels = self._distractors(true_label, k)
        if spec.mode == MODE_TOPK:
            return topk_response([(lbl, r + 1) for r, lbl in enumerate(labels)])
        return label_response(labels[0])

    def _implied_rank(self, score: float) -> int:
        uniform_rest = (1.0 - score) / (self.spec.n_c - 1)
        return 1 if score > uniform_rest else self.spec.n_c

    def query(self, video: VideoTensor, sample_id: str | None = None):
        key = video.content_hash()
        hit = self._lookup.get(key)
        if hit is None:
            score = self._fallback_score(key)
            return self._respond(score, 0, self._implied_rank(score))
        sid, side = hit
        label = self._label[sid]
        score = self._true_label_score(sid, side, key)
        if self.spec.behavior == BEHAVIOR_MEMBER:
            rank = self._member_rank(side)
        else:
            rank = self._implied_rank(score)
        return self._respond(score, label, rank)


def make_suspect(spec: SyntheticOracleSpec, manifest: DatasetManifest,
                 pair: DatasetPair):
    """Build a synthetic suspect oracle, query-limited when the spec asks."""
    oracle = SyntheticOracle(spec, manifest, pair)
    if spec.query_limit is not None:
        return BudgetedOracle(oracle, spec.query_limit)
    return oracle


def make_synthetic_dataset(n: int, dims, n_c: int, seed: int) -> list[Sample]:
    """Seeded random uint8 videos with random labels; ids are zero-padded."""
    t, h, w, c = dims
    rng = np.random.default_rng(derive_seed(seed, "dataset"))
    width = max(6, len(str(n - 1)))
    samples = []
    for i in range(n):
        video = VideoTensor(
            rng.integers(0, 256, size=(t, h, w, c), dtype=np.uint8)
        )
        samples.append(Sample(f"s{i:0{width}d}", int(rng.integers(n_c)), video))
    return samples


@dataclass(frozen=True)
class SimulationResult:
    tpr: float
    fpr: float
    f1: float | None
    runs: tuple

    def to_dict(self) -> dict:
        return {
            "runs": list(self.runs),
            "summary": {"tpr": self.tpr, "fpr": self.fpr, "f1": self.f1},
        }


def evaluate_auditor(n_pos: int, n_neg: int, cfg: AuditConfig,
                     pos_spec: SyntheticOracleSpec,
                     neg_spec: SyntheticOracleSpec, *, seed: int,
                     dataset_size: int = 800,
                     dims=(4, 8, 8, 3)) -> SimulationResult:
    """Audit synthetic positives and negatives; report TPR / FPR / F1.

    ``n_pos`` dataset pairs are regenerated independently (one per positive
    oracle); negatives are audited round-robin against those pairs, one
    fresh non-member oracle per audit -- ten published versions auditing
    their own suspect plus every clean model, scaled to the requested
    counts. F1 is reported as None when precision and recall are both zero.
    """
    if n_pos < 1 or n_neg < 0:
        raise ConfigurationError("need n_pos >= 1 and n_neg >= 0")
    if int(np.floor(cfg.r_m * dataset_size)) < MIN_POWER_N:
        import warnings

        from .errors import AuditPowerWarning

        warnings.warn(
            f"modification set of {int(np.floor(cfg.r_m * dataset_size))} "
            f"samples cannot reject at alpha={cfg.alpha}; "
            f"increase dataset_size or r_m",
            AuditPowerWarning,
            stacklevel=2,
        )

    pairs = []
    runs = []
    tp = 0
    for i in range(n_pos):
        cfg_i = replace(
            cfg,
            selection_seed=derive_seed(seed, "select", i),
            noise_seed=derive_seed(seed, "noise", i),
        )
        samples = make_synthetic_dataset(
            dataset_size, dims, cfg.n_c, derive_seed(seed, "data", i)
        )
        _, manifest, pair = prepare_audit(samples, cfg_i, eval_oracle=None)
        pairs.append((cfg_i, manifest, pair))

        spec_i = replace(pos_spec, seed=derive_seed(seed, "pos", i), n_c=cfg.n_c)
        report = audit(make_suspect(spec_i, manifest, pair), manifest, pair, cfg_i)
        hit = report.decision == DECISION_MISUSE
        tp += hit
        runs.append(
            {
                "oracle_id": f"pos{i:03d}",
                "behavior": spec_i.behavior,
                "decision": report.decision,
                "p_value": report.p_value,
            }
        )

    fp = 0
    for j in range(n_neg):
        cfg_i, manifest, pair = pairs[j % n_pos]
        spec_j = replace(neg_spec, seed=derive_seed(seed, "neg", j), n_c=cfg.n_c)
        report = audit(make_suspect(spec_j, manifest, pair), manifest, pair, cfg_i)
        miss = report.decision == DECISION_MISUSE
        fp += miss
        runs.append(
            {
                "oracle_id": f"neg{j:03d}",
                "behavior": spec_j.behavior,
                "decision": report.decision,
                "p_value": report.p_value,
            }
        )

    tpr = tp / n_pos
    fpr = fp / n_neg if n_neg else 0.0
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    f1 = None
    if precision + tpr > 0:
        f1 = 2.0 * precision * tpr / (precision + tpr)
    return SimulationResult(tpr=tpr, fpr=fpr, f1=f1, runs=tuple(runs))
