"""Dataset preparation: noise injection, impact scoring, and set selection.

Workflow: every sample gets a modified twin (seeded noise at budget epsilon);
an optional evaluation oracle ranks samples by how much modification moves
their true-label score; the top slice becomes the candidate pool from which
disjoint reference and modification sets are drawn; finally the published
dataset takes modified variants exactly for the modification set and the
unpublished complement takes the opposite variant of every sample.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import perlin
from .errors import (
    ConfigurationError,
    IntegrityError,
    ScoringError,
)
from .oracles import MODE_FULL, true_label_prob
from .perlin import PerlinParams
from .video import VideoTensor, inject_noise, load_vtr, save_vtr

ASSIGN_MODIFICATION = "modification"
ASSIGN_REFERENCE = "reference"
ASSIGN_REMAINING = "remaining"
_ASSIGNMENTS = (ASSIGN_MODIFICATION, ASSIGN_REFERENCE, ASSIGN_REMAINING)

NOISE_PER_SAMPLE = "per_sample"
NOISE_SHARED = "shared"


@dataclass(frozen=True)
class Sample:
    sample_id: str
    label: int
    video: VideoTensor


@dataclass(frozen=True)
class AuditConfig:
    """All tunables of the auditing pipeline.

    ``B`` (the low-probability boundary of the post-processing rule) is
    derived as ``1 / n_c``. ``H`` may be ``math.inf`` to disable threshold
    clipping, and ``postprocess`` toggles the low-probability rule; both
    exist so the corresponding ablations can be run.
    """

    n_c: int
    epsilon: float = 10.0
    perlin: PerlinParams = field(default_factory=PerlinParams)
    r_c: float = 0.10
    r_m: float = 0.01
    r_r: float = 0.01
    H: float = 0.05
    beta: float = 0.01
    alpha: float = 0.01
    selection_seed: int = 0
    noise_seed: int = 0
    noise_policy: str = NOISE_PER_SAMPLE
    postprocess: bool = True
    query_limit: int | None = None

    def __post_init__(self):
        if self.n_c < 2:
            raise ConfigurationError("n_c must be >= 2")
        if self.epsilon < 0:
            raise ConfigurationError("epsilon must be >= 0")
        for name in ("r_c", "r_m", "r_r"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1]")
        if self.r_m + self.r_r > self.r_c:
            raise ConfigurationError("r_m + r_r must not exceed r_c")
        if self.r_c > 1.0:
            raise ConfigurationError("r_c must not exceed 1")
        if self.H < 0:
            raise ConfigurationError("H must be >= 0")
        if self.beta <= 0:
            raise ConfigurationError("beta must be > 0")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError("alpha must lie in (0, 1)")
        if self.noise_policy not in (NOISE_PER_SAMPLE, NOISE_SHARED):
            raise ConfigurationError(
                f"noise_policy must be '{NOISE_PER_SAMPLE}' or '{NOISE_SHARED}'"
            )
        if self.query_limit is not None and self.query_limit < 1:
            raise ConfigurationError("query_limit must be >= 1 when set")

    @property
    def B(self) -> float:
        return 1.0 / self.n_c

    def sample_noise_seed(self, sample_id: str) -> int:
        if self.noise_policy == NOISE_SHARED:
            return self.noise_seed
        return perlin.derive_seed(self.noise_seed, sample_id)

    def to_dict(self) -> dict:
        d = {
            "n_c": self.n_c,
            "epsilon": self.epsilon,
            "lambda_x": self.perlin.lambda_x,
            "lambda_y": self.perlin.lambda_y,
            "lambda_t": self.perlin.lambda_t,
            "phi_sine": self.perlin.phi_sine,
            "omega": self.perlin.omega,
            "r_c": self.r_c,
            "r_m": self.r_m,
            "r_r": self.r_r,
            "H": self.H,
            "beta": self.beta,
            "alpha": self.alpha,
            "selection_seed": self.selection_seed,
            "noise_seed": self.noise_seed,
            "noise_policy": self.noise_policy,
            "postprocess": self.postprocess,
            "query_limit": self.query_limit,
        }
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ManifestEntry:
    sample_id: str
    label: int
    assignment: str
    delta_m: float
    noise_seed: int

    def __post_init__(self):
        if self.assignment not in _ASSIGNMENTS:
            raise ValueError(f"unknown assignment {self.assignment!r}")


@dataclass(frozen=True)
class DatasetManifest:
    """Per-sample assignment record; the ground truth for publication."""

    config_hash: str
    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        ids = [e.sample_id for e in entries]
        if len(set(ids)) != len(ids):
            raise IntegrityError("duplicate sample ids in manifest")
        object.__setattr__(self, "entries", entries)

    def ids_for(self, assignment: str) -> list[str]:
        return [e.sample_id for e in self.entries if e.assignment == assignment]

    @property
    def counts(self) -> dict:
        out = {a: 0 for a in _ASSIGNMENTS}
        for e in self.entries:
            out[e.assignment] += 1
        return out

    def entry(self, sample_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.sample_id == sample_id:
                return e
        raise IntegrityError(f"sample {sample_id!r} not in manifest")

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "entries": [
                {
                    "id": e.sample_id,
                    "label": e.label,
                    "assignment": e.assignment,
                    "delta_m": e.delta_m,
                    "noise_seed": e.noise_seed,
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        entries = tuple(
            ManifestEntry(
                sample_id=e["id"],
                label=int(e["label"]),
                assignment=e["assignment"],
                delta_m=float(e["delta_m"]),
                noise_seed=int(e["noise_seed"]),
            )
            for e in d["entries"]
        )
        return cls(config_hash=d["config_hash"], entries=entries)

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        )

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class DatasetPair:
    """Published dataset and its owner-retained complement.

    For every sample the two sides hold opposite variants; the published
    side holds the modified variant exactly for the modification set.
    """

    published: dict
    unpublished: dict
    published_variant: dict

    def __post_init__(self):
        if set(self.published) != set(self.unpublished) or set(
            self.published
        ) != set(self.published_variant):
            raise IntegrityError("pair sides must cover identical sample ids")

    def unpublished_variant_of(self, sample_id: str) -> str:
        return (
            "original"
            if self.published_variant[sample_id] == "modified"
            else "modified"
        )


def modify_dataset(samples, cfg: AuditConfig) -> list[Sample]:
    """Produce the modified twin of every sample (labels unchanged).

    Per-sample noise seeds derive from the master noise seed, so any
    modified variant can be regenerated later from config alone. Samples
    sharing a shape are batched through the field generator.
    """
    by_shape: dict[tuple, list[int]] = {}
    for idx, s in enumerate(samples):
        by_shape.setdefault((s.video.t, s.video.h, s.video.w), []).append(idx)

    out: list[Sample | None] = [None] * len(samples)
    for (t, h, w), idxs in by_shape.items():
        seeds = [cfg.sample_noise_seed(samples[i].sample_id) for i in idxs]
        fields = perlin.generate_fields(t, h, w, cfg.perlin, seeds)
        for i, fld in zip(idxs, fields):
            s = samples[i]
            try:
                modified = inject_noise(s.video, fld, cfg.epsilon)
            except Exception as exc:
                raise type(exc)(f"sample {s.sample_id!r}: {exc}") from exc
            out[i] = Sample(s.sample_id, s.label, modified)
    return out


def score_samples(oracle, originals, modified, *, n_c: int) -> list[float]:
    """Evaluation-model impact scores: true-label drop original -> modified.

    The oracle must answer in full-posterior mode. Query ids carry a
    ``#orig`` / ``#mod`` suffix so one prediction table can store both
    variants of each sample.
    """
    if len(originals) != len(modified):
        raise IntegrityError("original and modified collections differ in size")
    deltas = []
    for done, (o, q) in enumerate(zip(originals, modified)):
        if o.sample_id != q.sample_id:
            raise IntegrityError(
                f"collections misaligned at {o.sample_id!r} vs {q.sample_id!r}"
            )
        try:
            r_o = oracle.query(o.video, f"{o.sample_id}#orig")
            r_q = oracle.query(q.video, f"{q.sample_id}#mod")
        except Exception as exc:
            raise ScoringError(
                f"oracle failed at sample {o.sample_id!r} "
                f"after {done} completed: {exc}",
                completed=done,
                failed_id=o.sample_id,
            ) from exc
        if r_o.mode != MODE_FULL or r_q.mode != MODE_FULL:
            raise ScoringError(
                f"evaluation oracle must answer in full mode, got "
                f"{r_o.mode!r}/{r_q.mode!r} for {o.sample_id!r}",
                completed=done,
                failed_id=o.sample_id,
            )
        deltas.append(
            true_label_prob(r_o, o.label, n_c)
            - true_label_prob(r_q, o.label, n_c)
        )
    return deltas


def select_sets(samples, delta_m, cfg: AuditConfig) -> DatasetManifest:
    """Partition samples into modification / reference / remaining sets.

    Samples are ranked by descending delta_m (ties broken by ascending
    sample id); the top floor(r_c * N) form the candidate pool, and a seeded
    shuffle of the pool yields the disjoint reference and modification sets.
    With ``delta_m=None`` the candidate pool is a seeded uniform draw
    (auditing without an evaluation model).
    """
    n = len(samples)
    ids = [s.sample_id for s in samples]
    if delta_m is not None and len(delta_m) != n:
        raise IntegrityError("delta_m length does not match sample count")

    n_cand = int(np.floor(cfg.r_c * n))
    n_ref = int(np.floor(cfg.r_r * n))
    n_mod = int(np.floor(cfg.r_m * n))
    if n_mod == 0 or n_ref == 0:
        raise ConfigurationError(
            f"ratios select empty sets for {n} samples "
            f"(reference {n_ref}, modification {n_mod}); the audit would be vacuous"
        )

    rng = np.random.default_rng(cfg.selection_seed)
    if delta_m is None:
        order = sorted(range(n), key=lambda i: ids[i])
        order = [order[i] for i in rng.permutation(n)]
        scores = [0.0] * n
    else:
        scores = [float(d) for d in delta_m]
        order = sorted(range(n), key=lambda i: (-scores[i], ids[i]))

    candidates = order[:n_cand]
    perm = rng.permutation(n_cand)
    reference = {candidates[i] for i in perm[:n_ref]}
    modification = {candidates[i] for i in perm[n_ref:n_ref + n_mod]}

    entries = []
    for idx, s in enumerate(samples):
        if idx in modification:
            assignment = ASSIGN_MODIFICATION
        elif idx in reference:
            assignment = ASSIGN_REFERENCE
        else:
            assignment = ASSIGN_REMAINING
        entries.append(
            ManifestEntry(
                sample_id=s.sample_id,
                label=s.label,
                assignment=assignment,
                delta_m=scores[idx],
                noise_seed=cfg.sample_noise_seed(s.sample_id),
            )
        )
    return DatasetManifest(config_hash=cfg.config_hash(), entries=tuple(entries))


def build_pair(originals, modified, manifest: DatasetManifest) -> DatasetPair:
    """Assemble the published dataset and its unpublished complement."""
    orig_by_id = {s.sample_id: s.video for s in originals}
    mod_by_id = {s.sample_id: s.video for s in modified}
    published = {}
    unpublished = {}
    variants = {}
    for e in manifest.entries:
        if e.sample_id not in orig_by_id or e.sample_id not in mod_by_id:
            raise IntegrityError(
                f"manifest sample {e.sample_id!r} missing from collections"
            )
        if e.assignment == ASSIGN_MODIFICATION:
            published[e.sample_id] = mod_by_id[e.sample_id]
            unpublished[e.sample_id] = orig_by_id[e.sample_id]
            variants[e.sample_id] = "modified"
        else:
            published[e.sample_id] = orig_by_id[e.sample_id]
            unpublished[e.sample_id] = mod_by_id[e.sample_id]
            variants[e.sample_id] = "original"
    return DatasetPair(
        published=published, unpublished=unpublished, published_variant=variants
    )


def prepare_audit(samples, cfg: AuditConfig, eval_oracle=None):
    """Run modification and selection end to end.

    Returns ``(modified, manifest, pair)``. When ``eval_oracle`` is None the
    candidate pool is drawn uniformly at random (seeded).
    """
    modified = modify_dataset(samples, cfg)
    if eval_oracle is None:
        delta_m = None
    else:
        delta_m = score_samples(eval_oracle, samples, modified, n_c=cfg.n_c)
    manifest = select_sets(samples, delta_m, cfg)
    pair = build_pair(samples, modified, manifest)
    return modified, manifest, pair


# --- directory layout -------------------------------------------------------
#
# A dataset directory holds one ``<sample_id>.vtr`` per sample plus a
# ``labels.json`` map from sample id to integer label. Published/unpublished
# collections are plain dataset directories next to the manifest.


def load_dataset_dir(path) -> list[Sample]:
    root = Path(path)
    labels_file = root / "labels.json"
    if not labels_file.is_file():
        raise IntegrityError(f"missing labels.json in {root}")
    labels = json.loads(labels_file.read_text())
    samples = []
    for vtr in sorted(root.glob("*.vtr")):
        sid = vtr.stem
        if sid not in labels:
            raise IntegrityError(f"no label for sample {sid!r} in {labels_file}")
        samples.append(Sample(sid, int(labels[sid]), load_vtr(vtr)))
    if not samples:
        raise IntegrityError(f"no .vtr samples found in {root}")
    return samples


def save_dataset_dir(samples_or_videos, path, labels: dict | None = None) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    if labels is None:
        items = [(s.sample_id, s.video) for s in samples_or_videos]
        labels = {s.sample_id: s.label for s in samples_or_videos}
    else:
        items = sorted(samples_or_videos.items())
    for sid, video in items:
        save_vtr(video, root / f"{sid}.vtr")
    (root / "labels.json").write_text(
        json.dumps({k: int(v) for k, v in sorted(labels.items())},
                   indent=2, sort_keys=True) + "\n"
    )
