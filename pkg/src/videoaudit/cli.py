"""Command-line front end binding the library into reproducible batch runs.

Configuration is a flat ``key = value`` text file (unknown keys rejected);
flags override file values. Exit codes: 0 success / no misuse detected,
3 misuse detected, 1 error. Errors emit a machine-readable JSON diagnostic
on stderr and never fabricate a decision.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigurationError, QueryError, VideoAuditError
from .oracles import FileBackedOracle, QuantizingOracle, RemoteOracle
from .perlin import PerlinParams
from .pipeline import (
    ASSIGN_MODIFICATION,
    AuditConfig,
    DatasetManifest,
    DatasetPair,
    load_dataset_dir,
    modify_dataset,
    save_dataset_dir,
    score_samples,
    select_sets,
    build_pair,
)
from .sim import SyntheticOracleSpec, evaluate_auditor
from .theory import FprBoundInputs, ThresholdModel, fpr_bound, threshold_range
from .verify import EXIT_ERROR, audit
from .video import load_vtr


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_float(raw: str) -> float:
    if raw.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(raw)


def _parse_dims(raw: str) -> tuple:
    parts = [int(p) for p in raw.replace("x", ",").split(",") if p.strip()]
    if len(parts) != 4:
        raise ValueError(f"dims must be t,h,w,c: {raw!r}")
    return tuple(parts)


# Every key a config file may contain, with its parser.
CONFIG_KEYS = {
    # audit parameters
    "n_c": int,
    "epsilon": _parse_float,
    "r_c": _parse_float,
    "r_m": _parse_float,
    "r_r": _parse_float,
    "h_limit": _parse_float,
    "beta": _parse_float,
    "alpha": _parse_float,
    "selection_seed": int,
    "noise_seed": int,
    "noise_policy": str,
    "postprocess": _parse_bool,
    "query_limit": int,
    # noise parameters
    "lambda_x": _parse_float,
    "lambda_y": _parse_float,
    "lambda_t": _parse_float,
    "phi_sine": _parse_float,
    "octaves": int,
    # paths
    "input_dir": str,
    "output_dir": str,
    "modified_dir": str,
    "manifest": str,
    "published_dir": str,
    "unpublished_dir": str,
    "predictions": str,
    "oracle_url": str,
    "report": str,
    # oracle behavior
    "mode": str,
    "quantize_decimals": int,
    "jobs": int,
    # simulation
    "n_pos": int,
    "n_neg": int,
    "dataset_size": int,
    "video_dims": _parse_dims,
    "scenario": str,
    "base_true_prob": _parse_float,
    "gap": _parse_float,
    "noise_sigma": _parse_float,
    "topk_k": int,
    "sim_seed": int,
    # theory calculators
    "mu0": _parse_float,
    "sigma0": _parse_float,
    "mu1": _parse_float,
    "sigma1": _parse_float,
    "n_samples": int,
    "a": _parse_float,
    "b": _parse_float,
    "n_m": int,
    "n_r": int,
    "delta_h": _parse_float,
    "c_h": _parse_float,
    "mu": _parse_float,
    "f_max": _parse_float,
    "k_pp": _parse_float,
}


def parse_config(path) -> dict:
    """Parse a flat key=value config file; unknown keys are an error."""
    out = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(
                f"{path}:{lineno}: expected 'key = value', got {line!r}"
            )
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](raw.strip())
        except ValueError as exc:
            raise ConfigurationError(
                f"{path}:{lineno}: bad value for {key!r}: {exc}"
            ) from exc
    return out


def build_audit_config(values: dict) -> AuditConfig:
    if "n_c" not in values:
        raise ConfigurationError("config must set n_c")
    perlin_kwargs = {}
    for src, dst in (
        ("lambda_x", "lambda_x"),
        ("lambda_y", "lambda_y"),
        ("lambda_t", "lambda_t"),
        ("phi_sine", "phi_sine"),
        ("octaves", "omega"),
    ):
        if src in values:
            perlin_kwargs[dst] = values[src]
    kwargs = {"n_c": values["n_c"], "perlin": PerlinParams(**perlin_kwargs)}
    for src, dst in (
        ("epsilon", "epsilon"),
        ("r_c", "r_c"),
        ("r_m", "r_m"),
        ("r_r", "r_r"),
        ("h_limit", "H"),
        ("beta", "beta"),
        ("alpha", "alpha"),
        ("selection_seed", "selection_seed"),
        ("noise_seed", "noise_seed"),
        ("noise_policy", "noise_policy"),
        ("postprocess", "postprocess"),
        ("query_limit", "query_limit"),
    ):
        if src in values:
            kwargs[dst] = values[src]
    return AuditConfig(**kwargs)


def _fail(message: str, kind: str = "error") -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return EXIT_ERROR


def _require_dir(values: dict, key: str) -> Path:
    if key not in values:
        raise ConfigurationError(f"config must set {key}")
    path = Path(values[key])
    if not path.is_dir():
        raise ConfigurationError(f"{key} {path} is not a directory")
    return path


def _apply_overrides(values: dict, args) -> dict:
    overrides = {
        "predictions": args.predictions,
        "oracle_url": args.oracle_url,
        "output_dir": args.out,
        "quantize_decimals": args.quantize_decimals,
        "query_limit": args.query_limit,
        "mode": args.mode,
        "jobs": args.jobs,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    if args.seed is not None:
        values["selection_seed"] = args.seed
        values["noise_seed"] = args.seed
        values["sim_seed"] = args.seed
    return values


def cmd_modify(values: dict) -> int:
    cfg = build_audit_config(values)
    samples = load_dataset_dir(_require_dir(values, "input_dir"))
    out_root = Path(values.get("output_dir", "out"))
    modified = modify_dataset(samples, cfg)
    save_dataset_dir(modified, out_root / "modified")
    seeds = {s.sample_id: cfg.sample_noise_seed(s.sample_id) for s in samples}
    (out_root / "noise_seeds.json").write_text(
        json.dumps(seeds, indent=2, sort_keys=True) + "\n"
    )
    print(json.dumps({"modified": len(modified), "out": str(out_root)}))
    return 0


def cmd_select(values: dict) -> int:
    cfg = build_audit_config(values)
    samples = load_dataset_dir(_require_dir(values, "input_dir"))
    if "modified_dir" in values:
        modified = load_dataset_dir(_require_dir(values, "modified_dir"))
        by_id = {s.sample_id: s for s in modified}
        modified = [by_id[s.sample_id] for s in samples]
    else:
        modified = modify_dataset(samples, cfg)

    delta_m = None
    if "predictions" in values:
        eval_oracle = FileBackedOracle.from_path(values["predictions"])
        delta_m = score_samples(eval_oracle, samples, modified, n_c=cfg.n_c)

    manifest = select_sets(samples, delta_m, cfg)
    pair = build_pair(samples, modified, manifest)

    out_root = Path(values.get("output_dir", "out"))
    out_root.mkdir(parents=True, exist_ok=True)
    manifest.save(out_root / "manifest.json")
    labels = {e.sample_id: e.label for e in manifest.entries}
    save_dataset_dir(pair.published, out_root / "published", labels=labels)
    save_dataset_dir(pair.unpublished, out_root / "unpublished", labels=labels)
    print(json.dumps({"counts": manifest.counts, "out": str(out_root)}))
    return 0


def _load_pair_from_dirs(manifest: DatasetManifest, pub_dir: Path,
                         unpub_dir: Path) -> DatasetPair:
    published = {}
    unpublished = {}
    variants = {}
    for e in manifest.entries:
        published[e.sample_id] = load_vtr(pub_dir / f"{e.sample_id}.vtr")
        unpublished[e.sample_id] = load_vtr(unpub_dir / f"{e.sample_id}.vtr")
        variants[e.sample_id] = (
            "modified" if e.assignment == ASSIGN_MODIFICATION else "original"
        )
    return DatasetPair(
        published=published, unpublished=unpublished, published_variant=variants
    )


class _ModeEnforcingOracle:
    """Fails fast when the suspect answers in an unexpected response mode."""

    def __init__(self, inner, mode: str):
        self._inner = inner
        self._mode = mode

    def query(self, video, sample_id=None):
        resp = self._inner.query(video, sample_id)
        if resp.mode != self._mode:
            raise QueryError(
                f"oracle answered in {resp.mode!r} mode, expected {self._mode!r}"
            )
        return resp


def _build_suspect_oracle(values: dict):
    if "oracle_url" in values:
        oracle = RemoteOracle(values["oracle_url"])
    elif "predictions" in values:
        oracle = FileBackedOracle.from_path(values["predictions"])
    else:
        raise ConfigurationError(
            "verify needs an oracle: set oracle_url or predictions"
        )
    if "quantize_decimals" in values:
        oracle = QuantizingOracle(oracle, values["quantize_decimals"])
    if "mode" in values:
        oracle = _ModeEnforcingOracle(oracle, values["mode"])
    return oracle


def cmd_verify(values: dict) -> int:
    cfg = build_audit_config(values)
    if "manifest" not in values:
        raise ConfigurationError("config must set manifest")
    manifest = DatasetManifest.load(values["manifest"])
    pair = _load_pair_from_dirs(
        manifest,
        _require_dir(values, "published_dir"),
        _require_dir(values, "unpublished_dir"),
    )
    oracle = _build_suspect_oracle(values)
    report = audit(
        oracle, manifest, pair, cfg, jobs=int(values.get("jobs", 1))
    )
    if "report" in values:
        report_path = Path(values["report"])
    else:
        report_path = Path(values.get("output_dir", ".")) / "report.json"
    report_path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    print(json.dumps({
        "decision": report.decision,
        "p_value": report.p_value,
        "report": str(report_path),
    }))
    return report.exit_code


def cmd_bound(values: dict) -> int:
    out = {}
    thr_keys = ("mu0", "sigma0", "mu1", "sigma1", "n_samples", "a", "b")
    if all(k in values for k in thr_keys):
        model = ThresholdModel(
            mu0=values["mu0"], sigma0=values["sigma0"],
            mu1=values["mu1"], sigma1=values["sigma1"],
            n=values["n_samples"], a=values["a"], b=values["b"],
        )
        out["threshold_range"] = threshold_range(model).to_dict()
    fpr_keys = ("alpha", "n_m", "n_r", "delta_h", "c_h", "h_limit", "mu", "f_max")
    if all(k in values for k in fpr_keys):
        inputs = FprBoundInputs(
            alpha=values["alpha"], n_M=values["n_m"], n_R=values["n_r"],
            delta_h=values["delta_h"], c_h=values["c_h"], H=values["h_limit"],
            mu=values["mu"], f_max=values["f_max"],
            k_pp=values.get("k_pp", 0.0),
        )
        out["fpr_bound"] = fpr_bound(inputs).to_dict()
    if not out:
        raise ConfigurationError(
            "bound needs threshold keys (mu0 sigma0 mu1 sigma1 n_samples a b) "
            "and/or FPR keys (alpha n_m n_r delta_h c_h h_limit mu f_max)"
        )
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


_SCENARIOS = {
    "default": ("member", "non_member"),
    "weak": ("member", "weak"),
    "inflated_ref": ("member", "inflated_ref"),
}


def cmd_simulate(values: dict) -> int:
    cfg = build_audit_config(values)
    scenario = values.get("scenario", "default")
    if scenario not in _SCENARIOS:
        raise ConfigurationError(
            f"unknown scenario {scenario!r}; pick one of {sorted(_SCENARIOS)}"
        )
    pos_behavior, neg_behavior = _SCENARIOS[scenario]
    common = {
        "n_c": cfg.n_c,
        "base_true_prob": values.get("base_true_prob", 0.95),
        "gap": values.get("gap", 0.4),
        "noise_sigma": values.get("noise_sigma", 0.02),
        "mode": values.get("mode", "full"),
        "topk_k": values.get("topk_k", 5),
    }
    if "quantize_decimals" in values:
        common["quantize_decimals"] = values["quantize_decimals"]
    if "query_limit" in values:
        common["query_limit"] = values["query_limit"]
    pos_spec = SyntheticOracleSpec(behavior=pos_behavior, **common)
    neg_spec = SyntheticOracleSpec(behavior=neg_behavior, **common)
    result = evaluate_auditor(
        values.get("n_pos", 10),
        values.get("n_neg", 100),
        cfg,
        pos_spec,
        neg_spec,
        seed=values.get("sim_seed", 0),
        dataset_size=values.get("dataset_size", 800),
        dims=values.get("video_dims", (4, 8, 8, 3)),
    )
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return 0


_COMMANDS = {
    "modify": cmd_modify,
    "select": cmd_select,
    "verify": cmd_verify,
    "bound": cmd_bound,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="videoaudit",
        description="Dataset-copyright auditing for video recognition models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("modify", "inject seeded noise into every sample"),
        ("select", "partition samples and write published/unpublished sets"),
        ("verify", "query a suspect model and decide misuse"),
        ("bound", "print threshold-range and FPR-bound calculators as JSON"),
        ("simulate", "run the synthetic end-to-end evaluation harness"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="flat key=value file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--oracle-url", dest="oracle_url", default=None)
        p.add_argument("--predictions", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--quantize-decimals", dest="quantize_decimals",
                       type=int, default=None)
        p.add_argument("--query-limit", dest="query_limit",
                       type=int, default=None)
        p.add_argument("--mode", choices=("full", "topk", "label"),
                       default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        values = _apply_overrides(parse_config(args.config), args)
        return _COMMANDS[args.command](values)
    except VideoAuditError as exc:
        return _fail(str(exc), kind=type(exc).__name__)
    except FileNotFoundError as exc:
        return _fail(str(exc), kind="FileNotFoundError")
    except Exception as exc:  # no decision is ever fabricated on error paths
        return _fail(f"unexpected failure: {exc}", kind=type(exc).__name__)


if __name__ == "__main__":
    sys.exit(main())
