"""The whole auditing loop on synthetic data, no model training required.

Phase 1 modifies every sample with per-sample seeded noise; phase 2 selects
the modification and reference sets and assembles the published dataset and
its retained complement; phase 3 queries a suspect model with both variants
of the reference and modification samples and runs the one-sided
signed-rank test. Synthetic suspects stand in for trained models.
"""

import dataclasses

from videoaudit import (
    AuditConfig,
    SyntheticOracleSpec,
    audit,
    evaluate_auditor,
    make_suspect,
    make_synthetic_dataset,
    prepare_audit,
)


def show(tag, report):
    print(f"  {tag:<22} decision={report.decision:<10} "
          f"p={report.p_value:<11.3g} h_bar={report.h_bar:+.3f} "
          f"h={report.h:+.3f} postprocessed={report.postprocessed_count} "
          f"queries={report.query_count}")


def main():
    cfg = AuditConfig(n_c=101)  # defaults: eps=10, r_m=1%, H=0.05, alpha=0.01
    print("building a synthetic dataset of 800 tiny clips...")
    samples = make_synthetic_dataset(800, (4, 8, 8, 3), cfg.n_c, seed=0)
    _, manifest, pair = prepare_audit(samples, cfg)
    print("set sizes:", manifest.counts)

    print("\nauditing one suspect of each behavior family:")
    for behavior in ("member", "non_member", "weak", "inflated_ref"):
        spec = SyntheticOracleSpec(behavior, n_c=cfg.n_c, seed=1)
        report = audit(make_suspect(spec, manifest, pair), manifest, pair, cfg)
        show(behavior, report)

    print("\nwhy the safeguards matter -- same suspects, safeguards off:")
    weak = SyntheticOracleSpec("weak", n_c=cfg.n_c, seed=1)
    no_pp = dataclasses.replace(cfg, postprocess=False)
    show("weak, no postprocess",
         audit(make_suspect(weak, manifest, pair), manifest, pair, no_pp))
    inflated = SyntheticOracleSpec("inflated_ref", n_c=cfg.n_c, seed=1)
    import math

    no_clip = dataclasses.replace(cfg, H=math.inf)
    show("inflated, no clipping",
         audit(make_suspect(inflated, manifest, pair), manifest, pair, no_clip))
    print("  -> both would be false accusations; post-processing and "
          "threshold clipping suppress them.")

    print("\nfull protocol: 10 positive suspects, 100 negative suspects...")
    result = evaluate_auditor(
        10, 100, cfg,
        SyntheticOracleSpec("member", n_c=cfg.n_c),
        SyntheticOracleSpec("non_member", n_c=cfg.n_c),
        seed=0, dataset_size=800, dims=(4, 8, 8, 3),
    )
    print(f"TPR={result.tpr}  FPR={result.fpr}  F1={result.f1}")


if __name__ == "__main__":
    main()
