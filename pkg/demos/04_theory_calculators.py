"""The closed-form calculators behind the default parameters.

The threshold-range calculator explains where the clipping limit H = 0.05
comes from; the FPR bound decomposes the worst-case false-positive rate of
the signed-rank decision into named terms.
"""

import json

from videoaudit import (
    FprBoundInputs,
    ThresholdModel,
    estimate_concentration,
    fpr_bound,
    fpr_bound_sweep,
    threshold_range,
)


def main():
    # --- admissible clipping thresholds --------------------------------------
    model = ThresholdModel(mu0=0.02, sigma0=0.01, mu1=0.08, sigma1=0.02,
                           n=100, a=0.05, b=0.05)
    rng = threshold_range(model)
    print("threshold range under 5%/5% error caps:")
    print(json.dumps(rng.to_dict(), indent=2))
    print(f"-> picking the midpoint gives H ~ {rng.midpoint:.3f}\n")

    tight = ThresholdModel(mu0=0.02, sigma0=0.05, mu1=0.021, sigma1=0.05,
                           n=4, a=0.01, b=0.01)
    print("with nearly-overlapping hypotheses the constraints are infeasible:")
    print(json.dumps(threshold_range(tight).to_dict(), indent=2))

    # --- FPR upper bound ------------------------------------------------------
    inputs = FprBoundInputs(alpha=0.01, n_M=100, n_R=400, delta_h=0.01,
                            c_h=0.005, H=0.05, mu=0.02, f_max=2.0, k_pp=2.0)
    bound = fpr_bound(inputs)
    print("\nFPR bound decomposition:")
    print(json.dumps(bound.to_dict(), indent=2))

    best_d, best, _ = fpr_bound_sweep(
        inputs, [0.002, 0.005, 0.01, 0.02, 0.05, 0.1]
    )
    print(f"\nsweeping the free deviation parameter: "
          f"tightest bound {best.total:.4f} at delta_h={best_d}")

    # --- estimating the concentration constant from data ----------------------
    import numpy as np

    diffs = np.random.default_rng(0).normal(0.02, 0.05, size=400)
    print(f"\nc_h estimated from 400 observed reference differences: "
          f"{estimate_concentration(diffs):.5f}")


if __name__ == "__main__":
    main()
