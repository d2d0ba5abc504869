"""Closed-form calculators: admissible threshold range and an FPR upper bound.

These are pure formula evaluations. The threshold-range calculator inverts
Gaussian error-rate constraints on the mean reference difference; the FPR
bound assembles a nominal-level term, a rank-perturbation term, and two
sub-Gaussian concentration terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

_NORMAL = NormalDist()


def normal_quantile(q: float) -> float:
    """Standard normal quantile z_q (rational approximation, |err| << 1e-8)."""
    if not 0.0 < q < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    return _NORMAL.inv_cdf(q)


@dataclass(frozen=True)
class ThresholdModel:
    """Gaussian model of the mean reference difference under both hypotheses.

    ``mu0``/``sigma0`` describe the same-training-data case, ``mu1``/
    ``sigma1`` the different-data case; ``a`` caps the FPR and ``b`` the FNR.
    """

    mu0: float
    sigma0: float
    mu1: float
    sigma1: float
    n: int
    a: float
    b: float

    def __post_init__(self):
        if not self.mu0 < self.mu1:
            raise ValueError("mu0 must be < mu1")
        if self.sigma0 <= 0 or self.sigma1 <= 0:
            raise ValueError("sigmas must be > 0")
        if not (0.0 < self.a < 1.0 and 0.0 < self.b < 1.0):
            raise ValueError("a and b must lie in (0, 1)")
        if self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass(frozen=True)
class ThresholdRange:
    tau_min: float
    tau_max: float
    feasible: bool

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.tau_min + self.tau_max)

    def to_dict(self) -> dict:
        return {
            "tau_min": self.tau_min,
            "tau_max": self.tau_max,
            "midpoint": self.midpoint,
            "feasible": self.feasible,
        }


def threshold_range(m: ThresholdModel) -> ThresholdRange:
    """Admissible clipping thresholds under the TPR/FPR constraints.

    tau_min = mu0 + z_{1-b} * sigma0 / sqrt(n) guarantees TPR >= 1-b;
    tau_max = mu1 + z_a * sigma1 / sqrt(n) guarantees FPR <= a. When the
    constraints cannot both hold the result is flagged infeasible rather
    than silently fabricated.
    """
    root_n = math.sqrt(m.n)
    tau_min = m.mu0 + normal_quantile(1.0 - m.b) * m.sigma0 / root_n
    tau_max = m.mu1 + normal_quantile(m.a) * m.sigma1 / root_n
    return ThresholdRange(
        tau_min=tau_min, tau_max=tau_max, feasible=bool(tau_min <= tau_max)
    )


def wilcoxon_moments(n_M: int):
    """Null mean and variance of the signed-rank statistic (no ties)."""
    if n_M < 1:
        raise ValueError("n_M must be >= 1")
    mu_w = n_M * (n_M + 1) / 4.0
    sigma_w_sq = n_M * (n_M + 1) * (2 * n_M + 1) / 24.0
    return mu_w, sigma_w_sq


def delta_w_max(K, n_M: int) -> float:
    """Largest signed-rank change when at most K samples are perturbed."""
    if K < 0 or K > n_M:
        raise ValueError(f"K must lie in [0, n_M]; got K={K}, n_M={n_M}")
    return K * (2 * n_M - K + 1) / 2.0


def affected_samples(n_M: int, f_max: float, width: float) -> float:
    """Bound on samples whose sign or rank can flip within a density band.

    Evaluates ``n_M * min(1, 2 * f_max * width)``; a negative width clamps
    to zero (the band is empty).
    """
    if n_M < 0 or f_max < 0:
        raise ValueError("n_M and f_max must be >= 0")
    width = max(width, 0.0)
    return n_M * min(1.0, 2.0 * f_max * width)


@dataclass(frozen=True)
class FprBoundInputs:
    """Everything the FPR upper bound consumes.

    ``delta_h`` is the tolerated deviation of the estimated threshold from
    its population mean ``mu``; ``c_h`` the sub-Gaussian concentration
    constant; ``k_pp`` caps how many modification samples post-processing
    may alter.
    """

    alpha: float
    n_M: int
    n_R: int
    delta_h: float
    c_h: float
    H: float
    mu: float
    f_max: float
    k_pp: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.n_M < 1 or self.n_R < 1:
            raise ValueError("set sizes must be >= 1")
        if self.delta_h < 0 or self.c_h <= 0 or self.f_max < 0:
            raise ValueError("delta_h, f_max must be >= 0 and c_h > 0")
        if self.k_pp < 0 or self.k_pp > self.n_M:
            raise ValueError("k_pp must lie in [0, n_M]")


@dataclass(frozen=True)
class FprBound:
    """The assembled bound plus every term, for auditability."""

    alpha_term: float
    rank_term: float
    deviation_term: float
    clipping_term: float
    k: float
    k_clip: float
    k_pp: float
    sigma_w: float
    total: float
    total_capped: float

    def to_dict(self) -> dict:
        return {
            "alpha_term": self.alpha_term,
            "rank_term": self.rank_term,
            "deviation_term": self.deviation_term,
            "clipping_term": self.clipping_term,
            "k": self.k,
            "k_clip": self.k_clip,
            "k_pp": self.k_pp,
            "sigma_w": self.sigma_w,
            "total": self.total,
            "total_capped": self.total_capped,
        }


def fpr_bound(inputs: FprBoundInputs) -> FprBound:
    """Upper bound on the false positive rate of the signed-rank decision.

    total = alpha
          + DeltaW_max(k + k_pp + k_clip) / (sigma_W * sqrt(2*pi))
          + 2 exp(-n_R delta_h^2 / (2 c_h^2))
          + 2 exp(-n_R (H - |mu|)^2 / (2 c_h^2))

    The total is an upper bound and may exceed one; it is reported raw with
    a min(1, total) convenience field rather than silently clamped. A
    non-positive clipping margin (H <= |mu|) makes the last term vacuous (2).
    """
    k = affected_samples(inputs.n_M, inputs.f_max, inputs.delta_h)
    clip_margin = inputs.H - abs(inputs.mu)
    k_clip = affected_samples(inputs.n_M, inputs.f_max, clip_margin)

    _, sigma_w_sq = wilcoxon_moments(inputs.n_M)
    sigma_w = math.sqrt(sigma_w_sq)

    # The rank sum cannot change by more than the whole sum, so the combined
    # perturbation count saturates at n_M.
    k_total = min(k + inputs.k_pp + k_clip, float(inputs.n_M))
    rank_term = delta_w_max(k_total, inputs.n_M) / (sigma_w * math.sqrt(2.0 * math.pi))

    deviation_term = 2.0 * math.exp(
        -inputs.n_R * inputs.delta_h ** 2 / (2.0 * inputs.c_h ** 2)
    )
    clipping_term = 2.0 * math.exp(
        -inputs.n_R * max(clip_margin, 0.0) ** 2 / (2.0 * inputs.c_h ** 2)
    )

    total = inputs.alpha + rank_term + deviation_term + clipping_term
    return FprBound(
        alpha_term=inputs.alpha,
        rank_term=rank_term,
        deviation_term=deviation_term,
        clipping_term=clipping_term,
        k=k,
        k_clip=k_clip,
        k_pp=inputs.k_pp,
        sigma_w=sigma_w,
        total=total,
        total_capped=min(1.0, total),
    )


def fpr_bound_sweep(inputs: FprBoundInputs, delta_h_grid):
    """Evaluate the bound over a grid of delta_h values.

    delta_h is a free parameter of the bound; sweeping it and reporting the
    minimizer gives the tightest statement the formula supports. Returns
    ``(best_delta_h, best_bound, all_bounds)``.
    """
    grid = [float(d) for d in delta_h_grid]
    if not grid:
        raise ValueError("delta_h grid must be non-empty")
    results = []
    for d in grid:
        swept = FprBoundInputs(
            alpha=inputs.alpha, n_M=inputs.n_M, n_R=inputs.n_R,
            delta_h=d, c_h=inputs.c_h, H=inputs.H, mu=inputs.mu,
            f_max=inputs.f_max, k_pp=inputs.k_pp,
        )
        results.append(fpr_bound(swept))
    best_idx = int(np.argmin([r.total for r in results]))
    return grid[best_idx], results[best_idx], results


def estimate_concentration(delta_s_R) -> float:
    """Estimate the sub-Gaussian constant c_h as s_R / sqrt(n_R).

    ``s_R`` is the sample standard deviation of the observed reference
    differences.
    """
    arr = np.asarray(delta_s_R, dtype=np.float64)
    if arr.size < 2:
        raise ValueError("need at least 2 reference differences")
    return float(np.std(arr, ddof=1) / math.sqrt(arr.size))
