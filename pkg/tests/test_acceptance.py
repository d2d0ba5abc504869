"""Acceptance gate: one test per release criterion, at its stated tolerance.

Run with ``pytest -s tests/test_acceptance.py`` to see one line per
criterion; under plain pytest each test name doubles as the pass/fail line.
"""

import dataclasses
import itertools
import math
import time
import warnings

import numpy as np
import pytest

from videoaudit import (
    AuditConfig,
    AuditPowerWarning,
    FprBoundInputs,
    PerlinParams,
    SyntheticOracleSpec,
    ThresholdModel,
    VideoTensor,
    evaluate_auditor,
    fade,
    fpr_bound,
    generate_field,
    inject_noise,
    linf_distance,
    perlin_value,
    ssim,
    threshold_range,
    wilcoxon_moments,
    wilcoxon_one_sided,
)

from conftest import make_smooth_video
from test_verify import brute_force_p


def _ok(name):
    print(f"[acceptance] PASS {name}")


DEFAULT_SIM_CFG = AuditConfig(n_c=101)  # epsilon=10, r_m=1%, H=0.05, alpha=0.01
SIM_DATASET = 800
SIM_DIMS = (4, 8, 8, 3)


def run_default_simulation(seed, *, n_pos=10, n_neg=100, cfg=DEFAULT_SIM_CFG,
                           pos_kwargs=None, neg_kwargs=None,
                           neg_behavior="non_member"):
    pos = SyntheticOracleSpec("member", n_c=cfg.n_c, **(pos_kwargs or {}))
    neg = SyntheticOracleSpec(neg_behavior, n_c=cfg.n_c, **(neg_kwargs or {}))
    return evaluate_auditor(
        n_pos, n_neg, cfg, pos, neg,
        seed=seed, dataset_size=SIM_DATASET, dims=SIM_DIMS,
    )


def test_appendix_threshold_range_reproduction():
    model = ThresholdModel(mu0=0.02, sigma0=0.01, mu1=0.08, sigma1=0.02,
                           n=100, a=0.05, b=0.05)
    threshold_range(model)  # warm-up
    start = time.perf_counter()
    rng = threshold_range(model)
    elapsed = time.perf_counter() - start
    assert rng.tau_min == pytest.approx(0.022, abs=5e-4)
    assert rng.tau_max == pytest.approx(0.077, abs=5e-4)
    assert rng.midpoint == pytest.approx(0.05, abs=5e-3)
    assert elapsed < 1e-3
    _ok("threshold range reproduces the worked appendix values (<1ms)")


def test_fade_function_exactness():
    start = time.perf_counter()
    assert fade(0.0) == 0.0
    assert fade(1.0) == 1.0
    assert fade(0.5) == 0.5
    grid = np.linspace(0.0, 1.0, 10_000)
    assert np.all(np.diff(fade(grid)) >= 0.0)
    elapsed = time.perf_counter() - start
    assert elapsed < 10e-3
    _ok("fade endpoints exact and monotone on a 10^4 grid (<10ms)")


def test_perlin_lattice_zero_property():
    rng = np.random.default_rng(2024)
    pts = rng.integers(-10_000, 10_000, size=(1000, 3))
    for x, y, t in pts:
        assert abs(perlin_value(float(x), float(y), float(t), 31337)) < 1e-12
    _ok("single-octave noise vanishes at 1000 random integer lattice points")


def test_linf_budget_sweep():
    params = PerlinParams(seed=0)
    for i in range(100):
        video_rng = np.random.default_rng(1000 + i)
        video = VideoTensor(
            video_rng.integers(0, 256, size=(8, 32, 32, 3), dtype=np.uint8)
        )
        field = generate_field(
            8, 32, 32, dataclasses.replace(params, seed=5000 + i)
        )
        for eps in (2, 4, 6, 10):
            out = inject_noise(video, field, float(eps))
            assert linf_distance(video, out) <= eps
    _ok("pixel budget holds for 100 seeded videos at eps in {2,4,6,10}")


def test_wilcoxon_exact_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(555)
    checked = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AuditPowerWarning)
        while checked < 200:
            n = int(rng.integers(1, 13))
            deltas = list(rng.normal(0.0, 1.0, size=n))
            h = float(rng.normal(0.0, 0.25))
            w_obs, n_eff, p_oracle = brute_force_p(deltas, h)
            if n_eff == 0:
                continue
            res = wilcoxon_one_sided(deltas, h, 0.01, method="exact")
            assert res.p_value == pytest.approx(p_oracle, abs=1e-12)
            checked += 1
        for _ in range(60):
            n = int(rng.integers(10, 21))
            deltas = list(rng.normal(-0.1, 1.0, size=n))
            exact = wilcoxon_one_sided(deltas, 0.0, 0.01, method="exact")
            approx = wilcoxon_one_sided(deltas, 0.0, 0.01, method="normal")
            assert abs(exact.p_value - approx.p_value) < 0.02
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    _ok("exact p equals 2^n enumeration to 1e-12; normal approx within 0.02 (<10s)")


def test_wilcoxon_moments_match_enumeration():
    for n in range(1, 13):
        ranks = np.arange(1, n + 1)
        ws = np.array([
            sum(r for r, neg in zip(ranks, signs) if neg)
            for signs in itertools.product((False, True), repeat=n)
        ], dtype=float)
        mu, var = wilcoxon_moments(n)
        assert abs(mu - ws.mean()) < 1e-9
        assert abs(var - ws.var()) < 1e-9
    _ok("signed-rank moments match brute-force enumeration for n <= 12")


def test_minimum_power_floor():
    for n in range(1, 7):
        deltas = [-0.1 * (i + 1) for i in range(n)]
        with pytest.warns(AuditPowerWarning):
            res = wilcoxon_one_sided(deltas, 0.0, 0.01)
        assert res.p_value == pytest.approx(0.5 ** n, abs=1e-15)
        assert res.p_value > 0.01
        assert not res.reject
    _ok("no rejection possible at alpha=0.01 for n_effective <= 6, with warning")


def test_end_to_end_simulation():
    start = time.perf_counter()
    for seed in range(5):
        result = run_default_simulation(seed)
        assert result.tpr == 1.0, f"seed {seed}: tpr={result.tpr}"
        assert result.fpr == 0.0, f"seed {seed}: fpr={result.fpr}"
        assert result.f1 == 1.0, f"seed {seed}: f1={result.f1}"
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    _ok("10 members + 100 non-members: TPR=1, FPR=0, F1=1 over 5 seeds (<60s)")


def test_postprocessing_ablation():
    cfg_on = DEFAULT_SIM_CFG
    cfg_off = dataclasses.replace(cfg_on, postprocess=False)
    for seed in range(2):
        with_pp = run_default_simulation(
            seed, n_pos=2, n_neg=10, cfg=cfg_on, neg_behavior="weak"
        )
        without_pp = run_default_simulation(
            seed, n_pos=2, n_neg=10, cfg=cfg_off, neg_behavior="weak"
        )
        assert with_pp.fpr == 0.0
        assert without_pp.fpr > 0.0
    _ok("weak negatives: FPR>0 without post-processing, FPR=0 with it")


def test_threshold_clipping_ablation():
    cfg_clip = DEFAULT_SIM_CFG  # H = 0.05
    cfg_noclip = dataclasses.replace(cfg_clip, H=math.inf)
    neg_kwargs = {"noise_sigma": 0.01}
    for seed in range(2):
        clipped = run_default_simulation(
            seed, n_pos=2, n_neg=10, cfg=cfg_clip,
            neg_behavior="inflated_ref", neg_kwargs=neg_kwargs,
        )
        unclipped = run_default_simulation(
            seed, n_pos=2, n_neg=10, cfg=cfg_noclip,
            neg_behavior="inflated_ref", neg_kwargs=neg_kwargs,
        )
        assert clipped.fpr == 0.0
        assert unclipped.fpr > 0.0
    _ok("inflated references (h_bar~0.3): FPR>0 unclipped, FPR=0 at H=0.05")


def test_output_quantization_robustness():
    for seed in range(5):
        plain = run_default_simulation(seed, n_pos=2, n_neg=10)
        quantized = run_default_simulation(
            seed, n_pos=2, n_neg=10,
            pos_kwargs={"quantize_decimals": 1},
            neg_kwargs={"quantize_decimals": 1},
        )
        decisions = [r["decision"] for r in plain.runs]
        q_decisions = [r["decision"] for r in quantized.runs]
        assert decisions == q_decisions
    _ok("decisions identical with and without one-decimal quantization, 5 seeds")


def test_topk_consistency():
    for seed in range(2):
        result = run_default_simulation(
            seed, n_pos=2, n_neg=10,
            pos_kwargs={"mode": "topk", "topk_k": 5},
            neg_kwargs={"mode": "topk", "topk_k": 5},
        )
        assert result.tpr == 1.0
        assert result.fpr == 0.0
    _ok("top-5 responses preserve TPR=1 / FPR=0 at the default member gap")


def test_fpr_bound_sanity():
    limit = fpr_bound(FprBoundInputs(
        alpha=0.01, n_M=100, n_R=10 ** 9, delta_h=0.01, c_h=0.01,
        H=0.05, mu=0.02, f_max=0.0, k_pp=0.0,
    ))
    assert limit.total - 0.01 < 1e-6
    assert limit.total >= 0.01

    k_pps = [0.0, 2.0, 4.0, 8.0, 16.0]
    delta_hs = [0.001, 0.005, 0.01, 0.02, 0.05]
    for d in delta_hs:
        totals = [
            fpr_bound(FprBoundInputs(
                alpha=0.01, n_M=100, n_R=200, delta_h=d, c_h=0.02,
                H=0.05, mu=0.02, f_max=2.0, k_pp=k,
            )).total
            for k in k_pps
        ]
        assert all(a <= b + 1e-12 for a, b in zip(totals, totals[1:]))
    _ok("FPR bound tends to alpha and is monotone in k_pp over a 5x5 grid")


def test_ssim_identity_and_monotonicity():
    video = make_smooth_video(seed=7)
    assert ssim(video, video) == 1.0
    field = generate_field(8, 32, 32, PerlinParams(seed=77))
    scores = [
        ssim(video, inject_noise(video, field, float(eps)))
        for eps in (0, 2, 10, 40)
    ]
    assert scores[0] == 1.0
    assert all(a >= b for a, b in zip(scores, scores[1:]))
    _ok("SSIM is exactly 1 on identity and non-increasing over eps {0,2,10,40}")
