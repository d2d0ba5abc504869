import json
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from videoaudit import (
    BudgetedOracle,
    FileBackedOracle,
    MissingPredictionError,
    OracleResponse,
    PosteriorVector,
    QueryBudgetExceededError,
    QueryError,
    QuantizingOracle,
    RemoteOracle,
    full_response,
    label_response,
    quantize_posterior,
    quantize_response,
    query,
    response_from_wire,
    response_to_wire,
    topk_response,
    true_label_prob,
)

from conftest import make_random_video
from stub_server import StubServer, serving_oracle


class TestPosteriorVector:
    def test_valid(self):
        p = PosteriorVector([0.7, 0.2, 0.1])
        assert p.n_c == 3

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            PosteriorVector([0.9, -0.1, 0.2])

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            PosteriorVector([0.5, 0.1])

    def test_quantized_relaxes_sum(self):
        p = PosteriorVector([0.5, 0.1], quantized=True)
        assert p.quantized

    def test_needs_two_classes(self):
        with pytest.raises(ValueError):
            PosteriorVector([1.0])


class TestOracleResponse:
    def test_topk_rank_gaps_rejected(self):
        with pytest.raises(ValueError):
            topk_response([(3, 1), (5, 3)])

    def test_topk_duplicate_ranks_rejected(self):
        with pytest.raises(ValueError):
            topk_response([(3, 1), (5, 1)])

    def test_topk_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            topk_response([(3, 1), (3, 2)])

    def test_label_required(self):
        with pytest.raises(ValueError):
            OracleResponse("label")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            OracleResponse("logits")


class TestTrueLabelProb:
    def test_full_direct_read(self):
        r = full_response([0.7, 0.2, 0.1])
        assert true_label_prob(r, 0, 3) == 0.7

    def test_topk_rank_one_harmonic(self):
        r = topk_response([(9, 1), (4, 2), (7, 3), (1, 4), (0, 5)])
        expected = 1.0 / (1 + 1 / 2 + 1 / 3 + 1 / 4 + 1 / 5)
        assert true_label_prob(r, 9, 10) == pytest.approx(expected, abs=1e-12)
        assert true_label_prob(r, 9, 10) == pytest.approx(0.43795620437956204,
                                                          abs=1e-12)

    def test_topk_absent_label(self):
        r = topk_response([(9, 1), (4, 2)])
        assert true_label_prob(r, 3, 10) == 0.0

    def test_label_only(self):
        assert true_label_prob(label_response(2), 2, 5) == 1.0
        assert true_label_prob(label_response(2), 3, 5) == 0.0

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            true_label_prob(full_response([0.5, 0.5]), 2, 2)

    def test_topk_scores_sum_to_one_when_all_ranks_present(self):
        r = topk_response([(i, i + 1) for i in range(5)])
        total = sum(true_label_prob(r, lbl, 10) for lbl in range(10))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_topk_scores_sum_below_one_generally(self):
        r = topk_response([(0, 1), (1, 2)])
        total = sum(true_label_prob(r, lbl, 10) for lbl in range(10))
        assert total <= 1.0 + 1e-12

    def test_label_only_equals_top1(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n_c = int(rng.integers(2, 20))
            winner = int(rng.integers(n_c))
            probe = int(rng.integers(n_c))
            as_label = true_label_prob(label_response(winner), probe, n_c)
            as_top1 = true_label_prob(topk_response([(winner, 1)]), probe, n_c)
            assert as_label == as_top1


class TestQuantizePosterior:
    def test_one_decimal_example(self):
        p = quantize_posterior(PosteriorVector([0.91, 0.06, 0.03]), 1)
        assert p.probs == (0.9, 0.1, 0.0)
        assert p.quantized

    def test_high_precision_noop(self):
        probs = (0.123456789, 0.376543211, 0.5)
        p = quantize_posterior(PosteriorVector(probs), 9)
        assert p.probs == pytest.approx(probs, abs=1e-9)

    def test_quarters_round_half_up(self):
        # round-half-up sends 0.25 to 0.3; the sum invariant is relaxed
        p = quantize_posterior(PosteriorVector([0.25] * 4), 1)
        assert p.probs == (0.3, 0.3, 0.3, 0.3)
        assert p.quantized
        assert sum(p.probs) == pytest.approx(1.2, abs=1e-12)

    def test_rejects_negative_decimals(self):
        with pytest.raises(ValueError):
            quantize_posterior(PosteriorVector([0.5, 0.5]), -1)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8),
           st.integers(0, 6))
    def test_idempotent(self, raw, decimals):
        total = sum(raw)
        if total == 0:
            raw = [1.0] + raw[1:]
            total = sum(raw)
        probs = [x / total for x in raw]
        once = quantize_posterior(PosteriorVector(probs), decimals)
        twice = quantize_posterior(once, decimals)
        assert once.probs == twice.probs

    def test_quantize_response_passthrough_for_topk(self):
        r = topk_response([(1, 1)])
        assert quantize_response(r, 1) is r


class TestWireSchema:
    @pytest.mark.parametrize(
        "resp",
        [
            full_response([0.7, 0.2, 0.1]),
            topk_response([(4, 1), (2, 2), (9, 3)]),
            label_response(11),
        ],
    )
    def test_round_trip(self, resp):
        again = response_from_wire(response_to_wire(resp))
        assert again == resp

    @pytest.mark.parametrize(
        "payload",
        [
            "not a dict",
            {},
            {"mode": "full"},
            {"mode": "full", "probs": "high"},
            {"mode": "topk", "topk": [{"label": 1}]},
            {"mode": "topk", "topk": [{"label": 1, "rank": 1},
                                      {"label": 2, "rank": 3}]},
            {"mode": "label"},
            {"mode": "label", "label": "cat"},
            {"mode": "softmax"},
        ],
    )
    def test_malformed_rejected(self, payload):
        with pytest.raises(QueryError):
            response_from_wire(payload)


class TestFileBackedOracle:
    def test_lookup(self):
        oracle = FileBackedOracle(
            {"clip7": {"mode": "full", "probs": [0.7, 0.2, 0.1]}}
        )
        video = make_random_video(seed=1)
        resp = query(oracle, video, "clip7")
        assert resp.full.probs == (0.7, 0.2, 0.1)

    def test_missing_sample(self):
        oracle = FileBackedOracle({})
        with pytest.raises(MissingPredictionError):
            oracle.query(make_random_video(), "nope")

    def test_from_path(self, tmp_path):
        table = {"a": {"mode": "label", "label": 3}}
        path = tmp_path / "preds.json"
        path.write_text(json.dumps(table))
        oracle = FileBackedOracle.from_path(path)
        assert oracle.query(make_random_video(), "a").label == 3

    def test_concurrent_queries_match_sequential(self):
        table = {
            f"s{i}": {"mode": "full", "probs": [0.5, 0.5]} for i in range(32)
        }
        oracle = FileBackedOracle(table)
        video = make_random_video(seed=2)
        sequential = [oracle.query(video, f"s{i}") for i in range(32)]
        results = [None] * 32

        def worker(i):
            results[i] = oracle.query(video, f"s{i}")

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(32)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results == sequential


class TestBudgetedOracle:
    def test_exhaustion(self):
        inner = FileBackedOracle(
            {"a": {"mode": "full", "probs": [0.5, 0.5]}}
        )
        oracle = BudgetedOracle(inner, limit=2)
        video = make_random_video()
        oracle.query(video, "a")
        oracle.query(video, "a")
        with pytest.raises(QueryBudgetExceededError):
            oracle.query(video, "a")
        assert oracle.used == 2


class TestRemoteOracle:
    def test_full_round_trip(self):
        inner = FileBackedOracle(
            {"clip": {"mode": "full", "probs": [0.7, 0.2, 0.1]}}
        )
        with serving_oracle(inner) as server:
            oracle = RemoteOracle(server.url, retries=0)
            resp = oracle.query(make_random_video(), "clip")
        assert resp.full.probs == (0.7, 0.2, 0.1)

    def test_malformed_body_is_query_error(self):
        with StubServer(lambda body: (200, b"this is not json")) as server:
            oracle = RemoteOracle(server.url, retries=0)
            with pytest.raises(QueryError):
                oracle.query(make_random_video(), "x")

    def test_schema_violation_is_query_error(self):
        with StubServer(lambda body: (200, {"mode": "banana"})) as server:
            oracle = RemoteOracle(server.url, retries=0)
            with pytest.raises(QueryError):
                oracle.query(make_random_video(), "x")

    def test_non_200_is_immediate_query_error(self):
        calls = []

        def app(body):
            calls.append(1)
            return 403, {"error": "forbidden"}

        with StubServer(app) as server:
            oracle = RemoteOracle(server.url, retries=3, backoff=0.01)
            with pytest.raises(QueryError):
                oracle.query(make_random_video(), "x")
        assert len(calls) == 1

    def test_retries_transient_500(self):
        calls = []

        def app(body):
            calls.append(1)
            if len(calls) < 3:
                return 500, {"error": "hiccup"}
            return 200, {"mode": "label", "label": 4}

        with StubServer(app) as server:
            oracle = RemoteOracle(server.url, retries=3, backoff=0.01)
            resp = oracle.query(make_random_video(), "x")
        assert resp.label == 4
        assert len(calls) == 3

    def test_persistent_500_fails_after_retries(self):
        calls = []

        def app(body):
            calls.append(1)
            return 500, {"error": "down"}

        with StubServer(app) as server:
            oracle = RemoteOracle(server.url, retries=2, backoff=0.01)
            with pytest.raises(QueryError):
                oracle.query(make_random_video(), "x")
        assert len(calls) == 3

    def test_unreachable_host(self):
        oracle = RemoteOracle("http://127.0.0.1:9", retries=1, backoff=0.01,
                              timeout=0.5)
        with pytest.raises(QueryError):
            oracle.query(make_random_video(), "x")


class TestQuantizingOracle:
    def test_wraps_full_responses(self):
        inner = FileBackedOracle(
            {"a": {"mode": "full", "probs": [0.91, 0.06, 0.03]}}
        )
        oracle = QuantizingOracle(inner, 1)
        resp = oracle.query(make_random_video(), "a")
        assert resp.full.probs == (0.9, 0.1, 0.0)
        assert resp.full.quantized
