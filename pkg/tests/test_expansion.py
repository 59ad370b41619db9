"""Seed expansion: pooling, per-context features, certainty scoring,
re-expansion, and the shared JSON/CSV serializations."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from termset.contexts import CONTEXT_TYPES, ContextType
from termset.embedding import EmbeddingModel, Vocabulary
from termset.errors import InputError
from termset.expansion import (
    Candidate,
    ExpansionResult,
    SeedSet,
    dumps_payload,
    expand,
    expand_simple,
    reexpand,
    result_payload,
    score_candidates,
    validated_csv,
)
from termset.mlp import MLPModel, forward

WIDTH = len(CONTEXT_TYPES)


def vec(deg: float) -> list[float]:
    rad = math.radians(deg)
    return [math.cos(rad), math.sin(rad)]


def embedding_of(units_vecs: dict[str, list[float]], ctype="linear") -> EmbeddingModel:
    units = list(units_vecs)
    M = np.array([units_vecs[u] for u in units], dtype=float)
    vocab = Vocabulary(units, np.ones(len(units), dtype=np.int64))
    ctx = Vocabulary(["c"], np.ones(1, dtype=np.int64))
    return EmbeddingModel(
        ctype=ctype, dim=M.shape[1], target_vocab=vocab, context_vocab=ctx,
        target_matrix=M, context_matrix=np.zeros((1, M.shape[1])),
    )


def angle_model(ctype="linear") -> EmbeddingModel:
    """Seeds 0/1 straddle zero degrees; candidates fan out by angle."""
    return embedding_of(
        {"0": vec(-10), "1": vec(10), "2": vec(5), "3": vec(30),
         "4": vec(60), "5": vec(120)},
        ctype=ctype,
    )


def monotone_mlp() -> MLPModel:
    """Positive weights and a bias that keeps ReLU pre-activations positive
    over [-1, 1] features, so certainty is strictly increasing in each
    feature."""
    return MLPModel(
        w1=np.full((2, WIDTH), 0.6),
        b1=np.array([2.0, 2.0]),
        w2=np.array([[1.0, 0.5]]),
        b2=np.array([-3.0]),
    )


class TestSeedSet:
    def test_empty_rejected(self):
        with pytest.raises(InputError):
            SeedSet("langs", ())

    def test_duplicates_rejected(self):
        with pytest.raises(InputError):
            SeedSet.of("langs", [1, 1])

    def test_of_builds_tuple(self):
        s = SeedSet.of("langs", [3, 1])
        assert s.group_ids == (3, 1) and s.category == "langs"


class TestCandidate:
    def test_wrong_feature_width_rejected(self):
        with pytest.raises(InputError):
            Candidate(1, np.zeros(WIDTH - 1), 0.5, seed=False)

    def test_non_finite_features_rejected(self):
        feats = np.zeros(WIDTH)
        feats[0] = np.inf
        with pytest.raises(InputError):
            Candidate(1, feats, 0.5, seed=False)

    def test_seed_must_be_certain(self):
        with pytest.raises(InputError):
            Candidate(1, np.zeros(WIDTH), 0.99, seed=True)

    def test_certainty_bounds(self):
        with pytest.raises(InputError):
            Candidate(1, np.zeros(WIDTH), 1.5, seed=False)


class TestExpandSimple:
    def test_ranks_by_cosine_to_seed_centroid(self):
        model = angle_model()
        got = expand_simple(model, SeedSet.of("c", [0, 1]), k=4)
        assert [g for g, _ in got] == [2, 3, 4, 5]
        sims = [s for _, s in got]
        assert sims == sorted(sims, reverse=True)
        assert sims[0] == pytest.approx(math.cos(math.radians(5)), abs=1e-12)

    def test_seeds_never_returned(self):
        got = expand_simple(angle_model(), SeedSet.of("c", [0, 1]), k=10)
        assert {0, 1}.isdisjoint({g for g, _ in got})

    def test_missing_seed_named_in_error(self):
        with pytest.raises(InputError) as err:
            expand_simple(angle_model(), SeedSet.of("c", [0, 99]), k=3)
        assert "99" in str(err.value)

    def test_non_group_units_filtered(self):
        model = embedding_of({"0": vec(0), "7": vec(10), "noise": vec(5)})
        got = expand_simple(model, SeedSet.of("c", [0]), k=5)
        assert [g for g, _ in got] == [7]


class TestScoreCandidates:
    def test_feature_slot_matches_context_order(self):
        models = {
            ContextType.LINEAR: angle_model("linear"),
            ContextType.LIST: embedding_of(
                {"0": vec(0), "1": vec(0), "2": vec(45)}, ctype="list"
            ),
        }
        scored = dict(score_candidates(models, SeedSet.of("c", [0, 1])))
        feats = scored[2]
        assert feats[0] == pytest.approx(math.cos(math.radians(5)), abs=1e-12)
        assert feats[1] == pytest.approx(math.cos(math.radians(45)), abs=1e-12)
        assert np.all(feats[2:] == 0.0)

    def test_candidate_missing_from_context_scores_zero_there(self):
        models = {
            ContextType.LINEAR: angle_model("linear"),
            ContextType.LIST: embedding_of({"0": vec(0), "1": vec(0)}, "list"),
        }
        scored = dict(score_candidates(models, SeedSet.of("c", [0, 1])))
        assert scored[3][1] == 0.0

    def test_pool_unions_across_contexts(self):
        models = {
            ContextType.LINEAR: embedding_of({"0": vec(0), "2": vec(5)}),
            ContextType.LIST: embedding_of({"0": vec(0), "9": vec(5)}, "list"),
        }
        scored = score_candidates(models, SeedSet.of("c", [0]))
        assert [gid for gid, _ in scored] == [2, 9]

    def test_partial_seed_coverage_uses_known_seeds(self):
        # Context only knows seed 1 at 90 degrees; candidate 2 sits there too.
        models = {
            ContextType.LIST: embedding_of({"1": vec(90), "2": vec(90)}, "list"),
        }
        scored = dict(score_candidates(models, SeedSet.of("c", [0, 1])))
        assert scored[2][1] == pytest.approx(1.0)

    def test_no_seed_anywhere_raises(self):
        models = {ContextType.LINEAR: embedding_of({"5": vec(0)})}
        with pytest.raises(InputError):
            score_candidates(models, SeedSet.of("c", [0, 1]))

    def test_no_models_raises(self):
        with pytest.raises(InputError):
            score_candidates({}, SeedSet.of("c", [0]))

    def test_zero_pool_size_scores_nothing(self):
        models = {ContextType.LINEAR: angle_model()}
        assert score_candidates(models, SeedSet.of("c", [0, 1]), pool_size=0) == []


class TestExpand:
    def test_seeds_lead_with_certainty_one(self):
        result = expand({ContextType.LINEAR: angle_model()}, None,
                        SeedSet.of("c", [1, 0]), k=2)
        head = result.candidates[:2]
        assert [c.group_id for c in head] == [0, 1]
        assert all(c.seed and c.certainty == 1.0 for c in head)
        assert all(not c.seed for c in result.candidates[2:])

    def test_k_limits_non_seed_rows(self):
        result = expand({ContextType.LINEAR: angle_model()}, None,
                        SeedSet.of("c", [0, 1]), k=2)
        assert len(result.candidates) == 4  # 2 seeds + 2 ranked

    def test_k_zero_returns_only_seeds(self):
        result = expand({ContextType.LINEAR: angle_model()}, None,
                        SeedSet.of("c", [0, 1]), k=0)
        assert all(c.seed for c in result.candidates)

    def test_mean_fallback_formula(self):
        # Candidate 2 known in both contexts; certainty is the mean cosine
        # mapped through (m + 1) / 2.
        models = {
            ContextType.LINEAR: angle_model("linear"),
            ContextType.LIST: embedding_of(
                {"0": vec(0), "1": vec(0), "2": vec(45)}, "list"
            ),
        }
        result = expand(models, None, SeedSet.of("c", [0, 1]), k=10)
        two = next(c for c in result.candidates if c.group_id == 2)
        mean = (math.cos(math.radians(5)) + math.cos(math.radians(45))) / 2
        assert two.certainty == pytest.approx((mean + 1) / 2, abs=1e-12)

    def test_mean_fallback_skips_contexts_without_candidate(self):
        # Candidate 3 exists only in linear; the list context must not drag
        # the mean down with a structural zero.
        models = {
            ContextType.LINEAR: angle_model("linear"),
            ContextType.LIST: embedding_of({"0": vec(0), "1": vec(0)}, "list"),
        }
        result = expand(models, None, SeedSet.of("c", [0, 1]), k=10)
        three = next(c for c in result.candidates if c.group_id == 3)
        expected = (math.cos(math.radians(30)) + 1) / 2
        assert three.certainty == pytest.approx(expected, abs=1e-12)

    def test_mlp_certainty_matches_forward(self):
        mlp = monotone_mlp()
        models = {ContextType.LINEAR: angle_model()}
        result = expand(models, mlp, SeedSet.of("c", [0, 1]), k=10)
        for c in result.candidates:
            if not c.seed:
                assert c.certainty == pytest.approx(
                    forward(mlp, c.features), abs=1e-15
                )

    def test_monotone_mlp_preserves_cosine_order(self):
        models = {ContextType.LINEAR: angle_model()}
        seed = SeedSet.of("c", [0, 1])
        with_mlp = expand(models, monotone_mlp(), seed, k=10)
        simple = expand_simple(models[ContextType.LINEAR], seed, k=10)
        assert [c.group_id for c in with_mlp.candidates if not c.seed] == [
            g for g, _ in simple
        ]

    def test_sort_ties_break_by_group_id(self):
        # Two candidates at identical angles share a certainty.
        models = {ContextType.LINEAR: embedding_of(
            {"0": vec(0), "8": vec(20), "4": vec(20)}
        )}
        result = expand(models, None, SeedSet.of("c", [0]), k=5)
        ranked = [c.group_id for c in result.candidates if not c.seed]
        assert ranked == [4, 8]


class TestReexpand:
    MODELS = {ContextType.LINEAR: angle_model()}

    def first(self) -> ExpansionResult:
        return expand(self.MODELS, None, SeedSet.of("c", [0, 1]), k=4)

    def test_accepted_join_the_seeds(self):
        result = self.first()
        again = reexpand(result, [2], self.MODELS, None, k=4)
        assert again.seed.group_ids == (0, 1, 2)
        assert again.seed.category == "c"
        head = [c for c in again.candidates if c.seed]
        assert [c.group_id for c in head] == [0, 1, 2]

    def test_unknown_accepted_id_rejected(self):
        with pytest.raises(InputError) as err:
            reexpand(self.first(), [77], self.MODELS, None, k=4)
        assert "77" in str(err.value)

    def test_validation_marks_survive(self):
        result = self.first()
        result.validated = {3, 4}
        again = reexpand(result, [2], self.MODELS, None, k=4)
        assert again.validated == {3, 4}

    def test_validation_marks_drop_when_group_disappears(self):
        result = self.first()
        result.validated = {5}
        again = reexpand(result, [2], self.MODELS, None, k=0)
        assert again.validated == set()

    def test_empty_accept_is_a_plain_rerun(self):
        result = self.first()
        again = reexpand(result, [], self.MODELS, None, k=4)
        assert again.seed.group_ids == result.seed.group_ids
        assert [c.group_id for c in again.candidates] == [
            c.group_id for c in result.candidates
        ]


class TestSerialization:
    def small_result(self) -> ExpansionResult:
        result = expand({ContextType.LINEAR: angle_model()}, None,
                        SeedSet.of("céu", [0, 1]), k=2)
        result.validated = {2}
        return result

    def test_payload_key_order(self):
        payload = result_payload(self.small_result(), {0: "java"},
                                 session="s0001")
        assert list(payload) == ["category", "session", "items"]
        assert list(payload["items"][0]) == [
            "group_id", "canonical", "certainty", "seed", "completed",
            "features",
        ]

    def test_payload_values(self):
        payload = result_payload(self.small_result(), {0: "java", 2: "perl"})
        items = {i["group_id"]: i for i in payload["items"]}
        assert items[0]["canonical"] == "java" and items[0]["seed"] is True
        assert items[1]["canonical"] == "1"  # fallback when unnamed
        assert items[2]["completed"] is True
        assert items[3]["completed"] is False
        assert len(items[2]["features"]) == WIDTH

    def test_dumps_compact_and_unicode(self):
        text = dumps_payload(result_payload(self.small_result(), {}))
        assert ": " not in text and ", " not in text
        assert "céu" in text and "\\u" not in text
        json.loads(text)  # round-trips

    def test_dumps_stable_bytes(self):
        a = dumps_payload(result_payload(self.small_result(), {0: "java"}))
        b = dumps_payload(result_payload(self.small_result(), {0: "java"}))
        assert a == b

    def test_validated_csv_rows(self):
        text = validated_csv(self.small_result(), {2: "perl"})
        lines = text.splitlines()
        assert lines[0] == "canonical,group_id,certainty"
        assert len(lines) == 2
        name, gid, cert = lines[1].split(",")
        assert (name, gid) == ("perl", "2")
        assert float(cert) == pytest.approx(
            (math.cos(math.radians(5)) + 1) / 2, abs=1e-12
        )

    def test_validated_csv_empty(self):
        result = self.small_result()
        result.validated = set()
        assert validated_csv(result, {}) == "canonical,group_id,certainty\n"
