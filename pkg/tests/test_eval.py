"""Ranking metrics (AP@n, MAP@n), gold datasets, and the benchmark runner."""

from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from termset.errors import FormatError, InputError
from termset.eval import (
    GoldCategory,
    average_precision_at,
    format_report,
    load_dataset,
    map_at,
    run_benchmark,
    surface_index,
)

from .conftest import make_group


def ap_oracle(ranked, gold, n):
    """Independent AP@n: set-based distinct-hit counting per prefix."""
    denom = min(len(gold), n)
    if denom == 0:
        return 0.0
    total = 0.0
    for i in range(1, min(n, len(ranked)) + 1):
        item = ranked[i - 1]
        first_hit = item in gold and item not in ranked[: i - 1]
        if first_hit:
            total += len(set(ranked[:i]) & set(gold)) / i
    return total / denom


class TestGoldCategory:
    def test_requires_seeds(self):
        with pytest.raises(InputError):
            GoldCategory("x", frozenset({"a", "b"}), ())

    def test_seeds_must_be_gold(self):
        with pytest.raises(InputError) as err:
            GoldCategory("x", frozenset({"a"}), ("a", "z"))
        assert "z" in str(err.value)

    def test_gold_must_exceed_seeds(self):
        with pytest.raises(InputError):
            GoldCategory("x", frozenset({"a"}), ("a",))


class TestAveragePrecision:
    def test_perfect_prefix(self):
        assert average_precision_at(["a", "b", "c"], {"a", "b", "c"}, 3) == 1.0

    def test_interleaved_miss(self):
        got = average_precision_at(["a", "x", "b"], {"a", "b"}, 3)
        assert got == pytest.approx((1.0 + 2 / 3) / 2, abs=1e-15)

    def test_denominator_clips_to_n(self):
        # Five gold items but only two retrievable slots: a perfect two-row
        # prefix still scores 1.0.
        gold = {"a", "b", "c", "d", "e"}
        assert average_precision_at(["a", "b"], gold, 2) == 1.0

    def test_denominator_clips_to_gold(self):
        got = average_precision_at(["a", "x", "y"], {"a"}, 10)
        assert got == 1.0

    def test_duplicates_credited_once(self):
        got = average_precision_at(["a", "a", "b"], {"a", "b"}, 3)
        assert got == pytest.approx((1.0 + 2 / 3) / 2, abs=1e-15)

    def test_no_hits(self):
        assert average_precision_at(["x", "y"], {"a"}, 2) == 0.0

    def test_empty_gold(self):
        assert average_precision_at(["x"], set(), 5) == 0.0

    def test_empty_ranking(self):
        assert average_precision_at([], {"a"}, 5) == 0.0

    def test_bad_n(self):
        with pytest.raises(InputError):
            average_precision_at(["a"], {"a"}, 0)

    @given(
        st.lists(st.sampled_from("abcdefgh"), max_size=12),
        st.sets(st.sampled_from("abcdefgh"), max_size=6),
        st.integers(min_value=1, max_value=15),
    )
    def test_matches_independent_oracle(self, ranked, gold, n):
        got = average_precision_at(ranked, gold, n)
        assert got == pytest.approx(ap_oracle(ranked, gold, n), abs=1e-12)
        assert 0.0 <= got <= 1.0


class TestMapAt:
    def cat(self, name, gold, seeds):
        return GoldCategory(name, frozenset(gold), tuple(seeds))

    def test_unweighted_mean(self):
        a = (["a", "b"], self.cat("one", {"s", "a", "b"}, ["s"]))
        b = (["x", "c"], self.cat("two", {"s", "c", "d"}, ["s"]))
        # a: both hits -> 1.0; b: hit at rank 2 of gold {c, d} -> (1/2)/2
        assert map_at([a, b], 2) == pytest.approx((1.0 + 0.25) / 2, abs=1e-15)

    def test_seeds_removed_from_both_sides(self):
        cat = self.cat("one", {"s", "a"}, ["s"])
        assert map_at([(["s", "a"], cat)], 1) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            map_at([], 10)


class TestDatasetFiles:
    def write(self, tmp_path, lines):
        path = tmp_path / "gold.jsonl"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_round_trip(self, tmp_path):
        rows = [
            {"name": "langs", "gold": ["java", "perl", "ruby"], "seeds": ["java"]},
            {"name": "cities", "gold": ["bonn", "kiel"], "seeds": ["bonn"]},
        ]
        path = self.write(tmp_path, [json.dumps(r) for r in rows] + [""])
        cats = load_dataset(path)
        assert [c.name for c in cats] == ["langs", "cities"]
        assert cats[0].gold == frozenset({"java", "perl", "ruby"})
        assert cats[0].seeds == ("java",)

    def test_bad_json_reports_line(self, tmp_path):
        path = self.write(tmp_path, ['{"name": "a", "gold": ["x", "y"], "seeds": ["x"]}', "{oops"])
        with pytest.raises(FormatError) as err:
            load_dataset(path)
        assert "line 2" in str(err.value)

    def test_missing_key_reports_line(self, tmp_path):
        path = self.write(tmp_path, ['{"name": "a", "gold": ["x"]}'])
        with pytest.raises(FormatError) as err:
            load_dataset(path)
        assert "line 1" in str(err.value)

    def test_invalid_category_reports_line(self, tmp_path):
        path = self.write(tmp_path, ['{"name": "a", "gold": ["x"], "seeds": ["x"]}'])
        with pytest.raises(FormatError):
            load_dataset(path)

    def test_empty_dataset_rejected(self, tmp_path):
        with pytest.raises(FormatError):
            load_dataset(self.write(tmp_path, ["", ""]))


class TestSurfaceIndex:
    def test_normalizes_and_prefers_lowest_id(self):
        groups = [
            make_group(0, "New York", freq=5),
            make_group(1, "new-york", freq=2),
            make_group(2, "Java", freq=3),
        ]
        index = surface_index(groups)
        assert index["new york"] == 0
        assert index["java"] == 2


class FakeProject:
    """RankingSource with a scripted ranking."""

    def __init__(self, groups, ranking):
        self._groups = groups
        self._ranking = ranking
        self.calls = []

    def groups(self):
        return self._groups

    def expand_ranking(self, seed_ids, k):
        self.calls.append((tuple(seed_ids), k))
        return self._ranking[:k]


class TestRunBenchmark:
    def setup_method(self):
        self.groups = [
            make_group(0, "java", freq=9),
            make_group(1, "perl", freq=8),
            make_group(2, "ruby", freq=7),
            make_group(3, "kiel", freq=6),
        ]

    def dataset(self, tmp_path, rows):
        path = tmp_path / "gold.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        return path

    def test_scores_and_map(self, tmp_path):
        path = self.dataset(tmp_path, [
            {"name": "langs", "gold": ["java", "perl", "ruby"], "seeds": ["java"]},
        ])
        project = FakeProject(self.groups, [1, 3, 2])
        report = run_benchmark(project, path, n_list=(2, 3))
        # Seed surface java drops from gold: ranking [perl, kiel, ruby],
        # gold {perl, ruby}.
        assert report["per_category"]["langs"]["ap"]["2"] == pytest.approx(0.5)
        assert report["per_category"]["langs"]["ap"]["3"] == pytest.approx(
            (1.0 + 2 / 3) / 2
        )
        assert report["map"]["2"] == pytest.approx(0.5)
        assert project.calls == [((0,), 3)]

    def test_unresolved_gold_counts_as_miss(self, tmp_path):
        path = self.dataset(tmp_path, [
            {"name": "langs", "gold": ["java", "perl", "cobol"], "seeds": ["java"]},
        ])
        project = FakeProject(self.groups, [1, 2])
        report = run_benchmark(project, path, n_list=(2,))
        entry = report["per_category"]["langs"]
        assert entry["unresolved"] == ["cobol"]
        # Gold is {perl, cobol}; perl found at rank 1 -> AP = (1/1)/2.
        assert entry["ap"]["2"] == pytest.approx(0.5)

    def test_category_without_resolvable_seeds_skipped(self, tmp_path):
        path = self.dataset(tmp_path, [
            {"name": "langs", "gold": ["java", "perl"], "seeds": ["java"]},
            {"name": "ghosts", "gold": ["wraith", "shade"], "seeds": ["wraith"]},
        ])
        project = FakeProject(self.groups, [1, 2])
        report = run_benchmark(project, path, n_list=(2,))
        assert "ghosts" not in report["per_category"]
        assert "ghosts" in report["skipped"]
        assert report["map"]["2"] == report["per_category"]["langs"]["ap"]["2"]

    def test_nothing_scorable_raises(self, tmp_path):
        path = self.dataset(tmp_path, [
            {"name": "ghosts", "gold": ["wraith", "shade"], "seeds": ["wraith"]},
        ])
        with pytest.raises(InputError):
            run_benchmark(FakeProject(self.groups, []), path, n_list=(2,))

    def test_seed_surfaces_merge_to_one_group(self, tmp_path):
        groups = self.groups + [make_group(4, "JAVA dialect", freq=1)]
        path = self.dataset(tmp_path, [
            {"name": "langs", "gold": ["Java", "java", "perl"], "seeds": ["Java", "java"]},
        ])
        project = FakeProject(groups, [1])
        report = run_benchmark(project, path, n_list=(1,))
        assert project.calls[0][0] == (0,)  # both surfaces resolve to group 0
        assert report["per_category"]["langs"]["ap"]["1"] == 1.0


class TestFormatReport:
    def test_table_shape(self, tmp_path):
        report = {
            "per_category": {
                "langs": {"ap": {"10": 0.5, "20": 0.75}},
            },
            "map": {"10": 0.5, "20": 0.75},
            "skipped": {"ghosts": "no seed resolves to a group"},
        }
        text = format_report(report)
        lines = text.splitlines()
        assert lines[0].startswith("category")
        assert "AP@  10" in lines[0] and "AP@  20" in lines[0]
        assert lines[1].startswith("langs") and "0.5000" in lines[1]
        assert lines[2].startswith("MAP") and "0.7500" in lines[2]
        assert lines[3] == "skipped ghosts: no seed resolves to a group"
