"""Context extraction: annotation, the five extractor families, pair
building, and the pair/count file formats."""

from __future__ import annotations

from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from termset.contexts import (
    CONTEXT_TYPES,
    ContextPair,
    ContextType,
    MemberIndex,
    annotate,
    build_pairs,
    extract_dependency,
    extract_linear,
    extract_lists,
    extract_symmetric,
    extract_unary,
    read_count_file,
    read_pair_file,
    write_count_file,
    write_pair_file,
)
from termset.corpus import Sentence, Token, ingest_conllu
from termset.errors import FormatError, ModeError

from .conftest import TURING_CONLLU, make_group, make_sentence


def contexts_of(pairs, gid):
    return {p.context for p in pairs if p.target == gid}


class TestContextType:
    def test_exactly_five_in_fixed_order(self):
        assert [c.value for c in CONTEXT_TYPES] == [
            "linear",
            "list",
            "dependency",
            "symmetric",
            "unary",
        ]

    def test_round_trip_from_value(self):
        for c in CONTEXT_TYPES:
            assert ContextType(c.value) is c


class TestAnnotate:
    def test_longest_match_wins(self):
        s = make_sentence("I", "love", "New", "York", "City")
        groups = [make_group(0, "New York"), make_group(1, "New York City")]
        ann = annotate(s, groups)
        assert [(m.start, m.end, m.group_id) for m in ann.mentions] == [(2, 5, 1)]

    def test_leftmost_longest_on_overlap(self):
        s = make_sentence("machine", "learning", "theory")
        groups = [make_group(0, "machine learning"), make_group(1, "learning theory")]
        ann = annotate(s, groups)
        assert [(m.start, m.end, m.group_id) for m in ann.mentions] == [(0, 2, 0)]

    def test_case_insensitive(self):
        s = make_sentence("JAVA", "rules")
        ann = annotate(s, [make_group(0, "java")])
        assert len(ann.mentions) == 1
        assert ann.mentions[0].canonical == "java"

    def test_no_members_no_mentions(self):
        s = make_sentence("nothing", "matches")
        assert annotate(s, [make_group(0, "java")]).mentions == []

    def test_mentions_never_overlap(self):
        s = make_sentence("a", "b", "c", "d")
        groups = [make_group(0, "a b"), make_group(1, "b c"), make_group(2, "c d")]
        ann = annotate(s, groups)
        spans = [(m.start, m.end) for m in ann.mentions]
        assert spans == [(0, 2), (2, 4)]

    def test_lowest_group_id_wins_shared_surface(self):
        idx = MemberIndex([make_group(3, "java"), make_group(1, "java", "jvm")])
        s = make_sentence("java")
        ann = annotate(s, idx)
        assert ann.mentions[0].group_id == 1

    def test_member_index_reusable(self):
        idx = MemberIndex([make_group(0, "java")])
        for _ in range(2):
            assert len(annotate(make_sentence("java"), idx).mentions) == 1


class TestLinear:
    def test_reference_example_window_10(self, stopwords):
        s = make_sentence(
            "Siri", "uses", "voice", "queries", "and", "a",
            "natural", "language", "user", "interface", ".",
        )
        groups = [
            make_group(0, "Siri"),
            make_group(1, "voice queries"),
            make_group(2, "natural language user interface"),
        ]
        pairs = extract_linear(annotate(s, groups), window=10, stopwords=stopwords)
        assert contexts_of(pairs, 0) == {
            "uses",
            "voice queries",
            "natural language user interface",
        }

    def test_window_bounds_in_units(self, stopwords):
        # Units: [A, b, C]; window=1 pairs each mention only with b.
        s = make_sentence("A", "b", "C")
        groups = [make_group(0, "A"), make_group(1, "C")]
        pairs = extract_linear(annotate(s, groups), window=1, stopwords=stopwords)
        assert contexts_of(pairs, 0) == {"b"}
        assert contexts_of(pairs, 1) == {"b"}

    def test_mention_context_uses_canonical(self, stopwords):
        s = make_sentence("nyc", "skyline")
        groups = [make_group(0, "New York", "nyc"), make_group(1, "skyline")]
        pairs = extract_linear(annotate(s, groups), window=5, stopwords=stopwords)
        assert ("skyline" in contexts_of(pairs, 0)) or contexts_of(pairs, 1) == {"New York"}
        assert contexts_of(pairs, 1) == {"New York"}

    def test_stopword_only_sentence_no_pairs(self, stopwords):
        s = make_sentence("the", "of", "and")
        assert extract_linear(annotate(s, [make_group(0, "java")]), 5, stopwords) == []

    def test_window_saturates_at_sentence_length(self, stopwords):
        s = make_sentence("java", "beats", "perl", "sometimes")
        groups = [make_group(0, "java"), make_group(1, "perl")]
        ann = annotate(s, groups)
        big = extract_linear(ann, window=50, stopwords=stopwords)
        exact = extract_linear(ann, window=4, stopwords=stopwords)
        assert sorted(big) == sorted(exact)

    def test_only_mentions_are_targets(self, stopwords):
        s = make_sentence("java", "beats", "perl")
        pairs = extract_linear(annotate(s, [make_group(0, "java")]), 5, stopwords)
        assert {p.target for p in pairs} == {0}


class TestLists:
    def test_reference_example(self):
        s = make_sentence(
            "Experience", "in", "Image", "processing", ",",
            "Signal", "processing", ",", "Computer", "Vision",
        )
        groups = [
            make_group(0, "Image processing"),
            make_group(1, "Signal processing"),
            make_group(2, "Computer Vision"),
        ]
        pairs = extract_lists(annotate(s, groups))
        assert contexts_of(pairs, 0) == {"Signal processing", "Computer Vision"}
        assert contexts_of(pairs, 1) == {"Image processing", "Computer Vision"}
        assert contexts_of(pairs, 2) == {"Image processing", "Signal processing"}

    def test_two_items_below_threshold(self):
        s = make_sentence("A", ",", "B")
        groups = [make_group(0, "A"), make_group(1, "B")]
        assert extract_lists(annotate(s, groups)) == []

    def test_terminal_conjunction_counts(self):
        s = make_sentence("A", ",", "B", "and", "C")
        groups = [make_group(0, "A"), make_group(1, "B"), make_group(2, "C")]
        pairs = extract_lists(annotate(s, groups))
        assert contexts_of(pairs, 0) == {"B", "C"}
        assert contexts_of(pairs, 2) == {"A", "B"}

    def test_conjunction_must_be_terminal(self):
        # A and B , C: the conjunction is not in final position, so the run
        # never reaches three items.
        s = make_sentence("A", "and", "B", ",", "C")
        groups = [make_group(0, "A"), make_group(1, "B"), make_group(2, "C")]
        pairs = extract_lists(annotate(s, groups))
        assert pairs == []

    def test_non_mention_breaks_run(self):
        s = make_sentence("A", ",", "B", ",", "tasty", "C")
        groups = [make_group(0, "A"), make_group(1, "B"), make_group(2, "C")]
        assert extract_lists(annotate(s, groups)) == []

    def test_min_items_configurable(self):
        s = make_sentence("A", ",", "B")
        groups = [make_group(0, "A"), make_group(1, "B")]
        pairs = extract_lists(annotate(s, groups), min_items=2)
        assert contexts_of(pairs, 0) == {"B"}

    def test_contexts_are_canonicals(self):
        s = make_sentence("nyc", ",", "boston", ",", "chicago")
        groups = [
            make_group(0, "New York", "nyc"),
            make_group(1, "boston"),
            make_group(2, "chicago"),
        ]
        pairs = extract_lists(annotate(s, groups))
        assert "New York" in contexts_of(pairs, 1)


class TestSymmetric:
    def test_reference_example(self):
        s = make_sentence("Apple", "and", "Orange", "juice", "drink")
        groups = [make_group(0, "Apple"), make_group(1, "Orange")]
        pairs = extract_symmetric(annotate(s, groups))
        assert {(p.target, p.context) for p in pairs} == {(0, "Orange"), (1, "Apple")}

    def test_nor_not_in_pattern_set(self):
        s = make_sentence("Apple", "nor", "Orange")
        groups = [make_group(0, "Apple"), make_group(1, "Orange")]
        assert extract_symmetric(annotate(s, groups)) == []

    def test_adjacency_required(self):
        s = make_sentence("Apple", "and", "fresh", "Orange")
        groups = [make_group(0, "Apple"), make_group(1, "Orange")]
        assert extract_symmetric(annotate(s, groups)) == []

    def test_or_pattern(self):
        s = make_sentence("tea", "or", "coffee")
        groups = [make_group(0, "tea"), make_group(1, "coffee")]
        pairs = extract_symmetric(annotate(s, groups))
        assert {(p.target, p.context) for p in pairs} == {(0, "coffee"), (1, "tea")}

    def test_emission_is_symmetric(self):
        s = make_sentence("a", "and", "b", "and", "c")
        groups = [make_group(i, x) for i, x in enumerate("abc")]
        pairs = extract_symmetric(annotate(s, groups))
        emitted = {(p.target, p.context) for p in pairs}
        canon = {g.id: g.canonical for g in groups}
        ids = {g.canonical: g.id for g in groups}
        for t, c in emitted:
            assert (ids[c], canon[t]) in emitted


class TestUnary:
    def test_reference_example_left_pattern(self):
        s = make_sentence("In", "the", "U.S.", "state", "of", "Alaska", ".")
        pairs = extract_unary(annotate(s, [make_group(0, "Alaska")]))
        assert contexts_of(pairs, 0) == {"U.S. state of __"}

    def test_right_pattern(self):
        s = make_sentence("Alaska", "has", "vast", "forests", "today")
        pairs = extract_unary(annotate(s, [make_group(0, "Alaska")]))
        assert contexts_of(pairs, 0) == {"__ has vast forests"}

    def test_too_few_following_tokens(self):
        s = make_sentence("Alaska", "is", "big")
        assert extract_unary(annotate(s, [make_group(0, "Alaska")])) == []

    def test_stopword_only_window_suppressed(self, stopwords):
        s = make_sentence("it", "is", "a", "Alaska", "w", "x", "y")
        pairs = extract_unary(annotate(s, [make_group(0, "Alaska")]), stopwords=stopwords)
        assert contexts_of(pairs, 0) == {"__ w x y"}

    def test_punctuation_not_counted_in_window(self):
        s = make_sentence("big", ",", "cold", "wild", "Alaska", "x", "y", "z")
        pairs = extract_unary(annotate(s, [make_group(0, "Alaska")]))
        assert "big cold wild __" in contexts_of(pairs, 0)

    def test_gram_configurable(self):
        s = make_sentence("very", "cold", "Alaska", "x", "y")
        pairs = extract_unary(annotate(s, [make_group(0, "Alaska")]), gram=2)
        assert contexts_of(pairs, 0) == {"very cold __", "__ x y"}


class TestDependency:
    def make_turing(self):
        (s,) = ingest_conllu(TURING_CONLLU)
        groups = [
            make_group(0, "studied"),
            make_group(1, "Turing"),
            make_group(2, "King's College"),
        ]
        return annotate(s, groups)

    def test_reference_example_collapsed_prepositions(self):
        pairs = extract_dependency(self.make_turing())
        assert contexts_of(pairs, 0) == {
            "Turing/nsubj",
            "undergraduate/prep_as",
            "King's College/prep_at",
        }

    def test_inverse_arc_marked(self):
        pairs = extract_dependency(self.make_turing())
        assert "studied/nsubj-1" in contexts_of(pairs, 1)

    def test_multiword_mention_uses_internal_head(self):
        pairs = extract_dependency(self.make_turing())
        got = contexts_of(pairs, 2)
        # governor is the verb through the collapsed preposition; appositive
        # Cambridge is an external dependent; internal nn arc is invisible.
        assert "studied/prep_at-1" in got
        assert "Cambridge/appos" in got
        assert not any("King's/" in c or "/nn" == c[-3:] for c in got)

    def test_ud_style_case_collapsing(self):
        data = (
            "1\tParis\tParis\tPROPN\tNNP\t_\t2\tnsubj\t_\t_\n"
            "2\tlies\tlie\tVERB\tVBZ\t_\t0\troot\t_\t_\n"
            "3\ton\ton\tADP\tIN\t_\t4\tcase\t_\t_\n"
            "4\tSeine\tSeine\tPROPN\tNNP\t_\t2\tobl\t_\t_\n"
        )
        (s,) = ingest_conllu(data)
        ann = annotate(s, [make_group(0, "lies"), make_group(1, "Seine")])
        pairs = extract_dependency(ann)
        assert "Seine/prep_on" in contexts_of(pairs, 0)
        assert "lies/prep_on-1" in contexts_of(pairs, 1)

    def test_punct_arcs_excluded(self):
        pairs = extract_dependency(self.make_turing())
        assert all("punct" not in p.context for p in pairs)
        assert all(not p.context.startswith((".", ",")) for p in pairs)

    def test_unparsed_sentence_raises_mode_error(self):
        s = make_sentence("plain", "text")
        with pytest.raises(ModeError):
            extract_dependency(annotate(s, [make_group(0, "plain")]))

    def test_single_token_sentence_no_pairs(self):
        data = "1\tAlone\tAlone\tNN\tNN\t_\t0\troot\t_\t_\n"
        (s,) = ingest_conllu(data)
        assert extract_dependency(annotate(s, [make_group(0, "Alone")])) == []

    def test_mention_with_no_external_arcs(self):
        data = (
            "1\tjava\tjava\tNN\tNN\t_\t0\troot\t_\t_\n"
            "2\t.\t.\t.\t.\t_\t1\tpunct\t_\t_\n"
        )
        (s,) = ingest_conllu(data)
        assert extract_dependency(annotate(s, [make_group(0, "java")])) == []


class TestBuildPairs:
    def test_empty_corpus(self):
        pairs, counts = build_pairs([], [make_group(0, "java")], ContextType.LINEAR)
        assert pairs == [] and counts == Counter()

    def test_counts_match_pair_stream(self, stopwords):
        sents = [
            make_sentence("java", "beats", "perl", index=0),
            make_sentence("perl", "loses", "today", index=1),
        ]
        groups = [make_group(0, "java"), make_group(1, "perl")]
        pairs, counts = build_pairs(
            sents, groups, ContextType.LINEAR, stopwords=stopwords
        )
        assert counts == Counter(p.context for p in pairs)

    def test_corpus_order_permutation_keeps_multiset(self, stopwords):
        sents = [
            make_sentence("java", "beats", "perl", index=0),
            make_sentence("ruby", "and", "perl", index=1),
        ]
        groups = [make_group(0, "java"), make_group(1, "perl"), make_group(2, "ruby")]
        fwd, _ = build_pairs(sents, groups, ContextType.LINEAR, stopwords=stopwords)
        rev, _ = build_pairs(sents[::-1], groups, ContextType.LINEAR, stopwords=stopwords)
        assert Counter(fwd) == Counter(rev)

    def test_dependency_on_unparsed_corpus_mode_error(self):
        with pytest.raises(ModeError):
            build_pairs(
                [make_sentence("plain", "words")],
                [make_group(0, "plain")],
                ContextType.DEPENDENCY,
            )

    def test_ctype_tagged_on_every_pair(self, stopwords):
        sents = [make_sentence("java", ",", "perl", ",", "ruby")]
        groups = [make_group(0, "java"), make_group(1, "perl"), make_group(2, "ruby")]
        pairs, _ = build_pairs(sents, groups, ContextType.LIST)
        assert pairs and all(p.ctype is ContextType.LIST for p in pairs)


class TestPairFiles:
    def test_round_trip(self, tmp_path):
        pairs = [
            ContextPair(0, "uses", ContextType.LINEAR),
            ContextPair(1, "voice queries", ContextType.LINEAR),
        ]
        path = tmp_path / "linear.pairs"
        wrote = write_pair_file(pairs, path)
        assert wrote == 2
        assert read_pair_file(path, ContextType.LINEAR) == pairs

    def test_tabs_and_newlines_sanitized(self, tmp_path):
        pairs = [ContextPair(0, "a\tb\nc", ContextType.UNARY)]
        path = tmp_path / "u.pairs"
        write_pair_file(pairs, path)
        (back,) = read_pair_file(path, ContextType.UNARY)
        assert back.context == "a b c"

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "bad.pairs"
        path.write_text("0\tok\nnot-a-pair-line\n")
        with pytest.raises(FormatError) as err:
            read_pair_file(path, ContextType.LINEAR)
        assert "line 2" in str(err.value)

    def test_count_file_round_trip_sorted(self, tmp_path):
        counts = Counter({"common": 5, "rare": 1, "mid": 3})
        path = tmp_path / "x.counts"
        write_count_file(counts, path)
        assert read_count_file(path) == counts
        lines = path.read_text().splitlines()
        assert lines[0].startswith("common\t")

    def test_count_file_bad_count_reports_line(self, tmp_path):
        path = tmp_path / "bad.counts"
        path.write_text("ok\t3\nbroken\tNaN-ish\n")
        with pytest.raises(FormatError) as err:
            read_count_file(path)
        assert "line 2" in str(err.value)


@given(
    st.lists(
        st.tuples(
            st.integers(min_value=0, max_value=99),
            st.text(
                alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"),
                min_size=1,
            ).filter(lambda s: s.strip()),
        ),
        max_size=20,
    )
)
def test_pair_file_round_trip_arbitrary_contexts(tmp_path_factory, entries):
    """Round-trip holds for arbitrary context strings modulo whitespace
    flattening (tab/newline become spaces on write)."""
    tmp = tmp_path_factory.mktemp("pairs")
    pairs = [ContextPair(gid, ctx, ContextType.UNARY) for gid, ctx in entries]
    path = tmp / "f.pairs"
    write_pair_file(pairs, path)
    back = read_pair_file(path, ContextType.UNARY)
    flat = [
        ContextPair(
            p.target,
            p.context.replace("\t", " ").replace("\n", " ").replace("\r", " "),
            p.ctype,
        )
        for p in pairs
    ]
    assert back == flat
