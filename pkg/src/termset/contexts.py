"""Context extraction: turns a group-annotated corpus into training pairs.

Five extractor families, each reading a sentence annotated with term-group
mentions and emitting (group id, context string) pairs:

- linear:     bag-of-units window around each mention
- list:       comma/conjunction runs of three or more mentions
- dependency: syntactic arcs crossing a mention boundary, with
              preposition collapsing ("undergraduate/prep_as")
- symmetric:  "X and Y" / "X or Y" coordination partners
- unary:      fixed-width surface patterns ("U.S. state of __")

All extractors are pure per-sentence functions; nothing crosses a sentence
boundary.
"""

from __future__ import annotations

import enum
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .corpus import ROOT, Sentence, is_punctuation
from .errors import FormatError, ModeError
from .resources import load_stopwords
from .termgroup import TermGroup


class ContextType(enum.Enum):
    """Closed set of context families.

    Declaration order is load-bearing: feature vectors and stored artifacts
    index context types in this order.
    """

    LINEAR = "linear"
    LIST = "list"
    DEPENDENCY = "dependency"
    SYMMETRIC = "symmetric"
    UNARY = "unary"


CONTEXT_TYPES: tuple[ContextType, ...] = tuple(ContextType)

SYMMETRIC_PATTERNS = frozenset({"and", "or"})
LIST_CONJUNCTIONS = frozenset({"and", "or"})

#: Placeholder for the focus slot in unary patterns.
SLOT = "__"

INVERSE_MARK = "-1"


class ContextPair(NamedTuple):
    target: int
    context: str
    ctype: ContextType


class Mention(NamedTuple):
    start: int
    end: int
    group_id: int
    canonical: str


@dataclass
class AnnotatedSentence:
    """A sentence plus its non-overlapping group mentions, sorted by start."""

    sentence: Sentence
    mentions: list[Mention]


class MemberIndex:
    """Lookup from lowercased member-token tuples to (group id, canonical).

    When two groups share a lowercased surface, the lower group id wins
    (groups are ordered by descending frequency, so the common reading wins).
    """

    def __init__(self, groups: Iterable[TermGroup]):
        self._entries: dict[tuple[str, ...], tuple[int, str]] = {}
        self.max_len = 0
        for group in groups:
            for term in group.members:
                key = tuple(term.surface.lower().split())
                if not key:
                    continue
                if key not in self._entries or group.id < self._entries[key][0]:
                    self._entries[key] = (group.id, group.canonical)
                self.max_len = max(self.max_len, len(key))

    def lookup(self, key: tuple[str, ...]) -> tuple[int, str] | None:
        return self._entries.get(key)


def annotate(
    sentence: Sentence, groups: Sequence[TermGroup] | MemberIndex
) -> AnnotatedSentence:
    """Greedy left-to-right longest-match mention annotation.

    Member surfaces are matched case-insensitively over whole token spans;
    at each position the longest matching span wins and scanning resumes
    after it, so mentions never overlap.
    """
    index = groups if isinstance(groups, MemberIndex) else MemberIndex(groups)
    lowered = [tok.surface.lower() for tok in sentence.tokens]
    mentions: list[Mention] = []
    i = 0
    n = len(lowered)
    while i < n:
        hit = None
        for length in range(min(index.max_len, n - i), 0, -1):
            entry = index.lookup(tuple(lowered[i : i + length]))
            if entry is not None:
                hit = (length, entry)
                break
        if hit is None:
            i += 1
        else:
            length, (gid, canonical) = hit
            mentions.append(Mention(i, i + length, gid, canonical))
            i += length
    return AnnotatedSentence(sentence, mentions)


class _Unit(NamedTuple):
    group_id: int | None
    text: str
    start: int
    end: int


def _unit_sequence(s: AnnotatedSentence) -> list[_Unit]:
    """Sentence as a unit list: each mention one unit, other tokens one each."""
    units: list[_Unit] = []
    starts = {m.start: m for m in s.mentions}
    i = 0
    tokens = s.sentence.tokens
    while i < len(tokens):
        m = starts.get(i)
        if m is not None:
            units.append(_Unit(m.group_id, m.canonical, m.start, m.end))
            i = m.end
        else:
            units.append(_Unit(None, tokens[i].surface, i, i + 1))
            i += 1
    return units


# ---------------------------------------------------------------------------
# Extractors
# ---------------------------------------------------------------------------


def extract_linear(
    s: AnnotatedSentence,
    window: int = 5,
    stopwords: frozenset[str] | None = None,
) -> list[ContextPair]:
    """Window contexts over the unit sequence.

    Stopword and punctuation tokens are dropped before windowing, so the
    window counts informative units only.  Mention units contribute their
    group canonical as the context string; plain tokens contribute their
    surface.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    units = [
        u
        for u in _unit_sequence(s)
        if u.group_id is not None
        or (not is_punctuation(u.text) and u.text.lower() not in stopwords)
    ]
    pairs: list[ContextPair] = []
    for idx, unit in enumerate(units):
        if unit.group_id is None:
            continue
        lo = max(0, idx - window)
        hi = min(len(units), idx + window + 1)
        for j in range(lo, hi):
            if j == idx:
                continue
            pairs.append(
                ContextPair(unit.group_id, units[j].text, ContextType.LINEAR)
            )
    return pairs


def extract_lists(
    s: AnnotatedSentence, min_items: int = 3
) -> list[ContextPair]:
    """Contexts from enumeration runs.

    A run is a maximal sequence of mention units separated by commas, with
    at most one conjunction (and/or) allowed in the final separator.  Runs
    shorter than min_items emit nothing; otherwise every item pairs with
    every other item's canonical.
    """
    units = _unit_sequence(s)
    n = len(units)

    def is_comma(u: _Unit) -> bool:
        return u.group_id is None and u.text == ","

    def is_conj(u: _Unit) -> bool:
        return u.group_id is None and u.text.lower() in LIST_CONJUNCTIONS

    pairs: list[ContextPair] = []
    i = 0
    while i < n:
        if units[i].group_id is None:
            i += 1
            continue
        run = [units[i]]
        j = i + 1
        while j < n:
            if is_comma(units[j]) and j + 1 < n and units[j + 1].group_id is not None:
                run.append(units[j + 1])
                j += 2
            elif (
                is_comma(units[j])
                and j + 2 < n
                and is_conj(units[j + 1])
                and units[j + 2].group_id is not None
            ):
                run.append(units[j + 2])
                j += 3
                break
            elif is_conj(units[j]) and j + 1 < n and units[j + 1].group_id is not None:
                run.append(units[j + 1])
                j += 2
                break
            else:
                break
        if len(run) >= min_items:
            for a in run:
                for b in run:
                    if a is not b:
                        pairs.append(
                            ContextPair(a.group_id, b.text, ContextType.LIST)
                        )
        i = j
    return pairs


def extract_symmetric(
    s: AnnotatedSentence, patterns: frozenset[str] = SYMMETRIC_PATTERNS
) -> list[ContextPair]:
    """Coordination contexts: mention, pattern word, mention — both ways."""
    units = _unit_sequence(s)
    pairs: list[ContextPair] = []
    for i in range(len(units) - 2):
        x, sep, y = units[i], units[i + 1], units[i + 2]
        if (
            x.group_id is not None
            and y.group_id is not None
            and sep.group_id is None
            and sep.text.lower() in patterns
        ):
            pairs.append(ContextPair(x.group_id, y.text, ContextType.SYMMETRIC))
            pairs.append(ContextPair(y.group_id, x.text, ContextType.SYMMETRIC))
    return pairs


def extract_unary(
    s: AnnotatedSentence,
    gram: int = 3,
    stopwords: frozenset[str] | None = None,
) -> list[ContextPair]:
    """Surface-pattern contexts around each mention.

    Left pattern: the gram nearest non-punctuation tokens before the span,
    then the slot.  Right pattern: the slot, then the gram nearest after.
    A side is emitted only when gram such tokens exist, and suppressed when
    every window token is a stopword.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    tokens = s.sentence.tokens
    keep = [i for i, t in enumerate(tokens) if not is_punctuation(t.surface)]
    pairs: list[ContextPair] = []
    for m in s.mentions:
        left = [i for i in keep if i < m.start][-gram:]
        right = [i for i in keep if i >= m.end][:gram]
        for side, positions in (("left", left), ("right", right)):
            if len(positions) < gram:
                continue
            words = [tokens[i].surface for i in positions]
            if all(w.lower() in stopwords for w in words):
                continue
            if side == "left":
                context = " ".join(words) + " " + SLOT
            else:
                context = SLOT + " " + " ".join(words)
            pairs.append(ContextPair(m.group_id, context, ContextType.UNARY))
    return pairs


def extract_dependency(s: AnnotatedSentence) -> list[ContextPair]:
    """Arc contexts crossing each mention boundary.

    External dependents yield "surface/deprel"; the governor yields
    "surface/deprel-1".  Surfaces of tokens covered by another mention are
    replaced with that mention's canonical.  Preposition attachments are
    collapsed to "object/prep_<word>" whether the preposition heads its
    object (prep/pobj style) or hangs off it (case-marker style).
    Punctuation arcs never emit.
    """
    sent = s.sentence
    if not sent.has_parse():
        raise ModeError(
            f"dependency contexts need a parsed sentence; "
            f"{sent.doc_id}:{sent.sent_index} has no head/deprel annotations"
        )
    tokens = sent.tokens
    mention_at: dict[int, Mention] = {}
    for m in s.mentions:
        for p in range(m.start, m.end):
            mention_at[p] = m
    children: dict[int, list[int]] = defaultdict(list)
    for i, tok in enumerate(tokens):
        if tok.head is not None and tok.head != ROOT:
            children[tok.head].append(i)

    def surface_of(pos: int) -> str:
        m = mention_at.get(pos)
        return m.canonical if m is not None else tokens[pos].surface

    def case_child(pos: int) -> int | None:
        for c in children.get(pos, ()):
            if tokens[c].deprel == "case":
                return c
        return None

    def skip_arc(pos: int) -> bool:
        rel = tokens[pos].deprel
        return rel is None or rel in ("punct", "case") or is_punctuation(
            tokens[pos].surface
        )

    pairs: list[ContextPair] = []
    for m in s.mentions:
        inside = set(range(m.start, m.end))

        # Arcs pointing out of the span: external dependents.
        for p in range(m.start, m.end):
            for c in children.get(p, ()):
                if c in inside or skip_arc(c):
                    continue
                rel = tokens[c].deprel
                if rel == "prep":
                    obj = next(
                        (
                            g
                            for g in children.get(c, ())
                            if tokens[g].deprel in ("pobj", "pcomp")
                        ),
                        None,
                    )
                    if obj is None or obj in inside:
                        continue
                    context = f"{surface_of(obj)}/prep_{tokens[c].surface.lower()}"
                else:
                    cc = case_child(c)
                    if cc is not None:
                        context = f"{surface_of(c)}/prep_{tokens[cc].surface.lower()}"
                    else:
                        context = f"{surface_of(c)}/{rel}"
                pairs.append(ContextPair(m.group_id, context, ContextType.DEPENDENCY))

        # The arc pointing in: the span head's governor.
        head_pos = next(
            (
                p
                for p in range(m.start, m.end)
                if tokens[p].head is not None and tokens[p].head not in inside
            ),
            None,
        )
        if head_pos is None:
            continue
        gov = tokens[head_pos].head
        if gov == ROOT:
            continue
        rel = tokens[head_pos].deprel
        if rel is None or rel == "punct" or is_punctuation(tokens[gov].surface):
            continue
        if rel in ("pobj", "pcomp") and tokens[gov].deprel == "prep":
            grand = tokens[gov].head
            if grand is None or grand == ROOT or grand in inside:
                continue
            context = (
                f"{surface_of(grand)}/prep_{tokens[gov].surface.lower()}"
                f"{INVERSE_MARK}"
            )
        else:
            cc = case_child(head_pos)
            if cc is not None:
                context = (
                    f"{surface_of(gov)}/prep_{tokens[cc].surface.lower()}"
                    f"{INVERSE_MARK}"
                )
            else:
                context = f"{surface_of(gov)}/{rel}{INVERSE_MARK}"
        pairs.append(ContextPair(m.group_id, context, ContextType.DEPENDENCY))
    return pairs


# ---------------------------------------------------------------------------
# Corpus-level pair building
# ---------------------------------------------------------------------------


@dataclass
class PairConfig:
    window: int = 5
    min_items: int = 3
    gram: int = 3


def build_pairs(
    sentences: Sequence[Sentence],
    groups: Sequence[TermGroup] | MemberIndex,
    ctype: ContextType,
    config: PairConfig | None = None,
    stopwords: frozenset[str] | None = None,
) -> tuple[list[ContextPair], Counter]:
    """Annotate every sentence and concatenate extractor output in order.

    Returns the pair list plus per-context-unit counts.  Dependency
    extraction over a corpus with any unparsed sentence raises ModeError
    before any work happens.
    """
    config = config or PairConfig()
    if stopwords is None:
        stopwords = load_stopwords()
    if ctype is ContextType.DEPENDENCY:
        for sent in sentences:
            if not sent.has_parse():
                raise ModeError(
                    f"dependency contexts need parsed input; "
                    f"{sent.doc_id}:{sent.sent_index} has no parse"
                )
    index = groups if isinstance(groups, MemberIndex) else MemberIndex(groups)
    pairs: list[ContextPair] = []
    for sent in sentences:
        ann = annotate(sent, index)
        if not ann.mentions:
            continue
        if ctype is ContextType.LINEAR:
            pairs.extend(extract_linear(ann, config.window, stopwords))
        elif ctype is ContextType.LIST:
            pairs.extend(extract_lists(ann, config.min_items))
        elif ctype is ContextType.DEPENDENCY:
            pairs.extend(extract_dependency(ann))
        elif ctype is ContextType.SYMMETRIC:
            pairs.extend(extract_symmetric(ann))
        elif ctype is ContextType.UNARY:
            pairs.extend(extract_unary(ann, config.gram, stopwords))
    counts = Counter(p.context for p in pairs)
    return pairs, counts


# ---------------------------------------------------------------------------
# Pair files
# ---------------------------------------------------------------------------


def _sanitize(context: str) -> str:
    return (
        context.replace("\t", " ").replace("\n", " ").replace("\r", " ")
    )


def write_pair_file(pairs: Iterable[ContextPair], path: str | Path) -> int:
    """Two-column pair file: `<group id>\\t<context>`, one pair per line.

    Tabs and newlines inside context strings become single spaces.  Returns
    the number of pairs written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(f"{p.target}\t{_sanitize(p.context)}\n")
            count += 1
    return count


def read_pair_file(path: str | Path, ctype: ContextType) -> list[ContextPair]:
    path = Path(path)
    pairs: list[ContextPair] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            target, sep, context = line.partition("\t")
            if not sep or not context or not target.isdigit():
                raise FormatError(f"{path} line {lineno}: bad pair line {line!r}")
            pairs.append(ContextPair(int(target), context, ctype))
    return pairs


def write_count_file(counts: Counter, path: str | Path) -> None:
    """Count sidecar: `<unit>\\t<count>`, descending count then unit."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sorted(counts.items(), key=lambda uc: (-uc[1], uc[0]))
    with path.open("w", encoding="utf-8") as fh:
        for unit, count in ordered:
            fh.write(f"{_sanitize(unit)}\t{count}\n")


def read_count_file(path: str | Path) -> Counter:
    path = Path(path)
    counts: Counter = Counter()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            unit, sep, count = line.rpartition("\t")
            if not sep or not count.lstrip("-").isdigit():
                raise FormatError(f"{path} line {lineno}: bad count line {line!r}")
            counts[unit] = int(count)
    return counts
