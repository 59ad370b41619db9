"""Collapsing surface variants (aliases, acronyms, spellings) into term groups.

A term group is the atomic unit for embedding training and expansion.  The
merge heuristic combines text normalization, an abbreviation lexicon with an
initials rule, bounded edit distance, and (optionally) embedding similarity.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .errors import FormatError, InputError
from .resources import load_abbreviations

if TYPE_CHECKING:  # pragma: no cover
    from .embedding import EmbeddingModel


@dataclass(frozen=True)
class Term:
    surface: str
    frequency: int


@dataclass
class TermGroup:
    id: int
    canonical: str
    members: list[Term]

    @property
    def frequency(self) -> int:
        return sum(m.frequency for m in self.members)

    def surfaces(self) -> list[str]:
        return [m.surface for m in self.members]


def normalize(surface: str) -> str:
    """Lowercase, dashes/underscores to spaces, other punctuation dropped,
    whitespace collapsed.  Idempotent; the empty result is allowed."""
    out: list[str] = []
    for c in surface.lower():
        cat = unicodedata.category(c)
        if cat == "Pd" or c == "_":
            out.append(" ")
        elif cat.startswith("P"):
            continue
        else:
            out.append(c)
    return " ".join("".join(out).split())


def edit_distance(a: str, b: str) -> int:
    """Unit-cost Levenshtein distance over Unicode scalar values."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(
                min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
            )
        prev = cur
    return prev[-1]


def _bounded_distance(a: str, b: str, limit: int) -> int:
    """Levenshtein distance if it is <= limit, else limit + 1."""
    if abs(len(a) - len(b)) > limit:
        return limit + 1
    if len(a) < len(b):
        a, b = b, a
    big = limit + 1
    prev = [j if j <= limit else big for j in range(len(b) + 1)]
    for i, ca in enumerate(a, start=1):
        cur = [i if i <= limit else big]
        row_min = cur[0]
        for j, cb in enumerate(b, start=1):
            v = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
            v = min(v, big)
            cur.append(v)
            row_min = min(row_min, v)
        if row_min > limit:
            return big
        prev = cur
    return min(prev[-1], big)


class AbbreviationLexicon:
    """Case-insensitive abbreviation -> expansions map.

    Keys and expansions are normalized on load, so lookups only need the
    normalized query string.
    """

    def __init__(self, entries: Mapping[str, Iterable[str]] | None = None):
        self._map: dict[str, frozenset[str]] = {}
        for key, exps in (entries or {}).items():
            nk = normalize(key)
            if not nk:
                continue
            vals = frozenset(e for e in (normalize(x) for x in exps) if e)
            if vals:
                self._map[nk] = self._map.get(nk, frozenset()) | vals

    @classmethod
    def builtin(cls) -> "AbbreviationLexicon":
        return cls(load_abbreviations())

    @classmethod
    def from_file(cls, path: str) -> "AbbreviationLexicon":
        with open(path, encoding="utf-8") as f:
            try:
                raw = json.load(f)
            except json.JSONDecodeError as exc:
                raise FormatError(f"abbreviation lexicon {path}: {exc}") from exc
        return cls(raw)

    def expansions(self, normalized: str) -> frozenset[str]:
        return self._map.get(normalized, frozenset())

    def items(self):
        return self._map.items()


def _initials(normalized: str) -> str | None:
    words = normalized.split()
    if len(words) < 2:
        return None
    return "".join(w[0] for w in words)


def abbreviation_match(a: str, b: str, lexicon: AbbreviationLexicon) -> bool:
    """True when one side abbreviates the other via the lexicon or when one
    equals the concatenated initials (length >= 2) of the other's words."""
    na, nb = normalize(a), normalize(b)
    if not na or not nb:
        return False
    if nb in lexicon.expansions(na) or na in lexicon.expansions(nb):
        return True
    ib = _initials(nb)
    if ib is not None and len(ib) >= 2 and na == ib:
        return True
    ia = _initials(na)
    if ia is not None and len(ia) >= 2 and nb == ia:
        return True
    return False


@dataclass
class GroupConfig:
    max_edit_ratio: float = 0.2
    sim_threshold: float = 0.7


def group_terms(
    terms: Sequence[Term],
    aux_embedding: "EmbeddingModel | None" = None,
    lexicon: AbbreviationLexicon | None = None,
    config: GroupConfig | None = None,
) -> list[TermGroup]:
    """Partition terms into groups by union-find closure of the merge rules.

    Two terms merge when any rule fires: equal normalized forms; an
    abbreviation match; edit distance within max_edit_ratio of the shorter
    normalized form (single-word pairs, or multiword pairs sharing the last
    word); or embedding cosine >= sim_threshold with an equal last word.
    Group ids are assigned in descending frequency order, ties broken by
    canonical string.
    """
    if lexicon is None:
        lexicon = AbbreviationLexicon.builtin()
    if config is None:
        config = GroupConfig()

    surfaces = [t.surface for t in terms]
    if len(set(surfaces)) != len(surfaces):
        dup = next(s for s in surfaces if surfaces.count(s) > 1)
        raise InputError(f"duplicate term surface {dup!r}")

    n = len(terms)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    norms = [normalize(t.surface) for t in terms]

    # normalization equality
    by_norm: dict[str, list[int]] = {}
    for i, nm in enumerate(norms):
        by_norm.setdefault(nm, []).append(i)
    for bucket in by_norm.values():
        for j in bucket[1:]:
            union(bucket[0], j)

    # abbreviation lexicon entries linking terms present in the vocabulary
    for key, exps in lexicon.items():
        if key not in by_norm:
            continue
        anchor = by_norm[key][0]
        for exp in exps:
            if exp in by_norm:
                union(anchor, by_norm[exp][0])

    # initials rule
    initials_index: dict[str, list[int]] = {}
    for i, nm in enumerate(norms):
        ini = _initials(nm)
        if ini is not None and len(ini) >= 2:
            initials_index.setdefault(ini, []).append(i)
    for nm, bucket in by_norm.items():
        for j in initials_index.get(nm, ()):
            union(bucket[0], j)

    # edit-distance and similarity merging within head-word buckets
    by_head: dict[str, list[int]] = {}
    singles: list[int] = []
    for i, nm in enumerate(norms):
        words = nm.split()
        if not words:
            continue
        by_head.setdefault(words[-1], []).append(i)
        if len(words) == 1:
            singles.append(i)

    def try_edit(i: int, j: int) -> None:
        if find(i) == find(j):
            return
        na, nb = norms[i], norms[j]
        limit = int(config.max_edit_ratio * min(len(na), len(nb)))
        if limit >= 1 and _bounded_distance(na, nb, limit) <= limit:
            union(i, j)

    def try_similarity(i: int, j: int) -> None:
        if aux_embedding is None or find(i) == find(j):
            return
        sim = aux_embedding.pair_similarity(terms[i].surface, terms[j].surface)
        if sim is not None and sim >= config.sim_threshold:
            union(i, j)

    seen_pairs: set[tuple[int, int]] = set()
    for bucket in by_head.values():
        for x in range(len(bucket)):
            for y in range(x + 1, len(bucket)):
                i, j = bucket[x], bucket[y]
                seen_pairs.add((i, j))
                try_edit(i, j)
                try_similarity(i, j)
    # single-word pairs with distinct head words: edit rule only
    for x in range(len(singles)):
        for y in range(x + 1, len(singles)):
            i, j = singles[x], singles[y]
            if (i, j) not in seen_pairs:
                try_edit(i, j)

    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)

    groups = []
    for indices in clusters.values():
        members = sorted(
            (terms[i] for i in indices), key=lambda t: (-t.frequency, t.surface)
        )
        groups.append((members[0].surface, members))
    groups.sort(key=lambda g: (-sum(m.frequency for m in g[1]), g[0]))
    return [
        TermGroup(id=i, canonical=canonical, members=members)
        for i, (canonical, members) in enumerate(groups)
    ]


# ---------------------------------------------------------------------------
# groups.jsonl
# ---------------------------------------------------------------------------


def dump_groups(groups: Iterable[TermGroup]) -> str:
    lines = []
    for g in groups:
        rec = {
            "id": g.id,
            "canonical": g.canonical,
            "members": [
                {"surface": m.surface, "frequency": m.frequency} for m in g.members
            ],
        }
        lines.append(json.dumps(rec, ensure_ascii=False, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def parse_groups(text: str) -> list[TermGroup]:
    groups = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            groups.append(
                TermGroup(
                    id=int(rec["id"]),
                    canonical=rec["canonical"],
                    members=[
                        Term(m["surface"], int(m["frequency"]))
                        for m in rec["members"]
                    ],
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"groups.jsonl line {lineno}: {exc}") from exc
    return groups
