"""Corpus ingestion, candidate term extraction, and snippet views.

Raw text and pre-parsed CoNLL-U are both normalized into the same
sentence/token representation.  The tokenizer rules are deliberately frozen
and simple: downstream extraction tests depend on them being stable.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import FormatError, IngestError, ModeError
from .resources import load_stopwords

#: Sentinel head index for the syntactic root (CoNLL-U HEAD column 0).
ROOT = -1

_TERMINAL = ".!?"

_NOUN_TAGS = frozenset({"NN", "NNS", "NNP", "NNPS"})
_ADJ_TAGS = frozenset({"JJ", "JJR", "JJS"})
_DET_TAG = "DT"


@dataclass
class Token:
    surface: str
    lemma: str | None = None
    pos: str | None = None
    head: int | None = None  # 0-based index within the sentence, ROOT for root
    deprel: str | None = None


@dataclass
class Sentence:
    tokens: list[Token]
    doc_id: str
    sent_index: int

    @property
    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def has_parse(self) -> bool:
        return all(t.head is not None and t.deprel is not None for t in self.tokens)


@dataclass
class CandidateSpan:
    """A candidate term occurrence: tokens [start, end) of one sentence."""

    sentence: Sentence
    start: int
    end: int
    surface: str = field(init=False)

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end <= len(self.sentence.tokens):
            raise ValueError(f"bad span [{self.start}, {self.end})")
        self.surface = " ".join(
            t.surface for t in self.sentence.tokens[self.start : self.end]
        )


def is_punctuation(surface: str) -> bool:
    """True when every character of ``surface`` is Unicode punctuation."""
    return bool(surface) and all(
        unicodedata.category(c).startswith("P") for c in surface
    )


def _decode(data: str | bytes) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"invalid UTF-8 at byte offset {exc.start}") from exc


# ---------------------------------------------------------------------------
# Plain text
# ---------------------------------------------------------------------------

_BOUNDARY = re.compile(r"[.!?]+(?=\s+[A-Z])")


def _split_sentences(block: str) -> list[str]:
    """Split a document block into sentences.

    A sentence ends at a run of terminal punctuation followed by whitespace
    and an uppercase letter, or at the end of the block.  A period directly
    after a lone capital letter is treated as an initial ("A. B" stays one
    sentence), not a sentence end.
    """
    out = []
    pos = 0
    for m in _BOUNDARY.finditer(block):
        prefix = block[pos : m.start()]
        word = prefix.rsplit(None, 1)[-1] if prefix.split() else prefix
        if m.group().startswith(".") and re.fullmatch(r"[A-Z]", word):
            continue
        out.append(block[pos : m.end()].strip())
        pos = m.end()
    tail = block[pos:].strip()
    if tail:
        out.append(tail)
    return [s for s in out if s]


def _tokenize(text: str) -> list[str]:
    """Whitespace tokenization with leading/trailing punctuation detached."""
    tokens: list[str] = []
    for chunk in text.split():
        lead: list[str] = []
        trail: list[str] = []
        while chunk and unicodedata.category(chunk[0]).startswith("P"):
            lead.append(chunk[0])
            chunk = chunk[1:]
        while chunk and unicodedata.category(chunk[-1]).startswith("P"):
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(lead)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(trail))
    return tokens


def ingest_plaintext(data: str | bytes, doc_id: str = "doc") -> list[Sentence]:
    """Ingest UTF-8 plain text; blank-line-separated blocks are documents.

    No POS or parse fields are populated.  Empty input yields an empty
    corpus; invalid UTF-8 raises :class:`IngestError` naming the byte offset.
    """
    text = _decode(data)
    sentences: list[Sentence] = []
    blocks = [b for b in re.split(r"\n\s*\n", text) if b.strip()]
    for b_index, block in enumerate(blocks):
        block_doc = f"{doc_id}:{b_index:04d}"
        for s_index, sent_text in enumerate(_split_sentences(block)):
            toks = [Token(surface=s) for s in _tokenize(sent_text)]
            if toks:
                sentences.append(Sentence(toks, block_doc, s_index))
    return sentences


# ---------------------------------------------------------------------------
# CoNLL-U
# ---------------------------------------------------------------------------


def ingest_conllu(data: str | bytes, doc_id: str = "doc") -> list[Sentence]:
    """Ingest 10-column CoNLL-U.

    FORM/LEMMA/XPOS (falling back to UPOS)/HEAD/DEPREL are kept; HEAD is
    re-based to 0-based indices with ``ROOT`` for the CoNLL-U root (0).
    Multiword-token and empty-node lines are skipped, as are comments.
    """
    text = _decode(data)
    sentences: list[Sentence] = []
    current: list[Token] = []
    current_lines: list[int] = []

    def flush() -> None:
        nonlocal current, current_lines
        if current:
            for tok, lineno in zip(current, current_lines):
                if tok.head is not None and tok.head != ROOT:
                    if not 0 <= tok.head < len(current):
                        raise FormatError(
                            f"line {lineno}: HEAD points outside sentence"
                        )
            sentences.append(Sentence(current, doc_id, len(sentences)))
        current = []
        current_lines = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise FormatError(f"line {lineno}: expected 10 columns, got {len(cols)}")
        tid = cols[0]
        if "-" in tid or "." in tid:
            continue  # multiword token / empty node
        if not tid.isdigit():
            raise FormatError(f"line {lineno}: bad token id {tid!r}")
        form, lemma, upos, xpos = cols[1], cols[2], cols[3], cols[4]
        head_col, deprel = cols[6], cols[7]
        pos = xpos if xpos != "_" else (upos if upos != "_" else None)
        if head_col == "_":
            head = None
        else:
            try:
                head_num = int(head_col)
            except ValueError:
                raise FormatError(
                    f"line {lineno}: non-integer HEAD {head_col!r}"
                ) from None
            head = ROOT if head_num == 0 else head_num - 1
        current.append(
            Token(
                surface=form,
                lemma=None if lemma == "_" else lemma,
                pos=pos,
                head=head,
                deprel=None if deprel == "_" else deprel,
            )
        )
        current_lines.append(lineno)
    flush()
    return sentences


# ---------------------------------------------------------------------------
# Candidate extraction
# ---------------------------------------------------------------------------


def extract_candidates(
    sentence: Sentence,
    mode: str = "ngram",
    stopwords: frozenset[str] | None = None,
    max_ngram: int = 4,
) -> list[CandidateSpan]:
    """Extract candidate term spans from one sentence.

    ``pos_chunk`` emits maximal spans matching (DT)? (JJ|JJR|JJS)*
    (NN|NNS|NNP|NNPS)+ with the determiner stripped from the emitted span.
    ``ngram`` (the fallback for untagged text) emits all 1..max_ngram-grams
    whose first and last tokens are not stopwords and that contain no
    punctuation tokens.
    """
    if mode == "pos_chunk":
        return _pos_chunks(sentence)
    if mode == "ngram":
        if stopwords is None:
            stopwords = load_stopwords()
        return _ngrams(sentence, stopwords, max_ngram)
    raise ModeError(f"unknown candidate extraction mode {mode!r}")


def _pos_chunks(sentence: Sentence) -> list[CandidateSpan]:
    tokens = sentence.tokens
    if any(t.pos is None for t in tokens):
        raise ModeError("pos_chunk extraction requires POS tags on all tokens")
    spans: list[CandidateSpan] = []
    i = 0
    n = len(tokens)
    while i < n:
        j = i
        has_det = tokens[j].pos == _DET_TAG
        if has_det:
            j += 1
        while j < n and tokens[j].pos in _ADJ_TAGS:
            j += 1
        noun_start = j
        while j < n and tokens[j].pos in _NOUN_TAGS:
            j += 1
        if j > noun_start:
            start = i + 1 if has_det else i
            spans.append(CandidateSpan(sentence, start, j))
            i = j
        else:
            i += 1
    return spans


def _ngrams(
    sentence: Sentence, stopwords: frozenset[str], max_ngram: int
) -> list[CandidateSpan]:
    tokens = sentence.tokens
    punct = [is_punctuation(t.surface) for t in tokens]
    stop = [t.surface.casefold() in stopwords for t in tokens]
    spans: list[CandidateSpan] = []
    n = len(tokens)
    for start in range(n):
        if punct[start] or stop[start]:
            continue
        for length in range(1, max_ngram + 1):
            end = start + length
            if end > n or punct[end - 1]:
                break
            if stop[end - 1]:
                continue
            spans.append(CandidateSpan(sentence, start, end))
    return spans


def count_terms(
    sentences: Iterable[Sentence],
    mode: str = "ngram",
    stopwords: frozenset[str] | None = None,
    min_freq: int = 1,
) -> dict[str, int]:
    """Count candidate term surfaces over a corpus.

    A surface that never occurs outside a longer candidate span is dropped:
    with overlapping n-gram candidates, "York" inside "New York" is not a
    term of its own.  Frequencies still count every occurrence.  Surfaces
    below ``min_freq`` are dropped.
    """
    totals: dict[str, int] = {}
    standalone: dict[str, int] = {}
    for sentence in sentences:
        spans = extract_candidates(sentence, mode, stopwords)
        ordered = sorted(spans, key=lambda s: (s.start, -s.end))
        max_end = -1
        for span in ordered:
            totals[span.surface] = totals.get(span.surface, 0) + 1
            if span.end > max_end:
                standalone[span.surface] = standalone.get(span.surface, 0) + 1
            max_end = max(max_end, span.end)
    return {
        s: c
        for s, c in totals.items()
        if c >= min_freq and standalone.get(s, 0) > 0
    }


# ---------------------------------------------------------------------------
# Snippets
# ---------------------------------------------------------------------------


def snippets(
    sentences: Iterable[Sentence],
    members: Iterable[str],
    max_n: int,
) -> list[tuple[str, list[tuple[int, int]]]]:
    """Sentences containing any of ``members`` (case-insensitive), with
    character offsets of the matches in the space-joined sentence text.

    At most ``max_n`` sentences, in (doc_id, sent_index) order.
    """
    member_seqs = sorted(
        {tuple(m.casefold().split()) for m in members if m.split()},
        key=len,
        reverse=True,
    )
    if max_n <= 0 or not member_seqs:
        return []
    max_len = len(member_seqs[0])
    seq_set = set(member_seqs)
    out: list[tuple[str, list[tuple[int, int]]]] = []
    for sentence in sorted(sentences, key=lambda s: (s.doc_id, s.sent_index)):
        lowered = [t.surface.casefold() for t in sentence.tokens]
        offsets: list[int] = []
        pos = 0
        for t in sentence.tokens:
            offsets.append(pos)
            pos += len(t.surface) + 1
        matches: list[tuple[int, int]] = []
        i = 0
        while i < len(lowered):
            for length in range(min(max_len, len(lowered) - i), 0, -1):
                if tuple(lowered[i : i + length]) in seq_set:
                    start = offsets[i]
                    end = offsets[i + length - 1] + len(
                        sentence.tokens[i + length - 1].surface
                    )
                    matches.append((start, end))
                    i += length
                    break
            else:
                i += 1
        if matches:
            out.append((sentence.text, matches))
            if len(out) >= max_n:
                break
    return out


# ---------------------------------------------------------------------------
# Corpus cache (line-delimited JSON)
# ---------------------------------------------------------------------------


def sentence_to_record(sentence: Sentence) -> dict:
    tokens = []
    for t in sentence.tokens:
        rec: dict = {"surface": t.surface}
        if t.lemma is not None:
            rec["lemma"] = t.lemma
        if t.pos is not None:
            rec["pos"] = t.pos
        if t.head is not None:
            rec["head"] = t.head
        if t.deprel is not None:
            rec["deprel"] = t.deprel
        tokens.append(rec)
    return {
        "doc_id": sentence.doc_id,
        "sent_index": sentence.sent_index,
        "tokens": tokens,
    }


def record_to_sentence(record: dict) -> Sentence:
    tokens = [
        Token(
            surface=t["surface"],
            lemma=t.get("lemma"),
            pos=t.get("pos"),
            head=t.get("head"),
            deprel=t.get("deprel"),
        )
        for t in record["tokens"]
    ]
    return Sentence(tokens, record["doc_id"], record["sent_index"])


def dump_corpus(sentences: Iterable[Sentence]) -> str:
    lines = [
        json.dumps(sentence_to_record(s), ensure_ascii=False, separators=(",", ":"))
        for s in sentences
    ]
    return "".join(line + "\n" for line in lines)


def parse_corpus(text: str) -> Iterator[Sentence]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield record_to_sentence(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"corpus cache line {lineno}: {exc}") from exc
