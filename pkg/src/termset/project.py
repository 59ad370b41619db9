"""Project state on disk and the end-to-end pipeline.

Layout under ``<data_root>/projects/<pid>/``:

- project.json             metadata, counters, trained context list
- corpus/raw.(txt|conllu)  uploaded bytes as received
- corpus/sentences.jsonl   parsed sentence cache
- groups.jsonl             term groups
- models/<ctype>.pairs     training pairs (+ .counts sidecar)
- models/<ctype>.vec/.ctx  embedding matrices
- mlp.json                 certainty combiner, optional
- jobs.json                job records
- sessions/sNNNN.json      expansion sessions
- validated/<slug>.csv     saved validated sets

Every write lands atomically (temp file + rename, fsync before the rename),
so a reader never sees a torn file and a crash after an acknowledged
mutation never loses it.  One lock per project serializes mutations; reads
take it only long enough to copy references.
"""

from __future__ import annotations

import contextlib
import json
import os
import re
import tempfile
import threading
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import corpus as corpus_mod
from .contexts import (
    CONTEXT_TYPES,
    ContextType,
    PairConfig,
    build_pairs,
    write_count_file,
    write_pair_file,
)
from .embedding import (
    EmbeddingModel,
    TrainConfig,
    build_vocab,
    load_model,
    save_model,
    train_sgns,
)
from .errors import (
    ConflictError,
    FormatError,
    InputError,
    NotFoundError,
    RestoreError,
    TrainingError,
)
from .expansion import (
    Candidate,
    ExpansionResult,
    SeedSet,
    expand,
    reexpand,
    result_payload,
    validated_csv,
)
from .eval import surface_index
from .mlp import MLPModel, load_model as load_mlp
from .resources import load_stopwords
from .termgroup import (
    GroupConfig,
    Term,
    TermGroup,
    dump_groups,
    group_terms,
    normalize,
    parse_groups,
)

DEFAULT_CONTEXTS = (ContextType.LINEAR, ContextType.LIST, ContextType.UNARY)

ProgressFn = Callable[[float, str], None]


def atomic_write(path: Path, data: str | bytes) -> None:
    """Write via a unique sibling temp file and rename; durable before
    return and safe under concurrent writers to the same path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(
        dir=path.parent, prefix=path.name + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _slug(name: str) -> str:
    out = re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_")
    return out or "unnamed"


@dataclass
class GroupSettings:
    """Grouping knobs beyond the merge-rule thresholds."""

    min_term_freq: int = 2
    max_edit_ratio: float = 0.2
    sim_threshold: float = 0.7
    use_similarity_merge: bool = False

    @classmethod
    def from_dict(cls, data: dict | None) -> "GroupSettings":
        settings = cls()
        for key, value in (data or {}).items():
            if not hasattr(settings, key):
                raise InputError(f"unknown group_config field {key!r}")
            setattr(settings, key, value)
        if settings.min_term_freq < 1:
            raise InputError("min_term_freq must be >= 1")
        return settings

    def rule_config(self) -> GroupConfig:
        return GroupConfig(
            max_edit_ratio=self.max_edit_ratio,
            sim_threshold=self.sim_threshold,
        )


@dataclass
class TrainSettings:
    """Embedding hyperparameters plus pair-extraction knobs, flat for JSON."""

    sgns: TrainConfig = field(default_factory=TrainConfig)
    pairs: PairConfig = field(default_factory=PairConfig)

    @classmethod
    def from_dict(cls, data: dict | None) -> "TrainSettings":
        sgns_kwargs: dict = {}
        pair_kwargs: dict = {}
        sgns_fields = TrainConfig.__dataclass_fields__
        pair_fields = PairConfig.__dataclass_fields__
        for key, value in (data or {}).items():
            if key in sgns_fields:
                sgns_kwargs[key] = value
            elif key in pair_fields:
                pair_kwargs[key] = value
            else:
                raise InputError(f"unknown train_config field {key!r}")
        return cls(TrainConfig(**sgns_kwargs), PairConfig(**pair_kwargs))

    def to_dict(self) -> dict:
        return {**asdict(self.sgns), **asdict(self.pairs)}


class Project:
    """One corpus, its groups, its models, and its expansion sessions."""

    def __init__(self, root: Path, meta: dict):
        self.root = Path(root)
        self.meta = meta
        self._lock = threading.RLock()
        self._sentences: list[corpus_mod.Sentence] | None = None
        self._groups: list[TermGroup] | None = None
        self._models: dict[ContextType, EmbeddingModel] | None = None
        self._mlp: MLPModel | None = None
        self._mlp_loaded = False
        self._jobs: list[dict] | None = None

    # -- identity ----------------------------------------------------------

    @property
    def id(self) -> str:
        return self.meta["id"]

    @property
    def name(self) -> str:
        return self.meta["name"]

    # -- construction ------------------------------------------------------

    @classmethod
    def create(cls, data_root: str | Path, name: str, pid: str | None = None):
        projects = Path(data_root) / "projects"
        projects.mkdir(parents=True, exist_ok=True)
        if pid is None:
            taken = {p.name for p in projects.iterdir() if p.is_dir()}
            n = 1
            while f"p{n:04d}" in taken:
                n += 1
            pid = f"p{n:04d}"
        root = projects / pid
        if (root / "project.json").exists():
            raise ConflictError(f"project {pid} already exists")
        meta = {
            "id": pid,
            "name": name,
            "corpus": None,
            "trained_contexts": [],
            "group_settings": None,
            "train_settings": None,
            "session_counter": 0,
            "job_counter": 0,
        }
        project = cls(root, meta)
        project._write_meta()
        return project

    @classmethod
    def open(cls, root: str | Path) -> "Project":
        """Restore a persisted project, verifying every recorded artifact."""
        root = Path(root)
        meta_path = root / "project.json"
        if not meta_path.exists():
            raise RestoreError(f"missing artifact: {meta_path}")
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise RestoreError(f"corrupt project.json: {exc}") from exc
        for key in ("id", "name", "trained_contexts", "session_counter"):
            if key not in meta:
                raise RestoreError(f"project.json missing field {key!r}")
        project = cls(root, meta)
        if meta.get("corpus"):
            path = root / "corpus" / "sentences.jsonl"
            if not path.exists():
                raise RestoreError(f"missing artifact: {path}")
            try:
                project._sentences = list(
                    corpus_mod.parse_corpus(path.read_text(encoding="utf-8"))
                )
            except FormatError as exc:
                raise RestoreError(str(exc)) from exc
        groups_path = root / "groups.jsonl"
        if groups_path.exists():
            try:
                project._groups = parse_groups(
                    groups_path.read_text(encoding="utf-8")
                )
            except FormatError as exc:
                raise RestoreError(str(exc)) from exc
        elif meta["trained_contexts"]:
            raise RestoreError(f"missing artifact: {groups_path}")
        models: dict[ContextType, EmbeddingModel] = {}
        for name in meta["trained_contexts"]:
            ctype = ContextType(name)
            vec = root / "models" / f"{name}.vec"
            if not vec.exists() or not vec.with_suffix(".ctx").exists():
                raise RestoreError(f"missing artifact: {vec}")
            try:
                models[ctype] = load_model(vec, ctype=name)
            except FormatError as exc:
                raise RestoreError(str(exc)) from exc
        project._models = models
        mlp_path = root / "mlp.json"
        if mlp_path.exists():
            try:
                project._mlp = load_mlp(mlp_path)
            except FormatError as exc:
                raise RestoreError(str(exc)) from exc
        project._mlp_loaded = True
        for spath in sorted((root / "sessions").glob("s*.json")):
            try:
                json.loads(spath.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise RestoreError(f"corrupt session file {spath}: {exc}") from exc
        project._load_jobs()
        interrupted = False
        for job in project._jobs or []:
            if job["state"] in ("queued", "running"):
                job["state"] = "failed"
                job["message"] = "interrupted by restart"
                interrupted = True
        if interrupted:
            project._write_jobs()
        return project

    @classmethod
    def open_or_create(
        cls, data_root: str | Path, pid: str, name: str | None = None
    ) -> "Project":
        root = Path(data_root) / "projects" / pid
        if (root / "project.json").exists():
            return cls.open(root)
        return cls.create(data_root, name or pid, pid=pid)

    # -- metadata ----------------------------------------------------------

    def _write_meta(self) -> None:
        atomic_write(
            self.root / "project.json",
            json.dumps(self.meta, indent=1, ensure_ascii=False) + "\n",
        )

    def describe(self) -> dict:
        with self._lock:
            return {
                "id": self.id,
                "name": self.name,
                "corpus": self.meta.get("corpus"),
                "trained_contexts": list(self.meta["trained_contexts"]),
                "has_mlp": self.mlp() is not None,
                "group_count": len(self.groups()),
                "session_count": self.meta.get("session_counter", 0),
            }

    # -- corpus ------------------------------------------------------------

    def ingest(self, data: bytes | str, fmt: str = "text") -> dict:
        """Parse and cache an uploaded corpus; replaces any previous one."""
        if fmt not in ("text", "conllu"):
            raise InputError(f"unknown corpus format {fmt!r}")
        if fmt == "conllu":
            sentences = corpus_mod.ingest_conllu(data, doc_id=self.id)
        else:
            sentences = corpus_mod.ingest_plaintext(data, doc_id=self.id)
        raw = data if isinstance(data, bytes) else data.encode("utf-8")
        ext = "conllu" if fmt == "conllu" else "txt"
        info = {
            "format": fmt,
            "documents": len({s.doc_id for s in sentences}),
            "sentences": len(sentences),
            "parsed": bool(sentences)
            and all(s.has_parse() for s in sentences),
            "tagged": bool(sentences)
            and all(t.pos is not None for s in sentences for t in s.tokens),
        }
        with self._lock:
            atomic_write(self.root / "corpus" / f"raw.{ext}", raw)
            atomic_write(
                self.root / "corpus" / "sentences.jsonl",
                corpus_mod.dump_corpus(sentences),
            )
            self.meta["corpus"] = info
            self._write_meta()
            self._sentences = sentences
        return dict(info)

    def sentences(self) -> list[corpus_mod.Sentence]:
        with self._lock:
            if self._sentences is None:
                if not self.meta.get("corpus"):
                    raise ConflictError("no corpus ingested yet")
                path = self.root / "corpus" / "sentences.jsonl"
                self._sentences = list(
                    corpus_mod.parse_corpus(path.read_text(encoding="utf-8"))
                )
            return self._sentences

    # -- training pipeline -------------------------------------------------

    def run_training(
        self,
        contexts: Sequence[ContextType] = DEFAULT_CONTEXTS,
        train_settings: TrainSettings | None = None,
        group_settings: GroupSettings | None = None,
        progress: ProgressFn | None = None,
        sgns_progress: Callable[[int, float, float], None] | None = None,
    ) -> dict:
        """Group the corpus terms, then train one model per context type.

        Returns {"groups": N, "trained": [...], "skipped": {ctype: reason}}.
        A context with no usable pairs is skipped, not fatal.
        """
        train_settings = train_settings or TrainSettings()
        group_settings = group_settings or GroupSettings()
        sentences = self.sentences()
        corpus_info = self.meta.get("corpus") or {}
        if ContextType.DEPENDENCY in contexts and not corpus_info.get("parsed"):
            raise ConflictError(
                "dependency contexts need a parsed (CoNLL-U) corpus"
            )

        def report(fraction: float, message: str) -> None:
            if progress is not None:
                progress(min(fraction, 1.0), message)

        report(0.0, "counting terms")
        stopwords = load_stopwords()
        mode = "pos_chunk" if corpus_info.get("tagged") else "ngram"
        counts = corpus_mod.count_terms(
            sentences, mode, stopwords, min_freq=group_settings.min_term_freq
        )
        if not counts:
            raise TrainingError(
                f"no candidate terms at min_term_freq="
                f"{group_settings.min_term_freq}"
            )
        terms = [Term(s, c) for s, c in sorted(counts.items())]

        report(0.05, "grouping terms")
        aux = (
            self._aux_embedding(sentences, terms, train_settings)
            if group_settings.use_similarity_merge
            else None
        )
        groups = group_terms(
            terms, aux_embedding=aux, config=group_settings.rule_config()
        )

        trained: dict[ContextType, EmbeddingModel] = {}
        pair_files: dict[str, tuple] = {}
        skipped: dict[str, str] = {}
        # Training spans 0.1 .. 0.99 so the save checkpoint never regresses.
        share = 0.89 / max(len(contexts), 1)
        for i, ctype in enumerate(contexts):
            base = 0.1 + i * share
            report(base, f"extracting {ctype.value} pairs")
            pairs, counts_c = build_pairs(
                sentences, groups, ctype, train_settings.pairs, stopwords
            )
            if not pairs:
                skipped[ctype.value] = "no pairs extracted"
                continue
            stream = [(str(p.target), p.context) for p in pairs]
            report(base + share * 0.2, f"training {ctype.value}")
            # Visits are counted over vocabulary-filtered pairs, so size the
            # progress denominator the same way the trainer does.
            try:
                tv, cv = build_vocab(stream, train_settings.sgns.min_count)
                kept = sum(
                    1
                    for t, c in stream
                    if t in tv.index and c in cv.index
                )
            except TrainingError as exc:
                skipped[ctype.value] = str(exc)
                continue
            total = train_settings.sgns.epochs * kept

            def sub_progress(done: int, alpha: float, loss: float) -> None:
                if progress is not None:
                    frac = base + share * (0.2 + 0.8 * done / max(total, 1))
                    report(
                        min(frac, 0.99),
                        f"training {ctype.value}: loss {loss:.4f}",
                    )
                if sgns_progress is not None:
                    sgns_progress(done, alpha, loss)

            wants_progress = progress is not None or sgns_progress is not None
            try:
                model = train_sgns(
                    stream,
                    train_settings.sgns,
                    ctype=ctype.value,
                    progress=sub_progress if wants_progress else None,
                )
            except TrainingError as exc:
                skipped[ctype.value] = str(exc)
                continue
            trained[ctype] = model
            pair_files[ctype.value] = (pairs, counts_c)
        if not trained:
            raise TrainingError(
                "no context produced a trainable pair stream; "
                + "; ".join(f"{k}: {v}" for k, v in skipped.items())
            )

        report(0.99, "saving artifacts")
        with self._lock:
            atomic_write(self.root / "groups.jsonl", dump_groups(groups))
            for name, (pairs, counts_c) in pair_files.items():
                write_pair_file(pairs, self.root / "models" / f"{name}.pairs")
                write_count_file(
                    counts_c, self.root / "models" / f"{name}.counts"
                )
            for ctype, model in trained.items():
                save_model(model, self.root / "models" / f"{ctype.value}.vec")
            self.meta["trained_contexts"] = [c.value for c in trained]
            self.meta["group_settings"] = asdict(group_settings)
            self.meta["train_settings"] = train_settings.to_dict()
            self._write_meta()
            self._groups = groups
            self._models = dict(trained)
        report(1.0, "done")
        return {
            "groups": len(groups),
            "trained": [c.value for c in trained],
            "skipped": skipped,
        }

    def _aux_embedding(
        self,
        sentences: list[corpus_mod.Sentence],
        terms: list[Term],
        settings: TrainSettings,
    ) -> EmbeddingModel | None:
        """Surface-level linear embedding used only by the similarity merge
        rule: every term is its own provisional group."""
        provisional = [
            TermGroup(id=i, canonical=t.surface, members=[t])
            for i, t in enumerate(terms)
        ]
        pairs, _ = build_pairs(
            sentences, provisional, ContextType.LINEAR, settings.pairs
        )
        if not pairs:
            return None
        stream = [(provisional[p.target].canonical, p.context) for p in pairs]
        config = replace(settings.sgns, dim=max(10, settings.sgns.dim // 2))
        try:
            return train_sgns(stream, config, ctype="linear")
        except TrainingError:
            return None

    # -- groups ------------------------------------------------------------

    def groups(self) -> list[TermGroup]:
        with self._lock:
            if self._groups is None:
                path = self.root / "groups.jsonl"
                if not path.exists():
                    return []
                self._groups = parse_groups(path.read_text(encoding="utf-8"))
            return self._groups

    def canonicals(self) -> dict[int, str]:
        return {g.id: g.canonical for g in self.groups()}

    def group_by_id(self, gid: int) -> TermGroup:
        for g in self.groups():
            if g.id == gid:
                return g
        raise NotFoundError(f"no group with id {gid}")

    def groups_payload(
        self, filter_text: str = "", offset: int = 0, limit: int = 50
    ) -> dict:
        """Paged group rows; filter is a case-insensitive substring match
        over the canonical and all member surfaces."""
        if offset < 0 or limit < 0:
            raise InputError("offset and limit must be >= 0")
        groups = self.groups()
        needle = filter_text.lower()
        if needle:
            groups = [
                g
                for g in groups
                if needle in g.canonical.lower()
                or any(needle in t.surface.lower() for t in g.members)
            ]
        page = groups[offset : offset + limit]
        return {
            "total": len(groups),
            "offset": offset,
            "limit": limit,
            "groups": [
                {
                    "id": g.id,
                    "canonical": g.canonical,
                    "frequency": g.frequency,
                    "members": [
                        {"surface": t.surface, "frequency": t.frequency}
                        for t in g.members
                    ],
                }
                for g in page
            ],
        }

    def snippets_payload(self, gid: int, max_n: int = 10) -> dict:
        group = self.group_by_id(gid)
        found = corpus_mod.snippets(
            self.sentences(), group.surfaces(), max_n
        )
        return {
            "group_id": gid,
            "canonical": group.canonical,
            "snippets": [
                {"text": text, "highlights": [[a, b] for a, b in spans]}
                for text, spans in found
            ],
        }

    def resolve_terms(self, terms: Sequence[str]) -> list[int]:
        """Map term strings to group ids by normalized member match."""
        index = surface_index(self.groups())
        ids: list[int] = []
        for term in terms:
            gid = index.get(normalize(term))
            if gid is None:
                raise NotFoundError(f"no term group matches {term!r}")
            if gid not in ids:
                ids.append(gid)
        return ids

    # -- models ------------------------------------------------------------

    def models(self) -> dict[ContextType, EmbeddingModel]:
        with self._lock:
            if self._models is None:
                models: dict[ContextType, EmbeddingModel] = {}
                for name in self.meta["trained_contexts"]:
                    ctype = ContextType(name)
                    models[ctype] = load_model(
                        self.root / "models" / f"{name}.vec", ctype=name
                    )
                self._models = models
            return dict(self._models)

    def mlp(self) -> MLPModel | None:
        with self._lock:
            if not self._mlp_loaded:
                path = self.root / "mlp.json"
                self._mlp = load_mlp(path) if path.exists() else None
                self._mlp_loaded = True
            return self._mlp

    def set_mlp(self, model: MLPModel) -> None:
        from .mlp import save_model as save_mlp

        with self._lock:
            save_mlp(model, self.root / "mlp.json")
            self._mlp = model
            self._mlp_loaded = True

    def scorer_name(self) -> str:
        return "mlp" if self.mlp() is not None else "mean"

    def _require_trained(self) -> dict[ContextType, EmbeddingModel]:
        if not self.meta["trained_contexts"]:
            raise ConflictError("project has no trained models yet")
        return self.models()

    # -- expansion sessions ------------------------------------------------

    def _session_path(self, sid: str) -> Path:
        return self.root / "sessions" / f"{sid}.json"

    def _load_session(self, sid: str) -> dict:
        path = self._session_path(sid)
        if not path.exists():
            raise NotFoundError(f"no session {sid!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    def _write_session(self, doc: dict) -> None:
        atomic_write(
            self._session_path(doc["id"]),
            json.dumps(doc, indent=1, ensure_ascii=False) + "\n",
        )

    def _run_expand(
        self, category: str, seed_ids: Sequence[int], k: int, pool_size: int
    ) -> ExpansionResult:
        models = self._require_trained()
        known = {g.id for g in self.groups()}
        unknown = sorted(set(seed_ids) - known)
        if unknown:
            raise InputError(f"unknown seed group ids: {unknown}")
        seed = SeedSet.of(category, list(seed_ids))
        return expand(models, self.mlp(), seed, k, pool_size)

    def expand_session(
        self,
        category: str,
        seed_ids: Sequence[int],
        k: int = 50,
        pool_size: int = 500,
    ) -> dict:
        """Run an expansion and persist it as a new session."""
        if not category.strip():
            raise InputError("category name must be nonempty")
        result = self._run_expand(category, seed_ids, k, pool_size)
        with self._lock:
            self.meta["session_counter"] += 1
            sid = f"s{self.meta['session_counter']:04d}"
            self._write_meta()
            payload = result_payload(
                result, self.canonicals(), session_id=sid,
                scorer=self.scorer_name(),
            )
            doc = {
                "id": sid,
                "category": category,
                "seed_ids": sorted(set(seed_ids)),
                "k": k,
                "pool_size": pool_size,
                "validated": [],
                "payload": payload,
            }
            self._write_session(doc)
        return payload

    def session_payload(self, sid: str) -> dict:
        return self._load_session(sid)["payload"]

    def sessions_payload(self) -> dict:
        sessions = []
        directory = self.root / "sessions"
        for path in sorted(directory.glob("s*.json")):
            doc = json.loads(path.read_text(encoding="utf-8"))
            sessions.append(
                {
                    "id": doc["id"],
                    "category": doc["category"],
                    "seed_ids": doc["seed_ids"],
                    "validated": len(doc["validated"]),
                }
            )
        return {"sessions": sessions}

    def validate_session(self, sid: str, gid: int, completed: bool) -> dict:
        """Toggle the completed mark on one row of a session."""
        with self._lock:
            doc = self._load_session(sid)
            items = doc["payload"]["items"]
            hit = next((x for x in items if x["group_id"] == gid), None)
            if hit is None:
                raise InputError(
                    f"group {gid} is not part of session {sid!r}"
                )
            hit["completed"] = completed
            marks = set(doc["validated"])
            (marks.add if completed else marks.discard)(gid)
            doc["validated"] = sorted(marks)
            self._write_session(doc)
        return doc["payload"]

    def reexpand_session(self, sid: str, accepted: Sequence[int]) -> dict:
        """Fold accepted ids into the session's seeds and expand again."""
        with self._lock:
            doc = self._load_session(sid)
            result = self._doc_to_result(doc)
            fresh = reexpand(
                result,
                list(accepted),
                self._require_trained(),
                self.mlp(),
                doc["k"],
                doc["pool_size"],
            )
            payload = result_payload(
                fresh, self.canonicals(), session_id=sid,
                scorer=self.scorer_name(),
            )
            doc["seed_ids"] = sorted(fresh.seed.group_ids)
            doc["validated"] = sorted(fresh.validated)
            doc["payload"] = payload
            self._write_session(doc)
        return payload

    def _doc_to_result(self, doc: dict) -> ExpansionResult:
        candidates = [
            Candidate(
                group_id=item["group_id"],
                features=np.asarray(item["features"], dtype=np.float64),
                certainty=item["certainty"],
                seed=item["seed"],
            )
            for item in doc["payload"]["items"]
        ]
        return ExpansionResult(
            seed=SeedSet.of(doc["category"], doc["seed_ids"]),
            candidates=candidates,
            validated=set(doc["validated"]),
        )

    def export_csv(self, sid: str) -> str:
        doc = self._load_session(sid)
        return validated_csv(self._doc_to_result(doc), self.canonicals())

    def save_session(self, sid: str) -> dict:
        """Persist the session's validated rows as the category's CSV."""
        with self._lock:
            doc = self._load_session(sid)
            csv_text = validated_csv(
                self._doc_to_result(doc), self.canonicals()
            )
            filename = f"{_slug(doc['category'])}.csv"
            atomic_write(self.root / "validated" / filename, csv_text)
        return {
            "category": doc["category"],
            "rows": len(doc["validated"]),
            "file": f"validated/{filename}",
        }

    def validated_csv_for(self, category: str) -> str:
        path = self.root / "validated" / f"{_slug(category)}.csv"
        if not path.exists():
            raise NotFoundError(
                f"no saved validated set for category {category!r}"
            )
        return path.read_text(encoding="utf-8")

    # -- evaluation protocol ----------------------------------------------

    def expand_ranking(self, seed_ids: Sequence[int], k: int) -> list[int]:
        """Ranked non-seed group ids for a seed set (benchmark hook)."""
        result = self._run_expand("benchmark", seed_ids, k, max(k, 500))
        return [c.group_id for c in result.candidates if not c.seed]

    # -- jobs --------------------------------------------------------------

    def _load_jobs(self) -> None:
        if self._jobs is None:
            path = self.root / "jobs.json"
            if path.exists():
                self._jobs = json.loads(path.read_text(encoding="utf-8"))[
                    "jobs"
                ]
            else:
                self._jobs = []

    def _write_jobs(self) -> None:
        atomic_write(
            self.root / "jobs.json",
            json.dumps({"jobs": self._jobs}, indent=1, ensure_ascii=False)
            + "\n",
        )

    def new_job(self, kind: str) -> dict:
        with self._lock:
            self._load_jobs()
            self.meta["job_counter"] += 1
            job = {
                "id": f"j{self.meta['job_counter']:04d}",
                "kind": kind,
                "state": "queued",
                "progress": 0.0,
                "message": "",
            }
            self._jobs.append(job)
            self._write_meta()
            self._write_jobs()
            return dict(job)

    def update_job(self, jid: str, **changes) -> dict:
        """Update a job record; state transitions are made durable, bare
        progress ticks only update memory."""
        with self._lock:
            self._load_jobs()
            job = next((j for j in self._jobs if j["id"] == jid), None)
            if job is None:
                raise NotFoundError(f"no job {jid!r}")
            job.update(changes)
            if "state" in changes:
                self._write_jobs()
            return dict(job)

    def get_job(self, jid: str) -> dict:
        with self._lock:
            self._load_jobs()
            job = next((j for j in self._jobs if j["id"] == jid), None)
            if job is None:
                raise NotFoundError(f"no job {jid!r}")
            return dict(job)

    def jobs(self) -> list[dict]:
        with self._lock:
            self._load_jobs()
            return [dict(j) for j in self._jobs]
