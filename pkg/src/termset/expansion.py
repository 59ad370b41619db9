"""Seed-set expansion: features, certainty scores, and re-expansion.

A seed set names a semantic category by a few term-group ids.  Each context
type's embedding ranks candidates against the centroid of the seeds it
knows; the per-context cosines form a 5-feature vector that the MLP turns
into a certainty in [0, 1].  Seed groups always carry certainty exactly 1.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .contexts import CONTEXT_TYPES, ContextType
from .embedding import EmbeddingModel, centroid, cosine, nearest
from .errors import InputError
from .mlp import MLPModel, forward

DEFAULT_POOL_SIZE = 500


@dataclass(frozen=True)
class SeedSet:
    category: str
    group_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.group_ids:
            raise InputError("seed set must contain at least one group id")
        if len(set(self.group_ids)) != len(self.group_ids):
            raise InputError("duplicate seed group ids")

    @classmethod
    def of(cls, category: str, ids: Sequence[int]) -> "SeedSet":
        return cls(category, tuple(ids))


@dataclass
class Candidate:
    group_id: int
    features: np.ndarray  # one per context type, 0 when unavailable
    certainty: float
    seed: bool

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.shape != (len(CONTEXT_TYPES),):
            raise InputError(
                f"features must have width {len(CONTEXT_TYPES)}"
            )
        if not np.all(np.isfinite(self.features)):
            raise InputError("candidate features must be finite")
        if self.seed and self.certainty != 1.0:
            raise InputError("seed candidates must have certainty 1.0")
        if not 0.0 <= self.certainty <= 1.0:
            raise InputError("certainty must lie in [0, 1]")


@dataclass
class ExpansionResult:
    seed: SeedSet
    candidates: list[Candidate]
    validated: set[int] = field(default_factory=set)

    def ids(self) -> set[int]:
        return {c.group_id for c in self.candidates}


def _seed_vectors(
    model: EmbeddingModel, seed_ids: Sequence[int]
) -> tuple[list[np.ndarray], list[int]]:
    present: list[np.ndarray] = []
    missing: list[int] = []
    for gid in seed_ids:
        v = model.vector(str(gid))
        if v is None:
            missing.append(gid)
        else:
            present.append(v)
    return present, missing


def expand_simple(
    model: EmbeddingModel, seed: SeedSet, k: int
) -> list[tuple[int, float]]:
    """Single-context expansion: nearest groups to the seed centroid.

    All seeds must be in the model's target vocabulary; seeds are excluded
    from the ranking.
    """
    vectors, missing = _seed_vectors(model, seed.group_ids)
    if missing:
        raise InputError(
            f"seed group ids not in model vocabulary: {sorted(missing)}"
        )
    center = centroid(vectors)
    exclude = {str(g) for g in seed.group_ids}
    ranked = nearest(model, center, k, exclude=exclude)
    return [(int(u), s) for u, s in ranked if u.isdigit()]


def _context_centroids(
    models: Mapping[ContextType, EmbeddingModel], seed: SeedSet
) -> dict[ContextType, np.ndarray]:
    """Per-context seed centroid over the seeds that context knows."""
    if not models:
        raise InputError("expansion needs at least one model")
    centroids: dict[ContextType, np.ndarray] = {}
    for ctype in CONTEXT_TYPES:
        model = models.get(ctype)
        if model is None:
            continue
        vectors, _ = _seed_vectors(model, seed.group_ids)
        if not vectors:
            continue
        center = centroid(vectors)
        if np.linalg.norm(center) == 0.0:
            continue
        centroids[ctype] = center
    if not centroids:
        raise InputError(
            f"no seed group of {sorted(seed.group_ids)} appears in any model"
        )
    return centroids


def score_candidates(
    models: Mapping[ContextType, EmbeddingModel],
    seed: SeedSet,
    pool_size: int = DEFAULT_POOL_SIZE,
) -> list[tuple[int, np.ndarray]]:
    """Pool candidates across contexts and compute their feature vectors.

    The pool is the union over available models of the top-pool_size groups
    by cosine against that model's seed centroid (seeds excluded).  Feature
    i is the cosine between context i's seed centroid and the candidate's
    vector there, or 0 when either side is missing.  The seed centroid of a
    context uses only the seeds that context knows, so partial coverage
    does not blank a feature.
    """
    centroids = _context_centroids(models, seed)
    exclude = {str(g) for g in seed.group_ids}
    pool: set[int] = set()
    if pool_size > 0:
        for ctype, center in centroids.items():
            for unit, _ in nearest(models[ctype], center, pool_size, exclude):
                if unit.isdigit():
                    pool.add(int(unit))
    scored: list[tuple[int, np.ndarray]] = []
    for gid in sorted(pool):
        feats = np.zeros(len(CONTEXT_TYPES))
        for i, ctype in enumerate(CONTEXT_TYPES):
            center = centroids.get(ctype)
            if center is None:
                continue
            v = models[ctype].vector(str(gid))
            if v is None or np.linalg.norm(v) == 0.0:
                continue
            feats[i] = cosine(center, v)
        scored.append((gid, feats))
    return scored


def _seed_features(
    models: Mapping[ContextType, EmbeddingModel],
    centroids_seed: SeedSet,
) -> dict[int, np.ndarray]:
    """Feature vectors for the seeds themselves (shown, never ranked)."""
    feats = {
        gid: np.zeros(len(CONTEXT_TYPES)) for gid in centroids_seed.group_ids
    }
    for i, ctype in enumerate(CONTEXT_TYPES):
        model = models.get(ctype)
        if model is None:
            continue
        vectors, _ = _seed_vectors(model, centroids_seed.group_ids)
        if not vectors:
            continue
        center = centroid(vectors)
        if np.linalg.norm(center) == 0.0:
            continue
        for gid in centroids_seed.group_ids:
            v = model.vector(str(gid))
            if v is not None and np.linalg.norm(v) != 0.0:
                feats[gid][i] = cosine(center, v)
    return feats


def _mean_certainty(
    models: Mapping[ContextType, EmbeddingModel],
    centroids: Mapping[ContextType, np.ndarray],
    gid: int,
    feats: np.ndarray,
) -> float:
    """Fallback score without an MLP: mean feature over the contexts where
    both the seed centroid and the candidate exist, mapped to [0, 1]."""
    available = [
        i
        for i, ctype in enumerate(CONTEXT_TYPES)
        if ctype in centroids and models[ctype].vector(str(gid)) is not None
    ]
    if not available:
        return 0.0
    mean = float(np.mean(feats[available]))
    return min(max((mean + 1.0) / 2.0, 0.0), 1.0)


def expand(
    models: Mapping[ContextType, EmbeddingModel],
    mlp: MLPModel | None,
    seed: SeedSet,
    k: int,
    pool_size: int = DEFAULT_POOL_SIZE,
) -> ExpansionResult:
    """Full expansion: seeds first at certainty 1.0, then the top-k
    candidates by certainty descending, ties by group id ascending.

    With an MLP, certainty is its output on the feature vector; without
    one, the mean-of-available-features fallback applies.
    """
    scored = score_candidates(models, seed, pool_size)
    if mlp is not None:
        ranked = [
            Candidate(gid, feats, forward(mlp, feats), seed=False)
            for gid, feats in scored
        ]
    else:
        centroids = _context_centroids(models, seed)
        ranked = [
            Candidate(
                gid, feats, _mean_certainty(models, centroids, gid, feats),
                seed=False,
            )
            for gid, feats in scored
        ]
    ranked.sort(key=lambda c: (-c.certainty, c.group_id))
    seed_feats = _seed_features(models, seed)
    items = [
        Candidate(gid, seed_feats[gid], 1.0, seed=True)
        for gid in sorted(seed.group_ids)
    ]
    items.extend(ranked[:k] if k >= 0 else ranked)
    return ExpansionResult(seed=seed, candidates=items)


def reexpand(
    result: ExpansionResult,
    accepted: Sequence[int],
    models: Mapping[ContextType, EmbeddingModel],
    mlp: MLPModel | None,
    k: int,
    pool_size: int = DEFAULT_POOL_SIZE,
) -> ExpansionResult:
    """Fold accepted groups into the seed set and expand again.

    The category name is preserved, original seeds are never dropped, and
    validation marks survive where the group still appears.
    """
    known = result.ids() | set(result.seed.group_ids)
    unknown = [g for g in accepted if g not in known]
    if unknown:
        raise InputError(
            f"accepted ids not in the expansion: {sorted(unknown)}"
        )
    merged = tuple(
        sorted(set(result.seed.group_ids) | set(accepted))
    )
    new_seed = SeedSet(result.seed.category, merged)
    fresh = expand(models, mlp, new_seed, k, pool_size)
    fresh.validated = result.validated & (
        fresh.ids() | set(new_seed.group_ids)
    )
    return fresh


# ---------------------------------------------------------------------------
# Serialization shared by the CLI and the HTTP service
# ---------------------------------------------------------------------------


def result_payload(
    result: ExpansionResult,
    canonicals: Mapping[int, str],
    **extra,
) -> dict:
    """JSON-ready dict for an expansion; extra key/values prepended after
    the category (e.g. session id)."""
    payload: dict = {"category": result.seed.category}
    payload.update(extra)
    payload["items"] = [
        {
            "group_id": c.group_id,
            "canonical": canonicals.get(c.group_id, str(c.group_id)),
            "certainty": float(c.certainty),
            "seed": bool(c.seed),
            "completed": c.group_id in result.validated,
            "features": [float(f) for f in c.features],
        }
        for c in result.candidates
    ]
    return payload


def dumps_payload(payload: dict) -> str:
    """Canonical compact JSON: same bytes from every producer."""
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False)


def validated_csv(
    result: ExpansionResult, canonicals: Mapping[int, str]
) -> str:
    """CSV of the validated rows: canonical,group_id,certainty."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["canonical", "group_id", "certainty"])
    for c in result.candidates:
        if c.group_id in result.validated:
            writer.writerow(
                [
                    canonicals.get(c.group_id, str(c.group_id)),
                    c.group_id,
                    repr(float(c.certainty)),
                ]
            )
    return buf.getvalue()
