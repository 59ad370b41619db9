"""Skip-gram negative-sampling embeddings over arbitrary (target, context) pairs.

Targets and contexts live in separate vocabularies with separate matrices,
so any pair stream trains: group-id targets against linear windows, list
siblings, dependency arcs, symmetric partners, or unary patterns.  Training
is plain SGD in double precision; the single-worker mode is bit-reproducible
for a fixed seed.
"""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import FormatError, InputError, TrainingError, ZeroVectorError

NEGATIVE_TABLE_SIZE = 10_000_000
NEGATIVE_POWER = 0.75
#: Learning rate floor, as a fraction of the initial rate.
MIN_ALPHA_FRACTION = 1e-4

ProgressFn = Callable[[int, float, float], None]


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def log_sigmoid(x):
    """Numerically stable log(sigmoid(x))."""
    x = np.asarray(x, dtype=np.float64)
    return np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))


class Vocabulary:
    """Dense unit->index map ordered by descending count, ties lexicographic."""

    def __init__(self, units: Sequence[str], counts: Sequence[int]):
        if len(units) != len(counts):
            raise InputError("units and counts must have equal length")
        self.units: list[str] = list(units)
        self.counts: np.ndarray = np.asarray(counts, dtype=np.int64)
        self.index: dict[str, int] = {u: i for i, u in enumerate(self.units)}
        if len(self.index) != len(self.units):
            raise InputError("duplicate vocabulary unit")

    @classmethod
    def from_counts(cls, counts: Counter, min_count: int) -> "Vocabulary":
        kept = [(u, c) for u, c in counts.items() if c >= min_count]
        kept.sort(key=lambda uc: (-uc[1], uc[0]))
        return cls([u for u, _ in kept], [c for _, c in kept])

    def __len__(self) -> int:
        return len(self.units)

    def __contains__(self, unit: str) -> bool:
        return unit in self.index


def build_vocab(
    pairs: Iterable[tuple[str, str]], min_count: int
) -> tuple[Vocabulary, Vocabulary]:
    """Count both sides of a pair stream and drop units below min_count."""
    t_counts: Counter = Counter()
    c_counts: Counter = Counter()
    for t, c in pairs:
        t_counts[t] += 1
        c_counts[c] += 1
    target = Vocabulary.from_counts(t_counts, min_count)
    context = Vocabulary.from_counts(c_counts, min_count)
    if len(target) == 0 or len(context) == 0:
        raise TrainingError(
            f"empty vocabulary after min_count={min_count} "
            f"(targets {len(target)}, contexts {len(context)})"
        )
    return target, context


@dataclass
class TrainConfig:
    dim: int = 100
    epochs: int = 5
    negatives: int = 5
    alpha: float = 0.025
    min_count: int = 5
    subsample: float = 1e-4
    seed: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise InputError("dim must be >= 2")
        for name in ("epochs", "negatives", "alpha", "min_count", "workers"):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")
        if self.subsample < 0:
            raise InputError("subsample must be >= 0")


@dataclass
class EmbeddingModel:
    ctype: str
    dim: int
    target_vocab: Vocabulary
    context_vocab: Vocabulary
    target_matrix: np.ndarray
    context_matrix: np.ndarray
    _target_norms: np.ndarray | None = field(default=None, repr=False)

    def vector(self, unit: str) -> np.ndarray | None:
        i = self.target_vocab.index.get(unit)
        return None if i is None else self.target_matrix[i]

    def target_norms(self) -> np.ndarray:
        if self._target_norms is None:
            self._target_norms = np.linalg.norm(self.target_matrix, axis=1)
        return self._target_norms

    def pair_similarity(self, a: str, b: str) -> float | None:
        va, vb = self.vector(a), self.vector(b)
        if va is None or vb is None:
            return None
        return cosine(va, vb)


# ---------------------------------------------------------------------------
# SGNS math (shared by the trainer and the gradient check)
# ---------------------------------------------------------------------------


def pair_loss(v: np.ndarray, u_pos: np.ndarray, neg: np.ndarray) -> float:
    """-log s(v.u+) - sum_i log s(-v.u-_i) for one (target, context) visit."""
    z_pos = float(v @ u_pos)
    z_neg = neg @ v
    return float(-log_sigmoid(z_pos) - np.sum(log_sigmoid(-z_neg)))


def pair_gradients(v: np.ndarray, u_pos: np.ndarray, neg: np.ndarray):
    """Loss and analytic gradients for one visit.

    Returns (loss, grad_v, grad_u_pos, grad_neg) where grad_neg has one row
    per negative sample.
    """
    z_pos = float(v @ u_pos)
    z_neg = neg @ v
    g_pos = float(sigmoid(z_pos)) - 1.0
    g_neg = sigmoid(z_neg)
    loss = float(-log_sigmoid(z_pos) - np.sum(log_sigmoid(-z_neg)))
    grad_v = g_pos * u_pos + g_neg @ neg
    grad_u_pos = g_pos * v
    grad_neg = g_neg[:, None] * v[None, :]
    return loss, grad_v, grad_u_pos, grad_neg


def build_negative_table(
    counts: np.ndarray, size: int = NEGATIVE_TABLE_SIZE
) -> np.ndarray:
    """Sampling table for the unigram distribution raised to 0.75."""
    probs = np.asarray(counts, dtype=np.float64) ** NEGATIVE_POWER
    cum = np.cumsum(probs)
    cum /= cum[-1]
    positions = (np.arange(size, dtype=np.float64) + 0.5) / size
    return np.searchsorted(cum, positions, side="left").astype(np.int32)


def _subsample_drop_probs(counts: np.ndarray, threshold: float) -> np.ndarray:
    if threshold <= 0:
        return np.zeros(len(counts))
    freqs = counts / counts.sum()
    return np.clip(1.0 - np.sqrt(threshold / freqs), 0.0, 1.0)


def train_sgns(
    pairs: Sequence[tuple[str, str]],
    config: TrainConfig,
    ctype: str = "linear",
    progress: ProgressFn | None = None,
) -> EmbeddingModel:
    """Train an SGNS model on a (target, context) pair stream.

    Pairs whose target or context fell below min_count are discarded.  The
    context side is subsampled with drop probability 1 - sqrt(t/f(c)),
    clipped to [0, 1].  Target rows start uniform in [-0.5/dim, 0.5/dim),
    context rows start at zero; the learning rate decays linearly over all
    pair visits down to alpha/10^4.
    """
    target_vocab, context_vocab = build_vocab(pairs, config.min_count)
    kept = [
        (target_vocab.index[t], context_vocab.index[c])
        for t, c in pairs
        if t in target_vocab.index and c in context_vocab.index
    ]
    if not kept:
        raise TrainingError("no pairs survive the vocabulary filter")

    t_idx = np.asarray([p[0] for p in kept], dtype=np.int64)
    c_idx = np.asarray([p[1] for p in kept], dtype=np.int64)

    rng = np.random.default_rng(config.seed)
    dim = config.dim
    T = (rng.random((len(target_vocab), dim)) - 0.5) / dim
    C = np.zeros((len(context_vocab), dim))

    table = build_negative_table(context_vocab.counts)
    drop = _subsample_drop_probs(context_vocab.counts, config.subsample)

    if config.workers == 1:
        _train_span(
            T, C, t_idx, c_idx, table, drop, config, rng,
            visit_offset=0,
            total_visits=config.epochs * len(kept),
            progress=progress,
        )
    else:
        _train_parallel(T, C, t_idx, c_idx, table, drop, config, progress)

    for name, M in (("target", T), ("context", C)):
        if not np.all(np.isfinite(M)):
            raise TrainingError(f"non-finite values in {name} matrix after training")
    return EmbeddingModel(
        ctype=ctype,
        dim=dim,
        target_vocab=target_vocab,
        context_vocab=context_vocab,
        target_matrix=T,
        context_matrix=C,
    )


def _train_span(
    T: np.ndarray,
    C: np.ndarray,
    t_idx: np.ndarray,
    c_idx: np.ndarray,
    table: np.ndarray,
    drop: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator,
    visit_offset: int,
    total_visits: int,
    progress: ProgressFn | None,
) -> None:
    n = len(t_idx)
    k = config.negatives
    alpha0 = config.alpha
    report_every = max(1, total_visits // 200)
    window_loss = 0.0
    window_count = 0
    visit = visit_offset
    for _ in range(config.epochs):
        keep_draws = rng.random(n)
        neg_draws = rng.integers(0, len(table), size=(n, k))
        for i in range(n):
            alpha = alpha0 * max(
                1.0 - visit / total_visits, MIN_ALPHA_FRACTION
            )
            visit += 1
            ci = c_idx[i]
            if keep_draws[i] < drop[ci]:
                continue
            ti = t_idx[i]
            negs = table[neg_draws[i]]
            v = T[ti]
            loss, grad_v, grad_u, grad_neg = pair_gradients(v, C[ci], C[negs])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at pair visit {visit} "
                    f"(target row {ti}, context row {ci}, alpha {alpha:.6g})"
                )
            C[ci] -= alpha * grad_u
            np.add.at(C, negs, -alpha * grad_neg)
            T[ti] = v - alpha * grad_v
            window_loss += loss
            window_count += 1
            if progress is not None and visit % report_every == 0:
                mean = window_loss / max(window_count, 1)
                progress(visit, alpha, mean)
                window_loss = 0.0
                window_count = 0
    if progress is not None and window_count:
        progress(visit, alpha0 * MIN_ALPHA_FRACTION, window_loss / window_count)


def _train_parallel(
    T: np.ndarray,
    C: np.ndarray,
    t_idx: np.ndarray,
    c_idx: np.ndarray,
    table: np.ndarray,
    drop: np.ndarray,
    config: TrainConfig,
    progress: ProgressFn | None,
) -> None:
    """Hogwild-style threads over pair shards; updates race benignly and the
    result is non-deterministic by contract."""
    shards = np.array_split(np.arange(len(t_idx)), config.workers)
    threads = []
    for w, shard in enumerate(shards):
        if len(shard) == 0:
            continue
        worker_rng = np.random.default_rng(config.seed + w + 1)
        threads.append(
            threading.Thread(
                target=_train_span,
                args=(
                    T, C, t_idx[shard], c_idx[shard], table, drop, config,
                    worker_rng,
                ),
                kwargs={
                    "visit_offset": 0,
                    "total_visits": config.epochs * len(shard),
                    "progress": progress if w == 0 else None,
                },
            )
        )
    for th in threads:
        th.start()
    for th in threads:
        th.join()


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine of a zero vector is undefined")
    return float(a @ b / (na * nb))


def centroid(vectors: Sequence[np.ndarray]) -> np.ndarray:
    if len(vectors) == 0:
        raise InputError("centroid of an empty set")
    stacked = np.vstack([np.asarray(v, dtype=np.float64) for v in vectors])
    return stacked.mean(axis=0)


def _unit_order(unit: str):
    """Tie-break key: numeric units (group ids) ascending, then plain strings."""
    return (0, int(unit), "") if unit.isdigit() else (1, 0, unit)


def nearest(
    model: EmbeddingModel,
    query: np.ndarray,
    k: int,
    exclude: set[str] | frozenset[str] = frozenset(),
) -> list[tuple[str, float]]:
    """Top-k target units by cosine, descending, ties by unit ascending.

    Zero-norm rows never rank.  k=0 yields the empty list; k beyond the
    vocabulary yields the full ranking.
    """
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (model.dim,):
        raise InputError(f"query dim {query.shape} != model dim {model.dim}")
    qn = np.linalg.norm(query)
    if qn == 0.0:
        raise ZeroVectorError("nearest() query is a zero vector")
    if k <= 0:
        return []
    norms = model.target_norms()
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = (model.target_matrix @ query) / (norms * qn)
    scored = [
        (u, float(sims[i]))
        for i, u in enumerate(model.target_vocab.units)
        if norms[i] != 0.0 and u not in exclude
    ]
    scored.sort(key=lambda us: (-us[1], _unit_order(us[0])))
    return scored[:k]


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------


def _context_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".ctx")


def _write_matrix(path: Path, vocab: Vocabulary, matrix: np.ndarray, dim: int):
    lines = [f"{len(vocab)} {dim}"]
    for unit, row in zip(vocab.units, matrix):
        lines.append(unit + " " + " ".join(repr(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_matrix(path: Path) -> tuple[Vocabulary, np.ndarray, int]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read model file {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise FormatError(f"{path}: empty model file")
    head = lines[0].split()
    if len(head) != 2 or not all(p.lstrip("-").isdigit() for p in head):
        raise FormatError(f"{path} line 1: bad header {lines[0]!r}")
    count, dim = int(head[0]), int(head[1])
    rows = [line for line in lines[1:] if line.strip()]
    if len(rows) != count:
        raise FormatError(
            f"{path}: header promises {count} rows, found {len(rows)}"
        )
    units: list[str] = []
    matrix = np.empty((count, dim))
    for r, line in enumerate(rows):
        parts = line.rsplit(None, dim)
        if len(parts) != dim + 1:
            raise FormatError(
                f"{path} line {r + 2}: expected unit plus {dim} values"
            )
        units.append(parts[0])
        try:
            matrix[r] = [float(x) for x in parts[1:]]
        except ValueError as exc:
            raise FormatError(f"{path} line {r + 2}: {exc}") from exc
    return Vocabulary(units, [0] * count), matrix, dim


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    """Write target vectors to ``path`` and context vectors to the sibling
    ``.ctx`` file, full round-trip precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_matrix(path, model.target_vocab, model.target_matrix, model.dim)
    _write_matrix(
        _context_path(path), model.context_vocab, model.context_matrix, model.dim
    )


def load_model(path: str | Path, ctype: str = "linear") -> EmbeddingModel:
    """Load a model saved by :func:`save_model`.

    Counts are not stored in the file format, so a loaded model serves
    queries but cannot resume training.
    """
    path = Path(path)
    target_vocab, target_matrix, dim = _read_matrix(path)
    context_vocab, context_matrix, cdim = _read_matrix(_context_path(path))
    if cdim != dim:
        raise FormatError(
            f"{path}: target dim {dim} != context dim {cdim}"
        )
    return EmbeddingModel(
        ctype=ctype,
        dim=dim,
        target_vocab=target_vocab,
        context_vocab=context_vocab,
        target_matrix=target_matrix,
        context_matrix=context_matrix,
    )
