"""Ranking quality against gold term lists: AP@n and MAP@n.

Seeds are excluded from both the ranking and the gold set before scoring,
and the AP normalizer is min(|gold|, n) so a perfect prefix scores 1.0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .errors import FormatError, InputError
from .termgroup import TermGroup, normalize

DEFAULT_NS = (10, 20, 50)


@dataclass(frozen=True)
class GoldCategory:
    name: str
    gold: frozenset[str]
    seeds: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.seeds:
            raise InputError(f"category {self.name!r}: needs at least one seed")
        missing = [s for s in self.seeds if s not in self.gold]
        if missing:
            raise InputError(
                f"category {self.name!r}: seeds not in gold: {missing}"
            )
        if not (self.gold - set(self.seeds)):
            raise InputError(
                f"category {self.name!r}: gold holds nothing beyond the seeds"
            )


def average_precision_at(
    ranked: Sequence[str], gold: set[str] | frozenset[str], n: int
) -> float:
    """AP@n with 1-based positions; each gold item is credited once."""
    if n < 1:
        raise InputError("n must be >= 1")
    denom = min(len(gold), n)
    if denom == 0:
        return 0.0
    remaining = set(gold)
    hits = 0
    total = 0.0
    for i, item in enumerate(ranked[:n], start=1):
        if item in remaining:
            remaining.discard(item)
            hits += 1
            total += hits / i
    return total / denom


def map_at(
    scored: Sequence[tuple[Sequence[str], GoldCategory]], n: int
) -> float:
    """Unweighted mean AP@n; seeds dropped from ranking and gold first."""
    if not scored:
        raise InputError("map_at needs at least one category")
    aps = []
    for ranking, cat in scored:
        seeds = set(cat.seeds)
        gold = set(cat.gold) - seeds
        ranked = [r for r in ranking if r not in seeds]
        aps.append(average_precision_at(ranked, gold, n))
    return sum(aps) / len(aps)


# ---------------------------------------------------------------------------
# Dataset files and the benchmark runner
# ---------------------------------------------------------------------------


def load_dataset(path: str | Path) -> list[GoldCategory]:
    """JSON-lines dataset: one {name, gold, seeds} object per line."""
    path = Path(path)
    categories: list[GoldCategory] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                cat = GoldCategory(
                    name=row["name"],
                    gold=frozenset(row["gold"]),
                    seeds=tuple(row["seeds"]),
                )
            except (
                json.JSONDecodeError,
                KeyError,
                TypeError,
                InputError,
            ) as exc:
                raise FormatError(f"{path} line {lineno}: {exc}") from exc
            categories.append(cat)
    if not categories:
        raise FormatError(f"{path}: empty dataset")
    return categories


class RankingSource(Protocol):
    """What the benchmark needs from a trained project."""

    def groups(self) -> Sequence[TermGroup]: ...

    def expand_ranking(self, seed_ids: Sequence[int], k: int) -> list[int]: ...


def surface_index(groups: Sequence[TermGroup]) -> dict[str, int]:
    """Normalized member surface -> group id, lowest id winning ties."""
    index: dict[str, int] = {}
    for group in groups:
        for term in group.members:
            key = normalize(term.surface)
            if key and (key not in index or group.id < index[key]):
                index[key] = group.id
    return index


def run_benchmark(
    project: RankingSource,
    dataset_path: str | Path,
    n_list: Sequence[int] = DEFAULT_NS,
) -> dict:
    """Score every dataset category against the project's rankings.

    Gold terms that resolve to no group stay in the gold set as
    never-retrieved misses and are listed under "unresolved".  Categories
    whose seeds all fail to resolve are skipped and reported; if nothing
    is scorable the run fails.
    """
    categories = load_dataset(dataset_path)
    index = surface_index(project.groups())
    canonical = {g.id: g.canonical for g in project.groups()}
    depth = max(n_list)
    per_category: dict[str, dict] = {}
    skipped: dict[str, str] = {}
    ap_lists: dict[int, list[float]] = {n: [] for n in n_list}
    for cat in categories:
        seed_ids: list[int] = []
        for s in cat.seeds:
            gid = index.get(normalize(s))
            if gid is not None and gid not in seed_ids:
                seed_ids.append(gid)
        if not seed_ids:
            skipped[cat.name] = "no seed resolves to a group"
            continue
        seed_set = set(seed_ids)
        ranked = [
            canonical[g]
            for g in project.expand_ranking(seed_ids, depth)
            if g not in seed_set
        ]
        gold_eval: set[str] = set()
        unresolved: list[str] = []
        seed_strings = set(cat.seeds)
        for term in sorted(cat.gold):
            if term in seed_strings:
                continue
            gid = index.get(normalize(term))
            if gid is None:
                unresolved.append(term)
                gold_eval.add(term)
            elif gid not in seed_set:
                gold_eval.add(canonical[gid])
        entry: dict = {"ap": {}}
        for n in n_list:
            ap = average_precision_at(ranked, gold_eval, n)
            entry["ap"][str(n)] = ap
            ap_lists[n].append(ap)
        if unresolved:
            entry["unresolved"] = unresolved
        per_category[cat.name] = entry
    if not per_category:
        raise InputError(
            f"{dataset_path}: no category resolves to any group"
        )
    report: dict = {
        "per_category": per_category,
        "map": {
            str(n): sum(values) / len(values)
            for n, values in ap_lists.items()
        },
    }
    if skipped:
        report["skipped"] = skipped
    return report


def format_report(report: dict) -> str:
    """Fixed-width table of per-category AP and the MAP summary row."""
    ns = list(report["map"].keys())
    names = list(report["per_category"].keys())
    width = max([len(n) for n in names + ["MAP"]] + [8])
    lines = [
        "category".ljust(width) + "".join(f"  AP@{n:>4}" for n in ns)
    ]
    for name in names:
        aps = report["per_category"][name]["ap"]
        lines.append(
            name.ljust(width)
            + "".join(f"  {aps[n]:7.4f}" for n in ns)
        )
    lines.append(
        "MAP".ljust(width)
        + "".join(f"  {report['map'][n]:7.4f}" for n in ns)
    )
    for name, reason in report.get("skipped", {}).items():
        lines.append(f"skipped {name}: {reason}")
    return "\n".join(lines)
