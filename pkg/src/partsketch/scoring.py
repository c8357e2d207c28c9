"""Relevance scoring and ranked part retrieval.

The score of a candidate part p for a user sketch is

    score(p) = s(sketch, c(p))
             + (1/|ctx|) * sum over placed neighbors p' of
                 lambda1 * s_detail(c(p'), c(p))
               + lambda2 * s(c(p'), c(theta(p')))

where c(p) is the contour histogram at the nearest indexed view for the
first term, part-part similarities average the two orientations along
the category common view, and theta(p') is the same-category part of
p's source model (contributing 0 when the model has none).  An empty
context reduces the score to the sketch term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bow import TermHistogram, encode, similarity
from .errors import QueryError
from .features import GaborBank
from .index import InvertedIndexSet, PartEntry, VOCAB_SKETCH, candidate_set
from .render import LineImage
from .skeleton import skeletonize
from .views import ViewDirection


@dataclass
class ContextPart:
    part_id: str
    category: str
    model_id: str
    detail_hists: dict[int, TermHistogram]
    overall_hists: dict[int, TermHistogram]

    @classmethod
    def from_entry(cls, e: PartEntry) -> "ContextPart":
        return cls(e.part_id, e.category, e.model_id, e.detail_hists, e.overall_hists)


@dataclass
class ContextSet:
    parts: list[ContextPart] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [p.part_id for p in self.parts]
        if len(ids) != len(set(ids)):
            raise QueryError("context parts must be distinct")

    def __len__(self) -> int:
        return len(self.parts)

    @classmethod
    def from_ids(cls, index: InvertedIndexSet, part_ids: list[str]) -> "ContextSet":
        return cls([ContextPart.from_entry(index.entry(pid)) for pid in part_ids])


@dataclass
class ScoredPart:
    part_id: str
    view_id: int
    score: float
    term_sketch: float    # raw term 1
    term_detail: float    # raw mean of term 2 over the context
    term_overall: float   # raw mean of term 3 over the context
    lambda1: float
    lambda2: float

    @property
    def breakdown(self) -> tuple[float, float, float]:
        """Weighted contributions; they sum to ``score``."""
        return (
            self.term_sketch,
            self.lambda1 * self.term_detail,
            self.lambda2 * self.term_overall,
        )


def _both_orientation_sim(
    a: dict[int, TermHistogram], b: dict[int, TermHistogram], kind: str
) -> float:
    """Part-part similarity: average over the two common-view orientations."""
    sims = [similarity(a[o], b[o], kind) for o in sorted(a) if o in b]
    return float(np.mean(sims)) if sims else 0.0


def relevance_score(
    sketch: TermHistogram,
    entry: PartEntry,
    view_id: int,
    ctx: ContextSet,
    lambda1: float,
    lambda2: float,
    index: InvertedIndexSet,
    kind: str = "cosine",
) -> ScoredPart:
    if lambda1 < 0 or lambda2 < 0:
        raise QueryError("lambda weights must be non-negative")
    view_hist = entry.view_hists.get(view_id)
    if view_hist is None:
        raise QueryError(f"part {entry.part_id} has no encoded view {view_id}")
    term1 = similarity(sketch, view_hist, kind)

    term2 = 0.0
    term3 = 0.0
    if len(ctx):
        for cp in ctx.parts:
            term2 += _both_orientation_sim(cp.detail_hists, entry.detail_hists, kind)
            # theta: same-category part of the candidate's source model
            theta_entries = index.model_parts_in_category(entry.model_id, cp.category)
            if theta_entries:
                term3 += max(
                    _both_orientation_sim(cp.overall_hists, th.overall_hists, kind)
                    for th in theta_entries
                )
        term2 /= len(ctx)
        term3 /= len(ctx)
    score = term1 + lambda1 * term2 + lambda2 * term3
    return ScoredPart(entry.part_id, view_id, score, term1, term2, term3, lambda1, lambda2)


def encode_sketch(index: InvertedIndexSet, sketch: LineImage, bank: GaborBank) -> TermHistogram:
    thin = skeletonize(sketch)
    cfg = index.config
    return encode(thin, index.vocabs[VOCAB_SKETCH], bank, cfg.grid, cfg.cells)


def retrieve(
    index: InvertedIndexSet,
    sketch_hist: TermHistogram,
    view: ViewDirection,
    category: str,
    ctx: ContextSet,
    lambda1: float,
    lambda2: float,
    n: int,
) -> tuple[list[ScoredPart], bool]:
    """Top-n ranked parts of a category for a sketch plus context.

    Candidates are the inverted-index intersection restricted to the
    category; ranking is by descending score with part-id tie-breaks.
    Returns (ranked list, fallback flag).
    """
    if category not in index.categories():
        raise QueryError(f"unknown category {category!r}; available: {index.categories()}")
    # zero-weight terms are absent from the score and impose no
    # candidate constraint (lambda = 0 reduces to sketch-only retrieval)
    cands, fallback = candidate_set(
        index, sketch_hist, ctx.parts, with_detail=lambda1 > 0, with_overall=lambda2 > 0
    )
    view_id = index.nearest_view_id(view)
    kind = index.config.similarity_kind
    scored = [
        relevance_score(sketch_hist, e, view_id, ctx, lambda1, lambda2, index, kind)
        for e in index.parts_in_category(category)
        if e.part_id in cands
    ]
    scored.sort(key=lambda s: (-s.score, s.part_id))
    return scored[: max(0, n)], fallback


def retrieve_linear(
    index: InvertedIndexSet,
    sketch_hist: TermHistogram,
    view: ViewDirection,
    category: str,
    ctx: ContextSet,
    lambda1: float,
    lambda2: float,
    n: int,
) -> list[ScoredPart]:
    """Full linear scan over the category (no index pruning)."""
    if category not in index.categories():
        raise QueryError(f"unknown category {category!r}; available: {index.categories()}")
    view_id = index.nearest_view_id(view)
    kind = index.config.similarity_kind
    scored = [
        relevance_score(sketch_hist, e, view_id, ctx, lambda1, lambda2, index, kind)
        for e in index.parts_in_category(category)
    ]
    scored.sort(key=lambda s: (-s.score, s.part_id))
    return scored[: max(0, n)]


def suggest_adjacent(
    index: InvertedIndexSet,
    retrieval: list[ScoredPart],
    top_k: int,
    clusters: int,
    seed: int = 0,
) -> list[str]:
    """Representative source-model neighbors of the top retrieved parts.

    Neighbors of the top-k results are clustered on their D2 shape
    descriptors; the part nearest each cluster center is returned,
    ordered by the rank of the result that contributed it.
    """
    from .bow import kmeans  # local import to avoid cycle at module load

    parent_rank: dict[str, int] = {}
    for rank, sp in enumerate(retrieval[:top_k]):
        for nb in index.entry(sp.part_id).neighbors:
            if nb in index.entries and nb not in parent_rank:
                parent_rank[nb] = rank
    if not parent_rank:
        return []
    ids = sorted(parent_rank)
    d2 = np.stack([index.entry(pid).d2 for pid in ids])
    k = min(clusters, len(ids))
    centroids, _ = kmeans(d2, k, seed, max_iter=50)
    reps: list[str] = []
    for c in centroids:
        dist = np.linalg.norm(d2 - c, axis=1)
        reps.append(ids[int(dist.argmin())])
    reps = sorted(set(reps), key=lambda pid: (parent_rank[pid], pid))
    return reps


__all__ = [
    "ContextPart",
    "ContextSet",
    "ScoredPart",
    "relevance_score",
    "retrieve",
    "encode_sketch",
    "suggest_adjacent",
]
