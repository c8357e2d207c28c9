"""Inverted retrieval index over the three term vocabularies.

Terms of the relevance score each get their own vocabulary and posting
structure:

  ``sketch``   full-frame contours from all sampled views (term 1)
  ``detail``   detail-cropped common-view contours (term 2)
  ``overall``  full-frame common-view contours (term 3)

Postings map word id -> image references; a query's candidate set is
the intersection of the per-vocabulary subsets that share at least one
word with the query (empty intersections fall back to the sketch-term
subset).  The index is persisted as a single versioned binary file
keyed by the manifest content hash.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bow import TermHistogram, Vocabulary
from .config import EngineConfig
from .errors import IndexError_
from .views import ViewDirection

INDEX_VERSION = 1

VOCAB_SKETCH = "sketch"
VOCAB_DETAIL = "detail"
VOCAB_OVERALL = "overall"
VOCAB_KEYS = (VOCAB_SKETCH, VOCAB_DETAIL, VOCAB_OVERALL)


@dataclass
class PartEntry:
    part_id: str
    category: str
    model_id: str
    view_hists: dict[int, TermHistogram]
    detail_hists: dict[int, TermHistogram]   # orientation +1/-1 along common view
    overall_hists: dict[int, TermHistogram]
    neighbors: list[str]
    d2: np.ndarray


@dataclass
class InvertedIndexSet:
    vocabs: dict[str, Vocabulary]
    entries: dict[str, PartEntry]
    postings: dict[str, dict[int, list[tuple[str, object]]]]
    views: list[ViewDirection]
    common_views: dict[str, ViewDirection]
    config: EngineConfig
    manifest_hash: str
    manifest_path: str
    build_seconds: float = 0.0

    def categories(self) -> list[str]:
        return sorted({e.category for e in self.entries.values()})

    def parts_in_category(self, category: str) -> list[PartEntry]:
        return sorted(
            (e for e in self.entries.values() if e.category == category),
            key=lambda e: e.part_id,
        )

    def entry(self, part_id: str) -> PartEntry:
        try:
            return self.entries[part_id]
        except KeyError:
            raise IndexError_(f"part not in index: {part_id}") from None

    def model_parts_in_category(self, model_id: str, category: str) -> list[PartEntry]:
        return [
            e for e in self.parts_in_category(category) if e.model_id == model_id
        ]

    def nearest_view_id(self, view: ViewDirection) -> int:
        dots = np.array([float(v.direction @ view.direction) for v in self.views])
        return int(dots.argmax())

    def parts_matching(self, key: str, queries: list[TermHistogram]) -> set[str]:
        """Parts owning >= 1 image sharing >= 1 word with any query."""
        posting = self.postings[key]
        out: set[str] = set()
        for q in queries:
            for w in q.words.tolist():
                for part_id, _ref in posting.get(w, ()):
                    out.add(part_id)
        return out


def build_postings(entries: dict[str, PartEntry]) -> dict[str, dict[int, list[tuple[str, object]]]]:
    """Posting lists from stored histograms (deterministic order)."""
    postings: dict[str, dict[int, list[tuple[str, object]]]] = {k: {} for k in VOCAB_KEYS}
    for part_id in sorted(entries):
        e = entries[part_id]
        for view_id in sorted(e.view_hists):
            for w in e.view_hists[view_id].words.tolist():
                postings[VOCAB_SKETCH].setdefault(w, []).append((part_id, view_id))
        for orient in sorted(e.detail_hists):
            for w in e.detail_hists[orient].words.tolist():
                postings[VOCAB_DETAIL].setdefault(w, []).append((part_id, orient))
        for orient in sorted(e.overall_hists):
            for w in e.overall_hists[orient].words.tolist():
                postings[VOCAB_OVERALL].setdefault(w, []).append((part_id, orient))
    return postings


def candidate_set(
    index: InvertedIndexSet,
    sketch: TermHistogram | None,
    ctx_parts: list | None = None,
    with_detail: bool = True,
    with_overall: bool = True,
) -> tuple[set[str], bool]:
    """Intersection of the three per-term candidate subsets.

    - sketch term: parts owning a view image sharing a word with the
      sketch;
    - detail term: parts whose detail image shares a word with a
      context part's detail image;
    - overall term: parts whose *source model* has a part of the
      context category sharing an overall word with that context part
      (the overall term compares context against the model sibling,
      not the candidate itself).

    Terms without an applicable query act as the universal set; an
    empty intersection falls back to the sketch subset (flagged).
    ``ctx_parts`` items expose ``category`` / ``detail_hists`` /
    ``overall_hists``.
    """
    subsets: list[set[str]] = []
    sketch_subset: set[str] | None = None
    if sketch is not None and not sketch.is_empty:
        sketch_subset = index.parts_matching(VOCAB_SKETCH, [sketch])
        subsets.append(sketch_subset)
    detail_qs = [
        h
        for cp in (ctx_parts or [] if with_detail else [])
        for h in cp.detail_hists.values()
        if not h.is_empty
    ]
    if detail_qs:
        matched = index.parts_matching(VOCAB_DETAIL, detail_qs)
        # parts with a blank detail image carry no detail evidence and
        # cannot be pruned by this term (their detail score is just 0)
        blank = {
            pid for pid, e in index.entries.items()
            if all(h.is_empty for h in e.detail_hists.values())
        }
        subsets.append(matched | blank)
    overall_models: set[str] = set()
    evidence_models: set[str] = set()
    overall_active = False
    for cp in ctx_parts or [] if with_overall else []:
        overall_qs = [h for h in cp.overall_hists.values() if not h.is_empty]
        if not overall_qs:
            continue
        overall_active = True
        for pid, e in index.entries.items():
            if e.category == cp.category and any(not h.is_empty for h in e.overall_hists.values()):
                evidence_models.add(e.model_id)
        for pid in index.parts_matching(VOCAB_OVERALL, overall_qs):
            if index.entries[pid].category == cp.category:
                overall_models.add(index.entries[pid].model_id)
    if overall_active:
        all_models = {e.model_id for e in index.entries.values()}
        # models without a sibling of the context category score 0 on
        # this term but cannot be ruled out by it
        admissible = overall_models | (all_models - evidence_models)
        subsets.append({pid for pid, e in index.entries.items() if e.model_id in admissible})
    if not subsets:
        return set(index.entries), False
    result = set.intersection(*subsets)
    if result:
        return result, False
    if sketch_subset is None:
        return set(), False
    return set(sketch_subset), True


def _hist_state(h: TermHistogram):
    return (h.vocab_id, h.words, h.weights)


def _hist_from_state(state) -> TermHistogram:
    return TermHistogram(*state)


def save_index(index: InvertedIndexSet, path: str | Path) -> None:
    payload = {
        "version": INDEX_VERSION,
        "manifest_hash": index.manifest_hash,
        "manifest_path": index.manifest_path,
        "config": index.config.__dict__,
        "build_seconds": index.build_seconds,
        "views": [(v.direction, v.up) for v in index.views],
        "common_views": {c: (v.direction, v.up) for c, v in index.common_views.items()},
        "vocabs": {
            k: (v.id, v.centroids, v.occurrences, v.total, v.seed, v.inertia)
            for k, v in index.vocabs.items()
        },
        "postings": index.postings,
        "entries": {
            pid: (
                e.category,
                e.model_id,
                {vid: _hist_state(h) for vid, h in e.view_hists.items()},
                {o: _hist_state(h) for o, h in e.detail_hists.items()},
                {o: _hist_state(h) for o, h in e.overall_hists.items()},
                e.neighbors,
                e.d2,
            )
            for pid, e in index.entries.items()
        },
    }
    Path(path).write_bytes(pickle.dumps(payload, protocol=4))


def load_index(path: str | Path) -> InvertedIndexSet:
    path = Path(path)
    if not path.exists():
        raise IndexError_(f"index file not found: {path}")
    try:
        payload = pickle.loads(path.read_bytes())
    except Exception as exc:
        raise IndexError_(f"unreadable index file {path}: {exc}") from None
    if payload.get("version") != INDEX_VERSION:
        raise IndexError_(f"index version mismatch in {path}")
    vocabs = {
        k: Vocabulary(vid, cents, occ, total, seed, inertia)
        for k, (vid, cents, occ, total, seed, inertia) in payload["vocabs"].items()
    }
    entries = {
        pid: PartEntry(
            pid,
            cat,
            mid,
            {vid: _hist_from_state(s) for vid, s in views.items()},
            {o: _hist_from_state(s) for o, s in det.items()},
            {o: _hist_from_state(s) for o, s in ove.items()},
            neighbors,
            d2,
        )
        for pid, (cat, mid, views, det, ove, neighbors, d2) in payload["entries"].items()
    }
    index = InvertedIndexSet(
        vocabs=vocabs,
        entries=entries,
        postings=payload.get("postings") or build_postings(entries),
        views=[ViewDirection(d, u) for d, u in payload["views"]],
        common_views={c: ViewDirection(d, u) for c, (d, u) in payload["common_views"].items()},
        config=EngineConfig.from_dict(payload["config"]),
        manifest_hash=payload["manifest_hash"],
        manifest_path=payload["manifest_path"],
        build_seconds=payload.get("build_seconds", 0.0),
    )
    return index


__all__ = [
    "PartEntry",
    "InvertedIndexSet",
    "candidate_set",
    "build_postings",
    "save_index",
    "load_index",
    "VOCAB_SKETCH",
    "VOCAB_DETAIL",
    "VOCAB_OVERALL",
    "VOCAB_KEYS",
]
