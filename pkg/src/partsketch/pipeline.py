"""Offline index construction: render, thin, featurize, cluster, encode.

Phases:
  A. render + thin every part from every sampled view, plus the two
     common-view orientations per part (full frame and detail crop);
     thinned images are kept packed in memory.
  B. train the three vocabularies (sketch / detail / overall) on
     descriptor corpora drawn from the matching image sets.
  C. extract descriptors for every image once, assign words, and
     accumulate corpus occurrence statistics.
  D. convert counts to TF-IDF histograms, attach D2 descriptors and
     source-model neighbor lists, and assemble the posting lists.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis
from .bow import Vocabulary, build_vocabulary
from .config import EngineConfig
from .d2 import d2_descriptor
from .dataset import Part, PartDatabase, load_dataset
from .features import GaborBank, detail_crop, extract_galf
from .index import (
    InvertedIndexSet,
    PartEntry,
    VOCAB_DETAIL,
    VOCAB_OVERALL,
    VOCAB_SKETCH,
    build_postings,
    load_index,
    save_index,
)
from .render import LineImage, render_line_drawing
from .skeleton import skeletonize
from .views import ViewDirection, make_view, sample_viewpoints

log = logging.getLogger(__name__)

_VOCAB_SAMPLE_IMAGE_TARGET = 400  # view images fed to sketch-vocab training


def _pack(img: LineImage) -> bytes:
    return np.packbits(img.pixels).tobytes()


def _unpack(blob: bytes, size: int) -> LineImage:
    bits = np.unpackbits(np.frombuffer(blob, dtype=np.uint8), count=size * size)
    return LineImage(bits.reshape(size, size))


@dataclass
class _PartImages:
    views: dict[int, bytes]
    common_full: dict[int, bytes]
    common_detail: dict[int, bytes]


def _render_part(
    part: Part,
    views: list[ViewDirection],
    common: ViewDirection,
    cfg: EngineConfig,
) -> _PartImages:
    def draw(view: ViewDirection) -> LineImage:
        img = render_line_drawing(
            part.mesh, view, cfg.image_size, cfg.crease_angle_deg, cfg.fit_margin, cfg.pen_width
        )
        return skeletonize(img)

    view_imgs = {vid: _pack(draw(v)) for vid, v in enumerate(views)}
    common_full: dict[int, bytes] = {}
    common_detail: dict[int, bytes] = {}
    for orient in (1, -1):
        v = common if orient == 1 else make_view(-common.direction)
        full = draw(v)
        common_full[orient] = _pack(full)
        common_detail[orient] = _pack(skeletonize(detail_crop(full)))
    return _PartImages(view_imgs, common_full, common_detail)


def _worker_count(cfg: EngineConfig) -> int:
    if cfg.workers > 0:
        return cfg.workers
    import os

    return max(1, min(8, os.cpu_count() or 1))


def build_index(
    db: PartDatabase,
    cfg: EngineConfig,
    manifest_path: str = "",
) -> InvertedIndexSet:
    t_start = time.perf_counter()
    views = sample_viewpoints(cfg.view_level)
    bank = GaborBank(cfg.cell_size, cfg.gabor_bandwidth, cfg.gabor_aspect)
    parts = sorted(db.parts(), key=lambda p: p.id)
    workers = _worker_count(cfg)

    # Phase A: render + thin
    log.info("rendering %d parts x %d views (+%d common-view images) with %d workers",
             len(parts), len(views), 4 * len(parts), workers)
    store: dict[str, _PartImages] = {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            p.id: pool.submit(_render_part, p, views, db.common_views[p.category], cfg)
            for p in parts
        }
        for pid, fut in futures.items():
            store[pid] = fut.result()

    # Phase B: vocabularies
    size = cfg.image_size

    def feats_of(blob: bytes) -> np.ndarray:
        return extract_galf(_unpack(blob, size), bank, cfg.grid, cfg.cells)

    stride = max(1, (len(parts) * len(views)) // _VOCAB_SAMPLE_IMAGE_TARGET)
    sketch_blobs = [
        store[p.id].views[vid]
        for i, p in enumerate(parts)
        for vid in range(len(views))
        if (i * len(views) + vid) % stride == 0
    ]
    detail_blobs = [b for p in parts for b in store[p.id].common_detail.values()]
    overall_blobs = [b for p in parts for b in store[p.id].common_full.values()]

    def corpus(blobs: list[bytes]) -> np.ndarray:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(feats_of, blobs))
        return np.vstack(chunks) if chunks else np.zeros((0, cfg.orientations * cfg.cells**2))

    ctx_w = cfg.context_vocab_size or cfg.vocab_size
    log.info("training vocabularies (W=%d/%d, seed=%d)", cfg.vocab_size, ctx_w, cfg.kmeans_seed)
    vocabs: dict[str, Vocabulary] = {}
    for key, blobs, w in (
        (VOCAB_SKETCH, sketch_blobs, cfg.vocab_size),
        (VOCAB_DETAIL, detail_blobs, ctx_w),
        (VOCAB_OVERALL, overall_blobs, ctx_w),
    ):
        feats = corpus(blobs)
        vocabs[key] = build_vocabulary(
            feats, key, w, cfg.kmeans_seed,
            cfg.kmeans_max_iter, cfg.kmeans_tol, cfg.kmeans_sample_cap,
        )
        log.info("vocabulary %s: %d training features, inertia %.4g",
                 key, len(feats), vocabs[key].inertia)

    # Phase C: assign words, accumulate occurrence stats
    def count_words(blob: bytes, vocab: Vocabulary) -> np.ndarray:
        feats = feats_of(blob)
        nonzero = feats[(feats != 0).any(axis=1)]
        if len(nonzero) == 0:
            return np.zeros(vocab.size, dtype=np.int64)
        return np.bincount(vocab.assign(nonzero), minlength=vocab.size).astype(np.int64)

    def count_part(pid: str):
        imgs = store[pid]
        return (
            pid,
            {vid: count_words(b, vocabs[VOCAB_SKETCH]) for vid, b in imgs.views.items()},
            {o: count_words(b, vocabs[VOCAB_DETAIL]) for o, b in imgs.common_detail.items()},
            {o: count_words(b, vocabs[VOCAB_OVERALL]) for o, b in imgs.common_full.items()},
        )

    log.info("encoding %d images", len(parts) * (len(views) + 4))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        counted = {pid: res for pid, *res in pool.map(count_part, sorted(store))}

    for key, pick in ((VOCAB_SKETCH, 0), (VOCAB_DETAIL, 1), (VOCAB_OVERALL, 2)):
        occ = np.zeros(vocabs[key].size, dtype=np.int64)
        for pid in sorted(counted):
            for counts in counted[pid][pick].values():
                occ += counts
        vocabs[key].occurrences = occ
        vocabs[key].total = int(occ.sum())

    # Phase D: histograms, D2, entries, postings
    entries: dict[str, PartEntry] = {}
    for part in parts:
        view_counts, detail_counts, overall_counts = counted[part.id]
        model = db.model(part.model_id)
        entries[part.id] = PartEntry(
            part_id=part.id,
            category=part.category,
            model_id=part.model_id,
            view_hists={
                vid: vocabs[VOCAB_SKETCH].weights_from_counts(c.astype(np.float64))
                for vid, c in view_counts.items()
            },
            detail_hists={
                o: vocabs[VOCAB_DETAIL].weights_from_counts(c.astype(np.float64))
                for o, c in detail_counts.items()
            },
            overall_hists={
                o: vocabs[VOCAB_OVERALL].weights_from_counts(c.astype(np.float64))
                for o, c in overall_counts.items()
            },
            neighbors=model.neighbors_of(part.id),
            d2=d2_descriptor(
                part.mesh, cfg.d2_pairs, cfg.d2_bins, analysis.stable_seed(part.id)
            ),
        )

    index = InvertedIndexSet(
        vocabs=vocabs,
        entries=entries,
        postings=build_postings(entries),
        views=views,
        common_views=dict(db.common_views),
        config=cfg,
        manifest_hash=db.manifest_hash,
        manifest_path=str(manifest_path),
        build_seconds=time.perf_counter() - t_start,
    )
    log.info("index built in %.1f s", index.build_seconds)
    return index


def ensure_index(
    manifest_path: str | Path,
    cfg: EngineConfig,
    index_path: str | Path,
    force: bool = False,
) -> tuple[InvertedIndexSet, PartDatabase, bool]:
    """Build or reuse a cached index for a manifest.

    Returns (index, database, cache_hit).  The cache hits when the file
    exists with a matching manifest hash and configuration.
    """
    index_path = Path(index_path)
    db = load_dataset(manifest_path)
    if not force and index_path.exists():
        try:
            idx = load_index(index_path)
            if idx.manifest_hash == db.manifest_hash and idx.config == cfg:
                return idx, db, True
            log.info("index at %s is stale, rebuilding", index_path)
        except Exception as exc:
            log.warning("ignoring unreadable index %s: %s", index_path, exc)
    idx = build_index(db, cfg, str(manifest_path))
    save_index(idx, index_path)
    return idx, db, False


__all__ = ["build_index", "ensure_index"]
