"""Command-line tooling: corpus generation, index builds, queries, eval, serve.

Exit codes: 0 ok, 1 user error (bad input/arguments), 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import EngineConfig
from .errors import PartSketchError
from .render import LineImage
from .session import normalize_sketch
from .skeleton import skeletonize

log = logging.getLogger("partsketch")

_LAMBDA_SWEEP = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.5, 0.5), (1.0, 1.0)]


@dataclass
class EvalReport:
    ranks: list[int] = field(default_factory=list)
    top_n_hits: list[bool] = field(default_factory=list)
    mean_latency_ms: float = 0.0
    index_scan_agreement: bool = True
    fallback_count: int = 0
    sweep: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        if any(r < 1 for r in self.ranks):
            raise ValueError("ranks are 1-based")
        if self.mean_latency_ms < 0:
            raise ValueError("latency must be non-negative")


def _load_config(args) -> EngineConfig:
    if getattr(args, "config", None):
        cfg = EngineConfig.from_file(args.config)
    else:
        cfg = EngineConfig()
    if getattr(args, "seed", None) is not None:
        cfg.kmeans_seed = args.seed
    return cfg


def _load_sketch_file(path: str, size: int) -> LineImage:
    """Read a sketch PNG (dark lines on light background).

    Images already at the canonical size are taken as-is (presumed
    normalized, e.g. saved renders); anything else is rescaled and
    bbox-normalized like an interactive sketch.
    """
    from PIL import Image

    img = Image.open(path).convert("L")
    arr = np.asarray(img)
    ink = (arr < 128).astype(np.uint8)
    if ink.shape == (size, size):
        return skeletonize(LineImage(ink))
    side = max(ink.shape)
    canvas = np.zeros((side, side), dtype=np.uint8)
    canvas[: ink.shape[0], : ink.shape[1]] = ink
    src = np.minimum(((np.arange(size) + 0.5) * side / size).astype(np.int64), side - 1)
    scaled = canvas[src[:, None], src[None, :]]
    return normalize_sketch(skeletonize(LineImage(scaled)))


def cmd_gen_corpus(args) -> int:
    from .datagen import make_desk_corpus

    path = make_desk_corpus(args.out, n_models=args.models, seed=args.seed or 0)
    print(f"wrote corpus manifest: {path}")
    return 0


def cmd_build(args) -> int:
    from .pipeline import ensure_index

    cfg = _load_config(args)
    t0 = time.perf_counter()
    index, db, cache_hit = ensure_index(args.manifest, cfg, args.index, force=args.force)
    dt = time.perf_counter() - t0
    status = "cache hit" if cache_hit else "built"
    print(
        f"{status}: {args.index} ({len(index.entries)} parts, "
        f"{len(index.views)} views, {dt:.1f} s)"
    )
    return 0


def _context_from_ids(index, ids: list[str]):
    from .scoring import ContextSet

    return ContextSet.from_ids(index, ids)


def _print_ranked(ranked) -> None:
    print(f"{'rank':>4}  {'part':<28} {'score':>8}  {'sketch':>8} {'detail':>8} {'overall':>8}")
    for i, sp in enumerate(ranked, 1):
        b = sp.breakdown
        print(f"{i:>4}  {sp.part_id:<28} {sp.score:8.4f}  {b[0]:8.4f} {b[1]:8.4f} {b[2]:8.4f}")


def cmd_query(args) -> int:
    from .features import GaborBank
    from .index import load_index
    from .scoring import encode_sketch, retrieve
    from .views import make_view

    index = load_index(args.index)
    cfg = index.config
    sketch = _load_sketch_file(args.sketch, cfg.image_size)
    if args.dump_sketch:
        from .render import save_line_image_png

        save_line_image_png(sketch, args.dump_sketch)
    bank = GaborBank(cfg.cell_size, cfg.gabor_bandwidth, cfg.gabor_aspect)
    hist = encode_sketch(index, sketch, bank)
    ctx = _context_from_ids(index, args.context or [])
    view = make_view(np.asarray(args.view, dtype=np.float64))
    ranked, fallback = retrieve(
        index, hist, view, args.category, ctx, args.lambda1, args.lambda2, args.topn
    )
    if fallback:
        print("note: empty candidate intersection; fell back to the sketch subset")
    _print_ranked(ranked)
    return 0


def cmd_eval(args) -> int:
    from .features import GaborBank
    from .index import load_index
    from .scoring import encode_sketch, retrieve, retrieve_linear
    from .views import make_view

    index = load_index(args.index)
    cfg = index.config
    queries = json.loads(Path(args.queries).read_text()).get("queries", [])
    if not queries:
        raise PartSketchError(f"empty query set: {args.queries}")
    bank = GaborBank(cfg.cell_size, cfg.gabor_bandwidth, cfg.gabor_aspect)
    view = make_view(np.asarray(args.view, dtype=np.float64))

    report = EvalReport()
    agreement = True
    latencies = []
    for q in queries:
        sketch = _load_sketch_file(q["sketch"], cfg.image_size)
        hist = encode_sketch(index, sketch, bank)
        ctx = _context_from_ids(index, q.get("context", []))
        t0 = time.perf_counter()
        ranked, fallback = retrieve(
            index, hist, view, q["category"], ctx, args.lambda1, args.lambda2, args.topn
        )
        latencies.append((time.perf_counter() - t0) * 1000.0)
        if fallback:
            report.fallback_count += 1
        else:
            linear = retrieve_linear(
                index, hist, view, q["category"], ctx, args.lambda1, args.lambda2, args.topn
            )
            if [s.part_id for s in ranked] != [s.part_id for s in linear]:
                agreement = False
        ids = [s.part_id for s in ranked]
        rank = ids.index(q["expected"]) + 1 if q.get("expected") in ids else len(ids) + 1
        report.ranks.append(rank)
        report.top_n_hits.append(rank <= args.topn)

        if args.sweep:
            row = {"sketch": q["sketch"], "category": q["category"]}
            for l1, l2 in _LAMBDA_SWEEP:
                swept, _ = retrieve(index, hist, view, q["category"], ctx, l1, l2, args.topn)
                sids = [s.part_id for s in swept]
                row[f"rank@l1={l1},l2={l2}"] = (
                    sids.index(q["expected"]) + 1 if q.get("expected") in sids else None
                )
            report.sweep.append(row)

    report.mean_latency_ms = float(np.mean(latencies)) if latencies else 0.0
    report.index_scan_agreement = agreement
    payload = asdict(report)
    print(json.dumps(payload, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .dataset import load_dataset
    from .index import load_index
    from .service import create_app
    from .session import SessionEngine

    index = load_index(args.index)
    manifest = args.manifest or index.manifest_path
    if not manifest or not Path(manifest).exists():
        raise PartSketchError(
            "dataset manifest not found; pass --manifest (the index only stores its path)"
        )
    db = load_dataset(manifest)
    if db.manifest_hash != index.manifest_hash:
        raise PartSketchError("manifest does not match the index (content hash differs)")
    engine = SessionEngine(db, index)
    app = create_app(engine)
    print(f"serving on http://127.0.0.1:{args.port} ({len(index.entries)} parts)")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partsketch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-corpus", help="generate a procedural chair corpus")
    gen.add_argument("--out", required=True)
    gen.add_argument("--models", type=int, default=30)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=cmd_gen_corpus)

    build = sub.add_parser("build", help="build (or reuse) a retrieval index")
    build.add_argument("--manifest", required=True)
    build.add_argument("--index", required=True)
    build.add_argument("--config")
    build.add_argument("--seed", type=int)
    build.add_argument("--force", action="store_true")
    build.set_defaults(func=cmd_build)

    query = sub.add_parser("query", help="query an index with a sketch image")
    query.add_argument("--index", required=True)
    query.add_argument("--sketch", required=True)
    query.add_argument("--category", required=True)
    query.add_argument("--context", nargs="*", default=[])
    query.add_argument("--lambda1", type=float, default=0.5)
    query.add_argument("--lambda2", type=float, default=0.5)
    query.add_argument("--topn", type=int, default=10)
    query.add_argument("--view", nargs=3, type=float, default=[0.0, -1.0, 0.0])
    query.add_argument("--dump-sketch", help="debug dump of the normalized sketch (1-bit PNG)")
    query.set_defaults(func=cmd_query)

    ev = sub.add_parser("eval", help="run a query-set evaluation")
    ev.add_argument("--index", required=True)
    ev.add_argument("--queries", required=True)
    ev.add_argument("--lambda1", type=float, default=0.5)
    ev.add_argument("--lambda2", type=float, default=0.5)
    ev.add_argument("--topn", type=int, default=10)
    ev.add_argument("--view", nargs=3, type=float, default=[0.0, -1.0, 0.0])
    ev.add_argument("--sweep", action="store_true")
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_eval)

    serve = sub.add_parser("serve", help="run the session service")
    serve.add_argument("--index", required=True)
    serve.add_argument("--manifest")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8008)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (PartSketchError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal
        log.exception("internal error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
