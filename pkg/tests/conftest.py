import logging
import os
import tempfile
from pathlib import Path

import pytest

from partsketch.config import EngineConfig
from partsketch.datagen import box_mesh, make_desk_corpus
from partsketch.pipeline import ensure_index

logging.getLogger("partsketch").setLevel(logging.WARNING)


def _cache_root() -> Path:
    """Persistent corpus/index cache shared across test runs.

    Corpora are seeded and indices content-hash keyed, so reuse is
    safe; set PARTSKETCH_TEST_CACHE to relocate or wipe the directory
    to force a rebuild.
    """
    root = Path(os.environ.get(
        "PARTSKETCH_TEST_CACHE", os.path.join(tempfile.gettempdir(), "partsketch-test-cache")
    ))
    root.mkdir(parents=True, exist_ok=True)
    return root


def _corpus(name: str, cfg: EngineConfig, **gen_kwargs) -> tuple:
    root = _cache_root() / name
    manifest = root / "manifest.json"
    if not manifest.exists():
        make_desk_corpus(root, **gen_kwargs)
    index, db, _ = ensure_index(manifest, cfg, root / "index.bin")
    return index, db, manifest

TINY_CFG = EngineConfig(
    view_level=0,
    vocab_size=32,
    context_vocab_size=16,
    d2_pairs=20000,
    kmeans_sample_cap=20000,
    kmeans_max_iter=30,
)

# acceptance-scale configuration: 42 views, corpus-sized vocabularies.
# context vocabularies stay small so word sharing (the pruning signal)
# is dense while the weighted similarities still discriminate styles
DESK_CFG = EngineConfig(
    view_level=1,
    vocab_size=256,
    context_vocab_size=48,
    d2_pairs=200000,
    kmeans_sample_cap=50000,
    kmeans_max_iter=40,
)


def unit_cube():
    return box_mesh([0.5, 0.5, 0.5], [1.0, 1.0, 1.0])


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    root = _cache_root() / "tiny"
    manifest = root / "manifest.json"
    if not manifest.exists():
        make_desk_corpus(root, n_models=4, seed=1)
    return manifest


@pytest.fixture(scope="session")
def tiny_db(tiny_corpus):
    from partsketch.dataset import load_dataset

    return load_dataset(tiny_corpus)


@pytest.fixture(scope="session")
def tiny_index(tiny_corpus):
    index, db, _ = ensure_index(tiny_corpus, TINY_CFG, tiny_corpus.parent / "index.bin")
    return index, db


@pytest.fixture(scope="session")
def desk():
    """Acceptance-scale corpus (~300 parts) plus its index; built once.

    Seat grooves are orientation-mixed so detail words overlap densely
    across categories (the regime where index pruning is lossless).
    """
    return _corpus("desk", DESK_CFG, n_models=60, seed=11, armrest_prob=0.95,
                   seat_grooves="mixed")


STYLE_CFG = EngineConfig(
    view_level=1,
    vocab_size=192,
    context_vocab_size=48,
    d2_pairs=100000,
    kmeans_sample_cap=40000,
    kmeans_max_iter=40,
)


@pytest.fixture(scope="session")
def style_corpus():
    """Two pure style families with style-correlated interior patterns."""
    return _corpus("style", STYLE_CFG, n_models=16, seed=23, armrest_prob=0.8,
                   seat_grooves="style")
