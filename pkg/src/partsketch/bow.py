"""Bag-of-visual-words layer: vocabularies, TF-IDF histograms, similarity.

A vocabulary is a set of k-means centroids over keypoint descriptors
plus corpus occurrence statistics.  Images become sparse TF-IDF
histograms: per-image term frequencies normalized to sum 1, weighted by
ln(N / N_i) with N_i the corpus occurrence count of word i and N the
corpus total.  Histograms are compared by the normalized inner product
(cosine), which is bounded to [0, 1] for the non-negative weights
produced here; a chi-square kernel is available as a config switch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import QueryError
from .features import GaborBank, extract_galf
from .render import LineImage

_ASSIGN_CHUNK = 8192


@dataclass(frozen=True)
class TermHistogram:
    vocab_id: str
    words: np.ndarray    # sorted int32 word ids
    weights: np.ndarray  # float64, aligned with words, all > 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", np.asarray(self.words, dtype=np.int32))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        if len(self.words) != len(self.weights):
            raise ValueError("words/weights length mismatch")

    @property
    def is_empty(self) -> bool:
        return len(self.words) == 0

    def norm(self) -> float:
        return float(np.linalg.norm(self.weights))

    def dot(self, other: "TermHistogram") -> float:
        if self.is_empty or other.is_empty:
            return 0.0
        common, ia, ib = np.intersect1d(self.words, other.words, assume_unique=True, return_indices=True)
        if len(common) == 0:
            return 0.0
        return float(self.weights[ia] @ other.weights[ib])

    def as_dict(self) -> dict[int, float]:
        return {int(w): float(x) for w, x in zip(self.words, self.weights)}


def similarity(a: TermHistogram, b: TermHistogram, kind: str = "cosine") -> float:
    """Contour similarity in [0, 1]; empty/zero-weight histograms score 0."""
    if a.vocab_id != b.vocab_id:
        raise QueryError(f"histogram vocabulary mismatch: {a.vocab_id} vs {b.vocab_id}")
    if a.is_empty or b.is_empty:
        return 0.0
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    if kind == "cosine":
        return a.dot(b) / (na * nb)
    if kind == "chi2":
        wa = a.weights / a.weights.sum()
        wb = b.weights / b.weights.sum()
        union = np.union1d(a.words, b.words)
        fa = np.zeros(len(union))
        fb = np.zeros(len(union))
        fa[np.searchsorted(union, a.words)] = wa
        fb[np.searchsorted(union, b.words)] = wb
        chi2 = 0.5 * float((((fa - fb) ** 2) / (fa + fb)).sum())
        return 1.0 - chi2
    raise QueryError(f"unknown similarity kind: {kind}")


@dataclass
class Vocabulary:
    id: str                     # "sketch" | "detail" | "overall"
    centroids: np.ndarray       # (W, dim)
    occurrences: np.ndarray     # N_i, per-word corpus occurrence counts
    total: int                  # N, corpus total occurrences
    seed: int = 0
    inertia: float = 0.0
    _sq_norms: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        self.occurrences = np.asarray(self.occurrences, dtype=np.int64)
        if (self.occurrences > self.total).any():
            raise ValueError("word occurrence count exceeds corpus total")

    @property
    def size(self) -> int:
        return len(self.centroids)

    def idf(self) -> np.ndarray:
        safe = np.maximum(self.occurrences, 1)
        return np.log(np.maximum(self.total, 1) / safe)

    def assign(self, features: np.ndarray) -> np.ndarray:
        """Nearest-centroid word id for each feature row."""
        if self._sq_norms is None:
            self._sq_norms = (self.centroids**2).sum(axis=1)
        out = np.empty(len(features), dtype=np.int32)
        for start in range(0, len(features), _ASSIGN_CHUNK):
            chunk = features[start : start + _ASSIGN_CHUNK]
            d = self._sq_norms[None, :] - 2.0 * (chunk @ self.centroids.T)
            out[start : start + _ASSIGN_CHUNK] = d.argmin(axis=1)
        return out

    def weights_from_counts(self, counts: np.ndarray) -> TermHistogram:
        """TF-IDF histogram from a dense per-word count vector.

        Occurring words are kept even when their IDF (hence weight) is
        zero: posting lists index occurrences, while similarity only
        sees the weights.
        """
        total = counts.sum()
        if total <= 0:
            return TermHistogram(self.id, np.empty(0, np.int32), np.empty(0))
        weights = (counts / total) * self.idf()
        words = np.nonzero(counts > 0)[0]
        return TermHistogram(self.id, words.astype(np.int32), weights[words])


def encode_features(features: np.ndarray, vocab: Vocabulary) -> TermHistogram:
    nonzero = features[(features != 0).any(axis=1)]
    if len(nonzero) == 0:
        return TermHistogram(vocab.id, np.empty(0, np.int32), np.empty(0))
    words = vocab.assign(nonzero)
    counts = np.bincount(words, minlength=vocab.size).astype(np.float64)
    return vocab.weights_from_counts(counts)


def encode(img: LineImage, vocab: Vocabulary, bank: GaborBank, grid: int = 32, cells: int = 4) -> TermHistogram:
    """Encode a (thinned, canonical-size) line image against a vocabulary."""
    return encode_features(extract_galf(img, bank, grid, cells), vocab)


def _plus_plus_init(features: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(features)
    centroids = np.empty((k, features.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = features[first]
    d2 = ((features - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[i] = features[int(rng.integers(n))]
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r))
            idx = min(idx, n - 1)
            centroids[i] = features[idx]
        d2 = np.minimum(d2, ((features - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    features: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> tuple[np.ndarray, float]:
    """Seeded k-means++ / Lloyd; stops on relative inertia change < tol.

    Returns (centroids, inertia).  Empty clusters are reseeded to the
    point farthest from its assigned centroid (deterministic).
    """
    feats = np.asarray(features, dtype=np.float64)
    if len(feats) < k:
        raise ValueError(f"corpus of {len(feats)} features cannot support {k} words; reduce the vocabulary size")
    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(feats, k, rng)
    prev_inertia = np.inf
    inertia = np.inf
    for _ in range(max_iter):
        sq = (centroids**2).sum(axis=1)
        labels = np.empty(len(feats), dtype=np.int64)
        inertia = 0.0
        best_d = np.empty(len(feats))
        for start in range(0, len(feats), _ASSIGN_CHUNK):
            chunk = feats[start : start + _ASSIGN_CHUNK]
            d = sq[None, :] - 2.0 * (chunk @ centroids.T) + (chunk**2).sum(axis=1)[:, None]
            lab = d.argmin(axis=1)
            labels[start : start + _ASSIGN_CHUNK] = lab
            dmin = d[np.arange(len(chunk)), lab]
            best_d[start : start + _ASSIGN_CHUNK] = dmin
            inertia += float(np.maximum(dmin, 0.0).sum())
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, feats)
        nonempty = counts > 0
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        for ci in np.nonzero(~nonempty)[0]:
            far = int(best_d.argmax())
            centroids[ci] = feats[far]
            best_d[far] = 0.0
        if prev_inertia < np.inf and prev_inertia > 0:
            if abs(prev_inertia - inertia) / prev_inertia < tol:
                break
        prev_inertia = inertia
    return centroids, float(inertia)


def build_vocabulary(
    features: np.ndarray,
    vocab_id: str,
    size: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-4,
    sample_cap: int | None = None,
) -> Vocabulary:
    """Cluster descriptors into a vocabulary (occurrence stats start at zero).

    Zero rows are excluded before clustering; when ``sample_cap`` is set
    the clustering corpus is a seeded subsample.  Corpus statistics are
    filled in afterwards by the index builder via
    :meth:`Vocabulary.occurrences`.
    """
    feats = np.asarray(features, dtype=np.float64)
    feats = feats[(feats != 0).any(axis=1)]
    if sample_cap is not None and len(feats) > sample_cap:
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(feats), size=sample_cap, replace=False)
        feats = feats[np.sort(idx)]
    centroids, inertia = kmeans(feats, size, seed, max_iter, tol)
    return Vocabulary(vocab_id, centroids, np.zeros(size, dtype=np.int64), 0, seed, inertia)


__all__ = [
    "TermHistogram",
    "Vocabulary",
    "similarity",
    "encode",
    "encode_features",
    "build_vocabulary",
    "kmeans",
]
