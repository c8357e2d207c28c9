"""Engine configuration.

All tunables of the feature/retrieval pipeline live here so that index
builds are reproducible from a single JSON file.  Defaults follow the
canonical operating point: 320x320 canvases, a 32x32 keypoint grid with
4x4 averaging cells and 4 Gabor orientations, three 2500-word
vocabularies, and lambda1 = lambda2 = 0.5.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path


@dataclass
class EngineConfig:
    # canvas / rendering
    image_size: int = 320
    crease_angle_deg: float = 40.0
    view_level: int = 2            # icosphere subdivision: 12, 42, 162 views
    pen_width: int = 2             # raster stroke width before thinning
    fit_margin: float = 0.05       # empty border fraction when fitting renders

    # GALF features
    grid: int = 32                 # keypoints per image side
    cells: int = 4                 # averaging cells per window side
    orientations: int = 4          # Gabor filter orientations
    gabor_bandwidth: float = 1.0   # octaves
    gabor_aspect: float = 1.0

    # vocabularies (one per relevance term: sketch / detail / overall)
    vocab_size: int = 2500
    context_vocab_size: int = 0   # detail/overall vocab size; 0 = vocab_size
    kmeans_seed: int = 0
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-4
    kmeans_sample_cap: int = 60000  # feature subsample for clustering

    # retrieval
    lambda1: float = 0.5
    lambda2: float = 0.5
    top_k_adjacent: int = 10       # parent parts considered for suggestions
    suggest_clusters: int = 6
    d2_pairs: int = 1024 * 1024
    d2_bins: int = 64
    similarity_kind: str = "cosine"  # or "chi2"

    # build
    workers: int = 0               # 0 = auto (cpu count, capped)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        data = json.loads(Path(path).read_text())
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @property
    def cell_size(self) -> int:
        """Pixel size of one averaging cell (also the Gabor wavelength)."""
        return self.image_size // self.grid


#: Geometry analysis thresholds, all relative to the model bounding-box
#: diagonal unless noted.  Overridable per dataset through the manifest
#: ``thresholds`` block.
@dataclass
class AnalysisThresholds:
    tau_sym: float = 0.02          # max mean reflection distance for symmetry
    contact_eps: float = 0.005     # max surface gap for a contact
    connector_radius: float = 0.05 # connector region radius around contacts
    smooth_band: float = 0.20      # relative extent mismatch still "smooth"
    sample_count: int = 4096       # surface samples for analysis ops
    seed: int = 7

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisThresholds":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown threshold keys: {sorted(unknown)}")
        return cls(**data)
