"""Feature-space and weight-space interpretability tools.

Covers PCA projection of voxel features, gradient-normalized classification
margins, a Wasserstein-based per-class dispersion ("k-variance"), their
ratio as a single separability/compactness score (higher = more separable
and compact), and per-depth Frobenius norms of dumped tensors.

Dump format: a JSON manifest (names, shapes, depths, dtype "f32", byte
offsets) next to one raw little-endian float32 blob, so any training
framework can emit it.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import ValidationError
from .rng import RngStream, as_generator

Rng = Union[RngStream, np.random.Generator]

MAX_ASSIGNMENT_SIZE = 64


@dataclass(frozen=True)
class FeatureSet:
    """Final-layer voxel features with their labels and the classifier head."""

    features: np.ndarray  # (N, D)
    labels: np.ndarray    # (N,)
    weights: np.ndarray   # (C, D)
    biases: np.ndarray    # (C,)

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        l = np.asarray(self.labels)
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.biases, dtype=np.float64)
        if f.ndim != 2 or l.ndim != 1 or w.ndim != 2 or b.ndim != 1:
            raise ValidationError("features (N,D), labels (N,), weights (C,D), biases (C,) required")
        n, d = f.shape
        c = w.shape[0]
        if l.shape[0] != n or w.shape[1] != d or b.shape[0] != c:
            raise ValidationError("feature set dimensions are inconsistent")
        l = l.astype(np.int64)
        if l.size and (l.min() < 0 or l.max() >= c):
            raise ValidationError(f"labels must lie in [0, {c})")
        if n < 2 * c:
            raise ValidationError(f"need at least 2 rows per class (N={n}, C={c})")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", l)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]


def pca_project(fs_or_features, k: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Project rows onto the top-k principal components.

    Returns (N, k) coordinates and the explained-variance ratios. The sign
    convention makes each component's largest-|entry| coordinate positive.
    Rank-deficient inputs warn and pad zero components.
    """
    x = fs_or_features.features if isinstance(fs_or_features, FeatureSet) else np.asarray(fs_or_features, dtype=np.float64)
    n, d = x.shape
    if n < 2 or d < k:
        raise ValidationError(f"PCA needs N >= 2 and D >= k (N={n}, D={d}, k={k})")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]
    total = eigvals.sum()
    tol = max(d, n) * np.finfo(np.float64).eps * (eigvals[0] if eigvals.size else 0.0)
    rank = int((eigvals > tol).sum())
    if rank < k:
        warnings.warn(f"feature matrix rank ({rank}) is below k={k}; padding zero components")
    comps = eigvecs[:, :k].copy()
    comps[:, rank:] = 0.0
    for j in range(min(k, rank)):
        pivot = np.argmax(np.abs(comps[:, j]))
        if comps[pivot, j] < 0:
            comps[:, j] = -comps[:, j]
    coords = centered @ comps
    ratios = (eigvals[:k] / total) if total > 0 else np.zeros(k)
    ratios = np.where(np.arange(k) < rank, ratios, 0.0)
    return coords, ratios


def gradient_normalized_margins(fs: FeatureSet) -> np.ndarray:
    """Per-row classification margin normalized by its gradient magnitude:
    (logit_true - logit_runner_up) / ||w_true - w_runner_up||.

    Rows whose true and runner-up weight vectors coincide get NaN.
    Misclassified rows yield negative margins; the value is invariant under
    positive rescaling of (weights, biases).
    """
    logits = fs.features @ fs.weights.T + fs.biases
    n = fs.features.shape[0]
    idx = np.arange(n)
    true_logit = logits[idx, fs.labels]
    masked = logits.copy()
    masked[idx, fs.labels] = -np.inf
    runner = np.argmax(masked, axis=1)
    runner_logit = masked[idx, runner]
    denom = np.linalg.norm(fs.weights[fs.labels] - fs.weights[runner], axis=1)
    out = np.full(n, np.nan)
    ok = denom > 0
    out[ok] = (true_logit[ok] - runner_logit[ok]) / denom[ok]
    return out


def wasserstein_exact(a: np.ndarray, b: np.ndarray) -> float:
    """Exact 1-Wasserstein distance between two equal-size point sets under
    the Euclidean ground metric (optimal assignment, average matched cost)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise ValidationError("point sets must have identical shapes")
    if a.shape[0] > MAX_ASSIGNMENT_SIZE:
        raise ValidationError(f"exact assignment capped at {MAX_ASSIGNMENT_SIZE} points, got {a.shape[0]}")
    cost = cdist(a, b)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def k_variance(fs: FeatureSet, k: int = 32, repeats: int = 10, rng: Rng = None) -> float:
    """Average Wasserstein distance between disjoint k-subsets of each
    class's features, over repeats and classes. Smaller = more compact."""
    if k < 1 or k > MAX_ASSIGNMENT_SIZE:
        raise ValidationError(f"k must be in 1..{MAX_ASSIGNMENT_SIZE}")
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    g = as_generator(rng)
    per_class = []
    for c in range(fs.num_classes):
        rows = fs.features[fs.labels == c]
        if rows.shape[0] < 2 * k:
            raise ValidationError(f"class {c} has {rows.shape[0]} rows, needs >= {2 * k}")
        dists = []
        for _ in range(repeats):
            perm = g.permutation(rows.shape[0])
            dists.append(wasserstein_exact(rows[perm[:k]], rows[perm[k : 2 * k]]))
        per_class.append(float(np.mean(dists)))
    return float(np.mean(per_class))


def kvgm(fs: FeatureSet, k: int = 32, repeats: int = 10, rng: Rng = None) -> float:
    """Median gradient-normalized margin divided by the k-variance.

    Higher values indicate more separable and compact feature clusters.
    Zero dispersion (duplicated points) yields +/-inf with a warning.
    """
    margins = gradient_normalized_margins(fs)
    if np.isnan(margins).all():
        raise ValidationError("all margins are undefined (identical class weights)")
    med = float(np.nanmedian(margins))
    kv = k_variance(fs, k, repeats, rng)
    if kv == 0.0:
        warnings.warn("k-variance is zero (duplicated points?); returning infinity")
        return float("inf") if med >= 0 else float("-inf")
    return med / kv


# ---------------------------------------------------------------------------
# tensor dumps

@dataclass(frozen=True)
class TensorEntry:
    name: str
    depth: int
    shape: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32).reshape(-1)
        if self.depth < 0:
            raise ValidationError("depth must be >= 0")
        if data.size != int(np.prod(self.shape)):
            raise ValidationError(
                f"{self.name}: data length {data.size} != product(shape) {int(np.prod(self.shape))}"
            )
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class TensorDump:
    entries: tuple[TensorEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def get(self, name: str) -> TensorEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


def weight_norms(dump: TensorDump) -> list[tuple[int, float]]:
    """Frobenius norm per depth: same-depth tensors are combined
    root-sum-square; rows ordered by depth."""
    if not dump.entries:
        raise ValidationError("tensor dump is empty")
    sq: dict[int, float] = {}
    for e in dump.entries:
        sq[e.depth] = sq.get(e.depth, 0.0) + float(np.sum(e.data.astype(np.float64) ** 2))
    return [(depth, float(np.sqrt(total))) for depth, total in sorted(sq.items())]


def save_dump(dump: TensorDump, manifest_path: Union[str, Path], blob_name: str = "blob.bin") -> None:
    """Write manifest JSON + raw little-endian float32 blob."""
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    tensors = []
    offset = 0
    chunks = []
    for e in dump.entries:
        raw = e.data.astype("<f4").tobytes()
        tensors.append({"name": e.name, "depth": e.depth, "shape": list(e.shape), "offset": offset})
        offset += len(raw)
        chunks.append(raw)
    manifest = {"version": 1, "dtype": "f32", "blob": blob_name, "tensors": tensors}
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    (manifest_path.parent / blob_name).write_bytes(b"".join(chunks))


def load_dump(manifest_path: Union[str, Path]) -> TensorDump:
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed dump manifest: {exc}") from exc
    if doc.get("dtype") != "f32" or doc.get("version") != 1:
        raise ValidationError("dump manifest must declare version 1 and dtype f32")
    blob = (manifest_path.parent / doc["blob"]).read_bytes()
    entries = []
    for t in doc["tensors"]:
        count = int(np.prod(t["shape"])) if t["shape"] else 1
        start = int(t["offset"])
        end = start + 4 * count
        if end > len(blob):
            raise ValidationError(f"{t['name']}: blob too short ({end} > {len(blob)})")
        data = np.frombuffer(blob[start:end], dtype="<f4")
        entries.append(TensorEntry(t["name"], int(t["depth"]), tuple(t["shape"]), data))
    return TensorDump(tuple(entries))


def load_feature_set(dump: TensorDump) -> FeatureSet:
    """Build a FeatureSet from tensors named features/labels/weights/biases."""
    try:
        return FeatureSet(
            features=dump.get("features").data.reshape(dump.get("features").shape),
            labels=dump.get("labels").data.reshape(-1).astype(np.int64),
            weights=dump.get("weights").data.reshape(dump.get("weights").shape),
            biases=dump.get("biases").data.reshape(-1),
        )
    except KeyError as exc:
        raise ValidationError(f"feature dump is missing tensor {exc}") from exc
