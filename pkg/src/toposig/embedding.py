"""Whitened principal-component space over feature rows.

Fitting centers the data, eigendecomposes the sample covariance (cyclic
Jacobi rotations; the problem is a fixed 4x4) and keeps components whose
eigenvalue exceeds ``eig_tol`` times the largest.  Scores are divided by
sqrt(eigenvalue), so the plain Euclidean norm between transformed points
realizes the Mahalanobis distance of the training covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np
from scipy.spatial.distance import pdist

from .features import FeatureTable

__all__ = [
    "DegenerateFeaturesError",
    "EmbeddingModel",
    "MeanDistanceResult",
    "DEFAULT_EIG_TOL",
    "DEFAULT_PAIR_BUDGET",
    "jacobi_eigh",
    "fit_embedding",
    "transform",
    "transform_all",
    "distance",
    "mean_pairwise_distance",
    "pair_sample_distances",
    "save_model",
    "load_model",
]

DEFAULT_EIG_TOL = 1e-12
DEFAULT_PAIR_BUDGET = 2_000_000


class DegenerateFeaturesError(ValueError):
    """All feature columns constant: no covariance structure to whiten."""


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-14, max_sweeps: int = 64):
    """Eigendecompose a small symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below ``tol`` times
    the matrix Frobenius norm.  Returns (eigenvalues descending, eigenvector
    columns aligned with them); eigenvector signs are canonicalized so the
    largest-magnitude component of each is positive.
    """
    a = np.array(matrix, dtype=np.float64)
    d = a.shape[0]
    if a.shape != (d, d):
        raise ValueError("matrix must be square")
    v = np.eye(d)
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return np.zeros(d), v

    def offdiag(mat: np.ndarray) -> float:
        return float(np.sqrt(max(np.sum(mat**2) - np.sum(np.diag(mat) ** 2), 0.0)))

    for _ in range(max_sweeps):
        if offdiag(a) <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(d)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = np.maximum(eigenvalues[order], 0.0)
    vectors = v[:, order]
    for col in range(d):
        pivot = np.argmax(np.abs(vectors[:, col]))
        if vectors[pivot, col] < 0:
            vectors[:, col] = -vectors[:, col]
    return eigenvalues, vectors


@dataclass(frozen=True)
class EmbeddingModel:
    """Fitted whitening transform; rows of ``whitening`` are eigvec/sqrt(eigval)."""

    mean: np.ndarray
    covariance: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    retained: int
    eig_tol: float
    whitening: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.mean)


def _build_whitening(eigenvalues: np.ndarray, eigenvectors: np.ndarray, retained: int) -> np.ndarray:
    # fixed C layout so fitted and reloaded models multiply bit-identically
    return np.ascontiguousarray((eigenvectors[:, :retained] / np.sqrt(eigenvalues[:retained])).T)


def fit_embedding(table: FeatureTable | np.ndarray, eig_tol: float = DEFAULT_EIG_TOL) -> EmbeddingModel:
    """Fit the whitened component space on the rows of a feature table."""
    data = table.values if isinstance(table, FeatureTable) else np.asarray(table, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("feature data must be 2-d")
    n, d = data.shape
    if n < 5:
        raise ValueError(f"need at least 5 rows to fit, got {n}")
    mean = data.mean(axis=0)
    centered = data - mean
    if not np.any(centered.std(axis=0) > 0.0):
        raise DegenerateFeaturesError("degenerate feature table: every column is constant")
    covariance = centered.T @ centered / (n - 1)
    eigenvalues, eigenvectors = jacobi_eigh(covariance)
    retained = int(np.sum(eigenvalues > eig_tol * eigenvalues[0]))
    return EmbeddingModel(
        mean=mean,
        covariance=covariance,
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        retained=retained,
        eig_tol=eig_tol,
        whitening=_build_whitening(eigenvalues, eigenvectors, retained),
    )


def transform(model: EmbeddingModel, x: np.ndarray) -> np.ndarray:
    """Whitened coordinates of a single feature vector."""
    return model.whitening @ (np.asarray(x, dtype=np.float64) - model.mean)


def transform_all(model: EmbeddingModel, data: FeatureTable | np.ndarray) -> np.ndarray:
    values = data.values if isinstance(data, FeatureTable) else np.asarray(data, dtype=np.float64)
    return (values - model.mean) @ model.whitening.T


def distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean norm in the whitened space = Mahalanobis distance."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64) - b))


@dataclass(frozen=True)
class MeanDistanceResult:
    mean: float
    pair_count_used: int
    exact: bool


def _decode_pair_indices(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices of the upper triangle (i < j, row-major) to (i, j)."""
    idx = idx.astype(np.float64)
    b = 2 * n - 1
    i = np.floor((b - np.sqrt(b * b - 8.0 * idx)) / 2.0).astype(np.int64)
    i = np.clip(i, 0, n - 2)
    idx_int = idx.astype(np.int64)
    # float sqrt can land one row off; fix with exact integer offsets
    for _ in range(2):
        offset = i * (2 * n - i - 1) // 2
        i = np.where(offset > idx_int, i - 1, i)
        next_offset = (i + 1) * (2 * n - i - 2) // 2
        i = np.where(next_offset <= idx_int, i + 1, i)
    offset = i * (2 * n - i - 1) // 2
    j = idx_int - offset + i + 1
    return i, j


def _sample_distinct_indices(total: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample of ``count`` distinct ints from [0, total), unordered."""
    if total <= max(4 * count, 1 << 22):
        return rng.choice(total, size=count, replace=False)
    collected = np.empty(0, dtype=np.uint64)
    while len(collected) < count:
        need = count - len(collected)
        draw = rng.integers(0, total, size=int(need * 1.1) + 16, dtype=np.uint64)
        collected = np.unique(np.concatenate([collected, draw]))
    return rng.permutation(collected)[:count]


def pair_sample_distances(
    points: np.ndarray,
    pair_budget: int = DEFAULT_PAIR_BUDGET,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, bool]:
    """Distances over all pairs, or over a uniform sample when over budget."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = len(points)
    if n < 2:
        raise ValueError("need at least 2 points")
    total = n * (n - 1) // 2
    if total <= pair_budget:
        return pdist(points), True
    if rng is None:
        raise ValueError("pair sampling requires an explicit rng stream")
    idx = _sample_distinct_indices(total, pair_budget, rng)
    i, j = _decode_pair_indices(np.asarray(idx), n)
    out = np.empty(pair_budget, dtype=np.float64)
    chunk = 1 << 19
    for start in range(0, pair_budget, chunk):
        sl = slice(start, min(start + chunk, pair_budget))
        diff = points[i[sl]] - points[j[sl]]
        out[sl] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out, False


def mean_pairwise_distance(
    points: np.ndarray,
    pair_budget: int = DEFAULT_PAIR_BUDGET,
    rng: np.random.Generator | None = None,
) -> MeanDistanceResult:
    """Mean inter-point distance, exact when C(N,2) fits the pair budget."""
    distances, exact = pair_sample_distances(points, pair_budget, rng)
    return MeanDistanceResult(
        mean=float(distances.mean()),
        pair_count_used=len(distances),
        exact=exact,
    )


# ---------------------------------------------------------------------------
# model file (17 significant digits -> lossless reload)
# ---------------------------------------------------------------------------

_MODEL_HEADER = "toposig-embedding-v1"


def _fmt_row(values: Iterable[float]) -> str:
    return "\t".join(f"{v:.17g}" for v in values)


def save_model(model: EmbeddingModel, out: TextIO) -> None:
    d = model.dim
    out.write(f"{_MODEL_HEADER}\n")
    out.write(f"dim\t{d}\n")
    out.write(f"retained\t{model.retained}\n")
    out.write(f"eig_tol\t{model.eig_tol:.17g}\n")
    out.write(f"mean\t{_fmt_row(model.mean)}\n")
    for row in model.covariance:
        out.write(f"cov\t{_fmt_row(row)}\n")
    out.write(f"eigenvalues\t{_fmt_row(model.eigenvalues)}\n")
    for row in model.eigenvectors:
        out.write(f"eigenvectors\t{_fmt_row(row)}\n")


def load_model(lines: Iterable[str]) -> EmbeddingModel:
    it = iter(lines)
    header = next(it, "").strip()
    if header != _MODEL_HEADER:
        raise ValueError(f"not an embedding model file (header {header!r})")
    fields: dict[str, list[list[float]]] = {}
    dim = retained = None
    for raw in it:
        line = raw.strip()
        if not line:
            continue
        key, _, rest = line.partition("\t")
        if key == "dim":
            dim = int(rest)
        elif key == "retained":
            retained = int(rest)
        else:
            fields.setdefault(key, []).append([float(v) for v in rest.split("\t")])
    if dim is None or retained is None:
        raise ValueError("model file missing dim/retained")
    eig_tol = fields["eig_tol"][0][0]
    mean = np.array(fields["mean"][0])
    covariance = np.array(fields["cov"])
    eigenvalues = np.array(fields["eigenvalues"][0])
    eigenvectors = np.array(fields["eigenvectors"])
    if covariance.shape != (dim, dim) or eigenvectors.shape != (dim, dim) or len(mean) != dim:
        raise ValueError("model file has inconsistent shapes")
    return EmbeddingModel(
        mean=mean,
        covariance=covariance,
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        retained=retained,
        eig_tol=eig_tol,
        whitening=_build_whitening(eigenvalues, eigenvectors, retained),
    )
