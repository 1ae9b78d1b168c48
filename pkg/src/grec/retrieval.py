"""Exact cosine top-k search over an immutable, L2-normalized index.

Vectors are stored row-contiguous in float32 so a query is a single
matrix-vector product; full-scan search keeps results exact. Equal scores
are broken by ascending id so rankings are reproducible everywhere the
evaluation harness needs them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import IDX_MAGIC, Catalog, read_vector_records, write_vector_records
from .errors import DataError

NORM_TOLERANCE = 1e-4


@dataclass
class VectorIndex:
    """Ordered ids aligned to rows of a unit-norm float32 matrix."""

    ids: tuple[str, ...]
    matrix: np.ndarray  # (N, D) float32, rows L2-normalized
    _id_rank: np.ndarray = field(init=False, repr=False)
    _row_of: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float32)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.ids):
            raise ValueError("matrix must have one row per id")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("index ids must be unique")
        norms = np.linalg.norm(self.matrix.astype(np.float64), axis=1)
        if self.matrix.shape[0] and np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
            bad = self.ids[int(np.argmax(np.abs(norms - 1.0)))]
            raise ValueError(f"row for {bad!r} is not unit-norm")
        # Precomputed lexicographic rank of each row's id, the tie-break key.
        order = sorted(range(len(self.ids)), key=lambda i: self.ids[i])
        rank = np.empty(len(self.ids), dtype=np.int64)
        for pos, row in enumerate(order):
            rank[row] = pos
        self._id_rank = rank
        self._row_of = {item_id: i for i, item_id in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._row_of

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[1])

    def vector(self, item_id: str) -> np.ndarray:
        """The stored (normalized) row for an indexed id."""
        try:
            return self.matrix[self._row_of[item_id]].copy()
        except KeyError:
            raise DataError(f"item {item_id!r} is not in the index") from None


def _normalize(vector, dimension: int | None = None) -> np.ndarray:
    v = np.asarray(vector, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("vector must be nonempty")
    if dimension is not None and v.shape[0] != dimension:
        raise ValueError(f"vector has dimension {v.shape[0]}, expected {dimension}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite values")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("zero vector has no direction")
    return v / norm


def build_index(catalog: Catalog) -> VectorIndex:
    """Normalize every item embedding into an index, in catalog order."""
    ids: list[str] = []
    rows: list[np.ndarray] = []
    d: int | None = None
    for item in catalog.items:
        if item.embedding is None:
            raise DataError(f"item {item.id!r} has no embedding")
        v = np.asarray(item.embedding, dtype=np.float64).ravel()
        if d is None:
            d = v.shape[0]
        elif v.shape[0] != d:
            raise DataError(f"item {item.id!r} embedding dimension {v.shape[0]} != {d}")
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise DataError(f"item {item.id!r} has a zero embedding")
        ids.append(item.id)
        rows.append((v / norm).astype(np.float32))
    if not ids:
        raise DataError("cannot build an index from an empty catalog")
    return VectorIndex(ids=tuple(ids), matrix=np.vstack(rows))


def save_index(index: VectorIndex, path: str | Path) -> None:
    write_vector_records(path, IDX_MAGIC, list(index.ids), index.matrix)


def load_index(path: str | Path) -> VectorIndex:
    ids, matrix = read_vector_records(path, IDX_MAGIC)
    try:
        return VectorIndex(ids=tuple(ids), matrix=matrix)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def cosine(a, b) -> float:
    """dot(a, b) / (|a| |b|), clamped into [-1, 1] against rounding."""
    va = np.asarray(a, dtype=np.float64).ravel()
    vb = np.asarray(b, dtype=np.float64).ravel()
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine is undefined for zero vectors")
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


def top_k(
    query,
    index: VectorIndex,
    k: int,
    exclude: set[str] | None = None,
) -> list[tuple[str, float]]:
    """The k most cosine-similar indexed items, best first.

    Ties break by ascending id. The query item, if indexed, is not excluded
    automatically; pass its id in ``exclude`` to drop it. Returns fewer
    than k entries when the index (minus exclusions) is smaller.
    """
    if not isinstance(k, int) or k <= 0:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    q = _normalize(query, index.dimension).astype(np.float32)
    scores = index.matrix @ q
    order = np.lexsort((index._id_rank, -scores))
    excluded = exclude or set()
    results: list[tuple[str, float]] = []
    for row in order:
        item_id = index.ids[row]
        if item_id in excluded:
            continue
        results.append((item_id, float(scores[row])))
        if len(results) == k:
            break
    return results
