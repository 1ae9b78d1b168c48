"""Cart personalization: rating-weighted cart vectors and cart splitting.

A cart reduces to one query vector as the rating-weighted mean of its
members' raw embeddings; normalization happens only at query time. Mixed
carts can be split into more uniform sub-carts with seeded k-means over
the member embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import Cart, Catalog
from .errors import DataError
from .retrieval import VectorIndex, top_k

KMEANS_MAX_ITER = 100


@dataclass(frozen=True)
class CartVector:
    """Aggregated cart embedding plus provenance counters."""

    values: np.ndarray
    source_item_count: int
    total_rating_mass: float


def _member_embeddings(cart: Cart, catalog: Catalog) -> np.ndarray:
    rows = []
    for item_id, _ in cart.entries:
        item = catalog.item(item_id)
        if item.embedding is None:
            raise DataError(f"cart item {item_id!r} has no embedding")
        rows.append(np.asarray(item.embedding, dtype=np.float64))
    matrix = np.vstack(rows)
    if not np.all(np.isfinite(matrix)):
        raise DataError("cart member embeddings contain non-finite values")
    return matrix


def cart_vector(cart: Cart, catalog: Catalog) -> CartVector:
    """Rating-weighted mean of member embeddings: sum(r_i v_i) / sum(r_i).

    Computed as normalized weights times vectors, so a single-item cart
    returns its member embedding bit-exactly and uniformly scaled ratings
    leave the result unchanged.
    """
    matrix = _member_embeddings(cart, catalog)
    ratings = np.array([rating for _, rating in cart.entries], dtype=np.float64)
    mass = ratings.sum()
    if mass <= 0.0:
        raise DataError("cart rating mass must be positive")
    weights = ratings / mass
    return CartVector(
        values=weights @ matrix,
        source_item_count=len(cart.entries),
        total_rating_mass=float(mass),
    )


def split_cart(cart: Cart, catalog: Catalog, k: int, seed: int = 0) -> list[Cart]:
    """Partition a cart into k sub-carts by k-means over member embeddings.

    Initial centroids are k distinct members sampled with the seed; Lloyd
    iterations run to convergence or 100 passes. Every sub-cart is
    nonempty and the sub-carts partition the input exactly.
    """
    if not isinstance(k, int) or k <= 0:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    n = len(cart.entries)
    if k > n:
        raise ValueError(f"cannot split a {n}-item cart into {k} groups")
    points = _member_embeddings(cart, catalog)

    rng = np.random.default_rng(seed)
    centroids = points[rng.choice(n, size=k, replace=False)].copy()
    assign = np.full(n, -1, dtype=np.int64)
    for _ in range(KMEANS_MAX_ITER):
        # Assignment: nearest centroid, ties to the lowest centroid index.
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        # Keep every cluster populated: hand the farthest point of a
        # multi-point cluster to each empty one, in cluster order.
        for j in range(k):
            if np.any(new_assign == j):
                continue
            counts = np.bincount(new_assign, minlength=k)
            movable = counts[new_assign] > 1
            cand = np.where(movable)[0]
            dist = d2[cand, new_assign[cand]]
            new_assign[cand[int(np.argmax(dist))]] = j
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            centroids[j] = points[assign == j].mean(axis=0)

    groups: list[list[tuple[str, float]]] = [[] for _ in range(k)]
    for i, entry in enumerate(cart.entries):
        groups[assign[i]].append(entry)
    return [Cart(user_id=cart.user_id, entries=tuple(group)) for group in groups]


def recommend_for_cart(
    cart: Cart, catalog: Catalog, index: VectorIndex, k: int
) -> list[tuple[str, float]]:
    """Top-k items by similarity to the cart vector, cart members excluded."""
    query = cart_vector(cart, catalog)
    return top_k(query.values, index, k, exclude=set(cart.item_ids))
