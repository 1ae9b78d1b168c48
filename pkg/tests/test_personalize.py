from __future__ import annotations

import numpy as np
import pytest

from grec import personalize, retrieval
from grec.catalog import Cart
from grec.errors import DataError

from conftest import make_catalog
from oracles import brute_force_top_k


BASIS = make_catalog({"a": [1.0, 0.0], "b": [0.0, 1.0]})


class TestCartVector:
    def test_single_item_is_member_embedding_bit_exact(self):
        cv = personalize.cart_vector(Cart("u", (("a", 3.7),)), BASIS)
        member = np.asarray(BASIS.item("a").embedding, dtype=np.float64)
        assert np.array_equal(cv.values, member)
        assert cv.source_item_count == 1

    def test_equal_ratings_average(self):
        cv = personalize.cart_vector(Cart("u", (("a", 2.0), ("b", 2.0))), BASIS)
        np.testing.assert_array_equal(cv.values, [0.5, 0.5])

    def test_hand_evaluated_weighting(self):
        cv = personalize.cart_vector(Cart("u", (("a", 4.0), ("b", 1.0))), BASIS)
        assert cv.values.tolist() == [0.8, 0.2]
        assert cv.total_rating_mass == 5.0

    def test_rating_scale_invariance(self):
        base = personalize.cart_vector(Cart("u", (("a", 1.0), ("b", 2.5))), BASIS)
        doubled = personalize.cart_vector(Cart("u", (("a", 2.0), ("b", 5.0))), BASIS)
        np.testing.assert_allclose(doubled.values, base.values, rtol=0, atol=1e-12)

    def test_convex_hull_bounds(self):
        rng = np.random.default_rng(8)
        vectors = {f"m{i}": rng.normal(size=6).tolist() for i in range(5)}
        catalog = make_catalog(vectors)
        cart = Cart("u", tuple((f"m{i}", float(rng.integers(1, 6))) for i in range(5)))
        cv = personalize.cart_vector(cart, catalog)
        stack = np.vstack([catalog.item(f"m{i}").embedding for i in range(5)]).astype(np.float64)
        assert np.all(cv.values >= stack.min(axis=0) - 1e-12)
        assert np.all(cv.values <= stack.max(axis=0) + 1e-12)

    def test_unknown_item_rejected(self):
        with pytest.raises(DataError, match="nope"):
            personalize.cart_vector(Cart("u", (("nope", 3.0),)), BASIS)

    def test_missing_embedding_rejected(self):
        catalog = make_catalog({"a": [1.0, 0.0]})
        catalog.item("a").embedding = None
        with pytest.raises(DataError, match="no embedding"):
            personalize.cart_vector(Cart("u", (("a", 3.0),)), catalog)


class TestSplitCart:
    def _two_group_catalog(self):
        points = {
            "p0": [5.0, 0.1],
            "p1": [5.2, -0.1],
            "p2": [4.9, 0.0],
            "p3": [-5.0, 0.2],
            "p4": [-5.1, 0.0],
        }
        return make_catalog(points)

    def test_k_one_returns_input_cart(self):
        catalog = self._two_group_catalog()
        cart = Cart("u", tuple((f"p{i}", 3.0) for i in range(5)))
        subs = personalize.split_cart(cart, catalog, 1, seed=0)
        assert subs == [cart]

    def test_separated_groups_recovered(self):
        catalog = self._two_group_catalog()
        cart = Cart("u", tuple((f"p{i}", float(i % 5 + 1)) for i in range(5)))
        subs = personalize.split_cart(cart, catalog, 2, seed=7)
        grouped = sorted(sorted(c.item_ids) for c in subs)
        assert grouped == [["p0", "p1", "p2"], ["p3", "p4"]]

    def test_k_equals_size_gives_singletons(self):
        catalog = self._two_group_catalog()
        cart = Cart("u", tuple((f"p{i}", 2.0) for i in range(5)))
        subs = personalize.split_cart(cart, catalog, 5, seed=3)
        assert sorted(len(c.entries) for c in subs) == [1, 1, 1, 1, 1]
        # Lloyd fixed point: splitting each singleton again changes nothing.
        for sub in subs:
            assert personalize.split_cart(sub, catalog, 1, seed=0) == [sub]

    def test_partition_is_exact(self):
        rng = np.random.default_rng(10)
        vectors = {f"m{i}": rng.normal(size=4).tolist() for i in range(9)}
        catalog = make_catalog(vectors)
        cart = Cart("u", tuple((f"m{i}", float(rng.integers(1, 6))) for i in range(9)))
        subs = personalize.split_cart(cart, catalog, 3, seed=5)
        merged = sorted(entry for sub in subs for entry in sub.entries)
        assert merged == sorted(cart.entries)
        assert all(len(sub.entries) >= 1 for sub in subs)

    def test_deterministic_per_seed(self):
        catalog = self._two_group_catalog()
        cart = Cart("u", tuple((f"p{i}", 1.0) for i in range(5)))
        one = personalize.split_cart(cart, catalog, 2, seed=11)
        two = personalize.split_cart(cart, catalog, 2, seed=11)
        assert one == two

    def test_bad_k_rejected(self):
        catalog = self._two_group_catalog()
        cart = Cart("u", (("p0", 1.0), ("p1", 1.0)))
        with pytest.raises(ValueError):
            personalize.split_cart(cart, catalog, 0)
        with pytest.raises(ValueError):
            personalize.split_cart(cart, catalog, 3)


class TestRecommendForCart:
    def _catalog_and_index(self, seed=0, n=100, d=8):
        rng = np.random.default_rng(seed)
        vectors = {f"c{i:03d}": rng.normal(size=d).tolist() for i in range(n)}
        catalog = make_catalog(vectors)
        return catalog, retrieval.build_index(catalog), rng

    def test_single_item_cart_equals_item_query(self):
        catalog, index, _ = self._catalog_and_index()
        cart = Cart("u", (("c007", 4.0),))
        via_cart = personalize.recommend_for_cart(cart, catalog, index, 5)
        direct = retrieval.top_k(
            catalog.item("c007").embedding, index, 5, exclude={"c007"}
        )
        assert via_cart == direct

    def test_members_never_recommended(self):
        catalog, index, _ = self._catalog_and_index(seed=1)
        members = ("c000", "c001", "c002")
        cart = Cart("u", tuple((m, 5.0) for m in members))
        results = personalize.recommend_for_cart(cart, catalog, index, 100)
        assert not set(members) & {i for i, _ in results}
        assert len(results) == 97

    def test_matches_brute_force_on_cart_vector(self):
        catalog, index, _ = self._catalog_and_index(seed=2)
        members = [("c010", 5.0), ("c020", 1.0), ("c030", 3.0)]
        cart = Cart("u", tuple(members))
        cv = personalize.cart_vector(cart, catalog)
        expected = brute_force_top_k(
            cv.values, index.ids, index.matrix, 10, exclude={m for m, _ in members}
        )
        got = personalize.recommend_for_cart(cart, catalog, index, 10)
        assert [i for i, _ in got] == [i for i, _ in expected]
