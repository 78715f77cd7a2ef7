import numpy as np
import pytest

from dishrec.cf import (
    RatingMatrix,
    Recommender,
    ScoredFragment,
    baseline_predict,
    baseline_recommend,
    build_rating_matrix,
    column_similarity,
    cosine_sim,
    derive_item_rating,
    export_matrix,
    predict_item_item,
    predict_user_item,
    user_similarity,
)
from dishrec.errors import UnknownColumn, UnknownItem, UnknownUser

from oracles import cosine_reference, user_neighborhood_reference, item_neighborhood_reference


def frag(user, rest, item, score, stars, review=None):
    return ScoredFragment(review or f"{user}-{rest}-{item}", user, rest, item, score, stars)


def dense_matrix(values):
    """Matrix from a dense 2d array; user u{i}, column (r{j}, item j)."""
    values = np.asarray(values, dtype=float)
    entries = []
    for u in range(values.shape[0]):
        for j in range(values.shape[1]):
            entries.append((f"u{u}", f"r{j}", j, float(values[u, j])))
    return RatingMatrix.from_entries(entries)


class TestDeriveRating:
    def test_neutral_sentiment_is_identity(self):
        assert derive_item_rating(3.0, 0.0) == 3.0

    def test_clamped_top(self):
        assert derive_item_rating(5.0, 1.0, 0.5) == 5.0

    def test_direct_formula(self):
        assert derive_item_rating(3.0, -1.0, 0.5) == 2.0

    def test_weight_zero_passes_stars_through(self):
        assert derive_item_rating(2.5, 1.0, 0.0) == 2.5


class TestCosine:
    def test_self_similarity(self):
        assert cosine_sim([1.0, 2.0], [1.0, 2.0]) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_supports(self):
        assert cosine_sim([1.0, 0.0], [0.0, 2.0]) == 0.0

    def test_hand_value(self):
        assert cosine_sim([1.0, 2.0, 0.0], [2.0, 1.0, 0.0]) == pytest.approx(0.8, abs=1e-15)

    def test_zero_norm(self):
        assert cosine_sim([0.0, 0.0], [1.0, 1.0]) == 0.0

    def test_matches_reference_on_random_vectors(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            a = rng.normal(size=5)
            b = rng.normal(size=5)
            assert cosine_sim(a, b) == pytest.approx(cosine_reference(a, b), abs=1e-12)


class TestSimilarityMatrices:
    def test_symmetry_range_diagonal(self):
        rng = np.random.default_rng(1)
        entries = []
        for u in range(6):
            for j in range(5):
                if rng.random() < 0.6:
                    entries.append((f"u{u}", f"r{j}", j, float(rng.integers(1, 6))))
        matrix = RatingMatrix.from_entries(entries)
        for S in (user_similarity(matrix), column_similarity(matrix)):
            assert np.allclose(S, S.T, atol=1e-12)
            assert (S >= -1.0 - 1e-12).all() and (S <= 1.0 + 1e-12).all()
            for k in range(S.shape[0]):
                row_norm = np.linalg.norm(
                    matrix.ratings[k] if S.shape[0] == matrix.n_users else matrix.ratings[:, k]
                )
                if row_norm > 0:
                    assert S[k, k] == pytest.approx(1.0, abs=1e-12)


def _sim_dicts(matrix):
    S_u = user_similarity(matrix)
    S_c = column_similarity(matrix)
    sims_u = {}
    for a, ua in enumerate(matrix.user_ids):
        for b, ub in enumerate(matrix.user_ids):
            sims_u[(ua, ub)] = S_u[a, b]
    sims_c = {}
    for a, ca in enumerate(matrix.columns):
        for b, cb in enumerate(matrix.columns):
            sims_c[(ca, cb)] = S_c[a, b]
    return S_u, S_c, sims_u, sims_c


class TestPredictUserItem:
    def test_unanimous_ratings(self):
        matrix = dense_matrix([[4, 4, 4]] * 3)
        S_u = user_similarity(matrix)
        pred = predict_user_item("u0", ("r1", 1), matrix, S_u)
        assert pred == pytest.approx(4.0, abs=1e-12)

    def test_no_neighbor_rated_column_falls_back_to_user_mean(self):
        entries = [("u0", "r0", 0, 4.0), ("u0", "r1", 1, 2.0), ("u1", "r0", 0, 5.0)]
        matrix = RatingMatrix.from_entries(entries)
        S_u = user_similarity(matrix)
        pred = predict_user_item("u0", ("r1", 1), matrix, S_u)  # only u0 rated r1
        assert ("r1", 1) in matrix.column_index
        assert pred == pytest.approx(3.0, abs=1e-12)  # mean of u0's ratings

    def test_matches_reference_on_dense_toy(self):
        values = [[5, 3, 4], [4, 2, 5], [1, 5, 2]]
        matrix = dense_matrix(values)
        _, _, sims_u, _ = _sim_dicts(matrix)
        ratings = {
            (f"u{u}", (f"r{j}", j)): float(values[u][j])
            for u in range(3) for j in range(3)
        }
        user_means = {f"u{u}": float(np.mean(values[u])) for u in range(3)}
        S_u = user_similarity(matrix)
        for u in range(3):
            for j in range(3):
                got = predict_user_item(f"u{u}", (f"r{j}", j), matrix, S_u,
                                        n_neighbors=None, clamp=False)
                want = user_neighborhood_reference(ratings, user_means, sims_u, f"u{u}", (f"r{j}", j))
                assert got == pytest.approx(want, abs=1e-12)

    def test_item_centering_mode(self):
        values = [[5, 3, 4], [4, 2, 5], [1, 5, 2]]
        matrix = dense_matrix(values)
        _, _, sims_u, _ = _sim_dicts(matrix)
        ratings = {
            (f"u{u}", (f"r{j}", j)): float(values[u][j])
            for u in range(3) for j in range(3)
        }
        user_means = {f"u{u}": float(np.mean(values[u])) for u in range(3)}
        col_means = {
            (f"r{j}", j): float(np.mean([values[u][j] for u in range(3)])) for j in range(3)
        }
        S_u = user_similarity(matrix)
        got = predict_user_item("u0", ("r2", 2), matrix, S_u, n_neighbors=None,
                                center="item", clamp=False)
        want = user_neighborhood_reference(ratings, user_means, sims_u, "u0", ("r2", 2),
                             center="item", column_means=col_means)
        assert got == pytest.approx(want, abs=1e-12)

    def test_shift_property(self):
        # adding c to every rating shifts unclamped predictions by exactly c
        # (similarities held fixed)
        base = np.array([[4, 2, 3], [3, 1, 4], [1, 4, 2]], dtype=float)
        matrix = dense_matrix(base)
        shifted = dense_matrix(base + 1.0)
        S_u = user_similarity(matrix)
        for u in range(3):
            for j in range(3):
                a = predict_user_item(f"u{u}", (f"r{j}", j), matrix, S_u,
                                      n_neighbors=None, clamp=False)
                b = predict_user_item(f"u{u}", (f"r{j}", j), shifted, S_u,
                                      n_neighbors=None, clamp=False)
                assert b - a == pytest.approx(1.0, abs=1e-12)

    def test_unknown_ids(self):
        matrix = dense_matrix([[3, 3], [4, 4]])
        S_u = user_similarity(matrix)
        with pytest.raises(UnknownUser):
            predict_user_item("nobody", ("r0", 0), matrix, S_u)
        with pytest.raises(UnknownColumn):
            predict_user_item("u0", ("rX", 9), matrix, S_u)

    def test_clamped_to_rating_range(self):
        matrix = dense_matrix([[5, 5, 5], [5, 5, 5], [1, 5, 5]])
        S_u = user_similarity(matrix)
        for u in range(3):
            for j in range(3):
                pred = predict_user_item(f"u{u}", (f"r{j}", j), matrix, S_u)
                assert 1.0 <= pred <= 5.0


class TestPredictItemItem:
    def test_single_neighbor_returns_its_rating(self):
        entries = [
            ("u0", "r0", 0, 4.0),
            ("u1", "r0", 0, 4.0), ("u1", "r1", 1, 4.0),
        ]
        matrix = RatingMatrix.from_entries(entries)
        S_c = column_similarity(matrix)
        # u0 rated only column (r0, 0); sim((r1,1), (r0,0)) > 0
        pred = predict_item_item("u0", ("r1", 1), matrix, S_c)
        assert pred == pytest.approx(4.0, abs=1e-12)

    def test_zero_similarities_fall_back_to_user_mean(self):
        entries = [
            ("u0", "r0", 0, 2.0),
            ("u1", "r1", 1, 5.0),
        ]
        matrix = RatingMatrix.from_entries(entries)
        S_c = column_similarity(matrix)
        pred = predict_item_item("u0", ("r1", 1), matrix, S_c)
        assert pred == pytest.approx(2.0, abs=1e-12)

    def test_matches_reference_on_dense_toy(self):
        values = [[5, 3, 4, 1], [4, 2, 5, 2], [1, 5, 2, 4]]
        matrix = dense_matrix(values)
        _, _, _, sims_c = _sim_dicts(matrix)
        ratings = {
            (f"u{u}", (f"r{j}", j)): float(values[u][j])
            for u in range(3) for j in range(4)
        }
        S_c = column_similarity(matrix)
        for u in range(3):
            for j in range(4):
                got = predict_item_item(f"u{u}", (f"r{j}", j), matrix, S_c,
                                        n_neighbors=None, clamp=False)
                want = item_neighborhood_reference(ratings, sims_c, f"u{u}", (f"r{j}", j))
                assert got == pytest.approx(want, abs=1e-12)


class TestBaseline:
    FRAGS = [
        frag("u0", "rA", 1, 0.8, 4.0, "v1"),
        frag("u1", "rA", 1, 0.5, 4.5, "v2"),
        frag("u2", "rA", 1, -0.2, 2.0, "v3"),
        frag("u0", "rB", 1, 0.7, 4.0, "v4"),
        frag("u3", "rB", 2, 0.9, 5.0, "v5"),
    ]

    def test_single_restaurant(self):
        ranked = baseline_recommend(2, self.FRAGS)
        assert ranked == [("rB", 1)]

    def test_count_ordering(self):
        ranked = baseline_recommend(1, self.FRAGS)
        assert ranked == [("rA", 2), ("rB", 1)]

    def test_tie_broken_by_restaurant_id(self):
        frags = [frag("u0", "rB", 1, 0.5, 4.0, "x1"), frag("u1", "rA", 1, 0.5, 4.0, "x2")]
        assert baseline_recommend(1, frags) == [("rA", 1), ("rB", 1)]

    def test_predict_uses_restaurant_share(self):
        # rA: 2 of 3 fragments positive -> 1 + 4*(2/3)
        assert baseline_predict(("rA", 1), self.FRAGS) == pytest.approx(1 + 8 / 3, abs=1e-12)
        assert baseline_predict(("rZ", 1), self.FRAGS, fallback=3.3) == 3.3


class TestBuildMatrix:
    def test_duplicates_averaged(self):
        frags = [
            frag("u0", "rA", 1, 1.0, 4.0, "m1"),
            frag("u0", "rA", 1, -1.0, 4.0, "m2"),
        ]
        matrix = build_rating_matrix(frags, blend_weight=0.5)
        # derived: 5.0 and 3.0 -> averaged 4.0
        assert matrix.ratings[0, 0] == pytest.approx(4.0, abs=1e-12)

    def test_entries_validated(self):
        with pytest.raises(ValueError):
            RatingMatrix.from_entries([("u0", "r0", 0, 7.0)])

    def test_export_deterministic(self, tmp_path):
        frags = [frag("u1", "rB", 2, 0.5, 4.0, "e1"), frag("u0", "rA", 1, -0.5, 2.0, "e2")]
        matrix = build_rating_matrix(frags)
        p1, p2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
        export_matrix(matrix, p1, seed=5)
        export_matrix(matrix, p2, seed=5)
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.read_text().startswith("# seed=5\n")


class TestRecommender:
    def _engine(self):
        frags = [
            frag("u0", "rA", 1, 1.0, 5.0, "a"),
            frag("u1", "rA", 1, 1.0, 4.5, "b"),
            frag("u0", "rB", 1, -1.0, 1.5, "c"),
            frag("u1", "rB", 1, -0.5, 2.0, "d"),
            frag("u0", "rA", 2, 1.0, 5.0, "a"),   # co-mention with item 1
            frag("u1", "rB", 3, 0.5, 4.0, "e"),
        ]
        return Recommender(build_rating_matrix(frags), frags,
                           partition={1: 0, 2: 0, 3: 1})

    def test_lambda_zero_matches_pure_rating_ranking(self):
        engine = self._engine()
        ranked = engine.recommend_top_k("u0", 1, method="user", k=5, side_weight=0.0)
        pure = sorted(
            ((rid, engine.predict("u0", (rid, 1), "user"))
             for rid, item in engine.matrix.columns if item == 1),
            key=lambda rs: (-rs[1], rs[0]),
        )
        assert ranked == pure

    def test_single_restaurant_universe(self):
        frags = [frag("u0", "rOnly", 4, 0.5, 4.0, "z")]
        engine = Recommender(build_rating_matrix(frags), frags)
        for lam in (0.0, 0.2, 1.0):
            assert [r for r, _ in engine.recommend_top_k("u0", 4, "user", 3, lam)] == ["rOnly"]

    def test_side_weight_breaks_ties_by_exact_amount(self):
        frags = [
            frag("u0", "rA", 1, 1.0, 4.0, "p1"),
            frag("u0", "rB", 1, 1.0, 4.0, "p2"),
            frag("u1", "rA", 2, 1.0, 4.0, "p3"),  # community co-member positive at rA only
        ]
        engine = Recommender(build_rating_matrix(frags), frags, partition={1: 0, 2: 0})
        ranked = dict(engine.recommend_top_k("u0", 1, method="user", k=2, side_weight=0.2))
        assert ranked["rA"] - ranked["rB"] == pytest.approx(0.2, abs=1e-12)

    def test_unknown_item(self):
        engine = self._engine()
        with pytest.raises(UnknownItem):
            engine.recommend_top_k("u0", 99, method="user", k=3)

    def test_side_score_fraction(self):
        engine = self._engine()
        # item 1's community = {1, 2}; co-member 2 has a positive fragment at rA
        assert engine.side_score(1, "rA") == 1.0
        assert engine.side_score(1, "rB") == 0.0
        assert engine.side_score(3, "rB") == 0.0  # singleton community
