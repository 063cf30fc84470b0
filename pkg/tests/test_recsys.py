import json
import math
import random

import numpy as np
import pytest

from airsense.aqi_field import AqiSample, fit_field
from airsense.errors import ConditioningError
from airsense.geo import EARTH_RADIUS_M
from airsense.recsys import (
    MfModel,
    Poi,
    Rating,
    RecQuery,
    ScoredPoi,
    aqi_score,
    haversine_m,
    predict_rating,
    recommend,
    train_mf,
)
from airsense.seeding import substream
from conftest import BARI


def planted_ratings(seed, scale=1.2, noise=0.1, n_users=50, n_items=40, density=0.3):
    rng = substream(seed, "planted")
    user_factors = rng.normal(0, 1, (n_users, 4)) / 2
    item_factors = rng.normal(0, 1, (n_items, 4)) / 2
    train, holdout = [], []
    for u in range(n_users):
        for i in range(n_items):
            if rng.uniform() < density:
                value = 3.0 + float(user_factors[u] @ item_factors[i]) * scale
                value = min(5.0, max(1.0, value + noise * float(rng.normal())))
                r = Rating(f"u{u:03d}", f"p{i:03d}", value)
                (holdout if rng.uniform() < 0.2 else train).append(r)
    return train, holdout


def grid_pois(n=12, spread=0.004):
    rng = random.Random(31)
    return [
        Poi(f"p{k:03d}", f"Cafe {k}", "cafe",
            BARI[0] + rng.uniform(-spread, spread), BARI[1] + rng.uniform(-spread, spread))
        for k in range(n)
    ]


@pytest.fixture(scope="module")
def demo_field():
    samples = [
        AqiSample(BARI[0] + 0.003, BARI[1], 25.0),
        AqiSample(BARI[0] - 0.003, BARI[1] + 0.003, 55.0),
        AqiSample(BARI[0], BARI[1] - 0.004, 40.0),
        AqiSample(BARI[0] + 0.002, BARI[1] + 0.004, 65.0),
    ]
    return fit_field(samples)


class TestTrainMf:
    def test_single_rating_fits_tightly(self):
        model = train_mf([Rating("u1", "p1", 5.0)])
        assert abs(5.0 - predict_rating(model, "u1", "p1")) < 0.1

    def test_same_seed_bitwise_identical(self):
        ratings = planted_ratings(4)[0][:100]
        a = train_mf(ratings, epochs=5, seed=9)
        b = train_mf(ratings, epochs=5, seed=9)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())

    def test_different_seed_differs(self):
        ratings = planted_ratings(4)[0][:100]
        a = train_mf(ratings, epochs=5, seed=9)
        b = train_mf(ratings, epochs=5, seed=10)
        assert json.dumps(a.to_dict()) != json.dumps(b.to_dict())

    def test_planted_model_recovered(self):
        train, holdout = planted_ratings(3)
        model = train_mf(train, dimension=4, lr=0.1, reg=0.05, epochs=500, seed=3)
        mae = float(np.mean([
            abs(r.value - predict_rating(model, r.user_id, r.poi_id)) for r in holdout
        ]))
        assert mae < 0.35

    def test_empty_ratings_rejected(self):
        with pytest.raises(ValueError):
            train_mf([])

    def test_divergence_advises_lower_lr(self):
        ratings = planted_ratings(4)[0][:50]
        with pytest.raises(ConditioningError, match="learning rate"):
            train_mf(ratings, lr=50.0, epochs=30)


class TestPredictRating:
    def test_cold_start_both_unknown(self):
        model = train_mf([Rating("u1", "p1", 4.0), Rating("u2", "p1", 2.0)], epochs=5)
        assert predict_rating(model, "ghost", "phantom") == pytest.approx(model.global_mean)

    def test_cold_start_unknown_user_uses_item_bias(self):
        model = train_mf([Rating("u1", "p1", 5.0), Rating("u2", "p2", 1.0)], epochs=20)
        expected = min(5.0, max(1.0, model.global_mean + model.item_bias["p1"]))
        assert predict_rating(model, "ghost", "p1") == pytest.approx(expected)

    def test_cold_start_unknown_item_uses_user_bias(self):
        model = train_mf([Rating("u1", "p1", 5.0), Rating("u2", "p2", 1.0)], epochs=20)
        expected = min(5.0, max(1.0, model.global_mean + model.user_bias["u1"]))
        assert predict_rating(model, "u1", "phantom") == pytest.approx(expected)

    def test_overfit_single_pair(self):
        model = train_mf([Rating("u1", "p1", 5.0)], epochs=30)
        assert predict_rating(model, "u1", "p1") >= 4.9

    def test_clamped_for_random_models(self):
        rng = substream(0, "clamp")
        model = MfModel(
            dimension=4,
            global_mean=3.0,
            user_bias={"u": 50.0},
            item_bias={"p": -50.0},
            user_vecs={"u": rng.normal(0, 5, 4)},
            item_vecs={"p": rng.normal(0, 5, 4)},
        )
        for user in ("u", "x"):
            for poi in ("p", "y"):
                assert 1.0 <= predict_rating(model, user, poi) <= 5.0

    def test_model_round_trips_through_dict(self):
        model = train_mf(planted_ratings(4)[0][:60], epochs=5, seed=2)
        clone = MfModel.from_dict(json.loads(json.dumps(model.to_dict())))
        assert predict_rating(clone, "u001", "p001") == predict_rating(model, "u001", "p001")
        assert clone.global_mean == model.global_mean


class TestHaversine:
    def test_zero_distance(self):
        assert haversine_m(BARI[0], BARI[1], BARI[0], BARI[1]) == 0.0

    def test_equatorial_antipodes(self):
        assert haversine_m(0.0, 0.0, 0.0, 180.0) == pytest.approx(math.pi * EARTH_RADIUS_M, abs=1.0)

    def test_hundredth_degree_north_of_bari(self):
        # 0.01 deg of latitude is R * pi/180 / 100 meters on the sphere.
        expected = EARTH_RADIUS_M * math.pi / 180.0 * 0.01
        assert haversine_m(41.1258, 16.8674, 41.1358, 16.8674) == pytest.approx(expected, abs=1.0)
        assert expected == pytest.approx(1111.9, abs=1.0)

    def test_symmetry(self):
        rng = random.Random(2)
        for _ in range(50):
            a = (rng.uniform(-89, 89), rng.uniform(-179, 179))
            b = (rng.uniform(-89, 89), rng.uniform(-179, 179))
            assert haversine_m(*a, *b) == haversine_m(*b, *a)


@pytest.fixture(scope="module")
def model():
    rng = substream(1, "rec-model")
    ratings = []
    pois = grid_pois()
    for u in range(6):
        for poi in pois:
            if rng.uniform() < 0.7:
                ratings.append(Rating(f"u{u}", poi.id, float(rng.integers(1, 6))))
    return train_mf(ratings, epochs=20, seed=1)


class TestRecommend:

    def test_alpha_zero_orders_by_ascending_aqi(self, model, demo_field):
        pois = grid_pois()
        query = RecQuery("u0", *BARI, radius_m=2000.0, alpha=0.0, limit=50)
        result = recommend(model, demo_field, pois, query)
        expected = sorted(result, key=lambda sp: (sp.aqi_at_poi, sp.poi.id))
        assert [sp.poi.id for sp in result] == [sp.poi.id for sp in expected]

    def test_alpha_one_orders_by_predicted_rating(self, model, demo_field):
        pois = grid_pois()
        query = RecQuery("u0", *BARI, radius_m=2000.0, alpha=1.0, limit=50)
        result = recommend(model, demo_field, pois, query)
        expected = sorted(result, key=lambda sp: (-sp.predicted_rating, sp.poi.id))
        assert [sp.poi.id for sp in result] == [sp.poi.id for sp in expected]

    def test_balanced_two_poi_hand_computation(self, demo_field):
        # Place B on the clean side, A on the polluted side, but give A the
        # taste edge: the 0.5 blend must pick the hand-computed winner.
        model = MfModel(
            dimension=1,
            global_mean=3.0,
            user_bias={"u": 0.0},
            item_bias={"A": 1.6, "B": -0.4},
            user_vecs={"u": np.zeros(1)},
            item_vecs={"A": np.zeros(1), "B": np.zeros(1)},
        )
        poi_a = Poi("A", "A", "cafe", BARI[0] + 0.002, BARI[1] + 0.004)
        poi_b = Poi("B", "B", "cafe", BARI[0] + 0.003, BARI[1])
        query = RecQuery("u", *BARI, radius_m=2000.0, alpha=0.5, limit=2)
        result = recommend(model, demo_field, [poi_a, poi_b], query)
        by_id = {sp.poi.id: sp for sp in result}
        s_a = 0.5 * (by_id["A"].predicted_rating - 1) / 4 + 0.5 * (300 - by_id["A"].aqi_at_poi) / 300
        s_b = 0.5 * (by_id["B"].predicted_rating - 1) / 4 + 0.5 * (300 - by_id["B"].aqi_at_poi) / 300
        winner = "A" if s_a > s_b else "B"
        assert result[0].poi.id == winner
        assert by_id["A"].s == pytest.approx(s_a, abs=1e-12)
        assert by_id["B"].s == pytest.approx(s_b, abs=1e-12)

    def test_radius_filter_matches_brute_force(self, model, demo_field):
        pois = grid_pois(40, spread=0.02)
        for radius in (300.0, 800.0, 1500.0):
            query = RecQuery("u0", *BARI, radius_m=radius, alpha=0.5, limit=100)
            got = {sp.poi.id for sp in recommend(model, demo_field, pois, query)}
            expected = {
                p.id for p in pois
                if haversine_m(BARI[0], BARI[1], p.latitude, p.longitude) <= radius
            }
            assert got == expected

    def test_empty_radius_returns_empty(self, model, demo_field):
        query = RecQuery("u0", *BARI, radius_m=0.001, alpha=0.5, limit=5)
        assert recommend(model, demo_field, grid_pois(), query) == []

    def test_blend_identity_and_affinity_in_alpha(self, model, demo_field):
        pois = grid_pois()
        per_alpha = {}
        for alpha in [k / 10 for k in range(11)]:
            query = RecQuery("u1", *BARI, radius_m=2000.0, alpha=alpha, limit=50)
            result = recommend(model, demo_field, pois, query)
            for sp in result:
                assert sp.s == pytest.approx(alpha * sp.s_mf + (1 - alpha) * sp.s_aqi, abs=1e-12)
                assert sp.s_mf == pytest.approx((sp.predicted_rating - 1) / 4, abs=1e-12)
                per_alpha.setdefault(sp.poi.id, {})[alpha] = (sp.s_mf, sp.s_aqi)
        for scores in per_alpha.values():
            (mf0, aqi0) = scores[0.0]
            for alpha, (mf, aqi) in scores.items():
                assert mf == mf0 and aqi == aqi0  # components independent of alpha

    def test_alpha_zero_is_user_independent(self, model, demo_field):
        pois = grid_pois()
        lists = []
        for user in ("u0", "u1", "nobody"):
            query = RecQuery(user, *BARI, radius_m=2000.0, alpha=0.0, limit=50)
            lists.append([sp.poi.id for sp in recommend(model, demo_field, pois, query)])
        assert lists[0] == lists[1] == lists[2]

    def test_limit_truncates_after_sort(self, model, demo_field):
        pois = grid_pois()
        full = recommend(model, demo_field, pois, RecQuery("u0", *BARI, 2000.0, 0.4, 50))
        top3 = recommend(model, demo_field, pois, RecQuery("u0", *BARI, 2000.0, 0.4, 3))
        assert [sp.poi.id for sp in top3] == [sp.poi.id for sp in full[:3]]

    def test_deterministic(self, model, demo_field):
        pois = grid_pois()
        q = RecQuery("u2", *BARI, 2000.0, 0.7, 10)
        assert recommend(model, demo_field, pois, q) == recommend(model, demo_field, pois, q)

    def test_aqi_score_normalization(self):
        assert aqi_score(0.0) == 1.0
        assert aqi_score(300.0) == 0.0
        assert aqi_score(450.0) == 0.0
        assert aqi_score(150.0) == pytest.approx(0.5)

    def test_query_validation(self):
        with pytest.raises(ValueError):
            RecQuery("u", *BARI, alpha=1.5)
        with pytest.raises(ValueError):
            RecQuery("u", *BARI, radius_m=-5.0)
        with pytest.raises(ValueError):
            RecQuery("u", *BARI, limit=0)
        with pytest.raises(ValueError):
            Rating("u", "p", 6.0)
