import math
import random

import numpy as np
import pytest

from mdevsp.model import (
    ChargingStation,
    Depot,
    Instance,
    InstanceError,
    Location,
    SchemaError,
    ServiceTrip,
    VehicleParams,
    derive_matrices,
    fleet_lower_bound,
    instance_from_locations,
    load_instance,
    load_instance_with_report,
    save_instance,
)

from conftest import make_table_instance


def simple_params(**overrides):
    base = dict(
        consumption_rate=1.3,
        s_max=1000.0,
        s_min=10.0,
        s_min_dep=700.0,
        t_min=10.0,
        charge_rate=50.0 / 6.0,
    )
    base.update(overrides)
    return VehicleParams(**base)


class TestDeriveMatrices:
    def test_coincident_locations(self):
        t, d, p = derive_matrices([(3.0, 4.0)], [(3.0, 4.0)], simple_params(), 1.0)
        assert d[0, 0] == 0 and t[0, 0] == 0 and p[0, 0] == 0

    def test_three_four_five(self):
        t, d, p = derive_matrices(
            [(0.0, 0.0), (3.0, 4.0)], [(0.0, 0.0), (3.0, 4.0)], simple_params(), 1.0
        )
        assert d[0, 1] == pytest.approx(5.0)
        assert t[0, 1] == pytest.approx(5.0)
        assert p[0, 1] == pytest.approx(6.5)

    def test_speed_scales_time_only(self):
        t, d, p = derive_matrices([(0.0, 0.0)], [(6.0, 8.0)], simple_params(), 2.0)
        assert d[0, 0] == pytest.approx(10.0)
        assert t[0, 0] == pytest.approx(5.0)

    def test_table_times_equal_distances_at_unit_speed(self, table_instance):
        assert np.array_equal(table_instance.t, table_instance.d)
        # spot values: end of trip 1 to station a2, station a2 to trip 2
        assert table_instance.travel_time(("trip", 1), ("station", "a2")) == 19
        assert table_instance.travel_time(("station", "a2"), ("trip", 2)) == 15


class TestVehicleParams:
    def test_default_t_max(self):
        assert simple_params().t_max == pytest.approx(118.8)

    def test_explicit_t_max_override(self):
        assert simple_params(t_max=120.0).t_max == 120.0

    @pytest.mark.parametrize(
        "overrides",
        [
            dict(consumption_rate=0.0),
            dict(charge_rate=0.0),
            dict(s_min=-1.0),
            dict(s_min=800.0),  # above s_min_dep
            dict(s_min_dep=1200.0),
            dict(t_min=200.0),  # above derived t_max
        ],
    )
    def test_invariant_violations(self, overrides):
        with pytest.raises(InstanceError):
            simple_params(**overrides)


class TestInstanceInvariants:
    def test_p_is_theta_times_d(self, table_instance):
        theta = table_instance.params.consumption_rate
        assert np.allclose(table_instance.p, theta * table_instance.d, rtol=1e-9)

    def test_trip_time_order_enforced(self):
        with pytest.raises(InstanceError):
            ServiceTrip(0, "a", "b", 500, 500, 0, 1.0)

    def test_duration_consistency_enforced(self):
        with pytest.raises(InstanceError):
            ServiceTrip(0, "a", "b", 500, 560, 59, 1.0)

    def test_weights_order_enforced(self, table_instance):
        with pytest.raises(InstanceError):
            Instance(
                table_instance.trips,
                table_instance.depots,
                table_instance.stations,
                table_instance.params,
                table_instance.locations,
                table_instance.t,
                table_instance.d,
                table_instance.p,
                weights=(1.0, 4000.0, 100000.0),
            )

    def test_p_mismatch_rejected(self, table_instance):
        bad_p = table_instance.p.copy()
        bad_p[0, 1] += 0.5
        with pytest.raises(InstanceError):
            Instance(
                table_instance.trips,
                table_instance.depots,
                table_instance.stations,
                table_instance.params,
                table_instance.locations,
                table_instance.t,
                table_instance.d,
                bad_p,
            )

    def test_entity_order_is_canonical(self, table_instance_md):
        order = table_instance_md.entity_order()
        assert order == [
            ("trip", 1), ("trip", 2), ("trip", 3),
            ("origin", 0), ("origin", 1),
            ("dest", 0), ("dest", 1),
            ("station", "a1"), ("station", "a2"),
        ]


class TestPersistence:
    def test_round_trip_identity(self, tmp_path, table_instance):
        path = tmp_path / "i1.json"
        save_instance(table_instance, path)
        assert load_instance(path) == table_instance

    def test_round_trip_two_depots(self, tmp_path, table_instance_md):
        path = tmp_path / "i2.json"
        save_instance(table_instance_md, path)
        assert load_instance(path) == table_instance_md

    def test_missing_field_names_it(self, tmp_path, table_instance):
        import json

        path = tmp_path / "broken.json"
        save_instance(table_instance, path)
        doc = json.loads(path.read_text())
        del doc["trips"][0]["start_time"]
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError) as err:
            load_instance(path)
        assert "start_time" in str(err.value)

    def test_invariant_breach_rejected(self, tmp_path, table_instance):
        import json

        path = tmp_path / "bad.json"
        save_instance(table_instance, path)
        doc = json.loads(path.read_text())
        doc["trips"][0]["start_time"] = doc["trips"][0]["end_time"] + 5
        path.write_text(json.dumps(doc))
        with pytest.raises(InstanceError):
            load_instance(path)

    def test_missing_weights_defaulted_and_flagged(self, tmp_path, table_instance):
        import json

        path = tmp_path / "noweights.json"
        save_instance(table_instance, path)
        doc = json.loads(path.read_text())
        del doc["weights"]
        path.write_text(json.dumps(doc))
        instance, notes = load_instance_with_report(path)
        assert instance.weights == (100000.0, 4000.0, 1.0)
        assert any("weights" in note for note in notes)


def naive_concurrency(trips) -> int:
    """Independent check: count trips covering each candidate time point."""
    best = 0
    for tau in {tr.start_time for tr in trips}:
        best = max(best, sum(1 for tr in trips if tr.start_time <= tau < tr.end_time))
    return best


class TestFleetLowerBound:
    def test_single_trip(self):
        inst = _tiny_instance([(100, 200)])
        assert fleet_lower_bound(inst) == 1

    def test_table_trips_overlap(self, table_instance):
        # trips 2 and 3 overlap on [1025, 1035)
        assert naive_concurrency(table_instance.trips) == 2
        assert fleet_lower_bound(table_instance) == 2

    def test_touching_intervals_do_not_overlap(self):
        inst = _tiny_instance([(100, 200), (200, 300)])
        assert fleet_lower_bound(inst) == 1

    def test_permutation_invariance(self):
        rng = random.Random(5)
        windows = [(100, 300), (150, 250), (240, 400), (390, 500), (120, 130)]
        inst = _tiny_instance(windows)
        reference = fleet_lower_bound(inst)
        ids = list(range(len(windows)))
        for _ in range(10):
            rng.shuffle(ids)
            shuffled = _tiny_instance([windows[i] for i in ids])
            assert fleet_lower_bound(shuffled) == reference

    def test_matches_naive_oracle_on_random_sets(self):
        rng = random.Random(99)
        for _ in range(50):
            windows = []
            for _ in range(rng.randint(1, 8)):
                s = rng.randint(0, 500)
                windows.append((s, s + rng.randint(1, 200)))
            inst = _tiny_instance(windows)
            assert fleet_lower_bound(inst) == naive_concurrency(inst.trips)
            assert 1 <= fleet_lower_bound(inst) <= len(windows)


def _tiny_instance(windows):
    locations = {"X": Location("X", 0.0, 0.0), "K": Location("K", 1.0, 0.0)}
    trips = [
        ServiceTrip(i, "X", "X", s, e, e - s, float(e - s))
        for i, (s, e) in enumerate(windows)
    ]
    params = VehicleParams(1.0, 1e6, 0.0, 0.0, 0.0, 1.0)
    return instance_from_locations(trips, [Depot(0, "K", 99)], [], params, locations)
