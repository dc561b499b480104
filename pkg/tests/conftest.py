import numpy as np
import pytest

from mdevsp.model import (
    ChargingStation,
    Depot,
    Instance,
    Location,
    ServiceTrip,
    VehicleParams,
    instance_from_locations,
)

# Worked example: travel times between three service trips, two depot sites,
# and two charging stations.  Row/column order: t1 t2 t3 dep1 dep2 a1 a2;
# entry (i, j) is the time from the end location of i to the start location
# of j.  Distances equal times (1 km per minute).
TABLE_T = np.array(
    [
        [0, 28, 5, 34, 15, 28, 19],
        [28, 0, 5, 34, 15, 28, 19],
        [35, 35, 0, 7, 49, 32, 23],
        [40, 40, 29, 0, 47, 26, 26],
        [39, 39, 19, 47, 0, 33, 34],
        [50, 50, 24, 20, 30, 0, 36],
        [15, 15, 16, 26, 34, 35, 0],
    ],
    dtype=float,
)

TABLE_THETA = 1.3


def make_table_instance(two_depots: bool = False) -> Instance:
    """Three timetabled trips, full travel matrix given explicitly."""
    idx = {"t1": 0, "t2": 1, "t3": 2, "dep1": 3, "dep2": 4, "a1": 5, "a2": 6}
    if two_depots:
        order = ["t1", "t2", "t3", "dep1", "dep2", "dep1", "dep2", "a1", "a2"]
    else:
        order = ["t1", "t2", "t3", "dep1", "dep1", "a1", "a2"]
    n = len(order)
    t = np.zeros((n, n))
    for i, a in enumerate(order):
        for j, b in enumerate(order):
            t[i, j] = TABLE_T[idx[a], idx[b]]
    d = t.copy()
    p = TABLE_THETA * d
    params = VehicleParams(
        consumption_rate=TABLE_THETA,
        s_max=1000.0,
        s_min=10.0,
        s_min_dep=700.0,
        t_min=10.0,
        charge_rate=50.0 / 6.0,
        t_max=120.0,
    )
    loc_names = ["L1s", "L1e", "L2s", "L2e", "L3s", "L3e", "D1", "D2", "A1", "A2"]
    locations = {name: Location(name, 0.0, 0.0) for name in loc_names}
    trips = [
        ServiceTrip(1, "L1s", "L1e", 795, 840, 45, TABLE_THETA * 45),
        ServiceTrip(2, "L2s", "L2e", 990, 1035, 45, TABLE_THETA * 45),
        ServiceTrip(3, "L3s", "L3e", 1025, 1110, 85, TABLE_THETA * 85),
    ]
    depots = [Depot(0, "D1", 3)]
    if two_depots:
        depots.append(Depot(1, "D2", 3))
    stations = [ChargingStation("a1", "A1"), ChargingStation("a2", "A2")]
    return Instance(trips, depots, stations, params, locations, t, d, p)


@pytest.fixture
def table_instance():
    return make_table_instance()


@pytest.fixture
def table_instance_md():
    return make_table_instance(two_depots=True)


def make_crossing_instance() -> Instance:
    """Two depots far apart, two concurrent trips laid out so that crossed
    depot pairing is much cheaper: the 2-index base optimum must cross."""
    locations = {
        "D1": Location("D1", 0.0, 0.0),
        "D2": Location("D2", 100.0, 0.0),
        "As": Location("As", 0.0, 1.0),
        "Ae": Location("Ae", 100.0, 1.0),
        "Bs": Location("Bs", 100.0, 2.0),
        "Be": Location("Be", 0.0, 2.0),
    }
    params = VehicleParams(1.0, 1000.0, 0.0, 0.0, 10.0, 10.0)
    trips = [
        ServiceTrip(0, "As", "Ae", 480, 600, 120, 120.0),
        ServiceTrip(1, "Bs", "Be", 500, 620, 120, 120.0),
    ]
    depots = [Depot(0, "D1", 2), Depot(1, "D2", 2)]
    return instance_from_locations(trips, depots, [], params, locations)


@pytest.fixture
def crossing_instance():
    return make_crossing_instance()


def make_corruption_instance() -> Instance:
    """Two depots with unit capacity; forced charging before every return.

    Trips A and B run concurrently near different depots, trip E follows A
    with a slack too small for charging in between (3 min < t_min = 5).
    """
    locations = {
        "D1": Location("D1", 0.0, 0.0),
        "D2": Location("D2", 60.0, 0.0),
        "C1": Location("C1", 0.0, 5.0),
        "C2": Location("C2", 60.0, 5.0),
        "As": Location("As", 0.0, 2.0),
        "Ae": Location("Ae", 0.0, 4.0),
        "Es": Location("Es", 0.0, 6.0),
        "Ee": Location("Ee", 0.0, 8.0),
        "Bs": Location("Bs", 60.0, 2.0),
        "Be": Location("Be", 60.0, 4.0),
    }
    params = VehicleParams(
        consumption_rate=1.0,
        s_max=200.0,
        s_min=10.0,
        s_min_dep=190.0,
        t_min=5.0,
        charge_rate=10.0,
    )  # t_max = 19
    trips = [
        ServiceTrip(0, "As", "Ae", 480, 540, 60, 60.0),   # A
        ServiceTrip(1, "Es", "Ee", 545, 605, 60, 60.0),   # E, tight after A
        ServiceTrip(2, "Bs", "Be", 480, 540, 60, 60.0),   # B
    ]
    depots = [Depot(0, "D1", 1), Depot(1, "D2", 1)]
    stations = [ChargingStation("c1", "C1"), ChargingStation("c2", "C2")]
    return instance_from_locations(trips, depots, stations, params, locations)


@pytest.fixture
def corruption_instance():
    return make_corruption_instance()


def corruption_catalog(schedules):
    """Six corruption kinds, 20 corrupted solutions in total.

    ``schedules`` must come from make_corruption_instance: one schedule per
    depot, a charge event in each, trips 0 and 1 chained on the depot-0
    vehicle.  Returns (name, corrupted schedules, acceptable codes) tuples.
    """
    import copy

    def fresh():
        return copy.deepcopy(schedules)

    def by_depot(scheds, k):
        for s in scheds:
            if s[0] == ("origin", k):
                return s
        raise AssertionError(f"no schedule for depot {k}")

    cases = []

    # 1. depot swap (3 cases)
    for swapped in ((0,), (1,), (0, 1)):
        scheds = fresh()
        for k in swapped:
            sched = by_depot(scheds, k)
            sched[-1] = ("dest", 1 - k)
        cases.append((f"depot_swap_{swapped}", scheds, {"DEPOT_MISMATCH"}))

    # 2. trip drop, removing a directly following charge with it (3 cases)
    for trip_id in (0, 1, 2):
        scheds = fresh()
        for sched in scheds:
            for pos, el in enumerate(sched):
                if el == ("trip", trip_id):
                    end = pos + 1
                    if end < len(sched) and sched[end][0] == "charge":
                        end += 1
                    del sched[pos:end]
                    break
            else:
                continue
            break
        cases.append((f"trip_drop_{trip_id}", scheds, {"TRIP_NOT_COVERED"}))

    # 3. trip duplication into the other depot's schedule (3 cases)
    for trip_id, k in ((0, 1), (1, 1), (2, 0)):
        scheds = fresh()
        by_depot(scheds, k).insert(1, ("trip", trip_id))
        cases.append((f"trip_dup_{trip_id}", scheds, {"TRIP_MULTIPLE_COVER"}))

    # 4. SOC overdraw: zero, halve, or remove the charging events (5 cases)
    for k in (0, 1):
        scheds = fresh()
        sched = by_depot(scheds, k)
        for pos, el in enumerate(sched):
            if el[0] == "charge":
                sched[pos] = (el[0], el[1], 0.0)
        cases.append((f"soc_overdraw_zero_{k}", scheds, {"SOC_BELOW_MIN", "SOC_BELOW_DEPOT_MIN"}))
    for k in (0, 1):
        scheds = fresh()
        sched = by_depot(scheds, k)
        for pos, el in enumerate(sched):
            if el[0] == "charge":
                sched[pos] = (el[0], el[1], el[2] / 2.0)
        cases.append((f"soc_overdraw_half_{k}", scheds, {"SOC_BELOW_MIN", "SOC_BELOW_DEPOT_MIN"}))
    scheds = fresh()
    sched = by_depot(scheds, 0)
    for pos in range(len(sched) - 1, -1, -1):
        if sched[pos][0] == "charge":
            del sched[pos]
    cases.append(("soc_overdraw_removed", scheds, {"SOC_BELOW_MIN", "SOC_BELOW_DEPOT_MIN"}))

    # 5. dwell below minimum: charge squeezed into the 3-minute slack (4 cases)
    for amount in (0.5, 2.0, 5.0, 8.0):
        scheds = fresh()
        sched = by_depot(scheds, 0)
        pos = sched.index(("trip", 0))
        sched.insert(pos + 1, ("charge", "c1", amount))
        cases.append((f"dwell_{amount}", scheds, {"DWELL_BELOW_MIN"}))

    # 6. depot capacity breach: both vehicles on one depot (2 cases)
    for k in (0, 1):
        scheds = fresh()
        sched = by_depot(scheds, 1 - k)
        sched[0] = ("origin", k)
        sched[-1] = ("dest", k)
        cases.append((f"capacity_breach_{k}", scheds, {"DEPOT_CAPACITY_EXCEEDED"}))

    assert len(cases) == 20
    return cases
