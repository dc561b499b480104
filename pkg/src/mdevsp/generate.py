"""Seeded instance generators, technology presets, and scenario transforms.

Two families are produced: square-grid benchmark instances (relief points,
depots and stations uniform in a 60x60 km square, 40/60 short/long trip
mix) and realistic line-based instances (forward/backward trip pairs along
a line with occasional endpoint modifications, in a 50x50 km square).

Randomness uses PCG64 with one stream per draw category, derived from
``SeedSequence([seed, category, ...])`` so instances reproduce bit-exactly
for a fixed seed (and a fixed numpy version).  Category codes:

    1 counts, 2 locations, 3 trips, 4 capacity,
    5 depot-sites, 6 fceb-station, 7 line, 8 combine
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    ChargingStation,
    Depot,
    Instance,
    InstanceError,
    Location,
    ServiceTrip,
    VehicleParams,
    instance_from_locations,
)

_CATEGORY = {
    "counts": 1,
    "locations": 2,
    "trips": 3,
    "capacity": 4,
    "depot-sites": 5,
    "fceb-station": 6,
    "line": 7,
    "combine": 8,
}

SPEED_KM_PER_MIN = 1.0  # 60 km/h average vehicle speed

GENERATOR_NAME = "mdevsp-generator"

SCENARIOS = ("standard", "cold", "battery")

COLD_MULTIPLIER_BEB = 1.14
COLD_MULTIPLIER_FCEB = 1.084 * 1.062


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))


def _uniform_int(rng, lo: float, hi: float) -> int:
    """Uniform integer in the real interval [lo, hi]: ceil of lo, floor of hi."""
    a = math.ceil(lo - 1e-9)
    b = math.floor(hi + 1e-9)
    if a > b:
        raise InstanceError(f"empty integer interval [{lo}, {hi}]")
    return int(rng.integers(a, b + 1))


# -- benchmark family ---------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkSpec:
    n_trips: int
    n_depots: int
    n_stations: int
    seed: int
    square_km: float = 60.0

    def __post_init__(self):
        if self.n_trips < 1 or self.n_depots < 1 or self.n_stations < 0:
            raise InstanceError("benchmark spec counts must be positive")


def benchmark_params() -> VehicleParams:
    return VehicleParams(
        consumption_rate=1.3,
        s_max=1000.0,
        s_min=10.0,
        s_min_dep=0.7 * 1000.0,
        t_min=1000.0 / 100.0,
        charge_rate=50.0 / 6.0,
    )


def sample_trip_kind(rng) -> str:
    return "short" if rng.random() < 0.4 else "long"


def sample_short_start(rng) -> int:
    u = rng.random()
    if u < 0.15:
        return int(rng.integers(420, 481))
    if u < 0.85:
        return int(rng.integers(480, 1021))
    return int(rng.integers(1020, 1081))


def sample_long_start(rng) -> int:
    return int(rng.integers(300, 1201))


def generate_benchmark(spec: BenchmarkSpec) -> Instance:
    """Generate one benchmark instance; identical seeds give identical bytes."""
    n, square = spec.n_trips, spec.square_km
    rng_counts = _rng(spec.seed, _CATEGORY["counts"])
    n_relief = _uniform_int(rng_counts, n / 3, n / 2)

    rng_loc = _rng(spec.seed, _CATEGORY["locations"])
    relief = rng_loc.uniform(0.0, square, size=(n_relief, 2))
    depot_xy = rng_loc.uniform(0.0, square, size=(spec.n_depots, 2))
    station_xy = rng_loc.uniform(0.0, square, size=(spec.n_stations, 2))

    locations = {}
    for i, (x, y) in enumerate(relief):
        locations[f"r{i}"] = Location(f"r{i}", float(x), float(y))
    for k, (x, y) in enumerate(depot_xy):
        locations[f"k{k}"] = Location(f"k{k}", float(x), float(y))
    for a, (x, y) in enumerate(station_xy):
        locations[f"c{a}"] = Location(f"c{a}", float(x), float(y))

    theta = 1.3
    rng_trip = _rng(spec.seed, _CATEGORY["trips"])
    trips = []
    for i in range(n):
        kind = sample_trip_kind(rng_trip)
        if kind == "short":
            s_idx = int(rng_trip.integers(n_relief))
            e_idx = int(rng_trip.integers(n_relief))
            start = sample_short_start(rng_trip)
            d_i = float(np.hypot(*(relief[e_idx] - relief[s_idx])))
            end = _uniform_int(rng_trip, start + d_i + 5, start + d_i + 40)
        else:
            s_idx = e_idx = int(rng_trip.integers(n_relief))
            start = sample_long_start(rng_trip)
            end = _uniform_int(rng_trip, start + 180, start + 300)
        duration = end - start
        trips.append(
            ServiceTrip(
                id=i,
                start_loc=f"r{s_idx}",
                end_loc=f"r{e_idx}",
                start_time=start,
                end_time=end,
                duration=duration,
                energy=theta * duration,
            )
        )

    rng_cap = _rng(spec.seed, _CATEGORY["capacity"])
    K = spec.n_depots
    depots = [
        Depot(k, f"k{k}", _uniform_int(rng_cap, 3 + n / (3 * K), 3 + n / (2 * K)))
        for k in range(K)
    ]
    stations = [ChargingStation(f"a{a}", f"c{a}") for a in range(spec.n_stations)]

    meta = {
        "generator": GENERATOR_NAME,
        "family": "benchmark",
        "seed": spec.seed,
        "n_trips": n,
        "n_depots": spec.n_depots,
        "n_stations": spec.n_stations,
        "scenario": "standard",
    }
    return instance_from_locations(
        trips, depots, stations, benchmark_params(), locations,
        speed_km_per_min=SPEED_KM_PER_MIN, meta=meta,
    )


# -- technology presets --------------------------------------------------------


@dataclass(frozen=True)
class TechnologyPreset:
    name: str
    consumption_rate: float
    s_max: float
    s_min: float
    s_min_dep: float | None  # None: floor(s_max - max station-to-depot energy)
    t_min: float
    charge_rate: float
    t_max: float | None
    has_stations: bool


DB_PRESET = TechnologyPreset(
    name="DB", consumption_rate=0.47, s_max=350.0, s_min=0.0, s_min_dep=0.0,
    t_min=0.0, charge_rate=1.0, t_max=None, has_stations=False,
)
BEB_PRESET = TechnologyPreset(
    name="BEB", consumption_rate=1.46, s_max=445.0, s_min=0.2 * 445.0,
    s_min_dep=0.2 * 445.0, t_min=15.0, charge_rate=130.0 / 60.0, t_max=164.0,
    has_stations=True,
)
FCEB_PRESET = TechnologyPreset(
    name="FCEB", consumption_rate=0.08, s_max=37.0, s_min=0.2 * 37.0,
    s_min_dep=None, t_min=12.0, charge_rate=37.0 / 12.0, t_max=12.0,
    has_stations=True,
)

PRESETS = {p.name: p for p in (DB_PRESET, BEB_PRESET, FCEB_PRESET)}


def preset_params(preset: TechnologyPreset, station_xy=(), depot_xy=()) -> VehicleParams:
    """Materialize VehicleParams; geometry-dependent return floors are derived here."""
    s_min_dep = preset.s_min_dep
    if s_min_dep is None:
        worst = 0.0
        for ax, ay in station_xy:
            for dx, dy in depot_xy:
                worst = max(worst, preset.consumption_rate * math.hypot(ax - dx, ay - dy))
        s_min_dep = math.floor(preset.s_max - worst)
    return VehicleParams(
        consumption_rate=preset.consumption_rate,
        s_max=preset.s_max,
        s_min=preset.s_min,
        s_min_dep=s_min_dep,
        t_min=preset.t_min,
        charge_rate=preset.charge_rate,
        t_max=preset.t_max,
    )


# -- realistic family -----------------------------------------------------------

REALISTIC_SQUARE_KM = 50.0
N_DEPOT_SITES = 3
N_END_CANDIDATES = 200
MIN_LINE_KM = 15.0
BACKWARD_IDLE_MIN = 10

_REALISTIC_START_SEGMENTS = ((300, 420), (480, 1020), (1080, 1410))
_SEGMENT_SIZES = tuple(hi - lo + 1 for lo, hi in _REALISTIC_START_SEGMENTS)


def sample_realistic_start(rng) -> int:
    """Forward-trip start minutes: 15% early peak, 15% late peak, 70% elsewhere."""
    u = rng.random()
    if u < 0.15:
        return int(rng.integers(420, 481))
    if u < 0.30:
        return int(rng.integers(1020, 1081))
    idx = int(rng.integers(sum(_SEGMENT_SIZES)))
    for (lo, hi), size in zip(_REALISTIC_START_SEGMENTS, _SEGMENT_SIZES):
        if idx < size:
            return lo + idx
        idx -= size
    raise AssertionError("unreachable")


def depot_sites(family_seed: int = 0) -> np.ndarray:
    rng = _rng(family_seed, _CATEGORY["depot-sites"])
    return rng.uniform(0.0, REALISTIC_SQUARE_KM, size=(N_DEPOT_SITES, 2))


def fceb_station_site(family_seed: int = 0) -> np.ndarray:
    rng = _rng(family_seed, _CATEGORY["fceb-station"])
    return rng.uniform(0.0, REALISTIC_SQUARE_KM, size=2)


def _disk_point(rng, center, radius):
    angle = rng.uniform(0.0, 2.0 * math.pi)
    r = radius * math.sqrt(rng.uniform(0.0, 1.0))
    return (center[0] + r * math.cos(angle), center[1] + r * math.sin(angle))


def generate_realistic_base(line_id: int, n_trips: int, tech: str, seed: int, family_seed: int = 0) -> Instance:
    """One bus line: forward/backward trip pairs, a single depot, tech preset."""
    if tech not in PRESETS:
        raise InstanceError(f"unknown technology {tech!r}; expected one of {sorted(PRESETS)}")
    if n_trips < 2 or n_trips % 2 != 0:
        raise InstanceError("realistic instances need an even number of trips >= 2")
    preset = PRESETS[tech]
    m = n_trips // 2

    sites = depot_sites(family_seed)
    rng = _rng(seed, _CATEGORY["line"], line_id)

    site_idx = int(rng.integers(N_DEPOT_SITES))
    depot_pt = tuple(float(v) for v in sites[site_idx])

    start_pt = tuple(rng.uniform(0.0, REALISTIC_SQUARE_KM, size=2))
    while True:
        target = rng.normal(MIN_LINE_KM, 15.0)
        if target >= MIN_LINE_KM:
            break
    candidates = rng.uniform(0.0, REALISTIC_SQUARE_KM, size=(N_END_CANDIDATES, 2))
    dists = np.hypot(candidates[:, 0] - start_pt[0], candidates[:, 1] - start_pt[1])
    end_pt = tuple(float(v) for v in candidates[int(np.argmin(np.abs(dists - target)))])
    d_line = math.hypot(end_pt[0] - start_pt[0], end_pt[1] - start_pt[1])

    u_line = rng.uniform(1.7 * d_line, 3.0 * d_line)
    kappa = u_line / d_line

    frac = rng.uniform(0.03, 0.17)
    count = int(round(frac * n_trips))
    count = min(max(count, math.ceil(0.03 * n_trips)), math.floor(0.17 * n_trips))
    modified = set(int(v) for v in rng.choice(n_trips, size=count, replace=False)) if count else set()

    locations = {}

    def _loc(lid, pt):
        if lid not in locations:
            locations[lid] = Location(lid, float(pt[0]), float(pt[1]))
        return lid

    depot_loc = _loc(f"depot_site{site_idx}", depot_pt)
    line_start = _loc(f"l{line_id}_s", start_pt)
    line_end = _loc(f"l{line_id}_e", end_pt)

    # geometry per trip as (start loc id, end loc id): forward trips run
    # start->end, backward trips the reverse; modified trips get relocated
    # endpoints of their own
    geometry = []
    for idx in range(n_trips):
        geometry.append([line_start, line_end] if idx < m else [line_end, line_start])
    for idx in sorted(modified):
        mode = int(rng.integers(3))  # 0: start, 1: end, 2: both
        if mode in (0, 2):
            base = locations[geometry[idx][0]]
            geometry[idx][0] = _loc(f"l{line_id}_m{idx}_s", _disk_point(rng, (base.x, base.y), d_line / 2.0))
        if mode in (1, 2):
            base = locations[geometry[idx][1]]
            geometry[idx][1] = _loc(f"l{line_id}_m{idx}_e", _disk_point(rng, (base.x, base.y), d_line / 2.0))

    def trip_duration(idx):
        a = locations[geometry[idx][0]]
        b = locations[geometry[idx][1]]
        base = kappa * math.hypot(b.x - a.x, b.y - a.y)
        return max(1, int(round(rng.uniform(0.9 * base, 1.1 * base))))

    trips = []
    theta = preset.consumption_rate
    for i in range(m):
        fwd, bwd = i, m + i
        dur_f = trip_duration(fwd)
        dur_b = trip_duration(bwd)
        s_f = sample_realistic_start(rng)
        e_f = s_f + dur_f
        s_b = e_f + BACKWARD_IDLE_MIN
        e_b = s_b + dur_b
        for idx, s, e in ((fwd, s_f, e_f), (bwd, s_b, e_b)):
            trips.append((idx, s, e))

    trip_objs = []
    for idx, s, e in sorted(trips):
        trip_objs.append(
            ServiceTrip(
                id=line_id * 1000 + idx,
                start_loc=geometry[idx][0],
                end_loc=geometry[idx][1],
                start_time=int(s),
                end_time=int(e),
                duration=int(e - s),
                energy=theta * (e - s),
            )
        )

    stations = []
    station_xy = []
    if preset.has_stations:
        if tech == "BEB":
            sid = f"a_dep{site_idx}"
            stations.append(ChargingStation(sid, depot_loc))
            station_xy.append(depot_pt)
        else:  # FCEB: one shared off-site hydrogen station
            h2 = tuple(float(v) for v in fceb_station_site(family_seed))
            sid = "a_h2"
            stations.append(ChargingStation(sid, _loc("h2_site", h2)))
            station_xy.append(h2)

    capacity = _uniform_int(rng, 3 + n_trips / 3, 3 + n_trips / 2)
    depots = [Depot(0, depot_loc, capacity)]
    params = preset_params(preset, station_xy, [depot_pt])

    meta = {
        "generator": GENERATOR_NAME,
        "family": "realistic",
        "line_id": line_id,
        "seed": seed,
        "family_seed": family_seed,
        "tech": tech,
        "scenario": "standard",
        "depot_site": site_idx,
    }
    return instance_from_locations(
        trip_objs, depots, stations, params, locations,
        speed_km_per_min=SPEED_KM_PER_MIN, meta=meta,
    )


# -- combining and scenarios ------------------------------------------------------


def combine_instances(members, seed: int | None = None) -> Instance:
    """Merge base instances: union of trips, depots/stations deduplicated by location."""
    if len(members) < 2:
        raise InstanceError("need at least two instances to combine")
    techs = {m.meta.get("tech") for m in members}
    if len(techs) != 1 or None in techs:
        raise InstanceError(f"cannot combine mixed or unknown technologies: {techs}")
    tech = techs.pop()
    scenarios = {m.meta.get("scenario", "standard") for m in members}
    if len(scenarios) != 1:
        raise InstanceError(f"cannot combine mixed scenarios: {scenarios}")
    weights = members[0].weights
    if any(m.weights != weights for m in members):
        raise InstanceError("cannot combine instances with different objective weights")

    trips = []
    seen_ids = set()
    for member in members:
        for tr in member.trips:
            if tr.id in seen_ids:
                raise InstanceError(f"duplicate trip id {tr.id} while combining")
            seen_ids.add(tr.id)
            trips.append(tr)

    locations = {}
    for member in members:
        for lid, loc in member.locations.items():
            if lid in locations and (locations[lid].x, locations[lid].y) != (loc.x, loc.y):
                raise InstanceError(f"conflicting coordinates for location {lid!r}")
            locations[lid] = loc

    def _dedupe(entries):
        kept, seen = [], set()
        for lid in entries:
            loc = locations[lid]
            key = (loc.x, loc.y)
            if key not in seen:
                seen.add(key)
                kept.append(lid)
        return kept

    depot_locs = _dedupe([dp.location for m in members for dp in m.depots])
    station_entries = []
    seen_xy = set()
    for member in members:
        for st in member.stations:
            loc = locations[st.location]
            if (loc.x, loc.y) not in seen_xy:
                seen_xy.add((loc.x, loc.y))
                station_entries.append(st)

    if seed is None:
        seed = 0
        for member in members:
            seed = (seed * 1_000_003 + int(member.meta.get("seed", 0)) * 31
                    + int(member.meta.get("line_id", 0))) % (2**31)
    rng = _rng(seed, _CATEGORY["combine"])
    n, K = len(trips), len(depot_locs)
    depots = [
        Depot(k, lid, _uniform_int(rng, 3 + n / (3 * K), 3 + n / (2 * K)))
        for k, lid in enumerate(depot_locs)
    ]

    params = members[0].params
    if tech == "FCEB":
        station_xy = [(locations[st.location].x, locations[st.location].y) for st in station_entries]
        depot_xy = [(locations[lid].x, locations[lid].y) for lid in depot_locs]
        params = preset_params(FCEB_PRESET, station_xy, depot_xy)
    else:
        mismatched = [m for m in members if m.params != params]
        if mismatched:
            raise InstanceError("cannot combine instances with differing vehicle parameters")

    meta = {
        "generator": GENERATOR_NAME,
        "family": "realistic-combined",
        "tech": tech,
        "scenario": scenarios.pop() if scenarios else "standard",
        "seed": seed,
        "combined_from": [m.meta.get("line_id") for m in members],
    }
    return instance_from_locations(
        trips, depots, station_entries, params, locations,
        speed_km_per_min=SPEED_KM_PER_MIN, meta=meta,
    )


def apply_scenario(instance: Instance, scenario: str) -> Instance:
    """Return a new instance under a named operating condition.

    ``cold`` scales the consumption rate (and thus all p and q values);
    ``battery`` narrows the usable state-of-charge window of BEBs.
    """
    if scenario not in SCENARIOS:
        raise InstanceError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    tech = instance.meta.get("tech")
    meta = dict(instance.meta)
    if scenario == "standard":
        meta["scenario"] = "standard"
        return Instance(
            trips=list(instance.trips), depots=list(instance.depots),
            stations=list(instance.stations), params=instance.params,
            locations=dict(instance.locations), t=instance.t.copy(),
            d=instance.d.copy(), p=instance.p.copy(),
            weights=instance.weights, meta=meta,
        )
    if instance.meta.get("scenario", "standard") != "standard":
        raise InstanceError("instance already carries a non-standard scenario")

    params = instance.params
    trips = list(instance.trips)
    p = instance.p
    if scenario == "cold":
        if tech == "BEB":
            mult = COLD_MULTIPLIER_BEB
        elif tech == "FCEB":
            mult = COLD_MULTIPLIER_FCEB
        else:
            raise InstanceError("cold scenario applies to BEB and FCEB instances only")
        new_theta = params.consumption_rate * mult
        params = VehicleParams(
            consumption_rate=new_theta,
            s_max=params.s_max,
            s_min=params.s_min,
            s_min_dep=params.s_min_dep,
            t_min=params.t_min,
            charge_rate=params.charge_rate,
            t_max=params.t_max,
        )
        trips = [replace(tr, energy=tr.energy * mult) for tr in trips]
        p = new_theta * instance.d
    else:  # battery preservation
        if tech != "BEB":
            raise InstanceError("battery preservation applies to BEB instances only")
        s_max_new = 0.9 * params.s_max
        s_min_new = 0.3 * params.s_max
        params = VehicleParams(
            consumption_rate=params.consumption_rate,
            s_max=s_max_new,
            s_min=s_min_new,
            s_min_dep=max(params.s_min_dep, s_min_new),
            t_min=params.t_min,
            charge_rate=params.charge_rate,
            t_max=None,  # re-derived from the narrowed window
        )
    meta["scenario"] = scenario
    return Instance(
        trips=trips,
        depots=list(instance.depots),
        stations=list(instance.stations),
        params=params,
        locations=dict(instance.locations),
        t=instance.t.copy(),
        d=instance.d.copy(),
        p=p.copy() if p is not instance.p else instance.p.copy(),
        weights=instance.weights,
        meta=meta,
    )
