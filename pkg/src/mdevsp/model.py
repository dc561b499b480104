"""Problem data for multi-depot electric vehicle scheduling.

An :class:`Instance` bundles timetabled service trips, depots, charging
stations, vehicle parameters and the travel/distance/energy matrices over
all of them.  Times are integer minutes since midnight, distances are
kilometres, energies are in the unit implied by the consumption rate.

Matrices are indexed by a canonical entity ordering: service trips by id,
then origin depots by index, then destination depots by index, then
charging stations by id.  Entry (i, j) always refers to the move from the
*end* location of entity i to the *start* location of entity j.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

DEFAULT_WEIGHTS = (100_000.0, 4_000.0, 1.0)

_ID_RE = re.compile(r"^[A-Za-z0-9_]+$")


class SchemaError(ValueError):
    """An instance file does not match the documented JSON schema."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"field '{field_name}': {message}")


class InstanceError(ValueError):
    """Instance data violates a model invariant."""


@dataclass(frozen=True)
class Location:
    id: str
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InstanceError(f"location {self.id!r} has non-finite coordinates")


@dataclass(frozen=True)
class ServiceTrip:
    """A timetabled trip that must be covered by exactly one vehicle."""

    id: int
    start_loc: str
    end_loc: str
    start_time: int
    end_time: int
    duration: int
    energy: float

    def __post_init__(self):
        if self.start_time >= self.end_time:
            raise InstanceError(f"trip {self.id}: start_time must precede end_time")
        if self.duration != self.end_time - self.start_time:
            raise InstanceError(f"trip {self.id}: duration != end_time - start_time")
        if self.energy < 0:
            raise InstanceError(f"trip {self.id}: negative energy usage")


@dataclass(frozen=True)
class Depot:
    index: int
    location: str
    capacity: int

    def __post_init__(self):
        if self.capacity < 1:
            raise InstanceError(f"depot {self.index}: capacity must be >= 1")


@dataclass(frozen=True)
class ChargingStation:
    id: str
    location: str


@dataclass(frozen=True)
class VehicleParams:
    """Single-vehicle-type energy and charging parameters.

    ``t_max`` (minutes to charge from floor to full capacity) defaults to
    ``(s_max - s_min) / charge_rate`` but may be set explicitly when the
    technology fixes it independently of that derivation.
    """

    consumption_rate: float  # energy per km
    s_max: float             # capacity
    s_min: float             # floor en route
    s_min_dep: float         # floor at depot return
    t_min: float             # minimum charging dwell, minutes
    charge_rate: float       # energy per minute
    t_max: float | None = None

    def __post_init__(self):
        if self.consumption_rate <= 0:
            raise InstanceError("consumption_rate must be positive")
        if self.charge_rate <= 0:
            raise InstanceError("charge_rate must be positive")
        if not 0 <= self.s_min <= self.s_min_dep <= self.s_max:
            raise InstanceError("require 0 <= s_min <= s_min_dep <= s_max")
        if self.t_max is None:
            object.__setattr__(self, "t_max", (self.s_max - self.s_min) / self.charge_rate)
        if self.t_min > self.t_max:
            raise InstanceError("t_min must not exceed t_max")
        if self.t_min < 0:
            raise InstanceError("t_min must be non-negative")


def derive_matrices(end_xy, start_xy, params: VehicleParams, speed_km_per_min: float):
    """Compute (t, d, p) matrices from entity coordinates.

    ``end_xy[i]`` is the point where entity i is left, ``start_xy[j]`` the
    point where entity j is entered; d[i, j] is the Euclidean distance
    between them, t = d / speed, p = consumption_rate * d.
    """
    if speed_km_per_min <= 0:
        raise InstanceError("speed must be positive")
    end = np.asarray(end_xy, dtype=float)
    start = np.asarray(start_xy, dtype=float)
    if not (np.isfinite(end).all() and np.isfinite(start).all()):
        raise InstanceError("coordinates must be finite")
    diff = start[None, :, :] - end[:, None, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    t = d / speed_km_per_min
    p = params.consumption_rate * d
    return t, d, p


@dataclass(eq=False)
class Instance:
    """Immutable-by-convention problem instance.

    ``t``, ``d``, ``p`` are (n, n) arrays over the canonical entity order
    (see :meth:`entity_order`).  Instances are safe to share read-only.
    """

    trips: list[ServiceTrip]
    depots: list[Depot]
    stations: list[ChargingStation]
    params: VehicleParams
    locations: dict[str, Location]
    t: np.ndarray
    d: np.ndarray
    p: np.ndarray
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.trips = sorted(self.trips, key=lambda tr: tr.id)
        self.stations = sorted(self.stations, key=lambda st: st.id)
        self.depots = sorted(self.depots, key=lambda dp: dp.index)
        self.t = np.asarray(self.t, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self._validate()
        self._index = {key: pos for pos, key in enumerate(self.entity_order())}

    # -- structure ----------------------------------------------------

    @property
    def n_trips(self) -> int:
        return len(self.trips)

    @property
    def n_depots(self) -> int:
        return len(self.depots)

    @property
    def n_entities(self) -> int:
        return self.n_trips + 2 * self.n_depots + len(self.stations)

    def entity_order(self):
        """Canonical matrix ordering: trips, origins, destinations, stations."""
        order = [("trip", tr.id) for tr in self.trips]
        order += [("origin", dp.index) for dp in self.depots]
        order += [("dest", dp.index) for dp in self.depots]
        order += [("station", st.id) for st in self.stations]
        return order

    def entity_index(self, key) -> int:
        return self._index[key]

    def trip(self, trip_id: int) -> ServiceTrip:
        return self._trips_by_id[trip_id]

    def station(self, station_id: str) -> ChargingStation:
        return self._stations_by_id[station_id]

    def travel_time(self, a, b) -> float:
        return float(self.t[self._index[a], self._index[b]])

    def distance(self, a, b) -> float:
        return float(self.d[self._index[a], self._index[b]])

    def deadhead_energy(self, a, b) -> float:
        return float(self.p[self._index[a], self._index[b]])

    # -- validation ---------------------------------------------------

    def _validate(self):
        if not self.trips:
            raise InstanceError("instance needs at least one service trip")
        if not self.depots:
            raise InstanceError("instance needs at least one depot")
        ids = [tr.id for tr in self.trips]
        if len(set(ids)) != len(ids):
            raise InstanceError("duplicate trip ids")
        sids = [st.id for st in self.stations]
        if len(set(sids)) != len(sids):
            raise InstanceError("duplicate station ids")
        for sid in sids:
            if not _ID_RE.match(str(sid)):
                raise InstanceError(f"station id {sid!r} must match [A-Za-z0-9_]+")
        if [dp.index for dp in self.depots] != list(range(len(self.depots))):
            raise InstanceError("depot indices must be 0..K-1")
        for tr in self.trips:
            for loc in (tr.start_loc, tr.end_loc):
                if loc not in self.locations:
                    raise InstanceError(f"trip {tr.id} references unknown location {loc!r}")
        for dp in self.depots:
            if dp.location not in self.locations:
                raise InstanceError(f"depot {dp.index} references unknown location")
        for st in self.stations:
            if st.location not in self.locations:
                raise InstanceError(f"station {st.id} references unknown location")
        w1, w2, w3 = self.weights
        if not (w1 > w2 > w3 > 0):
            raise InstanceError("objective weights must satisfy w1 > w2 > w3 > 0")
        n = self.n_entities
        for name, mat in (("t", self.t), ("d", self.d), ("p", self.p)):
            if mat.shape != (n, n):
                raise InstanceError(f"matrix {name} has shape {mat.shape}, expected {(n, n)}")
            if not np.isfinite(mat).all() or (mat < 0).any():
                raise InstanceError(f"matrix {name} must be finite and non-negative")
        theta = self.params.consumption_rate
        if not np.allclose(self.p, theta * self.d, rtol=1e-9, atol=1e-12):
            raise InstanceError("p matrix must equal consumption_rate * d elementwise")
        self._trips_by_id = {tr.id: tr for tr in self.trips}
        self._stations_by_id = {st.id: st for st in self.stations}

    # -- equality (field-for-field, arrays included) -------------------

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.trips == other.trips
            and self.depots == other.depots
            and self.stations == other.stations
            and self.params == other.params
            and self.locations == other.locations
            and self.weights == other.weights
            and self.meta == other.meta
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.d, other.d)
            and np.array_equal(self.p, other.p)
        )


def instance_from_locations(
    trips,
    depots,
    stations,
    params: VehicleParams,
    locations,
    weights=DEFAULT_WEIGHTS,
    speed_km_per_min: float = 1.0,
    meta=None,
) -> Instance:
    """Assemble an Instance, deriving matrices from entity coordinates."""
    locations = dict(locations)
    trips = sorted(trips, key=lambda tr: tr.id)
    depots = sorted(depots, key=lambda dp: dp.index)
    stations = sorted(stations, key=lambda st: st.id)
    end_xy, start_xy = [], []
    for tr in trips:
        e, s = locations[tr.end_loc], locations[tr.start_loc]
        end_xy.append((e.x, e.y))
        start_xy.append((s.x, s.y))
    for dp in depots + depots:
        loc = locations[dp.location]
        end_xy.append((loc.x, loc.y))
        start_xy.append((loc.x, loc.y))
    for st in stations:
        loc = locations[st.location]
        end_xy.append((loc.x, loc.y))
        start_xy.append((loc.x, loc.y))
    t, d, p = derive_matrices(end_xy, start_xy, params, speed_km_per_min)
    return Instance(
        trips=trips,
        depots=depots,
        stations=stations,
        params=params,
        locations=locations,
        t=t,
        d=d,
        p=p,
        weights=tuple(weights),
        meta=dict(meta or {}),
    )


# -- persistence -------------------------------------------------------

SCHEMA_NAME = "mdevsp-instance-v1"


def save_instance(instance: Instance, path):
    path = Path(path)
    doc = {
        "schema": SCHEMA_NAME,
        "meta": instance.meta,
        "locations": {
            lid: {"x": loc.x, "y": loc.y} for lid, loc in sorted(instance.locations.items())
        },
        "trips": [
            {
                "id": tr.id,
                "start_loc": tr.start_loc,
                "end_loc": tr.end_loc,
                "start_time": tr.start_time,
                "end_time": tr.end_time,
                "duration": tr.duration,
                "energy": tr.energy,
            }
            for tr in instance.trips
        ],
        "depots": [
            {"index": dp.index, "location": dp.location, "capacity": dp.capacity}
            for dp in instance.depots
        ],
        "stations": [{"id": st.id, "location": st.location} for st in instance.stations],
        "params": {
            "consumption_rate": instance.params.consumption_rate,
            "s_max": instance.params.s_max,
            "s_min": instance.params.s_min,
            "s_min_dep": instance.params.s_min_dep,
            "t_min": instance.params.t_min,
            "charge_rate": instance.params.charge_rate,
            "t_max": instance.params.t_max,
        },
        "weights": list(instance.weights),
        "matrices": {
            "order": ["{}:{}".format(*key) for key in instance.entity_order()],
            "t": instance.t.ravel().tolist(),
            "d": instance.d.ravel().tolist(),
            "p": instance.p.ravel().tolist(),
        },
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))


def _require(doc, key, kind, where="document"):
    if key not in doc:
        raise SchemaError(key, f"missing from {where}")
    value = doc[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(key, f"expected a number, got {type(value).__name__}")
        return float(value)
    if kind is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaError(key, f"expected an integer, got {type(value).__name__}")
        return value
    if not isinstance(value, kind):
        raise SchemaError(key, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def load_instance_with_report(path):
    """Load an instance; returns (instance, notes) where notes flag applied defaults."""
    path = Path(path)
    notes: list[str] = []
    doc = json.loads(path.read_text())
    if not isinstance(doc, dict):
        raise SchemaError("document", "top level must be an object")
    locations = {}
    for lid, rec in _require(doc, "locations", dict).items():
        x = _require(rec, "x", float, f"locations[{lid}]")
        y = _require(rec, "y", float, f"locations[{lid}]")
        locations[lid] = Location(lid, x, y)
    trips = []
    for i, rec in enumerate(_require(doc, "trips", list)):
        where = f"trips[{i}]"
        trips.append(
            ServiceTrip(
                id=_require(rec, "id", int, where),
                start_loc=_require(rec, "start_loc", str, where),
                end_loc=_require(rec, "end_loc", str, where),
                start_time=_require(rec, "start_time", int, where),
                end_time=_require(rec, "end_time", int, where),
                duration=_require(rec, "duration", int, where),
                energy=_require(rec, "energy", float, where),
            )
        )
    depots = []
    for i, rec in enumerate(_require(doc, "depots", list)):
        where = f"depots[{i}]"
        depots.append(
            Depot(
                index=_require(rec, "index", int, where),
                location=_require(rec, "location", str, where),
                capacity=_require(rec, "capacity", int, where),
            )
        )
    stations = []
    for i, rec in enumerate(_require(doc, "stations", list)):
        where = f"stations[{i}]"
        stations.append(
            ChargingStation(
                id=_require(rec, "id", str, where),
                location=_require(rec, "location", str, where),
            )
        )
    prec = _require(doc, "params", dict)
    params = VehicleParams(
        consumption_rate=_require(prec, "consumption_rate", float, "params"),
        s_max=_require(prec, "s_max", float, "params"),
        s_min=_require(prec, "s_min", float, "params"),
        s_min_dep=_require(prec, "s_min_dep", float, "params"),
        t_min=_require(prec, "t_min", float, "params"),
        charge_rate=_require(prec, "charge_rate", float, "params"),
        t_max=_require(prec, "t_max", float, "params"),
    )
    if "weights" in doc:
        wraw = _require(doc, "weights", list)
        if len(wraw) != 3:
            raise SchemaError("weights", "expected three numbers")
        weights = tuple(float(w) for w in wraw)
    else:
        weights = DEFAULT_WEIGHTS
        notes.append(f"weights missing; defaults {DEFAULT_WEIGHTS} applied")
    mats = _require(doc, "matrices", dict)
    n = len(trips) + 2 * len(depots) + len(stations)
    arrays = {}
    for name in ("t", "d", "p"):
        flat = _require(mats, name, list, "matrices")
        if len(flat) != n * n:
            raise SchemaError(f"matrices.{name}", f"expected {n * n} entries, got {len(flat)}")
        arrays[name] = np.asarray(flat, dtype=float).reshape(n, n)
    instance = Instance(
        trips=trips,
        depots=depots,
        stations=stations,
        params=params,
        locations=locations,
        t=arrays["t"],
        d=arrays["d"],
        p=arrays["p"],
        weights=weights,
        meta=dict(doc.get("meta", {})),
    )
    return instance, notes


def load_instance(path) -> Instance:
    instance, _ = load_instance_with_report(path)
    return instance


# -- fleet lower bound -------------------------------------------------

def fleet_lower_bound(instance: Instance) -> int:
    """Maximum number of concurrently running trips (half-open [s, e) intervals).

    A trip ending at time tau does not overlap one starting at tau.
    """
    events = []
    for tr in instance.trips:
        events.append((tr.start_time, 1))
        events.append((tr.end_time, -1))
    events.sort()  # at equal times the -1 event sorts first
    best = cur = 0
    for _, delta in events:
        cur += delta
        best = max(best, cur)
    return best
