"""AP/station layout, nearest-AP attachment and time-varying load schedules."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, PlacementError

DEFAULT_ARENA = (80.0, 80.0)
DEFAULT_MIN_SEPARATION = 10.0
DEFAULT_STA_POWER_DBM = 15.0
DEFAULT_MOVE_RADIUS = 15.0


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance(self, other: Position) -> float:
        return float(np.hypot(self.x - other.x, self.y - other.y))


@dataclass(frozen=True)
class AccessPoint:
    id: int
    pos: Position


@dataclass(frozen=True)
class Station:
    id: int
    pos: Position
    tx_power_dbm: float = DEFAULT_STA_POWER_DBM


@dataclass(frozen=True)
class Topology:
    aps: tuple[AccessPoint, ...]
    stations: tuple[Station, ...]
    attachment: dict[int, int] = field(default_factory=dict)
    arena: tuple[float, float] = DEFAULT_ARENA

    def __post_init__(self):
        if len(self.aps) < 1:
            raise ConfigError("topology needs at least one AP")
        ap_ids = {ap.id for ap in self.aps}
        sta_ids = {s.id for s in self.stations}
        if set(self.attachment) != sta_ids:
            raise ConfigError("every station must be attached to exactly one AP")
        if not set(self.attachment.values()) <= ap_ids:
            raise ConfigError("attachment references an unknown AP")
        w, h = self.arena
        for node in (*self.aps, *self.stations):
            p = node.pos
            if not (np.isfinite(p.x) and np.isfinite(p.y)):
                raise ConfigError(f"non-finite position for node {node.id}")
            if not (0.0 <= p.x <= w and 0.0 <= p.y <= h):
                raise ConfigError(f"node {node.id} at ({p.x}, {p.y}) lies outside the arena")

    @property
    def n_aps(self) -> int:
        return len(self.aps)

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    def ap_xy(self) -> np.ndarray:
        return np.array([[ap.pos.x, ap.pos.y] for ap in self.aps], dtype=float).reshape(-1, 2)

    def sta_xy(self) -> np.ndarray:
        return np.array([[s.pos.x, s.pos.y] for s in self.stations], dtype=float).reshape(-1, 2)

    def ap_index(self) -> dict[int, int]:
        return {ap.id: i for i, ap in enumerate(self.aps)}

    def station_ap_index(self) -> np.ndarray:
        """Row index (into ``aps``) of the serving AP of every station, in station order."""
        idx = self.ap_index()
        return np.array([idx[self.attachment[s.id]] for s in self.stations], dtype=int)

    def loads(self) -> np.ndarray:
        return np.bincount(self.station_ap_index(), minlength=self.n_aps)

    def to_table(self) -> str:
        """Plain-text export: one node per line, ``kind id x y attached_ap``."""
        lines = ["kind id x y attached_ap"]
        for ap in self.aps:
            lines.append(f"ap {ap.id} {ap.pos.x:.6f} {ap.pos.y:.6f} -")
        for s in self.stations:
            lines.append(f"sta {s.id} {s.pos.x:.6f} {s.pos.y:.6f} {self.attachment[s.id]}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LoadEvent:
    time: float
    counts: tuple[int, ...]


@dataclass(frozen=True)
class LoadSchedule:
    """Ordered (time in seconds, per-AP station counts) events."""

    events: tuple[LoadEvent, ...] = ()

    def __post_init__(self):
        times = [e.time for e in self.events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("load event times must be strictly increasing")
        for e in self.events:
            if any(c < 0 for c in e.counts):
                raise ConfigError("negative station count in load event")

    @classmethod
    def from_pairs(cls, pairs) -> LoadSchedule:
        return cls(tuple(LoadEvent(float(t), tuple(int(c) for c in counts)) for t, counts in pairs))

    def validate_for(self, n_aps: int, n_stations: int) -> None:
        for e in self.events:
            if len(e.counts) != n_aps:
                raise ConfigError(f"load event at t={e.time} has {len(e.counts)} counts for {n_aps} APs")
            if sum(e.counts) != n_stations:
                raise ConfigError(
                    f"load event at t={e.time} sums to {sum(e.counts)}, expected {n_stations} stations"
                )

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(e.time for e in self.events)

    def __len__(self):
        return len(self.events)


def _place_aps(rng, n_aps, arena, min_separation, max_tries):
    w, h = arena
    pts: list[np.ndarray] = []
    for _ in range(n_aps):
        for _ in range(max_tries):
            cand = rng.uniform((0.0, 0.0), (w, h))
            if all(np.hypot(*(cand - p)) >= min_separation for p in pts):
                pts.append(cand)
                break
        else:
            return None
    return pts


def build_topology(
    seed,
    n_aps: int,
    n_stations: int,
    arena=DEFAULT_ARENA,
    min_separation: float = DEFAULT_MIN_SEPARATION,
    sta_power_dbm: float = DEFAULT_STA_POWER_DBM,
    max_tries: int = 1000,
    restarts: int = 20,
) -> Topology:
    """Random AP layout with a minimum pairwise separation, uniform stations, nearest-AP attachment.

    Deterministic for a given ``seed``. Raises :class:`PlacementError` when the separation
    constraint cannot be met after ``restarts`` full attempts of ``max_tries`` draws per AP.
    """
    if n_aps < 1:
        raise ConfigError("n_aps must be >= 1", "n_aps")
    if n_stations < 0:
        raise ConfigError("n_stations must be >= 0", "n_stations")
    arena = (float(arena[0]), float(arena[1]))
    if arena[0] <= 0 or arena[1] <= 0:
        raise ConfigError("arena dimensions must be positive", "arena")

    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        pts = _place_aps(rng, n_aps, arena, min_separation, max_tries)
        if pts is not None:
            break
    else:
        raise PlacementError(
            f"could not place {n_aps} APs {min_separation} m apart in a {arena[0]}x{arena[1]} m arena"
        )

    aps = tuple(AccessPoint(i, Position(float(p[0]), float(p[1]))) for i, p in enumerate(pts))
    sta_pts = rng.uniform((0.0, 0.0), arena, size=(n_stations, 2))
    stations = tuple(
        Station(i, Position(float(x), float(y)), sta_power_dbm) for i, (x, y) in enumerate(sta_pts)
    )
    partial = Topology(aps, stations, {s.id: aps[0].id for s in stations}, arena)
    return replace(partial, attachment=attach_stations(partial))


def attach_stations(topology: Topology) -> dict[int, int]:
    """Map every station to its closest AP; ties go to the lowest AP id."""
    if topology.n_stations == 0:
        return {}
    order = np.argsort([ap.id for ap in topology.aps], kind="stable")
    ap_xy = topology.ap_xy()[order]
    d = np.linalg.norm(topology.sta_xy()[:, None, :] - ap_xy[None, :, :], axis=-1)
    # argmin returns the first minimum, i.e. the lowest id after sorting
    nearest = order[np.argmin(d, axis=1)]
    return {s.id: topology.aps[k].id for s, k in zip(topology.stations, nearest)}


def apply_load_event(
    topology: Topology, counts, rng=None, radius: float = DEFAULT_MOVE_RADIUS
) -> Topology:
    """Reassign stations so per-AP counts equal ``counts``.

    Surplus stations (farthest from their current AP first) move to under-loaded APs in
    AP order and are re-drawn uniformly in a disc of ``radius`` around the new AP, clipped
    to the arena. Stations that do not move keep their position.
    """
    counts = tuple(int(c) for c in counts)
    if len(counts) != topology.n_aps:
        raise ConfigError(f"expected {topology.n_aps} counts, got {len(counts)}")
    if sum(counts) != topology.n_stations:
        raise ConfigError(f"counts sum to {sum(counts)}, topology has {topology.n_stations} stations")
    rng = np.random.default_rng(rng)

    ap_pos = {ap.id: ap.pos for ap in topology.aps}
    ap_ids = [ap.id for ap in topology.aps]
    target = dict(zip(ap_ids, counts))
    members = {a: [] for a in ap_ids}
    for s in topology.stations:
        members[topology.attachment[s.id]].append(s)

    movers: list[Station] = []
    for a in ap_ids:
        surplus = len(members[a]) - target[a]
        if surplus > 0:
            ranked = sorted(members[a], key=lambda s: (-s.pos.distance(ap_pos[a]), s.id))
            movers.extend(ranked[:surplus])
    movers.sort(key=lambda s: s.id)

    attachment = dict(topology.attachment)
    moved: dict[int, Station] = {}
    w, h = topology.arena
    it = iter(movers)
    for a in ap_ids:
        deficit = target[a] - len(members[a])
        for _ in range(max(deficit, 0)):
            s = next(it)
            r = radius * np.sqrt(rng.random())
            ang = 2.0 * np.pi * rng.random()
            c = ap_pos[a]
            x = float(np.clip(c.x + r * np.cos(ang), 0.0, w))
            y = float(np.clip(c.y + r * np.sin(ang), 0.0, h))
            moved[s.id] = replace(s, pos=Position(x, y))
            attachment[s.id] = a

    stations = tuple(moved.get(s.id, s) for s in topology.stations)
    return replace(topology, stations=stations, attachment=attachment)
