"""Experiment configuration: a flat ``key = value`` text format with dotted sections.

Format
------
One assignment per line, ``key = value``. Blank lines and lines starting with ``#`` are
ignored. Values are JSON (numbers, strings, lists, ``null``, ``true``/``false``); a bare
word such as ``forget`` is read as a string. Keys not in :data:`SCHEMA` are rejected.

Schema (key, default)::

    name                      "experiment"
    algo                      "egreedy"   egreedy|ucb|thompson|coop_egreedy|sau|sau_coop|fixed
    epsilon0                  1.0         initial exploration rate, annealed eps0/sqrt(t)
    c                         1.0         UCB exploration level
    beta                      0.5         weight of the other agents' mean reward (coop_egreedy)
    omega                     0.1         starvation fraction of the achievable throughput
    horizon                   5000        steps of phy.step_seconds each
    seeds                     [1, ..., 10]
    scenario.n_aps            6
    scenario.n_stations       15
    scenario.arena            [80.0, 80.0]   metres
    scenario.min_separation   10.0           metres between APs
    scenario.topology_seed    42             layout seed, independent of the run seed
    scenario.sta_power_dbm    15.0
    scenario.traffic_bps      56000000.0     offered downlink load per station
    scenario.layout           null   or {"aps": [[x, y], ...], "stations": [[x, y], ...]}
    scenario.schedule         []     [[seconds, [count per AP]], ...]; an entry at 0 sets the start
    scenario.move_radius      15.0   metres around the new AP for relocated stations
    actions.grid              "reduced"   full|reduced|explicit|fixed
    actions.list              []          [[p_tx_dbm, p_cs_dbm], ...] for explicit
    actions.fixed             [16.0, -82.0]   the single action of the fixed baseline
    sau.hidden                [100, 100]
    sau.lr                    0.008
    sau.weight_decay          0.0005
    sau.batch_size            64
    sau.buffer_size           1024
    objective.a1              0.5
    objective.a2              0.5
    phy.slot_time             9e-06
    phy.t_edca                0.0001
    phy.t_txop                0.0001
    phy.noise_dbm             -94.0
    phy.bandwidth_hz          80000000.0
    phy.step_seconds          0.05
    phy.path_loss_exponent    3.0
    phy.ref_loss_db           46.6777
    surface.t_cs_levels       21     CCA levels of the capacity surface
    surface.p_tx_levels       21
    transfer.strategy         "none"   none|forget|full|partial
    transfer.layers           [2]
    transfer.events           []       seconds
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError

ALGOS = ("egreedy", "ucb", "thompson", "coop_egreedy", "sau", "sau_coop", "fixed")
GRIDS = ("full", "reduced", "explicit", "fixed")
STRATEGIES = ("none", "forget", "full", "partial")

_BARE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    algo: str = "egreedy"
    epsilon0: float = 1.0
    c: float = 1.0
    beta: float = 0.5
    omega: float = 0.1
    horizon: int = 5000
    seeds: list = field(default_factory=lambda: list(range(1, 11)))
    scenario_n_aps: int = 6
    scenario_n_stations: int = 15
    scenario_arena: list = field(default_factory=lambda: [80.0, 80.0])
    scenario_min_separation: float = 10.0
    scenario_topology_seed: int = 42
    scenario_sta_power_dbm: float = 15.0
    scenario_traffic_bps: float = 0.056e9
    scenario_layout: dict | None = None
    scenario_schedule: list = field(default_factory=list)
    scenario_move_radius: float = 15.0
    actions_grid: str = "reduced"
    actions_list: list = field(default_factory=list)
    actions_fixed: list = field(default_factory=lambda: [16.0, -82.0])
    sau_hidden: list = field(default_factory=lambda: [100, 100])
    sau_lr: float = 8e-3
    sau_weight_decay: float = 5e-4
    sau_batch_size: int = 64
    sau_buffer_size: int = 1024
    objective_a1: float = 0.5
    objective_a2: float = 0.5
    phy_slot_time: float = 9e-6
    phy_t_edca: float = 100e-6
    phy_t_txop: float = 100e-6
    phy_noise_dbm: float = -94.0
    phy_bandwidth_hz: float = 80e6
    phy_step_seconds: float = 0.05
    phy_path_loss_exponent: float = 3.0
    phy_ref_loss_db: float = 46.6777
    surface_t_cs_levels: int = 21
    surface_p_tx_levels: int = 21
    transfer_strategy: str = "none"
    transfer_layers: list = field(default_factory=lambda: [2])
    transfer_events: list = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    # -- key mapping ------------------------------------------------------------------

    @staticmethod
    def attr(key: str) -> str:
        return key.replace(".", "_")

    @classmethod
    def keys(cls) -> list[str]:
        out = []
        for f in fields(cls):
            head, _, tail = f.name.partition("_")
            out.append(f"{head}.{tail}" if head in _SECTIONS and tail else f.name)
        return out

    def items(self):
        for key in self.keys():
            yield key, getattr(self, self.attr(key))

    def scenario_items(self):
        return {k: v for k, v in self.items() if k.startswith(("scenario.", "phy.", "objective.")) or k == "omega"}

    # -- validation -------------------------------------------------------------------

    def validate(self) -> None:
        def need(ok, key, msg):
            if not ok:
                raise ConfigError(msg, key)

        def num(key):
            v = getattr(self, self.attr(key))
            need(isinstance(v, (int, float)) and not isinstance(v, bool), key, f"expected a number, got {v!r}")
            return v

        def integer(key):
            v = getattr(self, self.attr(key))
            need(isinstance(v, int) and not isinstance(v, bool), key, f"expected an integer, got {v!r}")
            return v

        need(isinstance(self.name, str) and self.name, "name", "must be a non-empty string")
        need(self.algo in ALGOS, "algo", f"unknown algorithm {self.algo!r}; one of {', '.join(ALGOS)}")
        need(0.0 <= num("epsilon0") <= 1.0, "epsilon0", "must lie in [0, 1]")
        need(num("c") >= 0, "c", "must be >= 0")
        need(num("beta") >= 0, "beta", "must be >= 0")
        need(0.0 < num("omega") <= 1.0, "omega", "must lie in (0, 1]")
        need(integer("horizon") >= 1, "horizon", "must be >= 1")
        need(isinstance(self.seeds, list) and len(self.seeds) >= 1, "seeds", "need at least one seed")
        need(all(isinstance(s, int) and s >= 0 for s in self.seeds), "seeds", "seeds must be nonnegative integers")

        need(integer("scenario.n_aps") >= 1, "scenario.n_aps", "must be >= 1")
        need(integer("scenario.n_stations") >= 0, "scenario.n_stations", "must be >= 0")
        need(
            _is_pair(self.scenario_arena) and min(self.scenario_arena) > 0,
            "scenario.arena",
            "must be two positive numbers",
        )
        need(num("scenario.min_separation") >= 0, "scenario.min_separation", "must be >= 0")
        integer("scenario.topology_seed")
        num("scenario.sta_power_dbm")
        need(num("scenario.traffic_bps") >= 0, "scenario.traffic_bps", "must be >= 0")
        need(num("scenario.move_radius") >= 0, "scenario.move_radius", "must be >= 0")
        if self.scenario_layout is not None:
            lay = self.scenario_layout
            need(
                isinstance(lay, dict) and set(lay) == {"aps", "stations"},
                "scenario.layout",
                'must be {"aps": [...], "stations": [...]}',
            )
            need(all(_is_pair(p) for p in lay["aps"]), "scenario.layout.aps", "entries must be [x, y]")
            need(all(_is_pair(p) for p in lay["stations"]), "scenario.layout.stations", "entries must be [x, y]")
            need(len(lay["aps"]) >= 1, "scenario.layout.aps", "need at least one AP")
        need(isinstance(self.scenario_schedule, list), "scenario.schedule", "must be a list")
        for i, ev in enumerate(self.scenario_schedule):
            path = f"scenario.schedule[{i}]"
            need(
                isinstance(ev, list) and len(ev) == 2 and isinstance(ev[1], list),
                path,
                "entries must be [seconds, [counts]]",
            )
            need(all(isinstance(c, int) and c >= 0 for c in ev[1]), path, "counts must be nonnegative integers")
            need(len(ev[1]) == self.n_aps, path, f"expected {self.n_aps} counts, got {len(ev[1])}")
            need(sum(ev[1]) == self.n_stations, path, f"counts must sum to {self.n_stations}")

        need(self.actions_grid in GRIDS, "actions.grid", f"one of {', '.join(GRIDS)}")
        if self.actions_grid == "explicit":
            need(len(self.actions_list) >= 1, "actions.list", "explicit grid needs at least one action")
        need(all(_is_pair(a) for a in self.actions_list), "actions.list", "entries must be [p_tx, p_cs]")
        need(_is_pair(self.actions_fixed), "actions.fixed", "must be [p_tx, p_cs]")
        need(
            (self.algo == "fixed") == (self.actions_grid == "fixed"),
            "actions.grid",
            "the fixed baseline goes with actions.grid = fixed and only with it",
        )

        need(
            isinstance(self.sau_hidden, list) and self.sau_hidden and all(
                isinstance(h, int) and h >= 1 for h in self.sau_hidden
            ),
            "sau.hidden",
            "must be a list of positive integers",
        )
        need(num("sau.lr") > 0, "sau.lr", "must be > 0")
        need(num("sau.weight_decay") >= 0, "sau.weight_decay", "must be >= 0")
        need(integer("sau.batch_size") >= 1, "sau.batch_size", "must be >= 1")
        need(integer("sau.buffer_size") >= 1, "sau.buffer_size", "must be >= 1")
        a1, a2 = num("objective.a1"), num("objective.a2")
        need(a1 >= 0 and a2 >= 0 and abs(a1 + a2 - 1.0) <= 1e-9, "objective.a1", "weights must be >= 0 and sum to 1")
        for key in ("phy.slot_time", "phy.t_edca", "phy.t_txop", "phy.bandwidth_hz", "phy.step_seconds"):
            need(num(key) > 0, key, "must be > 0")
        num("phy.noise_dbm")
        need(2.0 <= num("phy.path_loss_exponent") <= 4.0, "phy.path_loss_exponent", "must lie in [2, 4]")
        num("phy.ref_loss_db")
        need(integer("surface.t_cs_levels") >= 1, "surface.t_cs_levels", "must be >= 1")
        need(integer("surface.p_tx_levels") >= 1, "surface.p_tx_levels", "must be >= 1")

        need(self.transfer_strategy in STRATEGIES, "transfer.strategy", f"one of {', '.join(STRATEGIES)}")
        need(
            isinstance(self.transfer_layers, list) and all(isinstance(l, int) for l in self.transfer_layers),
            "transfer.layers",
            "must be a list of layer numbers",
        )
        ev = self.transfer_events
        need(isinstance(ev, list) and all(isinstance(t, (int, float)) for t in ev), "transfer.events", "must be a list of seconds")
        need(all(b > a for a, b in zip(ev, ev[1:])), "transfer.events", "times must be strictly increasing")
        if self.transfer_strategy != "none":
            need(self.algo in ("sau", "sau_coop"), "transfer.strategy", "transfer applies to sau agents only")

    @property
    def n_aps(self) -> int:
        return len(self.scenario_layout["aps"]) if self.scenario_layout else self.scenario_n_aps

    @property
    def n_stations(self) -> int:
        return len(self.scenario_layout["stations"]) if self.scenario_layout else self.scenario_n_stations

    # -- text round trip --------------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"# {self.name}"]
        lines += [f"{k} = {json.dumps(v)}" for k, v in self.items()]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    def replace(self, **updates) -> ExperimentConfig:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, value in updates.items():
            data[self.attr(key)] = value
        return ExperimentConfig(**json.loads(json.dumps(data)))


_SECTIONS = ("scenario", "actions", "sau", "objective", "phy", "surface", "transfer")


def _is_pair(v) -> bool:
    return (
        isinstance(v, (list, tuple))
        and len(v) == 2
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
    )


def _coerce(key: str, value, default):
    # integers are accepted where floats are expected
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse the flat text format; errors name the offending key or line."""
    known = set(ExperimentConfig.keys())
    defaults = ExperimentConfig()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key", key)
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key", key)
        try:
            parsed = json.loads(val)
        except json.JSONDecodeError:
            if not _BARE.match(val):
                raise ConfigError(f"{source}:{lineno}: cannot parse value {val!r}", key) from None
            parsed = val
        attr = ExperimentConfig.attr(key)
        values[attr] = _coerce(key, parsed, getattr(defaults, attr))
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
