"""Experiment orchestration: config -> topology, environment, agents -> seeded episodes -> KPIs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bandits
from .config import ExperimentConfig
from .errors import ConfigError, NumericalError
from .macsim import Action, PhyConfig, SpatialReuseEnv
from .radio import PathLossModel, capacity_surface
from .sau import SAUAgent
from .topology import (
    AccessPoint,
    LoadSchedule,
    Position,
    Station,
    Topology,
    apply_load_event,
    attach_stations,
    build_topology,
)
from .transfer import ScheduledSingularity, TransferStrategy, apply_strategy

KPI_COLUMNS = (
    "t",
    "ap",
    "throughput_bps",
    "n_starving",
    "fairness_prod",
    "jain",
    "plr",
    "latency_s",
    "reward_local",
    "reward_coop",
    "p_tx_dbm",
    "p_cs_dbm",
)
SUMMARY_KEYS = (
    "cumulative_throughput_bps",
    "starvation",
    "jain",
    "fairness",
    "plr",
    "latency_s",
    "total_reward",
    "convergence_step",
)

# stream purposes for rng_stream
SELECT, INIT, TRANSFER, MOBILITY = 0, 1, 2, 3
CONVERGENCE_WINDOW = 500
CONVERGENCE_TOL = 0.05


def rng_stream(seed: int, agent: int, purpose: int) -> np.random.Generator:
    """Independent generator per (run seed, agent, purpose).

    Streams are keyed, not spawned in sequence, so adding an agent leaves the
    others untouched. The environment uses ``agent = -1``, mapped to a separate key.
    """
    return np.random.default_rng([int(seed), int(agent) + 1, int(purpose)])


# -- wiring ---------------------------------------------------------------------------


def phy_from_config(cfg: ExperimentConfig) -> PhyConfig:
    return PhyConfig(
        slot_time=cfg.phy_slot_time,
        t_edca=cfg.phy_t_edca,
        t_txop=cfg.phy_t_txop,
        noise_dbm=cfg.phy_noise_dbm,
        bandwidth_hz=cfg.phy_bandwidth_hz,
        step_seconds=cfg.phy_step_seconds,
        path_loss=PathLossModel(cfg.phy_path_loss_exponent, 1.0, cfg.phy_ref_loss_db),
    )


def schedule_from_config(cfg: ExperimentConfig) -> LoadSchedule:
    return LoadSchedule.from_pairs(cfg.scenario_schedule)


def topology_from_config(cfg: ExperimentConfig) -> Topology:
    """Initial topology: explicit layout or seeded random one, then any load event at t=0."""
    if cfg.scenario_layout is not None:
        lay = cfg.scenario_layout
        aps = tuple(AccessPoint(i, Position(float(x), float(y))) for i, (x, y) in enumerate(lay["aps"]))
        stas = tuple(
            Station(i, Position(float(x), float(y)), cfg.scenario_sta_power_dbm)
            for i, (x, y) in enumerate(lay["stations"])
        )
        arena = tuple(cfg.scenario_arena)
        partial = Topology(aps, stas, {s.id: 0 for s in stas}, arena)
        topo = Topology(aps, stas, attach_stations(partial), arena)
    else:
        topo = build_topology(
            cfg.scenario_topology_seed,
            cfg.scenario_n_aps,
            cfg.scenario_n_stations,
            tuple(cfg.scenario_arena),
            cfg.scenario_min_separation,
            cfg.scenario_sta_power_dbm,
        )
    sched = schedule_from_config(cfg)
    sched.validate_for(topo.n_aps, topo.n_stations)
    for ev in sched.events:
        if ev.time == 0:
            # the initial layout belongs to the scenario, not to the run seed
            rng = np.random.default_rng([cfg.scenario_topology_seed, 0])
            topo = apply_load_event(topo, ev.counts, rng, cfg.scenario_move_radius)
    return topo


def grid_from_config(cfg: ExperimentConfig) -> bandits.ArmGrid:
    if cfg.actions_grid == "full":
        return bandits.full_grid()
    if cfg.actions_grid == "reduced":
        return bandits.reduced_grid()
    if cfg.actions_grid == "explicit":
        return bandits.ArmGrid.from_pairs(cfg.actions_list)
    return bandits.ArmGrid.from_pairs([cfg.actions_fixed])


def env_from_config(cfg: ExperimentConfig, topology: Topology | None = None) -> SpatialReuseEnv:
    return SpatialReuseEnv(
        topology or topology_from_config(cfg),
        phy_from_config(cfg),
        offered_bps=cfg.scenario_traffic_bps,
        omega=cfg.omega,
        weights=(cfg.objective_a1, cfg.objective_a2),
    )


def make_agents(cfg: ExperimentConfig, n_agents: int, n_arms: int, seed: int) -> list:
    agents = []
    for m in range(n_agents):
        rng = rng_stream(seed, m, SELECT)
        if cfg.algo == "egreedy":
            agents.append(bandits.EpsilonGreedy(n_arms, cfg.epsilon0, rng))
        elif cfg.algo == "coop_egreedy":
            if n_agents < 2 and cfg.beta > 0:
                raise ConfigError("cooperation weight needs at least two agents", "beta")
            agents.append(bandits.CoopEpsilonGreedy(n_arms, cfg.epsilon0, cfg.beta, rng))
        elif cfg.algo == "ucb":
            agents.append(bandits.UCB(n_arms, cfg.c))
        elif cfg.algo == "thompson":
            agents.append(bandits.Thompson(n_arms, 1.0, rng))
        elif cfg.algo in ("sau", "sau_coop"):
            agent = SAUAgent(
                n_arms,
                rng,
                hidden=tuple(cfg.sau_hidden),
                lr=cfg.sau_lr,
                weight_decay=cfg.sau_weight_decay,
                batch_size=cfg.sau_batch_size,
                buffer_size=cfg.sau_buffer_size,
            )
            # network weights come from their own stream, exploration from SELECT
            agent.net.reinit(range(1, agent.net.n_layers + 1), rng_stream(seed, m, INIT))
            agents.append(agent)
        else:
            agents.append(bandits.FixedPolicy(0))
    return agents


# -- results --------------------------------------------------------------------------


@dataclass
class RunResult:
    """Per-step records as ``(T, M)`` arrays keyed by KPI column, plus arm traces.

    ``records["jain"]`` repeats the network value in every AP column, matching the CSV.
    """

    config: ExperimentConfig
    seed: int
    records: dict
    arms: np.ndarray  # (T, M)
    summary: dict = field(default_factory=dict)
    event_steps: tuple = ()

    @property
    def horizon(self) -> int:
        return self.arms.shape[0]

    def network(self, key: str) -> np.ndarray:
        """Per-step network total of a per-AP column."""
        return self.records[key].sum(axis=1)

    def reward_trace(self) -> np.ndarray:
        """Mean over APs of the reward the agents learn from."""
        return learning_reward(self.config, self.records).mean(axis=1)


def learning_reward(cfg: ExperimentConfig, records: dict) -> np.ndarray:
    if cfg.algo in ("sau_coop",):
        return records["reward_coop"]
    if cfg.algo == "coop_egreedy":
        r = records["reward_local"]
        M = r.shape[1]
        if M < 2:
            return r.copy()
        others = (r.sum(axis=1, keepdims=True) - r) / (M - 1)
        return r + cfg.beta * others
    return records["reward_local"]


def convergence_step(trace, window: int = CONVERGENCE_WINDOW, tol: float = CONVERGENCE_TOL) -> int:
    """First step after which the trailing-``window`` mean stays within ``tol`` of its final value.

    Steps are 0-based; traces shorter than the window use the full length.
    """
    trace = np.asarray(trace, dtype=float)
    w = min(window, trace.size)
    c = np.concatenate([[0.0], np.cumsum(trace)])
    trailing = (c[w:] - c[:-w]) / w  # trailing[i] ends at step i + w - 1
    final = trailing[-1]
    band = tol * max(abs(final), 1e-12)
    outside = np.flatnonzero(np.abs(trailing - final) > band)
    first_ok = 0 if outside.size == 0 else outside[-1] + 1
    return int(first_ok + w - 1)


def moving_average(x, window: int) -> np.ndarray:
    """Trailing moving average; the first ``window - 1`` entries average what is available."""
    x = np.asarray(x, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def full_window_average(x, window: int) -> np.ndarray:
    """Trailing means over complete windows only; entry ``i`` ends at step ``i + window - 1``.

    A trace shorter than the window yields its overall mean.
    """
    x = np.asarray(x, dtype=float)
    w = min(window, x.size)
    return moving_average(x, w)[w - 1 :]


def plateau_step(trace, smooth: int = 50, tail: float = 0.2, level: float = 0.95) -> int:
    """First step at which the trailing ``smooth``-step mean reaches ``level`` times the plateau.

    The plateau is the mean of the last ``tail`` fraction of the raw trace. Only complete
    windows count, so the answer is at least ``smooth - 1``.
    """
    trace = np.asarray(trace, dtype=float)
    if trace.size == 0:
        raise ValueError("empty trace")
    n_tail = max(1, int(round(tail * trace.size)))
    plateau = trace[-n_tail:].mean()
    w = min(smooth, trace.size)
    hits = np.flatnonzero(full_window_average(trace, w) >= level * plateau)
    return int(hits[0] + w - 1) if hits.size else int(trace.size)


def summarize(cfg: ExperimentConfig, records: dict) -> dict:
    """Run summary, computed only from the per-step records."""
    thr = records["throughput_bps"].sum(axis=1)
    return {
        "cumulative_throughput_bps": float(thr.mean()),
        "starvation": float(records["n_starving"].sum(axis=1).mean()),
        "jain": float(records["jain"][:, 0].mean()),
        "fairness": float(records["fairness_prod"].mean()),
        "plr": float(records["plr"].mean()),
        "latency_s": float(records["latency_s"].mean()),
        "total_reward": float(learning_reward(cfg, records).mean(axis=1).sum()),
        "convergence_step": convergence_step(learning_reward(cfg, records).mean(axis=1)),
    }


def event_window(result: RunResult, k: int) -> tuple[int, int]:
    """Step range ``[start, stop)`` from event ``k`` to the next event or the horizon."""
    starts = list(result.event_steps)
    if not 0 <= k < len(starts):
        raise IndexError(f"run has {len(starts)} events")
    stop = starts[k + 1] if k + 1 < len(starts) else result.horizon
    return starts[k], stop


def post_event_peak(result: RunResult, k: int, smooth: int = 50) -> float:
    """Largest ``smooth``-step mean of starving stations between event ``k`` and the next one.

    Only complete windows inside the interval count, so a single-step blip right at the
    event weighs ``1 / smooth`` rather than its raw height.
    """
    start, stop = event_window(result, k)
    starving = result.network("n_starving")[start:stop]
    return float(full_window_average(starving, smooth).max())


def recovery_step(result: RunResult, k: int, smooth: int = 50, level: float = 0.95) -> int:
    """Steps after event ``k`` until the smoothed mean reward reaches ``level`` of its new plateau."""
    start, stop = event_window(result, k)
    return plateau_step(result.reward_trace()[start:stop], smooth=smooth, level=level)


# -- the run loop ---------------------------------------------------------------------


class _CsvSink:
    def __init__(self, path):
        self.fh = open(path, "w", newline="")
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.w.writerow(KPI_COLUMNS)

    def write(self, t, res, actions):
        for m, a in enumerate(actions):
            self.w.writerow(
                (
                    t,
                    m,
                    repr(float(res.ap_throughput[m])),
                    int(res.n_starving[m]),
                    repr(float(res.fairness_prod[m])),
                    repr(float(res.jain)),
                    repr(float(res.plr[m])),
                    repr(float(res.latency[m])),
                    repr(float(res.reward_local[m])),
                    repr(float(res.reward_coop[m])),
                    repr(float(a.p_tx)),
                    repr(float(a.p_cs)),
                )
            )

    def close(self):
        self.fh.close()


def run_experiment(cfg: ExperimentConfig, seed: int, out_dir=None, horizon: int | None = None) -> RunResult:
    """One seeded episode.

    Per step: agents select, the environment steps, agents update; load events and
    transfer strategies apply before the step whose start time matches the event.
    With ``out_dir`` the KPI records stream to ``<out_dir>/<name>_seed<seed>.csv``.
    """
    T = int(horizon or cfg.horizon)
    if T < 1:
        raise ConfigError("horizon must be >= 1", "horizon")
    topo = topology_from_config(cfg)
    env = env_from_config(cfg, topo)
    grid = grid_from_config(cfg)
    M, K = env.n_aps, grid.n_arms
    for a in grid.actions:
        a.check(env.bounds)
    agents = make_agents(cfg, M, K, seed)
    learns = cfg.algo != "fixed"
    contextual = cfg.algo in ("sau", "sau_coop")

    dt = cfg.phy_step_seconds
    load_steps = {
        int(round(ev.time / dt)): ev.counts for ev in schedule_from_config(cfg).events if ev.time > 0
    }
    strategy = None
    detector = ScheduledSingularity(cfg.transfer_events, dt)
    if cfg.transfer_strategy != "none":
        strategy = TransferStrategy(cfg.transfer_strategy, tuple(cfg.transfer_layers))
        for agent in agents:
            strategy.validate_for(agent.net.n_layers)
    mobility = rng_stream(seed, -1, MOBILITY)
    transfer_rngs = [rng_stream(seed, m, TRANSFER) for m in range(M)]

    rec = {c: np.zeros((T, M)) for c in KPI_COLUMNS[2:]}
    rec["n_starving"] = np.zeros((T, M), dtype=np.int64)
    arms = np.zeros((T, M), dtype=np.int64)
    sink = None
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        sink = _CsvSink(Path(out_dir) / f"{cfg.name}_seed{seed}.csv")

    contexts = env.initial_contexts()
    try:
        for k in range(T):
            if k in load_steps:
                topo = apply_load_event(topo, load_steps[k], mobility, cfg.scenario_move_radius)
                env.set_topology(topo)
            if strategy is not None and detector(None, k):
                for m, agent in enumerate(agents):
                    apply_strategy(agent, strategy, transfer_rngs[m])

            chosen = [agent.select(k + 1, contexts[m]) for m, agent in enumerate(agents)]
            actions = [grid[a] for a in chosen]
            res = env.step(actions)

            if learns:
                if cfg.algo == "coop_egreedy":
                    for m, agent in enumerate(agents):
                        agent.update_coop(chosen[m], res.reward_local, m)
                elif cfg.algo == "thompson":
                    for m, agent in enumerate(agents):
                        agent.update(chosen[m], res.reward_local[m])
                elif contextual:
                    r = res.reward_coop if cfg.algo == "sau_coop" else res.reward_local
                    for m, agent in enumerate(agents):
                        agent.update(chosen[m], float(r[m]), contexts[m])
                else:
                    for m, agent in enumerate(agents):
                        agent.update(chosen[m], res.reward_local[m])
            contexts = res.contexts

            if not (np.all(np.isfinite(res.ap_throughput)) and np.isfinite(res.jain)):
                raise NumericalError(f"non-finite KPI at step {k}")
            arms[k] = chosen
            rec["throughput_bps"][k] = res.ap_throughput
            rec["n_starving"][k] = res.n_starving
            rec["fairness_prod"][k] = res.fairness_prod
            rec["jain"][k] = res.jain
            rec["plr"][k] = res.plr
            rec["latency_s"][k] = res.latency
            rec["reward_local"][k] = res.reward_local
            rec["reward_coop"][k] = res.reward_coop
            rec["p_tx_dbm"][k] = [a.p_tx for a in actions]
            rec["p_cs_dbm"][k] = [a.p_cs for a in actions]
            if sink:
                sink.write(k, res, actions)
    finally:
        if sink:
            sink.close()

    result = RunResult(cfg, seed, rec, arms, event_steps=tuple(sorted(set(load_steps) | detector.steps)))
    result.summary = summarize(cfg, rec)
    return result


def read_records(path) -> dict:
    """Load a KPI CSV back into ``(T, M)`` arrays."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    data = np.atleast_1d(data)
    M = int(data["ap"].max()) + 1
    T = data.size // M
    out = {}
    for c in KPI_COLUMNS[2:]:
        col = data[c].reshape(T, M)
        out[c] = col.astype(np.int64) if c == "n_starving" else col
    return out


# -- comparison -----------------------------------------------------------------------


@dataclass
class Comparison:
    names: list
    medians: dict  # name -> {kpi: median}
    per_seed: dict  # name -> {kpi: list}

    def deltas(self) -> list[tuple[str, str, dict]]:
        out = []
        for i, a in enumerate(self.names):
            for b in self.names[i + 1 :]:
                out.append((a, b, {k: self.medians[b][k] - self.medians[a][k] for k in SUMMARY_KEYS}))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("config", *SUMMARY_KEYS))
        for n in self.names:
            w.writerow((n, *(repr(float(self.medians[n][k])) for k in SUMMARY_KEYS)))
        for a, b, d in self.deltas():
            w.writerow((f"{b}-{a}", *(repr(float(d[k])) for k in SUMMARY_KEYS)))
        return buf.getvalue()

    def to_text(self) -> str:
        rows = [("config", *SUMMARY_KEYS)]
        for n in self.names:
            rows.append((n, *(f"{self.medians[n][k]:.6g}" for k in SUMMARY_KEYS)))
        for a, b, d in self.deltas():
            rows.append((f"{b}-{a}", *(f"{d[k]:+.6g}" for k in SUMMARY_KEYS)))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in rows]
        return "\n".join(lines) + "\n"


def compare(configs, seeds, out_dir=None, horizon: int | None = None) -> Comparison:
    """Median summaries over ``seeds`` for every config, plus pairwise deltas."""
    configs = list(configs)
    if not configs:
        raise ConfigError("compare needs at least one config", "configs")
    ref = configs[0].scenario_items()
    for cfg in configs[1:]:
        if cfg.scenario_items() != ref:
            diff = sorted(k for k in ref if cfg.scenario_items()[k] != ref[k])
            raise ConfigError(f"config {cfg.name!r} does not share the scenario of {configs[0].name!r}: {', '.join(diff)}")
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("config names must be distinct", "name")
    per_seed, medians = {}, {}
    for cfg in configs:
        runs = [run_experiment(cfg, s, out_dir, horizon).summary for s in seeds]
        per_seed[cfg.name] = {k: [r[k] for r in runs] for k in SUMMARY_KEYS}
        medians[cfg.name] = {k: float(np.median(v)) for k, v in per_seed[cfg.name].items()}
    comp = Comparison(names, medians, per_seed)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.csv").write_text(comp.to_csv())
        (out / "compare.txt").write_text(comp.to_text())
    return comp


# -- surface and default configs ------------------------------------------------------


def surface_from_config(cfg: ExperimentConfig):
    topo = topology_from_config(cfg)
    p_tx = bandits.levels(1.0, 21.0, cfg.surface_p_tx_levels)
    t_cs = bandits.levels(-82.0, -62.0, cfg.surface_t_cs_levels)
    return capacity_surface(
        topo,
        p_tx,
        t_cs,
        PathLossModel(cfg.phy_path_loss_exponent, 1.0, cfg.phy_ref_loss_db),
        bandwidth_hz=cfg.phy_bandwidth_hz,
        noise_dbm=cfg.phy_noise_dbm,
    )


DYNAMIC_SCHEDULE = [[0, [8, 5, 2]], [180, [5, 5, 5]], [360, [2, 2, 11]]]
# every 5 dB of the full grid: small enough to converge within one 3-minute interval,
# wide enough to contain actions that starve stations
COARSE_GRID = [[float(tx), float(cs)] for tx in (1, 6, 11, 16, 21) for cs in (-82, -77, -72, -67, -62)]


def default_configs() -> dict[str, ExperimentConfig]:
    """The standard study configs, keyed by file stem."""
    base = ExperimentConfig()
    out = {}
    for rate in (0.011e9, 0.056e9, 0.11e9, 0.16e9):
        tag = f"{rate / 1e9:g}".replace(".", "p")
        out[f"static_egreedy_{tag}"] = base.replace(name=f"static_egreedy_{tag}", scenario_traffic_bps=rate)
        for tx, cs in ((16.0, -82.0), (16.0, -62.0)):
            n = f"baseline_{int(tx)}_{int(-cs)}_{tag}"
            out[n] = base.replace(
                name=n, algo="fixed", actions_grid="fixed", actions_fixed=[tx, cs], scenario_traffic_bps=rate
            )
    for algo in ("egreedy", "ucb", "thompson"):
        for grid in ("reduced", "full"):
            n = f"actions_{algo}_{grid}"
            out[n] = base.replace(name=n, algo=algo, actions_grid=grid, scenario_traffic_bps=0.11e9)
    for algo in ("sau_coop", "sau", "egreedy", "coop_egreedy"):
        n = f"coop_{algo}"
        out[n] = base.replace(name=n, algo=algo, actions_grid="full", scenario_traffic_bps=0.16e9)
    for strat in ("forget", "full", "partial"):
        n = f"dynamic_{strat}"
        out[n] = base.replace(
            name=n,
            algo="sau_coop",
            horizon=12000,
            scenario_n_aps=3,
            scenario_n_stations=15,
            scenario_schedule=DYNAMIC_SCHEDULE,
            scenario_traffic_bps=0.11e9,
            actions_grid="explicit",
            actions_list=COARSE_GRID,
            transfer_strategy=strat,
            transfer_layers=[2],
            transfer_events=[180, 360],
        )
    return out


def emit_default_configs(out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem, cfg in default_configs().items():
        p = out / f"{stem}.cfg"
        cfg.save(p)
        paths.append(p)
    return paths
