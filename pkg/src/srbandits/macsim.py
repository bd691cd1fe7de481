"""Analytical multi-BSS environment.

Turns one (P_tx, P_cs) action per AP into per-station throughputs, starvation,
fairness, PLR/latency proxies, local and cooperative rewards, and per-AP contexts.

Channel access follows a slotted model: station ``s`` attempts with probability
``phi_s``; a slot is idle with probability ``prod(1 - phi)``; a lone attempt succeeds
when the serving AP's CCA/ED gate is open. Inter-BSS coupling is exact over the
``2**(M-1)`` activity patterns of the other BSSs: a pattern closes AP ``m``'s gate when
the aggregate power sensed at ``m`` reaches ``P_cs^m``, and otherwise adds its power as
interference at ``m``'s stations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .radio import PathLossModel, dbm_to_mw

# (SNR threshold dB, link rate bit/s); 80 MHz, up to 2 spatial streams
DEFAULT_RATE_TABLE = (
    (-1.0, 8.6e6),
    (2.0, 72.1e6),
    (5.0, 144.1e6),
    (9.0, 216.2e6),
    (11.0, 288.2e6),
    (15.0, 432.4e6),
    (18.0, 576.5e6),
    (20.0, 720.6e6),
    (25.0, 864.7e6),
    (29.0, 960.8e6),
    (31.0, 1080.9e6),
    (34.0, 1201.0e6),
)

TRAFFIC_RATES_BPS = (0.011e9, 0.056e9, 0.11e9, 0.16e9)
MAX_ENUMERATED_APS = 14


@dataclass(frozen=True)
class PhyConfig:
    slot_time: float = 9e-6
    t_edca: float = 100e-6
    t_txop: float = 100e-6
    noise_dbm: float = -94.0
    rate_table: tuple = DEFAULT_RATE_TABLE
    bandwidth_hz: float = 80e6
    step_seconds: float = 0.05
    path_loss: PathLossModel = field(default_factory=lambda: PathLossModel(3.0, 1.0, 46.6777))
    phi_min: float = 0.01
    phi_max: float = 0.95
    latency_floor: float = 1e-4

    def __post_init__(self):
        if not 0 < self.slot_time < self.t_edca:
            raise ConfigError("need 0 < slot_time < t_edca", "phy.slot_time")
        if self.t_txop <= 0:
            raise ConfigError("t_txop must be positive", "phy.t_txop")
        if self.step_seconds <= 0:
            raise ConfigError("step length must be positive", "phy.step_seconds")
        table = tuple((float(a), float(b)) for a, b in self.rate_table)
        if not table:
            raise ConfigError("rate table is empty", "phy.rate_table")
        th = np.array([a for a, _ in table])
        rt = np.array([b for _, b in table])
        if np.any(np.diff(th) <= 0) or np.any(np.diff(rt) <= 0) or rt[0] <= 0:
            raise ConfigError("rate table must be strictly increasing in threshold and rate", "phy.rate_table")
        object.__setattr__(self, "rate_table", table)
        if not 0 <= self.phi_min <= self.phi_max <= 1:
            raise ConfigError("need 0 <= phi_min <= phi_max <= 1", "phy.phi_min")

    @property
    def noise_mw(self) -> float:
        return float(dbm_to_mw(self.noise_dbm))


@dataclass(frozen=True)
class ActionBounds:
    p_tx_min: float = 1.0
    p_tx_max: float = 21.0
    p_cs_min: float = -82.0
    p_cs_max: float = -62.0


@dataclass(frozen=True)
class Action:
    p_tx: float  # dBm
    p_cs: float  # dBm

    def check(self, bounds: ActionBounds = ActionBounds()) -> None:
        tol = 1e-9
        if not bounds.p_tx_min - tol <= self.p_tx <= bounds.p_tx_max + tol:
            raise ConfigError(f"P_tx {self.p_tx} dBm outside [{bounds.p_tx_min}, {bounds.p_tx_max}]")
        if not bounds.p_cs_min - tol <= self.p_cs <= bounds.p_cs_max + tol:
            raise ConfigError(f"P_cs {self.p_cs} dBm outside [{bounds.p_cs_min}, {bounds.p_cs_max}]")


# -- scalar building blocks ---------------------------------------------------------


def tx_probability(offered_bps, link_rate_bps, phi_min=0.01, phi_max=0.95):
    """Attempt probability ``clip(offered / rate)``; a dead link (rate 0) saturates."""
    offered = np.asarray(offered_bps, dtype=float)
    rate = np.asarray(link_rate_bps, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rate > 0, offered / np.where(rate > 0, rate, 1.0), np.inf)
    return np.clip(ratio, phi_min, phi_max)


def p_idle(phis) -> float:
    return float(np.prod(1.0 - np.asarray(phis, dtype=float)))


def p_succ(phis, gate=1.0):
    """Per-station success probability: own attempt, open gate, everyone else silent."""
    phis = np.asarray(phis, dtype=float)
    n = phis.size
    if n == 0:
        return phis.copy()
    q = np.broadcast_to(1.0 - phis, (n, n)).copy()
    np.fill_diagonal(q, 1.0)
    return phis * np.asarray(gate, dtype=float) * q.prod(axis=1)


def data_rate(snr_db, rate_table=DEFAULT_RATE_TABLE):
    """Highest rate whose threshold is <= ``snr_db`` (inclusive); 0 below the table."""
    th = np.array([a for a, _ in rate_table])
    rates = np.concatenate([[0.0], [b for _, b in rate_table]])
    return rates[np.searchsorted(th, np.asarray(snr_db, dtype=float), side="right")]


def expected_slot(p_idle_m, phy: PhyConfig):
    return phy.slot_time * p_idle_m + (1.0 - p_idle_m) * phy.t_edca


def station_throughput(p_succ_s, rate_bps, p_idle_m, phy: PhyConfig):
    """Expected information per expected slot length (uncapped)."""
    return p_succ_s * rate_bps * phy.t_txop / expected_slot(p_idle_m, phy)


def _ratios(thr, achievable):
    thr = np.asarray(thr, dtype=float)
    ach = np.asarray(achievable, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ach > 0, thr / np.where(ach > 0, ach, 1.0), 0.0)


def fairness_product(thr, achievable) -> float:
    """Product of throughput-to-achievable ratios over one BSS (1 for an empty BSS)."""
    return float(np.prod(np.clip(_ratios(thr, achievable), 0.0, 1.0)))


def starvation(thr, achievable, omega):
    """Boolean starving mask (``R <= omega * R_A``) and the starving fraction."""
    if not 0 < omega <= 1:
        raise ConfigError("omega must lie in (0, 1]", "omega")
    thr = np.asarray(thr, dtype=float)
    mask = thr <= omega * np.asarray(achievable, dtype=float)
    frac = float(mask.mean()) if mask.size else 0.0
    return mask, frac


def reward_local(thr, achievable, omega) -> float:
    """Per-AP reward mixing the starving stations' shortfall and the others' fairness product."""
    thr = np.asarray(thr, dtype=float)
    ach = np.asarray(achievable, dtype=float)
    n = thr.size
    if n == 0:
        return 1.0
    starving, _ = starvation(thr, ach, omega)
    ratio = _ratios(thr, ach)
    k = int(starving.sum())
    prod_starving = float(np.prod(ratio[starving] / omega))
    prod_ok = float(np.prod(ratio[~starving]))
    r = (k * prod_starving + (n - k) * (n + prod_ok)) / (n * (n + 1))
    return float(np.clip(r, 0.0, 1.0))


def jain_index(per_ap_thr) -> float:
    x = np.asarray(per_ap_thr, dtype=float)
    if x.size == 0:
        raise ValueError("need at least one AP")
    sq = float(np.sum(x * x))
    if sq == 0:
        return 1.0
    return float(np.sum(x) ** 2 / (x.size * sq))


def reward_coop(r_local, r_jain):
    return r_local + r_jain


def objective(fairness, starvation_frac, a1=0.5, a2=0.5) -> float:
    if a1 < 0 or a2 < 0 or abs(a1 + a2 - 1.0) > 1e-9:
        raise ConfigError("objective weights must be non-negative and sum to 1", "weights")
    return a1 * fairness + a2 * (1.0 - starvation_frac)


def rssi_bucket(rssi_dbm) -> float:
    """Five-level RSSI code: 0 (>= -60 dBm) ... 1 (< -90 dBm)."""
    for edge, code in ((-60.0, 0.0), (-70.0, 0.25), (-80.0, 0.5), (-90.0, 0.75)):
        if rssi_dbm >= edge:
            return code
    return 1.0


# -- environment ----------------------------------------------------------------------


@dataclass
class StepResult:
    # per station
    throughput: np.ndarray
    achievable: np.ndarray
    starving: np.ndarray
    # per AP
    ap_throughput: np.ndarray
    n_starving: np.ndarray
    fairness_prod: np.ndarray
    plr: np.ndarray
    latency: np.ndarray
    reward_local: np.ndarray
    reward_coop: np.ndarray
    contexts: np.ndarray  # (M, 3)
    # network
    jain: float
    cumulative_throughput: float
    fairness: float
    starvation: float
    objective: float


class SpatialReuseEnv:
    """Deterministic per-step environment over a fixed (or event-updated) topology."""

    def __init__(
        self,
        topology,
        phy: PhyConfig | None = None,
        offered_bps=TRAFFIC_RATES_BPS[1],
        omega: float = 0.1,
        weights=(0.5, 0.5),
        bounds: ActionBounds = ActionBounds(),
    ):
        if not 0 < omega <= 1:
            raise ConfigError("omega must lie in (0, 1]", "omega")
        objective(1.0, 0.0, *weights)
        if topology.n_aps > MAX_ENUMERATED_APS:
            raise ConfigError(f"at most {MAX_ENUMERATED_APS} APs are supported", "scenario.n_aps")
        self.phy = phy or PhyConfig()
        self.omega = omega
        self.weights = tuple(weights)
        self.bounds = bounds
        self._offered_spec = offered_bps
        m = topology.n_aps
        self._subsets = ((np.arange(2**m)[:, None] >> np.arange(m)[None, :]) & 1).astype(bool)
        th = np.array([a for a, _ in self.phy.rate_table])
        self._thresholds = th
        self._rates = np.concatenate([[0.0], [b for _, b in self.phy.rate_table]])
        # SINR needed to decode each MCS index; index 0 (no rate) never carries data
        self._mcs_floor = np.concatenate([[np.inf], th])
        self.set_topology(topology)
        self.last: StepResult | None = None

    @property
    def n_aps(self) -> int:
        return self.topology.n_aps

    def set_topology(self, topology) -> None:
        if hasattr(self, "topology") and topology.n_aps != self.topology.n_aps:
            raise ConfigError("AP count cannot change between steps")
        self.topology = topology
        model = self.phy.path_loss
        ap = topology.ap_xy()
        sta = topology.sta_xy()
        d_aa = np.linalg.norm(ap[:, None] - ap[None], axis=-1)
        g_aa = np.zeros_like(d_aa)
        off = ~np.eye(len(ap), dtype=bool)
        g_aa[off] = model.gain(d_aa[off])
        self._g_aa = g_aa  # [v, m] gain from AP v to AP m
        d_as = np.linalg.norm(ap[:, None] - sta[None], axis=-1)
        self._g_as = model.gain(np.maximum(d_as, 1e-9))  # [v, s]
        self._serving = topology.station_ap_index()
        self._own_gain = self._g_as[self._serving, np.arange(len(self._serving))]
        self._own_gain_db = 10.0 * np.log10(self._own_gain)
        offered = np.broadcast_to(np.asarray(self._offered_spec, dtype=float), (topology.n_stations,))
        if np.any(offered < 0):
            raise ConfigError("offered load must be non-negative", "scenario.traffic_bps")
        self.offered = offered.copy()

    def check_actions(self, actions) -> None:
        if len(actions) != self.n_aps:
            raise ConfigError(f"expected {self.n_aps} actions, got {len(actions)}")
        for a in actions:
            a.check(self.bounds)

    def initial_contexts(self) -> np.ndarray:
        """Contexts observed before the first step: no starvation, RSSI at maximum power."""
        b = self.bounds
        ptx = np.full(self.n_aps, b.p_tx_max)
        return self._contexts(ptx, np.zeros(self.n_aps))

    def _contexts(self, ptx_dbm, starving_frac) -> np.ndarray:
        M = self.n_aps
        ctx = np.empty((M, 3))
        ctx[:, 0] = starving_frac
        rx_dbm = ptx_dbm[self._serving] + self._own_gain_db
        n = np.bincount(self._serving, minlength=M)
        mean_rx = np.bincount(self._serving, weights=rx_dbm, minlength=M) / np.maximum(n, 1)
        ctx[:, 1] = [rssi_bucket(r) if k else 1.0 for r, k in zip(mean_rx, n)]
        ctx[:, 2] = self.phy.noise_dbm / 100.0
        return ctx

    def step(self, actions) -> StepResult:
        self.check_actions(actions)
        phy = self.phy
        M, S = self.n_aps, self.topology.n_stations
        serving = self._serving
        ptx_dbm = np.array([a.p_tx for a in actions], dtype=float)
        ptx = dbm_to_mw(ptx_dbm)
        pcs = dbm_to_mw([a.p_cs for a in actions])
        noise = phy.noise_mw

        # MCS follows SNR; a packet decodes when the slot's SINR still clears that MCS
        signal = ptx[serving] * self._own_gain
        snr_db = 10.0 * np.log10(signal / noise)
        mcs = np.searchsorted(self._thresholds, snr_db, side="right")
        snr_rate = self._rates[mcs]
        phi = tx_probability(self.offered, snr_rate, phy.phi_min, phy.phi_max)

        q = 1.0 - phi
        idle = np.ones(M)
        np.multiply.at(idle, serving, q)
        activity = 1.0 - idle

        # probability of every activity pattern of the other BSSs, per AP
        B = self._subsets
        F = np.where(B, activity, 1.0 - activity)
        ones = np.ones((B.shape[0], 1))
        left = np.cumprod(np.hstack([ones, F[:, :-1]]), axis=1)
        right = np.cumprod(np.hstack([ones, F[:, :0:-1]]), axis=1)[:, ::-1]
        W = (left * right * ~B).T  # (M, patterns)
        sensed = B @ (ptx[:, None] * self._g_aa)
        gate_open = sensed < pcs
        interf = B @ (ptx[:, None] * self._g_as)
        sinr_db = 10.0 * np.log10(signal / (noise + interf))
        decodes = sinr_db >= self._mcs_floor[mcs]

        w_open = (W * gate_open.T)[serving]  # (S, patterns)
        e_gate = w_open.sum(axis=1)
        e_decode = np.einsum("sp,ps->s", w_open, decodes)

        # own-BSS contention: lone attempt = phi_s * prod_{s' != s} (1 - phi_s')
        logq = np.log(np.maximum(q, 1e-300))
        bss_logq = np.bincount(serving, weights=logq, minlength=M)
        zero_q = np.bincount(serving, weights=(q <= 0), minlength=M)
        others = np.exp(bss_logq[serving] - logq)
        others = np.where(zero_q[serving] - (q <= 0) > 0, 0.0, others)
        attempt_alone = phi * others
        psucc = attempt_alone * e_gate
        e_slot = expected_slot(idle[serving], phy)
        raw = attempt_alone * e_decode * snr_rate * phy.t_txop / e_slot

        achievable = np.minimum(self.offered, snr_rate)
        thr = np.minimum(raw, achievable)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(achievable > 0, thr / np.where(achievable > 0, achievable, 1.0), 0.0)
        starving = thr <= self.omega * achievable

        n_sta = np.bincount(serving, minlength=M)
        has = n_sta > 0
        ap_thr = np.bincount(serving, weights=thr, minlength=M)
        ap_off = np.bincount(serving, weights=self.offered, minlength=M)
        k = np.bincount(serving, weights=starving, minlength=M)
        n_starving = k.astype(int)
        fair = np.ones(M)
        np.multiply.at(fair, serving, np.clip(ratio, 0.0, 1.0))
        prod_st = np.ones(M)
        prod_ok = np.ones(M)
        np.multiply.at(prod_st, serving[starving], ratio[starving] / self.omega)
        np.multiply.at(prod_ok, serving[~starving], ratio[~starving])
        n = np.maximum(n_sta, 1)
        r_loc = np.where(has, (k * prod_st + (n_sta - k) * (n + prod_ok)) / (n * (n + 1)), 1.0)
        r_loc = np.clip(r_loc, 0.0, 1.0)
        lat_s = e_slot / np.maximum(psucc, phy.latency_floor)
        latency = np.bincount(serving, weights=lat_s, minlength=M) / n
        plr = np.where(ap_off > 0, 1.0 - ap_thr / np.where(ap_off > 0, ap_off, 1.0), 0.0)
        plr = np.clip(plr, 0.0, 1.0)
        frac = k / n

        r_j = jain_index(ap_thr)
        fairness = float(fair.mean())
        starv = float(frac.mean())
        result = StepResult(
            throughput=thr,
            achievable=achievable,
            starving=starving,
            ap_throughput=ap_thr,
            n_starving=n_starving,
            fairness_prod=fair,
            plr=plr,
            latency=latency,
            reward_local=r_loc,
            reward_coop=reward_coop(r_loc, r_j),
            contexts=self._contexts(ptx_dbm, frac),
            jain=r_j,
            cumulative_throughput=float(ap_thr.sum()),
            fairness=fairness,
            starvation=starv,
            objective=objective(fairness, starv, *self.weights),
        )
        self.last = result
        return result
