"""Closed-form propagation, worst-case interference, SINR and Shannon capacity.

Powers are linear milliwatts unless a name ends in ``_dbm``. The path-loss law is
``P_rx = P_tx * g0 / d**theta`` with ``g0 = 10**(-ref_loss_db / 10)``; ``ref_loss_db = 0``
gives the bare ``P_tx / d**theta`` form.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryError

DEFAULT_NOISE_DBM = -94.0
DEFAULT_STA_CS_DBM = -82.0


def dbm_to_mw(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def mw_to_dbm(p_mw):
    return 10.0 * np.log10(np.asarray(p_mw, dtype=float))


@dataclass(frozen=True)
class PathLossModel:
    exponent: float = 3.0
    ref_distance: float = 1.0
    ref_loss_db: float = 0.0

    def __post_init__(self):
        if not 2.0 <= self.exponent <= 4.0:
            raise ConfigError(f"path-loss exponent {self.exponent} outside [2, 4]", "exponent")
        if self.ref_distance <= 0:
            raise ConfigError("reference distance must be positive", "ref_distance")

    @property
    def g0(self) -> float:
        return 10.0 ** (-self.ref_loss_db / 10.0)

    def gain(self, d):
        """Linear power gain at distance ``d``; distances below the reference are clamped."""
        d = np.asarray(d, dtype=float)
        if np.any(d <= 0):
            raise ValueError("distance must be positive")
        d = np.maximum(d, self.ref_distance) / self.ref_distance
        return self.g0 * d ** (-self.exponent)


def received_power(p_tx, d, theta, ref_loss_db=0.0, ref_distance=1.0):
    """``p_tx * g0 / (d / d0)**theta``; raises ``ValueError`` for ``d <= 0``."""
    return p_tx * PathLossModel(theta, ref_distance, ref_loss_db).gain(d)


def cca_range(p_tx, t_cs, theta, ref_loss_db=0.0):
    """Distance at which a ``p_tx`` transmission decays to the CCA threshold ``t_cs``."""
    p_tx = np.asarray(p_tx, dtype=float)
    t_cs = np.asarray(t_cs, dtype=float)
    if np.any(p_tx <= 0) or np.any(t_cs <= 0):
        raise ValueError("p_tx and t_cs must be positive")
    g0 = 10.0 ** (-ref_loss_db / 10.0)
    return (p_tx * g0 / t_cs) ** (1.0 / theta)


def interferer_distance(cca_radius, gap, d_mr, angle):
    """Distance from an interferer at ``cca_radius + gap`` from the transmitter to the receiver.

    Law of cosines with ``angle`` measured at the transmitter between the receiver and
    interferer directions.
    """
    a = np.asarray(cca_radius, dtype=float) + np.asarray(gap, dtype=float)
    b = np.asarray(d_mr, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("lengths must be non-negative")
    sq = a * a + b * b - 2.0 * a * b * np.cos(angle)
    # cancellation can leave tiny negatives when the interferer sits on the receiver
    assert np.all(sq > -1e-9 * np.maximum(a * a + b * b, 1.0)), "negative radicand"
    return np.sqrt(np.maximum(sq, 0.0))


@dataclass(frozen=True)
class InterferenceGeometry:
    """Victim link m->r plus interferer gaps/angles, split by interferer kind."""

    d_mr: float
    ap_gaps: np.ndarray
    ap_angles: np.ndarray
    sta_gaps: np.ndarray
    sta_angles: np.ndarray

    def __post_init__(self):
        if self.d_mr <= 0:
            raise ValueError("d_mr must be positive")
        for name in ("ap_gaps", "ap_angles", "sta_gaps", "sta_angles"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if len(self.ap_gaps) != len(self.ap_angles) or len(self.sta_gaps) != len(self.sta_angles):
            raise ValueError("gap and angle arrays must pair up")
        if np.any(self.ap_gaps < 0) or np.any(self.sta_gaps < 0):
            raise ValueError("gaps must be non-negative")
        for arr in (self.ap_angles, self.sta_angles):
            if np.any(arr < 0) or np.any(arr >= 2 * np.pi):
                raise ValueError("angles must lie in [0, 2*pi)")

    def ap_distances(self, cca_radius):
        return interferer_distance(cca_radius, self.ap_gaps, self.d_mr, self.ap_angles)

    def sta_distances(self, sta_radius):
        return interferer_distance(sta_radius, self.sta_gaps, self.d_mr, self.sta_angles)


def interference_from_distances(ap_dist, ap_powers, sta_dist, p_sta, theta, ref_loss_db=0.0):
    """Sum of AP interferers at their own powers plus stations at the common power ``p_sta``."""
    ap_dist = np.atleast_1d(np.asarray(ap_dist, dtype=float))
    sta_dist = np.atleast_1d(np.asarray(sta_dist, dtype=float))
    ap_powers = np.broadcast_to(np.asarray(ap_powers, dtype=float), ap_dist.shape)
    if np.any(ap_dist <= 0) or np.any(sta_dist <= 0):
        raise GeometryError("interferer co-located with the receiver")
    g0 = 10.0 ** (-ref_loss_db / 10.0)
    return g0 * (np.sum(ap_powers / ap_dist**theta) + p_sta * np.sum(1.0 / sta_dist**theta))


def worst_case_interference(
    geometry: InterferenceGeometry, ap_powers, p_sta, theta, cca_radius, sta_radius, ref_loss_db=0.0
):
    """Worst-case interference at the receiver of ``geometry``.

    AP interferers sit ``cca_radius + gap`` from the transmitter, station interferers
    ``sta_radius + gap``.
    """
    return interference_from_distances(
        geometry.ap_distances(cca_radius),
        ap_powers,
        geometry.sta_distances(sta_radius),
        p_sta,
        theta,
        ref_loss_db,
    )


def worst_case_sinr(p_tx, d_mr, interference, theta, ref_loss_db=0.0, noise_mw=None):
    """``p_tx*g0 / (d_mr**theta * I)``. With zero interference the noise floor stands in."""
    d_mr = np.asarray(d_mr, dtype=float)
    if np.any(d_mr <= 0):
        raise ValueError("d_mr must be positive")
    if noise_mw is None:
        noise_mw = float(dbm_to_mw(DEFAULT_NOISE_DBM))
    interference = np.asarray(interference, dtype=float)
    denom = np.where(interference > 0, interference, noise_mw)
    g0 = 10.0 ** (-ref_loss_db / 10.0)
    return p_tx * g0 / (d_mr**theta * denom)


def link_capacity(sinr, bandwidth_hz):
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("SINR must be non-negative")
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return bandwidth_hz * np.log2(1.0 + sinr)


@dataclass(frozen=True)
class CapacitySurface:
    p_tx_dbm: np.ndarray
    t_cs_dbm: np.ndarray
    c_total: np.ndarray  # shape (len(p_tx_dbm), len(t_cs_dbm)), bits/s

    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(self.c_total), self.c_total.shape)
        return float(self.p_tx_dbm[i]), float(self.t_cs_dbm[j])

    def argmax_index(self) -> tuple[int, int]:
        i, j = np.unravel_index(np.argmax(self.c_total), self.c_total.shape)
        return int(i), int(j)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p_tx_dbm", "t_cs_dbm", "c_total_bps"])
        for i, p in enumerate(self.p_tx_dbm):
            for j, t in enumerate(self.t_cs_dbm):
                w.writerow([repr(float(p)), repr(float(t)), repr(float(self.c_total[i, j]))])
        return buf.getvalue()


def _link_geometry(topology):
    """Per served link: d_mr, angles to the other APs, angles to the other stations."""
    ap_xy = topology.ap_xy()
    sta_xy = topology.sta_xy()
    serving = topology.station_ap_index()
    links = []
    for r, m in enumerate(serving):
        c = ap_xy[m]
        to_r = sta_xy[r] - c
        d_mr = float(np.hypot(*to_r))
        if d_mr == 0:
            raise GeometryError(f"station {topology.stations[r].id} sits on its AP")
        base = math.atan2(to_r[1], to_r[0])
        others_ap = np.delete(np.arange(len(ap_xy)), m)
        others_sta = np.delete(np.arange(len(sta_xy)), r)
        v_ap = ap_xy[others_ap] - c
        v_sta = sta_xy[others_sta] - c
        ang_ap = np.mod(np.arctan2(v_ap[:, 1], v_ap[:, 0]) - base, 2 * np.pi)
        ang_sta = np.mod(np.arctan2(v_sta[:, 1], v_sta[:, 0]) - base, 2 * np.pi)
        links.append(InterferenceGeometry(d_mr, np.zeros(len(ang_ap)), ang_ap, np.zeros(len(ang_sta)), ang_sta))
    return links


def capacity_surface(
    topology,
    p_tx_dbm,
    t_cs_dbm,
    model: PathLossModel = PathLossModel(),
    bandwidth_hz: float = 80e6,
    sta_power_dbm: float | None = None,
    sta_cs_dbm: float = DEFAULT_STA_CS_DBM,
    noise_dbm: float = DEFAULT_NOISE_DBM,
) -> CapacitySurface:
    """Cumulative worst-case Shannon capacity over a uniform (P_tx, T_cs) sweep.

    Every AP uses the same pair in a cell. Interferers are placed exactly on the CCA
    boundary (zero gap) along their true bearing from the serving AP; the receiver is
    excluded from its own station-interferer set. Sums over served AP->station links.
    """
    p_tx_dbm = np.asarray(p_tx_dbm, dtype=float)
    t_cs_dbm = np.asarray(t_cs_dbm, dtype=float)
    theta, ref = model.exponent, model.ref_loss_db
    if sta_power_dbm is None:
        sta_power_dbm = topology.stations[0].tx_power_dbm if topology.stations else 0.0
    p_sta = float(dbm_to_mw(sta_power_dbm))
    noise = float(dbm_to_mw(noise_dbm))
    sta_radius = float(cca_range(p_sta, dbm_to_mw(sta_cs_dbm), theta, ref))
    links = _link_geometry(topology)

    P = dbm_to_mw(p_tx_dbm)[:, None]
    T = dbm_to_mw(t_cs_dbm)[None, :]
    D = cca_range(P, T, theta, ref)  # (n_tx, n_cs)
    total = np.zeros(D.shape)
    g0 = model.g0
    for link in links:
        x_sta = link.sta_distances(sta_radius)
        if np.any(x_sta <= 0):
            raise GeometryError("station interferer co-located with receiver")
        sta_term = p_sta * g0 * np.sum(1.0 / x_sta**theta)
        x_ap = interferer_distance(D[..., None], link.ap_gaps, link.d_mr, link.ap_angles)
        if np.any(x_ap <= 0):
            raise GeometryError("AP interferer co-located with receiver")
        ap_term = P * g0 * np.sum(1.0 / x_ap**theta, axis=-1)
        interference = ap_term + sta_term
        sinr = worst_case_sinr(P, link.d_mr, interference, theta, ref, noise)
        total += link_capacity(sinr, bandwidth_hz)
    return CapacitySurface(p_tx_dbm, t_cs_dbm, total)


def reduce_action_set(surface: CapacitySurface, top_fraction: float) -> list[tuple[float, float]]:
    """Best ``ceil(top_fraction * cells)`` (P_tx, T_cs) cells in descending capacity order."""
    if not 0 < top_fraction <= 1:
        raise ValueError("top_fraction must lie in (0, 1]")
    flat = surface.c_total.ravel()
    if flat.size == 0:
        raise ValueError("empty capacity surface")
    k = max(1, math.ceil(top_fraction * flat.size - 1e-9))
    order = np.argsort(-flat, kind="stable")[:k]
    n_cs = len(surface.t_cs_dbm)
    return [(float(surface.p_tx_dbm[i // n_cs]), float(surface.t_cs_dbm[i % n_cs])) for i in order]
