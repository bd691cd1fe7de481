"""Brute-force reference simulators used as test oracles."""

import numpy as np

BLOCK = 200_000


def mc_bss_throughput(phis, rate_bps, gate, slot_time, t_edca, t_txop, n_slots, rng):
    """Slot-by-slot simulation of one BSS.

    Every slot each station attempts with probability ``phi``. A slot with no attempt
    lasts ``slot_time``, any other slot ``t_edca``. A lone attempt through an open gate
    delivers ``rate * t_txop`` bits. Returns delivered bits over elapsed time per station.
    """
    phis = np.asarray(phis, dtype=float)
    rate = np.broadcast_to(np.asarray(rate_bps, dtype=float), phis.shape)
    bits = np.zeros(phis.size)
    elapsed = 0.0
    done = 0
    while done < n_slots:
        n = min(BLOCK, n_slots - done)
        attempts = rng.random((n, phis.size)) < phis
        busy = attempts.any(axis=1)
        alone = attempts & (attempts.sum(axis=1, keepdims=True) == 1)
        open_ = rng.random(n) < gate
        bits += (alone & open_[:, None]).sum(axis=0) * rate * t_txop
        elapsed += np.where(busy, t_edca, slot_time).sum()
        done += n
    return bits / elapsed


def adaptive_slots(expected_successes_per_slot, target=40_000, floor=1_000_000, cap=20_000_000):
    """Enough slots for ``target`` expected successes, never fewer than ``floor``."""
    need = int(np.ceil(target / max(expected_successes_per_slot, 1e-12)))
    return int(min(max(floor, need), cap))


def mc_network_throughput(topology, actions, phy, offered_bps, n_slots, rng):
    """Joint slot simulation of every BSS of ``topology`` (uncapped throughput per station).

    Geometry is recomputed here from raw coordinates. The serving AP's CCA gate is open
    when the summed power of the currently busy other BSSs is below its threshold; a
    lone attempt is decoded when its SINR clears the threshold of the MCS chosen from SNR.
    """
    ap = topology.ap_xy()
    sta = topology.sta_xy()
    serving = topology.station_ap_index()
    M, S = len(ap), len(sta)
    theta = phy.path_loss.exponent
    g0 = 10 ** (-phy.path_loss.ref_loss_db / 10)

    def gain(d):
        return g0 / np.maximum(d, 1.0) ** theta

    ptx = np.array([10 ** (a.p_tx / 10) for a in actions])
    pcs = np.array([10 ** (a.p_cs / 10) for a in actions])
    noise = 10 ** (phy.noise_dbm / 10)
    g_as = gain(np.linalg.norm(ap[:, None] - sta[None], axis=-1))  # (M, S)
    d_aa = np.linalg.norm(ap[:, None] - ap[None], axis=-1)
    g_aa = np.where(np.eye(M, dtype=bool), 0.0, gain(np.where(d_aa > 0, d_aa, 1.0)))

    th = np.array([t for t, _ in phy.rate_table])
    rates = np.array([r for _, r in phy.rate_table])
    signal = ptx[serving] * g_as[serving, np.arange(S)]
    snr_db = 10 * np.log10(signal / noise)
    idx = np.array([np.sum(th <= x) - 1 for x in snr_db])
    rate = np.where(idx >= 0, rates[np.maximum(idx, 0)], 0.0)
    floor = np.where(idx >= 0, th[np.maximum(idx, 0)], np.inf)
    offered = np.broadcast_to(np.asarray(offered_bps, dtype=float), (S,))
    with np.errstate(divide="ignore"):
        phi = np.clip(np.where(rate > 0, offered / np.where(rate > 0, rate, 1), np.inf), phy.phi_min, phy.phi_max)

    member = np.zeros((S, M), dtype=bool)
    member[np.arange(S), serving] = True
    bits = np.zeros(S)
    elapsed = np.zeros(M)
    done = 0
    while done < n_slots:
        n = min(BLOCK, n_slots - done)
        att = rng.random((n, S)) < phi
        per_bss = att.astype(np.int64) @ member  # attempts per BSS, (n, M)
        active = per_bss > 0
        sensed = (active * ptx) @ g_aa  # power at each AP from the other busy BSSs
        gate = sensed < pcs
        interf = (active * ptx) @ g_as  # (n, S), includes own BSS
        interf -= active[:, serving] * (ptx[serving] * g_as[serving, np.arange(S)])
        sinr_db = 10 * np.log10(signal / (noise + interf))
        alone = att & (per_bss[:, serving] == 1)
        ok = alone & gate[:, serving] & (sinr_db >= floor)
        bits += ok.sum(axis=0) * rate * phy.t_txop
        elapsed += np.where(active, phy.t_edca, phy.slot_time).sum(axis=0)
        done += n
    return bits / elapsed[serving]
