import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import adaptive_slots, mc_bss_throughput, mc_network_throughput

from srbandits.errors import ConfigError
from srbandits.macsim import (
    DEFAULT_RATE_TABLE,
    Action,
    PhyConfig,
    SpatialReuseEnv,
    data_rate,
    expected_slot,
    fairness_product,
    jain_index,
    objective,
    p_idle,
    p_succ,
    reward_coop,
    reward_local,
    rssi_bucket,
    starvation,
    station_throughput,
    tx_probability,
)
from srbandits.topology import AccessPoint, Position, Station, Topology, build_topology

PHY = PhyConfig()


class TestTxProbability:
    def test_zero_load_floor(self):
        assert tx_probability(0.0, 1e8) == 0.01

    def test_overload_ceiling(self):
        assert tx_probability(2e8, 1e8) == 0.95

    def test_ratio(self):
        assert tx_probability(5e7, 1e8) == pytest.approx(0.5)

    def test_dead_link(self):
        assert tx_probability(1e6, 0.0) == 0.95


class TestIdleAndSuccess:
    def test_p_idle_examples(self):
        assert p_idle([0.0, 0.0]) == 1.0
        assert p_idle([0.3]) == pytest.approx(0.7)
        assert p_idle([0.5, 0.5]) == pytest.approx(0.25)

    def test_lone_station(self):
        np.testing.assert_allclose(p_succ([0.4]), [0.4])

    def test_gate_closed(self):
        np.testing.assert_array_equal(p_succ([0.4, 0.2], gate=0.0), [0.0, 0.0])

    def test_two_stations(self):
        np.testing.assert_allclose(p_succ([0.4, 0.5]), [0.2, 0.3])

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
    def test_probabilities(self, phis):
        ps = p_succ(phis)
        assert np.all((ps >= 0) & (ps <= 1))
        assert ps.sum() + p_idle(phis) <= 1 + 1e-12


class TestDataRate:
    def test_below_table(self):
        assert data_rate(-5.0) == 0.0

    def test_boundary_inclusive(self):
        assert data_rate(9.0) == 216.2e6
        assert data_rate(8.999) == 144.1e6

    def test_saturation(self):
        assert data_rate(80.0) == DEFAULT_RATE_TABLE[-1][1]

    def test_table_validation(self):
        with pytest.raises(ConfigError):
            PhyConfig(rate_table=((1.0, 2e6), (0.5, 3e6)))


class TestStationThroughput:
    def test_zero_success(self):
        assert station_throughput(0.0, 1e8, 0.5, PHY) == 0.0

    def test_idle_channel_reduction(self):
        assert station_throughput(0.2, 1e8, 1.0, PHY) == pytest.approx(0.2 * 1e8 * PHY.t_txop / PHY.slot_time)

    def test_expected_slot(self):
        assert expected_slot(0.7, PHY) == pytest.approx(0.7 * 9e-6 + 0.3 * 100e-6)

    def test_single_station_against_slot_simulation(self):
        phi, rate = 0.3, 100e6
        analytic = station_throughput(p_succ([phi])[0], rate, p_idle([phi]), PHY)
        rng = np.random.default_rng(11)
        mc = mc_bss_throughput([phi], rate, 1.0, PHY.slot_time, PHY.t_edca, PHY.t_txop, 1_000_000, rng)
        assert mc[0] == pytest.approx(analytic, rel=0.02)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_bss_against_slot_simulation(self, seed):
        rng = np.random.default_rng(seed)
        phis = rng.uniform(0.01, 0.6, rng.integers(1, 4))
        rates = rng.uniform(10e6, 1e9, phis.size)
        ps = p_succ(phis)
        analytic = station_throughput(ps, rates, p_idle(phis), PHY)
        n = adaptive_slots(ps.min())
        mc = mc_bss_throughput(phis, rates, 1.0, PHY.slot_time, PHY.t_edca, PHY.t_txop, n, rng)
        np.testing.assert_allclose(mc, analytic, rtol=0.02)


class TestFairnessAndStarvation:
    def test_fairness_examples(self):
        assert fairness_product([5.0, 7.0], [5.0, 7.0]) == 1.0
        assert fairness_product([0.0, 7.0], [5.0, 7.0]) == 0.0
        assert fairness_product([0.5, 0.8], [1.0, 1.0]) == pytest.approx(0.4)

    def test_zero_achievable_ratio(self):
        assert fairness_product([0.0], [0.0]) == 0.0

    def test_starvation_examples(self):
        mask, frac = starvation([1.0, 2.0], [1.0, 2.0], 0.5)
        assert not mask.any() and frac == 0.0
        mask, frac = starvation([0.0, 0.0], [1.0, 2.0], 0.1)
        assert mask.all() and frac == 1.0
        mask, _ = starvation([0.05, 0.2, 0.9], [1.0, 1.0, 1.0], 0.1)
        assert mask.sum() == 1

    def test_bad_omega(self):
        with pytest.raises(ConfigError):
            starvation([1.0], [1.0], 0.0)


class TestRewards:
    def test_all_served(self):
        assert reward_local([3.0, 4.0], [3.0, 4.0], 0.1) == 1.0

    def test_all_starving_at_zero(self):
        assert reward_local([0.0, 0.0], [3.0, 4.0], 0.1) == 0.0

    def test_hand_evaluation(self):
        # s1 starving with R/(omega R_A) = 0.5, s2 served at ratio 0.9
        r = reward_local([0.05, 0.9], [1.0, 1.0], 0.1)
        assert r == pytest.approx((1 * 0.5 + 1 * (2 + 0.9)) / 6)
        assert r == pytest.approx(0.5667, abs=1e-4)

    def test_empty_ap(self):
        assert reward_local([], [], 0.1) == 1.0

    def test_jain_examples(self):
        assert jain_index([3.0, 3.0, 3.0]) == pytest.approx(1.0)
        assert jain_index([5.0, 0.0, 0.0, 0.0]) == pytest.approx(0.25)
        assert jain_index([1.0, 2.0, 3.0]) == pytest.approx(36 / 42)
        assert jain_index([0.0, 0.0]) == 1.0

    @given(st.lists(st.floats(0, 1e9), min_size=1, max_size=8), st.floats(1e-3, 1e3))
    def test_jain_bounds_and_scale(self, x, k):
        j = jain_index(x)
        assert 1 / len(x) - 1e-12 <= j <= 1 + 1e-12
        if sum(x) > 0:
            assert jain_index(np.array(x) * k) == pytest.approx(j, rel=1e-9)

    def test_coop(self):
        assert reward_coop(1.0, jain_index([2.0, 2.0])) == 2.0
        assert reward_coop(0.0, jain_index([1.0, 0, 0, 0])) == pytest.approx(0.25)
        assert reward_coop(0.5667, 0.857) == pytest.approx(1.4237)

    def test_objective(self):
        assert objective(1.0, 0.0) == 1.0
        assert objective(0.0, 1.0) == 0.0
        assert objective(0.4, 0.3) == pytest.approx(0.55)
        with pytest.raises(ConfigError):
            objective(0.5, 0.5, 0.7, 0.7)

    @settings(max_examples=300)
    @given(
        st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1e9)), min_size=1, max_size=6),
        st.floats(0.01, 1.0),
    )
    def test_local_reward_bounds(self, pairs, omega):
        ratio, ach = map(np.array, zip(*pairs))
        r = reward_local(ratio * ach, ach, omega)
        assert 0.0 <= r <= 1.0

    def test_rssi_buckets(self):
        assert [rssi_bucket(x) for x in (-50, -60, -65, -75, -85, -95)] == [0, 0, 0.25, 0.5, 0.75, 1.0]


class TestEnvironment:
    def setup_method(self):
        self.topo = build_topology(42, 6, 15)

    def test_low_load_saturates(self):
        env = SpatialReuseEnv(self.topo, offered_bps=0.011e9)
        res = env.step([Action(21.0, -82.0)] * 6)
        np.testing.assert_allclose(res.throughput, 0.011e9)
        assert np.all(res.plr < 1e-12)
        assert res.starvation == 0.0

    def test_deterministic(self):
        env = SpatialReuseEnv(self.topo, offered_bps=0.16e9)
        acts = [Action(16.0, -70.0)] * 6
        a, b = env.step(acts), env.step(acts)
        np.testing.assert_array_equal(a.throughput, b.throughput)
        np.testing.assert_array_equal(a.contexts, b.contexts)

    def test_out_of_range_action(self):
        env = SpatialReuseEnv(self.topo)
        with pytest.raises(ConfigError):
            env.step([Action(25.0, -82.0)] * 6)
        with pytest.raises(ConfigError):
            env.step([Action(16.0, -82.0)] * 5)
        assert env.last is None

    def test_closed_gate_starves(self):
        # two APs 5 m apart; AP 0 senses AP 1 far above -82 dBm, AP 1 is the busy neighbour
        aps = (AccessPoint(0, Position(10, 10)), AccessPoint(1, Position(15, 10)))
        stas = (Station(0, Position(8, 10)), Station(1, Position(17, 10)))
        topo = Topology(aps, stas, {0: 0, 1: 1})
        phy = PhyConfig(phi_min=1.0, phi_max=1.0)
        env = SpatialReuseEnv(topo, phy, offered_bps=0.16e9)
        res = env.step([Action(21.0, -82.0), Action(21.0, -82.0)])
        np.testing.assert_array_equal(res.throughput, [0.0, 0.0])
        assert res.starving.all()

    def test_kpi_invariants(self):
        rng = np.random.default_rng(0)
        for rate in (0.011e9, 0.056e9, 0.11e9, 0.16e9):
            env = SpatialReuseEnv(self.topo, offered_bps=rate)
            for _ in range(20):
                acts = [Action(float(rng.integers(1, 22)), float(rng.integers(-82, -61))) for _ in range(6)]
                res = env.step(acts)
                assert np.all(res.throughput >= 0)
                assert np.all(res.throughput <= np.minimum(rate, res.achievable) + 1e-6)
                assert np.all((res.plr >= 0) & (res.plr <= 1))
                assert np.all((res.reward_local >= 0) & (res.reward_local <= 1))
                assert 1 / 6 - 1e-12 <= res.jain <= 1 + 1e-12
                assert res.contexts.shape == (6, 3)
                assert np.all((res.contexts[:, 0] >= 0) & (res.contexts[:, 0] <= 1))
                assert set(res.contexts[:, 1]) <= {0.0, 0.25, 0.5, 0.75, 1.0}
                np.testing.assert_array_equal(res.n_starving, np.bincount(
                    self.topo.station_ap_index(), weights=res.starving, minlength=6))

    @pytest.mark.parametrize(
        "seed, acts",
        [
            (1, [(2.0, -82.0), (4.0, -65.0), (14.0, -63.0)]),
            (5, [(18.0, -79.0), (2.0, -64.0), (1.0, -71.0)]),
        ],
    )
    def test_multi_bss_against_slot_simulation(self, seed, acts):
        topo = build_topology(seed, 3, 6, arena=(30, 30), min_separation=8)
        actions = [Action(*a) for a in acts]
        env = SpatialReuseEnv(topo, offered_bps=0.16e9)
        res = env.step(actions)
        # congested: most stations sit below the offered-load cap
        assert np.sum(res.throughput < 0.99 * res.achievable) >= 4
        mc = mc_network_throughput(topo, actions, env.phy, 0.16e9, 1_000_000, np.random.default_rng(seed))
        np.testing.assert_allclose(res.throughput, np.minimum(mc, res.achievable), rtol=0.02)

    def test_empty_bss_context(self):
        aps = (AccessPoint(0, Position(10, 10)), AccessPoint(1, Position(60, 60)))
        stas = (Station(0, Position(12, 10)),)
        env = SpatialReuseEnv(Topology(aps, stas, {0: 0}))
        res = env.step([Action(16.0, -82.0)] * 2)
        assert res.reward_local[1] == 1.0
        np.testing.assert_array_equal(res.contexts[1], [0.0, 1.0, -0.94])

    def test_ap_count_fixed(self):
        env = SpatialReuseEnv(self.topo)
        with pytest.raises(ConfigError):
            env.set_topology(build_topology(1, 3, 15))
