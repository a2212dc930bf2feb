import numpy as np
import pytest

from drdst.core import GsaSettings, SimConfig, seeded_rng, place_rsus
from drdst import sim, smlbt


def small_config(**kw):
    base = dict(area_km2=25.0, rsu_count=24, vehicle_count=100,
                request_rate_tps=200.0, shard_count=4, duration_s=20.0,
                gsa=GsaSettings(population_size=16, generations=8),
                rng_seed=0)
    base.update(kw)
    return SimConfig(**base)


class TestVehicleState:
    def test_positions_stay_in_area(self):
        hub = seeded_rng(0)
        veh = sim.VehicleState(200, speed_mps=30.0, side_m=1000.0,
                               rng=hub.stream("mobility"))
        rsu_pos = hub.stream("placement").uniform(0, 1000, size=(10, 2))
        for _ in range(50):
            veh.move(1.0, hub.stream("mobility"), rsu_pos)
            assert (veh.pos >= 0).all() and (veh.pos <= 1000.0).all()

    def test_zero_speed_never_changes_rsu(self):
        hub = seeded_rng(1)
        veh = sim.VehicleState(50, speed_mps=0.0, side_m=1000.0,
                               rng=hub.stream("mobility"))
        rsu_pos = hub.stream("placement").uniform(0, 1000, size=(10, 2))
        veh.move(1.0, hub.stream("mobility"), rsu_pos)
        changed = veh.move(1.0, hub.stream("mobility"), rsu_pos)
        assert len(changed) == 0

    def test_bad_dt(self):
        veh = sim.VehicleState(1, 1.0, 100.0, seeded_rng(0).stream("m"))
        with pytest.raises(ValueError):
            veh.move(0.0, seeded_rng(0).stream("m"), np.zeros((1, 2)))

    def test_nearest_rsu_assignment(self):
        hub = seeded_rng(2)
        veh = sim.VehicleState(20, speed_mps=10.0, side_m=100.0,
                               rng=hub.stream("mobility"))
        rsu_pos = np.array([[0.0, 0.0], [100.0, 100.0]])
        veh.move(1.0, hub.stream("mobility"), rsu_pos)
        d = np.linalg.norm(veh.pos[:, None, :] - rsu_pos[None, :, :], axis=2)
        assert (veh.current_rsu == d.argmin(axis=1)).all()

    def test_faster_vehicles_change_rsu_more(self):
        rsu_pos = seeded_rng(9).stream("p").uniform(0, 5000, size=(50, 2))
        counts = []
        for speed in (5.0, 40.0):
            hub = seeded_rng(3)
            veh = sim.VehicleState(300, speed, 5000.0, hub.stream("mobility"))
            veh.move(1e-9, hub.stream("mobility"), rsu_pos)
            total = 0
            for _ in range(30):
                total += len(veh.move(1.0, hub.stream("mobility"), rsu_pos))
            counts.append(total)
        assert counts[1] > counts[0]


class TestGenerateTransactions:
    def test_empty_cases(self):
        rng = np.random.default_rng(0)
        t, v = sim.generate_transactions(0.0, 1.0, 0.0, 10, rng)
        assert len(t) == 0
        t, v = sim.generate_transactions(100.0, 1.0, 0.0, 0, rng)
        assert len(t) == 0

    def test_times_sorted_in_window(self):
        rng = np.random.default_rng(1)
        t, v = sim.generate_transactions(500.0, 2.0, 10.0, 50, rng)
        assert (np.diff(t) >= 0).all()
        assert (t >= 10.0).all() and (t < 12.0).all()
        assert (v >= 0).all() and (v < 50).all()

    def test_poisson_mean(self):
        rng = np.random.default_rng(2)
        counts = [len(sim.generate_transactions(300.0, 1.0, 0.0, 10, rng)[0])
                  for _ in range(200)]
        assert abs(np.mean(counts) - 300.0) < 5.0

    def test_negative_rate(self):
        with pytest.raises(ValueError):
            sim.generate_transactions(-1.0, 1.0, 0.0, 10, np.random.default_rng(0))


class TestInjectFaults:
    def test_byzantine_sticky(self):
        cfg = SimConfig(rsu_count=100, byzantine_rate=0.2)
        nodes = place_rsus(cfg, seeded_rng(0).stream("placement"))
        rng = seeded_rng(0).stream("faults")
        byz1, _ = sim.inject_faults(nodes, 0.2, rng)
        byz2, _ = sim.inject_faults(nodes, 0.2, rng, sticky_byzantine=byz1)
        assert (byz1 == byz2).all()
        assert [n.is_byzantine for n in nodes] == byz1.tolist()

    def test_offline_rate_tracks_failure_probs(self):
        cfg = SimConfig(rsu_count=100, offline_rate=0.3)
        nodes = place_rsus(cfg, seeded_rng(1).stream("placement"))
        rng = seeded_rng(1).stream("faults")
        total = 0
        for _ in range(200):
            _, offline = sim.inject_faults(nodes, 0.0, rng)
            total += offline.sum()
        assert abs(total / (200 * 100) - 0.3) < 0.03


class TestGossip:
    def graph(self, n, seed=0):
        rng = np.random.default_rng(seed)
        pos = rng.uniform(0, 1000, size=(n, 2))
        return smlbt.LatencyGraph.from_positions(
            pos, np.full((n, n), 20.0), 4096.0, 2e8)

    def test_informs_everyone(self):
        g = self.graph(15)
        t, sends, rounds = sim.gossip_dissemination(
            list(range(15)), g, 3, np.random.default_rng(0), initiator=0)
        assert t > 0 and rounds >= 1
        assert sends >= 14  # at least one send per member informed

    def test_duplicates_counted(self):
        # full fanout from every informed member quickly exceeds n-1 sends
        g = self.graph(10)
        _, sends, _ = sim.gossip_dissemination(
            list(range(10)), g, 8, np.random.default_rng(1), initiator=0)
        assert sends > 9

    def test_single_member(self):
        g = self.graph(3)
        assert sim.gossip_dissemination([5], g, 3, np.random.default_rng(0), 5) \
            == (0.0, 0, 0)

    def test_bad_fanout(self):
        with pytest.raises(ValueError):
            sim.gossip_dissemination([0, 1], self.graph(2), 0,
                                     np.random.default_rng(0), 0)


class TestComputeMetrics:
    def test_hand_computed(self):
        txlog = sim.TxLog(
            id=np.arange(4), vehicle=np.zeros(4, dtype=np.int64),
            origin_rsu=np.zeros(4, dtype=np.int64),
            origin_shard=np.zeros(4, dtype=np.int64),
            kind=np.array([0, 1, 0, 1]),
            t_sub=np.array([1.0, 2.0, 3.0, 4.0]),
            t_con=np.array([1.5, 3.0, np.nan, np.nan]),
            status=np.array([1, 1, 2, 0]))
        byte_log = np.array([[0, 0, 8e6], [0, 1, 8e6]])
        m = sim.compute_metrics(txlog, byte_log, duration=10.0, p=4, q=2)
        assert m.mean_latency_s == pytest.approx(0.75)
        assert m.throughput_tps == pytest.approx(0.2)
        assert m.success_rate == pytest.approx(0.5)
        assert m.node_traffic_mb == pytest.approx(0.5)  # 2 MB over 4 nodes
        assert m.cross_shard_throughput_tps == pytest.approx(0.1)
        assert (m.submitted, m.committed, m.rejected, m.pending) == (4, 2, 1, 1)
        assert (m.cross_submitted, m.cross_committed) == (2, 1)

    def test_empty_log(self):
        txlog = sim.TxLog(*[np.empty(0) for _ in range(8)])
        m = sim.compute_metrics(txlog, np.empty((0, 3)), 10.0, 4, 2)
        assert m.mean_latency_s is None and m.throughput_tps == 0.0
        assert m.success_rate == 1.0


class TestRun:
    def test_conservation_and_shape(self):
        res = sim.run(small_config())
        m = res.metrics
        assert m.submitted == m.committed + m.rejected + m.pending
        assert m.submitted == len(res.txlog)
        assert m.cross_committed <= m.cross_submitted <= m.submitted
        # tx ids unique and sorted
        assert (np.diff(res.txlog.id) > 0).all()
        # committed txs always have a consensus time after submission
        com = res.txlog.status == 1
        assert np.isfinite(res.txlog.t_con[com]).all()
        assert (res.txlog.t_con[com] >= res.txlog.t_sub[com]).all()
        assert not np.isfinite(res.txlog.t_con[~com]).any()
        assert len(res.epochs) >= 2
        assert (res.byte_log[:, 2] > 0).all()

    def test_metrics_recomputable_from_logs(self):
        cfg = small_config()
        res = sim.run(cfg)
        again = sim.compute_metrics(res.txlog, res.byte_log, cfg.duration_s,
                                    cfg.rsu_count, cfg.shard_count)
        assert again == res.metrics

    def test_deterministic(self):
        a = sim.run(small_config())
        b = sim.run(small_config())
        assert a.metrics == b.metrics
        assert np.array_equal(a.txlog.t_con, b.txlog.t_con, equal_nan=True)
        assert np.array_equal(a.byte_log, b.byte_log)

    def test_seed_changes_outcome(self):
        a = sim.run(small_config(rng_seed=0))
        b = sim.run(small_config(rng_seed=1))
        assert a.metrics != b.metrics

    @pytest.mark.parametrize("ablation", ["no_dag", "no_smlbt", "no_sharding"])
    def test_ablations_run(self, ablation):
        res = sim.run(small_config(ablation=ablation))
        m = res.metrics
        assert m.submitted == m.committed + m.rejected + m.pending
        assert m.committed > 0

    def test_byzantine_origins_reject(self):
        res = sim.run(small_config(byzantine_rate=0.25, rng_seed=3))
        assert res.metrics.rejected > 0

    def test_no_byzantine_no_rejects(self):
        res = sim.run(small_config(byzantine_rate=0.0, offline_rate=0.0))
        assert res.metrics.rejected == 0

    def test_epoch_assignments_valid(self):
        cfg = small_config()
        res = sim.run(cfg)
        for ep in res.epochs:
            counts = np.bincount(ep.assignment, minlength=cfg.shard_count)
            assert (counts > 0).all()
            assert len(ep.assignment) == cfg.rsu_count
