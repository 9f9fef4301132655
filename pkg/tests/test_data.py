import numpy as np
import pytest

from stgib.data import (
    RawGridData,
    RawTrafficData,
    build_crime_dataset,
    build_traffic_dataset,
    corrupt_missing,
    load_distances,
    load_values,
    save_distances,
    save_values,
    split_series,
    split_series_crime,
    window_dataset,
)
from stgib.synthetic import (
    SyntheticSpec,
    build_synthetic_dataset,
    generate_synthetic,
    random_planted_edges,
    read_ground_truth,
    write_ground_truth,
)
from stgib.types import Scaler, validate_window


class TestSplits:
    def test_622_exact(self):
        values = np.arange(100)[:, None, None].astype(float)
        train, val, test = split_series(values)
        assert (len(train), len(val), len(test)) == (60, 20, 20)

    def test_remainder_goes_to_test(self):
        values = np.arange(101)[:, None, None].astype(float)
        train, val, test = split_series(values)
        assert (len(train), len(val), len(test)) == (60, 20, 21)

    def test_crime_730_days(self):
        values = np.arange(730)[:, None, None].astype(float)
        train, val, test = split_series_crime(values)
        assert (len(train), len(val), len(test)) == (609, 30, 91)

    def test_concatenation_reproduces_series(self):
        values = np.random.default_rng(0).normal(size=(83, 3, 1))
        train, val, test = split_series(values)
        assert np.array_equal(np.concatenate([train, val, test]), values)

    def test_too_short_split_raises(self):
        values = np.zeros((30, 2, 1))
        with pytest.raises(ValueError, match="fewer"):
            split_series(values, min_split_length=12)


class TestWindowing:
    def test_window_count(self):
        values = np.random.default_rng(1).normal(size=(30, 4, 1))
        windows = window_dataset(values, 12, 12, Scaler.fit(values))
        assert len(windows) == 7  # 30 - 24 + 1

    def test_single_window(self):
        values = np.random.default_rng(2).normal(size=(24, 4, 1))
        assert len(window_dataset(values, 12, 12, Scaler.fit(values))) == 1

    def test_too_short_raises(self):
        with pytest.raises(ValueError, match="cannot fit"):
            window_dataset(np.zeros((23, 4, 1)), 12, 12, Scaler(0.0, 1.0))

    def test_constant_series_normalizes_to_zero(self):
        values = np.full((26, 3, 1), 4.5)  # exactly representable constant
        windows = window_dataset(values, 12, 12, Scaler.fit(values))
        assert all(np.all(w.features == 0.0) for w in windows)
        assert all(np.all(w.targets == 4.5) for w in windows)

    def test_inverse_scaling_recovers_raw(self):
        rng = np.random.default_rng(3)
        values = rng.normal(100.0, 25.0, size=(40, 5, 2))
        scaler = Scaler.fit(values)
        windows = window_dataset(values, 12, 12, scaler)
        for t, w in enumerate(windows):
            recovered = scaler.inverse_transform(w.features)
            np.testing.assert_allclose(recovered, values[t : t + 12], rtol=1e-9)

    def test_calendar_indices_wrap(self):
        values = np.zeros((10, 2, 1))
        windows = window_dataset(values, 4, 1, Scaler(0.0, 1.0), steps_per_day=6, start_tod=4, start_dow=2)
        w0 = windows[0]
        assert list(w0.tod_index) == [4, 5, 0, 1]
        assert list(w0.dow_index) == [2, 2, 3, 3]

    def test_targets_can_come_from_clean_series(self):
        rng = np.random.default_rng(4)
        clean = rng.normal(size=(30, 3, 1))
        corrupted = corrupt_missing(clean, 0.5, seed=7)
        windows = window_dataset(corrupted, 12, 12, Scaler.fit(clean), target_values=clean)
        assert np.array_equal(windows[0].targets, clean[12:24])


class TestCorruptMissing:
    def test_zero_drop_is_identity(self):
        values = np.random.default_rng(5).normal(size=(20, 4, 2))
        assert np.array_equal(corrupt_missing(values, 0.0, seed=1), values)

    def test_full_drop_zeroes_everything(self):
        values = np.random.default_rng(6).normal(size=(20, 4, 2))
        assert np.all(corrupt_missing(values, 1.0, seed=1) == 0.0)

    def test_empirical_rate_near_nominal(self):
        values = np.ones((500, 400, 1))
        corrupted = corrupt_missing(values, 0.3, seed=42)
        dropped = 1.0 - corrupted.mean()
        assert abs(dropped - 0.3) < 0.02

    def test_whole_node_step_dropped_together(self):
        values = np.ones((50, 10, 3))
        corrupted = corrupt_missing(values, 0.5, seed=9)
        per_cell = corrupted.sum(axis=2)
        assert set(np.unique(per_cell)) <= {0.0, 3.0}

    def test_reproducible_under_seed(self):
        values = np.random.default_rng(7).normal(size=(30, 5, 1))
        a = corrupt_missing(values, 0.3, seed=11)
        b = corrupt_missing(values, 0.3, seed=11)
        assert np.array_equal(a, b)


class TestSynthetic:
    def test_no_in_edges_gives_pure_sinusoid(self):
        spec = SyntheticSpec(
            num_nodes=3, total_steps=50, planted_edges=((0, 1),), noise_std=0.0, seed=0, period=16
        )
        values, _ = generate_synthetic(spec)
        # node 2 has no planted in-edges: x[t+1] = 0.5 sin(2 pi t / P) * s_2
        rng = np.random.default_rng(0)
        scales = rng.uniform(0.5, 1.5, size=3)
        t = np.arange(49)
        expected = 0.5 * np.sin(2 * np.pi * t / 16) * scales[2]
        np.testing.assert_allclose(values[1:, 2, 0], expected, atol=1e-12)

    def test_same_seed_identical(self):
        spec = SyntheticSpec(num_nodes=4, total_steps=100, planted_edges=((0, 1), (1, 2)))
        a, _ = generate_synthetic(spec)
        b, _ = generate_synthetic(spec)
        assert np.array_equal(a, b)

    def test_impulse_propagates_along_chain(self):
        # chain 0 -> 1 -> 2; difference of runs isolates the impulse response
        spec = SyntheticSpec(
            num_nodes=3,
            total_steps=5,
            planted_edges=((0, 1), (1, 2)),
            noise_std=0.0,
            seed=3,
        )
        base, _ = generate_synthetic(spec, initial_values=np.zeros(3))
        kicked, _ = generate_synthetic(spec, initial_values=np.array([1.0, 0.0, 0.0]))
        diff = kicked - base
        assert diff[1, 1, 0] == pytest.approx(0.5)
        assert diff[2, 2, 0] == pytest.approx(0.25)
        assert diff[2, 0, 0] == 0.0

    def test_empty_planted_edges_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            SyntheticSpec(num_nodes=3, total_steps=10, planted_edges=())

    def test_ground_truth_sidecar_round_trip(self, tmp_path):
        spec = SyntheticSpec(num_nodes=5, total_steps=64, planted_edges=((0, 3), (2, 4)))
        write_ground_truth(tmp_path / "gt.json", spec)
        assert read_ground_truth(tmp_path / "gt.json") == spec

    def test_random_planted_edges_deterministic(self):
        a = random_planted_edges(8, 12, seed=5)
        b = random_planted_edges(8, 12, seed=5)
        assert a == b and len(set(a)) == 12


class TestLoaders:
    def test_values_round_trip(self, tmp_path):
        values = np.random.default_rng(8).normal(size=(20, 4, 1))
        save_values(tmp_path / "v.npy", values)
        assert np.array_equal(load_values(tmp_path / "v.npy"), values)

    def test_npz_with_data_key(self, tmp_path):
        values = np.random.default_rng(9).normal(size=(20, 4))
        np.savez(tmp_path / "v.npz", data=values)
        loaded = load_values(tmp_path / "v.npz")
        assert loaded.shape == (20, 4, 1)  # 2-D arrays gain a feature axis

    def test_distances_round_trip(self, tmp_path):
        triples = [(0, 1, 3.5), (1, 0, 3.5), (1, 2, 10.0)]
        save_distances(tmp_path / "d.csv", triples)
        assert load_distances(tmp_path / "d.csv") == tuple(triples)

    def test_distances_header_checked(self, tmp_path):
        (tmp_path / "d.csv").write_text("a,b,c\n0,1,2\n")
        with pytest.raises(ValueError, match="header"):
            load_distances(tmp_path / "d.csv")


class TestAssembledDatasets:
    def test_traffic_dataset_windows_validate(self):
        rng = np.random.default_rng(10)
        values = rng.normal(200.0, 30.0, size=(120, 3, 1))
        triples = [(a, b, 1.0) for a in range(3) for b in range(3) if a != b]
        raw = RawTrafficData(values=values, distances=tuple(triples))
        # equal costs make the default sigma (cost std) degenerate; pass one
        splits = build_traffic_dataset(raw, l_in=6, l_out=6, sigma=5.0)
        assert len(splits.train.windows) == 72 - 12 + 1
        for w in splits.train.windows[:3]:
            validate_window(w, splits.spatial_graph, steps_per_day=288)

    def test_traffic_split_calendar_is_contiguous(self):
        rng = np.random.default_rng(11)
        values = rng.normal(size=(60, 2, 1))
        raw = RawTrafficData(values=values, distances=((0, 1, 1.0), (1, 0, 1.0)))
        splits = build_traffic_dataset(raw, l_in=6, l_out=6, sigma=10.0)
        last_train = splits.train.windows[-1]
        first_val = splits.val.windows[0]
        # 36 train steps; val starts at absolute step 36
        assert last_train.tod_index[0] == 36 - 12
        assert first_val.tod_index[0] == 36

    def test_crime_dataset_grid(self):
        rng = np.random.default_rng(12)
        values = rng.poisson(2.0, size=(120, 2, 3, 4)).astype(float)
        splits = build_crime_dataset(RawGridData(values=values), l_in=10, l_out=1)
        assert splits.spatial_graph.num_nodes == 6
        w = splits.train.windows[0]
        assert w.features.shape == (10, 6, 4)
        assert w.targets.shape == (1, 6, 4)
        # daily cadence: tod degenerate, dow advances every step
        assert np.all(w.tod_index == 0)
        assert list(w.dow_index[:8]) == [0, 1, 2, 3, 4, 5, 6, 0]

    def test_synthetic_dataset_uses_complete_graph(self):
        spec = SyntheticSpec(num_nodes=5, total_steps=80, planted_edges=((0, 1),))
        values, _ = generate_synthetic(spec)
        splits = build_synthetic_dataset(values, l_in=4, l_out=4)
        assert splits.spatial_graph.num_edges == 20
