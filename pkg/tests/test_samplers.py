import math

import numpy as np
import pytest

from freegas import kernels as K
from freegas import samplers as S
from freegas.errors import DiscretizationError, ParameterError

from oracles import binned_average


@pytest.fixture(scope="module")
def fermion_setup():
    kern = K.build_kernel(K.zero_temperature(math.pi, d=1))
    window = S.Window((10.0,))
    grid = S.GridDiscretization(window, (512,))
    disc = S.discretize_kernel(kern, grid)
    return kern, window, grid, disc


@pytest.fixture(scope="module")
def fermion_configs(fermion_setup):
    _, _, _, disc = fermion_setup
    return [S.sample_fermion(disc, S.replica_rng(314, r)) for r in range(2000)]


@pytest.fixture(scope="module")
def boson_setup():
    dens = K.bose_gas(1.0 / (4 * math.pi), 0.5, d=1)
    kern = K.build_kernel(dens)
    window = S.Window((10.0,))
    grid = S.GridDiscretization(window, (512,))
    synth = S.BosonFieldSynthesizer.build(dens, grid)
    return dens, kern, window, grid, synth


@pytest.fixture(scope="module")
def boson_configs(boson_setup):
    *_, synth = boson_setup
    return [S.sample_boson(synth, S.replica_rng(2718, r)) for r in range(2000)]


def zero_density():
    return K.tabulated([0.0, 1.0], [0.0, 0.0], d=1)


class TestGeometry:
    def test_window_invariants(self):
        with pytest.raises(ParameterError):
            S.Window((0.0,))
        win = S.Window((10.0, 5.0))
        assert win.d == 2 and win.volume == 50.0
        assert win.contains(np.array([[1.0, 1.0]]))
        assert not win.contains(np.array([[1.0, 6.0]]))

    def test_grid_invariants(self):
        win = S.Window((10.0,))
        with pytest.raises(ParameterError):
            S.GridDiscretization(win, (1,))
        grid = S.GridDiscretization(win, (4,))
        assert grid.cell_volume == pytest.approx(2.5)
        np.testing.assert_allclose(grid.centers()[:, 0], [1.25, 3.75, 6.25, 8.75])

    def test_configuration_guards(self):
        win = S.Window((1.0,))
        with pytest.raises(Exception):
            S.Configuration(np.array([[2.0]]), win)


class TestDiscretization:
    def test_zero_density_gives_zero_matrix(self):
        kern = K.build_kernel(zero_density())
        grid = S.GridDiscretization(S.Window((4.0,)), (16,))
        disc = S.discretize_kernel(kern, grid)
        assert np.all(disc.matrix == 0.0)
        assert np.all(disc.eigenvalues == 0.0)

    def test_trace_is_kappa0_times_volume(self, fermion_setup):
        kern, window, _, disc = fermion_setup
        assert disc.trace == pytest.approx(kern.kappa0 * window.volume, abs=1e-8)

    def test_spectrum_in_unit_interval_and_eigensum(self, fermion_setup):
        kern, window, _, disc = fermion_setup
        assert disc.eigenvalues.min() >= 0.0
        assert disc.eigenvalues.max() <= 1.0
        assert disc.clamp_magnitude < 1e-9
        # number of near-unit modes tracks the expected point count
        assert disc.eigenvalues.sum() == pytest.approx(kern.kappa0 * window.volume, abs=1e-6)
        assert np.sum(disc.eigenvalues > 0.5) == pytest.approx(10, abs=2)

    def test_matrix_matches_direct_evaluation(self, fermion_setup):
        kern, _, grid, disc = fermion_setup
        centers = grid.centers()
        i, j = 17, 301
        direct = kern.evaluate(centers[i] - centers[j]) * grid.cell_volume
        assert disc.matrix[i, j] == pytest.approx(direct, rel=1e-12)

    def test_too_coarse_grid_raises(self):
        kern = K.build_kernel(K.zero_temperature(math.pi, d=1))
        grid = S.GridDiscretization(S.Window((10.0,)), (4,))
        with pytest.raises(DiscretizationError):
            S.discretize_kernel(kern, grid)


class TestFermionSampler:
    def test_zero_kernel_samples_empty(self):
        kern = K.build_kernel(zero_density())
        grid = S.GridDiscretization(S.Window((4.0,)), (16,))
        disc = S.discretize_kernel(kern, grid)
        cfg = S.sample_fermion(disc, S.replica_rng(0, 0))
        assert len(cfg) == 0

    def test_counts_match_bernoulli_sum(self, fermion_setup, fermion_configs):
        _, _, _, disc = fermion_setup
        lam = disc.eigenvalues
        mean, var = S.count_statistics(fermion_configs)
        n = len(fermion_configs)
        se_mean = math.sqrt(float(np.sum(lam * (1 - lam))) / n)
        assert abs(mean - lam.sum()) < 3 * se_mean
        assert var < mean  # strictly sub-Poisson

    def test_points_stay_in_window(self, fermion_setup, fermion_configs):
        _, window, _, _ = fermion_setup
        for cfg in fermion_configs[:200]:
            assert window.contains(cfg.points)

    def test_intensity_flat_at_kappa0(self, fermion_setup, fermion_configs):
        kern, window, _, _ = fermion_setup
        est = S.estimate_intensity(fermion_configs, window, bins=10)
        assert np.all(np.abs(est.mean - kern.kappa0) <= 3 * est.stderr)
        assert abs(est.global_mean - kern.kappa0) <= 3 * est.global_stderr

    def test_pair_correlation_shows_repulsion(self, fermion_setup, fermion_configs):
        kern, window, _, _ = fermion_setup
        edges = np.linspace(0.0, 3.0, 13)
        pc = S.estimate_pair_correlation(fermion_configs, window, edges, kern.kappa0)
        weight = lambda r: S.box_covariance_profile(window, r)
        theory = binned_average(
            lambda r: 1.0 - (kern.evaluate(r[:, None]) / kern.kappa0) ** 2, edges, weight
        )
        usable = pc.usable(50)
        assert usable.any()
        assert np.all(np.abs(pc.g[usable] - theory[usable]) <= 3 * pc.stderr[usable])
        assert pc.g[0] < 0.35  # strong short-range repulsion

    def test_deterministic_bitwise(self, fermion_setup):
        _, _, _, disc = fermion_setup
        a = S.sample_fermion(disc, S.replica_rng(5, 3)).points
        b = S.sample_fermion(disc, S.replica_rng(5, 3)).points
        assert np.array_equal(a, b)

    def test_statistics_guard(self, boson_setup):
        _, kern, window, grid, _ = boson_setup
        bdisc = S.discretize_kernel(kern, grid)
        with pytest.raises(ParameterError):
            S.sample_fermion(bdisc, S.replica_rng(0, 0))


class TestBosonSampler:
    def test_zero_density_samples_empty(self):
        grid = S.GridDiscretization(S.Window((4.0,)), (16,))
        synth = S.BosonFieldSynthesizer.build(zero_density(), grid)
        cfg = S.sample_boson(synth, S.replica_rng(1, 1))
        assert len(cfg) == 0

    def test_field_variance_is_kappa0(self, boson_setup):
        _, kern, _, _, synth = boson_setup
        vals = []
        for r in range(400):
            g = synth.field(S.replica_rng(55, r))
            vals.append(np.mean(np.abs(g) ** 2))
        vals = np.asarray(vals)
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean() - kern.kappa0) < 3 * se

    def test_counts_super_poisson(self, boson_setup, boson_configs):
        _, kern, window, _, _ = boson_setup
        mean, var = S.count_statistics(boson_configs)
        n = len(boson_configs)
        se = math.sqrt(var / n) * 2  # rough scale for the mean
        assert abs(mean - kern.kappa0 * window.volume) < 3 * se
        assert var > mean  # strictly super-Poisson

    def test_pair_correlation_shows_bunching(self, boson_setup, boson_configs):
        _, kern, window, _, _ = boson_setup
        edges = np.linspace(0.0, 3.0, 16)
        pc = S.estimate_pair_correlation(boson_configs, window, edges, kern.kappa0)
        weight = lambda r: S.box_covariance_profile(window, r)
        theory = binned_average(
            lambda r: 1.0 + (kern.evaluate(r[:, None]) / kern.kappa0) ** 2, edges, weight
        )
        usable = pc.usable(50)
        assert np.all(np.abs(pc.g[usable] - theory[usable]) <= 3 * pc.stderr[usable])
        assert pc.g[0] > 1.5  # bunching near zero separation

    def test_deterministic_bitwise(self, boson_setup):
        *_, synth = boson_setup
        a = S.sample_boson(synth, S.replica_rng(8, 2)).points
        b = S.sample_boson(synth, S.replica_rng(8, 2)).points
        assert np.array_equal(a, b)


class TestReplicaStreams:
    def test_same_key_same_stream(self):
        assert S.replica_rng(1, 5).random(4).tolist() == S.replica_rng(1, 5).random(4).tolist()

    def test_distinct_replicas_distinct_streams(self):
        a = S.replica_rng(1, 0).random(8)
        b = S.replica_rng(1, 1).random(8)
        assert not np.allclose(a, b)

    def test_distinct_seeds_distinct_streams(self):
        a = S.replica_rng(1, 0).random(8)
        b = S.replica_rng(2, 0).random(8)
        assert not np.allclose(a, b)


class TestEstimators:
    def test_empty_replicas_give_zero_intensity(self):
        win = S.Window((5.0,))
        configs = [S.Configuration(np.empty((0, 1)), win) for _ in range(4)]
        est = S.estimate_intensity(configs, win, bins=5)
        assert np.all(est.mean == 0.0)

    def test_minimum_replica_guard(self):
        win = S.Window((5.0,))
        with pytest.raises(ParameterError):
            S.estimate_intensity([S.Configuration(np.empty((0, 1)), win)], win)

    def test_pair_distances_are_all_ordered_pairs(self):
        pts = np.array([[0.5], [9.5]])
        r = S._pair_distances(pts)
        np.testing.assert_allclose(r, [9.0, 9.0])

    def test_reference_measure_d1_closed_form(self):
        win = S.Window((10.0,))
        edges = np.array([0.0, 1.0, 2.0])
        ref = S.pair_reference_measure(win, edges)
        # int_bin 2 (L - r) dr, times |Lambda|/L = 1 in d = 1
        expect = [2 * (10 * 1 - 0.5), 2 * (10 * 1 - 1.5)]
        np.testing.assert_allclose(ref, expect, rtol=1e-12)

    def test_pair_bins_capped_at_half_window(self):
        win = S.Window((10.0,))
        configs = [S.Configuration(np.array([[1.0], [2.0]]), win) for _ in range(3)]
        with pytest.raises(ParameterError):
            S.estimate_pair_correlation(configs, win, np.linspace(0, 6, 4), 1.0)

    def test_poisson_reference_recovers_g_equal_one(self):
        # independent uniform points: g(r) = 1 everywhere
        win = S.Window((10.0,))
        rho = 2.0
        configs = []
        for r in range(3000):
            rng = S.replica_rng(13, r)
            n = rng.poisson(rho * win.volume)
            configs.append(S.Configuration(rng.uniform(0, 10, size=(n, 1)), win))
        pc = S.estimate_pair_correlation(configs, win, np.linspace(0, 4, 9), rho)
        assert np.all(np.abs(pc.g - 1.0) <= 3 * pc.stderr)
        mean, var = S.count_statistics(configs)
        assert abs(var / mean - 1.0) < 0.1  # Poisson reference

    def test_run_replicas_orchestrator(self, fermion_setup):
        kern, window, grid, _ = fermion_setup
        configs, disc = S.run_replicas("fermion", grid, 3, 11, kernel=kern)
        assert len(configs) == 3 and disc.statistics == "fermion"
        dens = K.bose_gas(1.0 / (4 * math.pi), 0.5, d=1)
        configs, synth = S.run_replicas("boson", grid, 3, 11, density=dens)
        assert len(configs) == 3 and synth.n_freq > 0
        with pytest.raises(ParameterError):
            S.run_replicas("fermion", grid, 2, 0)


class TestPointsCsv:
    def test_roundtrip(self, tmp_path, fermion_setup, fermion_configs):
        _, window, _, _ = fermion_setup
        path = tmp_path / "pts.csv"
        S.write_points_csv(fermion_configs[:20], path)
        back = S.read_points_csv(path, window)
        assert len(back) == 20
        for a, b in zip(fermion_configs[:20], back):
            np.testing.assert_array_equal(a.points, b.points)
