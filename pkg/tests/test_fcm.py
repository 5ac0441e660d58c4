import numpy as np
import pytest

from earlyfcm.errors import (
    ConfigurationError,
    DegenerateClusterError,
    InputError,
)
from earlyfcm.fcm import (
    ClusterTrace,
    FcmConfig,
    FuzzyState,
    VirtualClock,
    as_feature_matrix,
    compute_centers,
    hard_labels,
    init_membership,
    objective,
    run_fcm,
    update_memberships,
)
from oracles import (
    fcm_centers_reference,
    fcm_memberships_reference,
    fcm_objective_reference,
)


def blobs(seed=0, n_per=40, centers=((0.0, 0.0), (8.0, 0.0), (0.0, 8.0)), scale=0.5):
    rng = np.random.default_rng(seed)
    parts = [rng.normal(c, scale, size=(n_per, 2)) for c in centers]
    return np.vstack(parts)


class TestConfig:
    def test_defaults(self):
        cfg = FcmConfig()
        assert cfg.n_clusters == 6
        assert cfg.fuzzifier == 2.0
        assert cfg.epsilon == 0.005
        assert cfg.max_iterations == 300

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_clusters": 1},
            {"n_clusters": 0},
            {"fuzzifier": 1.0},
            {"fuzzifier": 0.5},
            {"epsilon": 0.0},
            {"epsilon": 1.0},
            {"epsilon": -0.1},
            {"max_iterations": 1},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ConfigurationError):
            FcmConfig(**kwargs)


class TestFeatureMatrix:
    def test_accepts_lists(self):
        x = as_feature_matrix([[1, 2], [3, 4]])
        assert x.dtype == np.float64
        assert x.shape == (2, 2)

    def test_rejects_1d(self):
        with pytest.raises(InputError):
            as_feature_matrix(np.arange(5.0))

    def test_rejects_empty(self):
        with pytest.raises(InputError):
            as_feature_matrix(np.empty((0, 3)))

    def test_rejects_nan(self):
        with pytest.raises(InputError):
            as_feature_matrix(np.array([[1.0, np.nan]]))


class TestInitMembership:
    def test_columns_sum_to_one(self):
        u = init_membership(50, 6, seed=3)
        assert u.shape == (6, 50)
        np.testing.assert_allclose(u.sum(axis=0), 1.0, atol=1e-9)
        assert (u > 0).all()

    def test_seed_reproducible(self):
        a = init_membership(20, 4, seed=7)
        b = init_membership(20, 4, seed=7)
        assert (a == b).all()
        c = init_membership(20, 4, seed=8)
        assert not (a == c).all()


class TestCenters:
    def test_half_half_midpoint(self):
        # two points at 0 and 2 with equal membership: center lands at 1
        x = np.array([[0.0], [2.0]])
        u = np.array([[0.5, 0.5]])
        c = compute_centers(x, u, fuzzifier=2.0)
        np.testing.assert_allclose(c, [[1.0]])

    def test_crisp_memberships_give_group_means(self):
        x = blobs(seed=1)
        labels = np.repeat([0, 1, 2], 40)
        u = np.zeros((3, x.shape[0]))
        u[labels, np.arange(x.shape[0])] = 1.0
        c = compute_centers(x, u, fuzzifier=2.0)
        for j in range(3):
            np.testing.assert_allclose(c[j], x[labels == j].mean(axis=0), atol=1e-12)

    def test_matches_reference(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(30, 3))
        u = init_membership(30, 4, seed=5)
        got = compute_centers(x, u, fuzzifier=1.7)
        np.testing.assert_allclose(got, fcm_centers_reference(x, u, 1.7), atol=1e-10)

    def test_empty_cluster_raises(self):
        x = np.array([[0.0], [1.0]])
        u = np.array([[1.0, 1.0], [0.0, 0.0]])
        with pytest.raises(DegenerateClusterError):
            compute_centers(x, u, fuzzifier=2.0)


class TestMemberships:
    def test_two_center_hand_value(self):
        # point 0 against centers 1 and 3 at fuzzifier 2: distances 1 and 3,
        # so u = [1/(1+1/9), ...] = [0.9, 0.1]
        x = np.array([[0.0]])
        centers = np.array([[1.0], [3.0]])
        u = update_memberships(x, centers, fuzzifier=2.0)
        np.testing.assert_allclose(u[:, 0], [0.9, 0.1], atol=1e-12)

    def test_point_on_center_gets_full_membership(self):
        x = np.array([[1.0, 2.0], [5.0, 5.0]])
        centers = np.array([[1.0, 2.0], [0.0, 0.0]])
        u = update_memberships(x, centers, fuzzifier=2.0)
        np.testing.assert_allclose(u[:, 0], [1.0, 0.0])

    def test_point_on_duplicate_centers_splits_equally(self):
        x = np.array([[1.0, 2.0]])
        centers = np.array([[1.0, 2.0], [1.0, 2.0], [9.0, 9.0]])
        u = update_memberships(x, centers, fuzzifier=2.0)
        np.testing.assert_allclose(u[:, 0], [0.5, 0.5, 0.0])

    def test_columns_sum_to_one(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(200, 4))
        centers = rng.normal(size=(5, 4))
        u = update_memberships(x, centers, fuzzifier=2.0)
        np.testing.assert_allclose(u.sum(axis=0), 1.0, atol=1e-9)

    @pytest.mark.parametrize("m", [1.3, 2.0, 3.5])
    def test_matches_reference(self, m):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(40, 2))
        centers = rng.normal(size=(4, 2))
        got = update_memberships(x, centers, fuzzifier=m)
        want = fcm_memberships_reference(x, centers, m)
        np.testing.assert_allclose(got, want, atol=1e-9)


class TestObjective:
    def test_hand_value(self):
        # single point with u = [0.9, 0.1] against centers 1 and 3:
        # 0.81 * 1 + 0.01 * 9 = 0.9
        x = np.array([[0.0]])
        state = FuzzyState(
            memberships=np.array([[0.9], [0.1]]),
            centers=np.array([[1.0], [3.0]]),
        )
        assert objective(x, state, fuzzifier=2.0) == pytest.approx(0.9, abs=1e-12)

    def test_matches_reference(self):
        rng = np.random.default_rng(17)
        x = rng.normal(size=(25, 3))
        u = init_membership(25, 3, seed=17)
        centers = rng.normal(size=(3, 3))
        got = objective(x, FuzzyState(u, centers), fuzzifier=2.0)
        assert got == pytest.approx(fcm_objective_reference(x, u, centers, 2.0), rel=1e-10)


class TestHardLabels:
    def test_argmax_per_column(self):
        u = np.array([[0.2, 0.7, 0.5], [0.8, 0.3, 0.5]])
        np.testing.assert_array_equal(hard_labels(u), [1, 0, 0])


class TestRun:
    def test_objective_never_increases(self):
        x = blobs(seed=2)
        _, trace = run_fcm(x, FcmConfig(n_clusters=3, seed=2))
        objs = np.array(trace.objectives)
        assert (np.diff(objs) <= objs[:-1] * 1e-9 + 1e-12).all()

    def test_bitwise_deterministic(self):
        x = blobs(seed=4)
        cfg = FcmConfig(n_clusters=3, seed=9)
        _, t1 = run_fcm(x, cfg)
        _, t2 = run_fcm(x, cfg)
        assert t1.objectives == t2.objectives
        assert all((a == b).all() for a, b in zip(t1.labels, t2.labels))

    def test_converges_on_separated_blobs(self):
        x = blobs(seed=6)
        state, trace = run_fcm(x, FcmConfig(n_clusters=3, seed=1))
        assert trace.converged
        assert 2 <= trace.n_iterations < 300
        # recovered centers sit on the true blob means, up to permutation
        found = sorted(tuple(np.round(c)) for c in state.centers)
        assert found == [(0.0, 0.0), (0.0, 8.0), (8.0, 0.0)]

    def test_trace_rows_align(self):
        x = blobs(seed=8)
        _, trace = run_fcm(x, FcmConfig(n_clusters=3, seed=3))
        n = trace.n_iterations
        assert len(trace.labels) == n
        assert len(trace.iter_times) == n
        assert all(lbl.shape == (x.shape[0],) for lbl in trace.labels)

    def test_iteration_cap(self):
        x = blobs(seed=10, scale=2.5)
        _, trace = run_fcm(x, FcmConfig(n_clusters=3, epsilon=1e-9, max_iterations=5, seed=0))
        assert trace.n_iterations == 5
        assert not trace.converged

    def test_predicate_stops_run_but_not_before_second_iteration(self):
        x = blobs(seed=12)
        calls = []

        def stop(trace: ClusterTrace) -> bool:
            calls.append(trace.n_iterations)
            return True

        _, trace = run_fcm(x, FcmConfig(n_clusters=3, seed=0), stop_predicate=stop)
        assert trace.n_iterations == 2
        assert calls == [2]
        assert not trace.converged

    def test_predicate_never_firing_leaves_normal_termination(self):
        x = blobs(seed=14)
        _, with_pred = run_fcm(x, FcmConfig(n_clusters=3, seed=5), stop_predicate=lambda t: False)
        _, without = run_fcm(x, FcmConfig(n_clusters=3, seed=5))
        assert with_pred.objectives == without.objectives
        assert with_pred.converged

    def test_virtual_clock_gives_unit_times(self):
        x = blobs(seed=16)
        _, trace = run_fcm(x, FcmConfig(n_clusters=3, seed=2), timer=VirtualClock())
        assert trace.iter_times == [1.0] * trace.n_iterations

    def test_virtual_clock_counts_calls(self):
        clock = VirtualClock()
        assert [clock(), clock(), clock()] == [1.0, 2.0, 3.0]
