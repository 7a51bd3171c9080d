import numpy as np
import pytest

from radiomap.exceptions import InvalidArgumentError
from radiomap.lowrank import (
    SolverConfig,
    nuclear_norm,
    solve_box_nnm,
    solve_observed_nnm,
    sv_threshold,
)
from radiomap.sampling import SampleMask


def rand_prior(seed, shape=(12, 15)):
    return np.random.default_rng(seed).normal(-80, 10, shape)


class TestNuclearNorm:
    def test_examples(self):
        assert nuclear_norm(np.eye(4)) == pytest.approx(4.0)
        u = np.array([3.0, 4.0]) / 5
        v = np.array([1.0, 0.0, 0.0])
        assert nuclear_norm(np.outer(u, v)) == pytest.approx(1.0)
        assert nuclear_norm(np.diag([3.0, 4.0])) == pytest.approx(7.0)

    def test_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            nuclear_norm(np.array([[1.0, np.nan]]))


class TestSvThreshold:
    def test_zero_tau(self):
        m = np.random.default_rng(0).normal(size=(4, 6))
        np.testing.assert_allclose(sv_threshold(m, 0.0), m, atol=1e-10)

    def test_diag(self):
        np.testing.assert_allclose(sv_threshold(np.diag([3.0, 1.0]), 2.0), np.diag([1.0, 0.0]), atol=1e-12)

    def test_prox_oracle(self):
        # the minimiser shares M's singular vectors; scan each singular value on a grid
        m = np.random.default_rng(1).normal(size=(6, 5))
        tau = 0.3
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        grid = np.linspace(0, s.max() + 1, 400001)
        best = np.array([grid[np.argmin(tau * grid + 0.5 * (grid - si) ** 2)] for si in s])
        oracle = (u * best) @ vt
        np.testing.assert_allclose(sv_threshold(m, tau), oracle, atol=1e-5)
        # and the closed form to the stated precision
        np.testing.assert_allclose(sv_threshold(m, tau), (u * np.maximum(s - tau, 0)) @ vt, atol=1e-9)

    def test_negative_tau(self):
        with pytest.raises(InvalidArgumentError):
            sv_threshold(np.eye(2), -1.0)


class TestBoxNnm:
    def test_delta_zero_identity(self):
        p = rand_prior(0)
        r = solve_box_nnm(p, 0.0)
        np.testing.assert_array_equal(r.solution, p)
        assert r.converged and r.iterations == 0

    def test_large_delta_zero(self):
        p = rand_prior(1, (20, 30))
        r = solve_box_nnm(p, np.abs(p).max())
        assert r.converged
        np.testing.assert_allclose(r.solution, 0.0, atol=1e-9)

    @pytest.mark.parametrize("seed", range(4))
    def test_feasible_and_no_worse_than_prior(self, seed):
        p = rand_prior(seed)
        delta = 2.5
        r = solve_box_nnm(p, delta)
        tol = 1e-6 * (1 + np.abs(p).max())
        assert r.converged
        assert r.max_violation <= tol
        assert np.abs(r.solution - p).max() <= delta + tol
        assert r.final_nuclear_norm <= nuclear_norm(p) * (1 + 1e-6)

    def test_beats_random_feasible_points(self):
        p = rand_prior(5)
        delta = 3.0
        z = solve_box_nnm(p, delta).final_nuclear_norm
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = p + rng.uniform(-delta, delta, p.shape)
            assert z <= nuclear_norm(q)

    def test_rank_one_plus_bounded_noise(self):
        rng = np.random.default_rng(2)
        low = -np.outer(rng.uniform(5, 10, 14), rng.uniform(5, 10, 11))
        delta = 2.0
        p = low + rng.uniform(-delta / 2, delta / 2, low.shape)
        r = solve_box_nnm(p, delta)
        assert r.final_nuclear_norm <= nuclear_norm(low) * (1 + 1e-3)

    @pytest.mark.parametrize("seed", range(3))
    def test_cvxpy_oracle(self, seed):
        cp = pytest.importorskip("cvxpy")
        rng = np.random.default_rng(seed)
        p = rng.normal(-80, 10, (8, 10))
        delta = float(rng.uniform(0.5, 5))
        x = cp.Variable(p.shape)
        prob = cp.Problem(cp.Minimize(cp.normNuc(x)), [cp.abs(x - p) <= delta])
        prob.solve(solver="SCS", eps=1e-9, max_iters=200000)
        r = solve_box_nnm(p, delta)
        assert r.final_nuclear_norm == pytest.approx(prob.value, rel=1e-3)

    def test_merit_monotone_after_burn_in(self):
        r = solve_box_nnm(rand_prior(3, (20, 30)), 3.0)
        t = np.asarray(r.residual_trace)
        assert np.all(np.diff(t[10:]) <= 1e-12 * t[10:-1])

    @pytest.mark.parametrize("alpha", [1e-3, 0.5, 7.3, 1e4])
    def test_scale_equivariance(self, alpha):
        p = rand_prior(4)
        a = solve_box_nnm(p, 3.0).solution
        b = solve_box_nnm(alpha * p, alpha * 3.0).solution
        assert np.abs(b - alpha * a).max() <= 1e-6 * np.abs(alpha * a).max()

    def test_deterministic(self):
        p = rand_prior(6)
        np.testing.assert_array_equal(solve_box_nnm(p, 1.5).solution, solve_box_nnm(p, 1.5).solution)

    def test_iteration_cap_reports_not_converged(self):
        r = solve_box_nnm(rand_prior(7), 2.0, SolverConfig(max_iters=2))
        assert r.iterations == 2 and not r.converged
        # still feasible: the result is projected onto the box
        assert np.abs(r.solution - rand_prior(7)).max() <= 2.0 + 1e-9

    def test_diagnostics(self):
        d = solve_box_nnm(rand_prior(0), 1.0).diagnostics()
        assert set(d) == {"iterations", "final_nuclear_norm", "max_violation", "converged", "delta"}

    @pytest.mark.parametrize("bad", [-1.0, np.nan])
    def test_bad_delta(self, bad):
        with pytest.raises(InvalidArgumentError):
            solve_box_nnm(rand_prior(0), bad)

    def test_non_finite_prior(self):
        p = rand_prior(0)
        p[0, 0] = np.inf
        with pytest.raises(InvalidArgumentError):
            solve_box_nnm(p, 1.0)

    @pytest.mark.parametrize("kw", [{"max_iters": 0}, {"rel_change_tol": 0.0}, {"penalty": -1.0}, {"feasibility_tol": 0.0}])
    def test_bad_config(self, kw):
        with pytest.raises(InvalidArgumentError):
            SolverConfig(**kw)


class TestObservedNnm:
    def test_fully_observed(self):
        m = rand_prior(0, (6, 7))
        r = solve_observed_nnm(np.ones(m.shape, bool), m)
        np.testing.assert_allclose(r.solution, m, atol=1e-12)

    def test_rank_one_recovery(self):
        u = 1 + np.sin(np.linspace(0, 3, 50))
        v = 2 + np.cos(np.linspace(0, 2, 50))
        m = np.outer(u, v)
        mask = np.random.default_rng(0).random(m.shape) < 0.4
        r = solve_observed_nnm(mask, np.where(mask, m, 0.0))
        assert r.converged
        assert np.linalg.norm(r.solution - m) / np.linalg.norm(m) < 1e-2

    def test_single_row(self):
        mask = np.zeros((10, 12), bool)
        mask[3] = True
        vals = np.zeros((10, 12))
        vals[3] = np.random.default_rng(1).normal(size=12)
        r = solve_observed_nnm(mask, vals)
        assert r.converged
        np.testing.assert_allclose(r.solution[3], vals[3], atol=1e-9)
        assert r.final_nuclear_norm <= np.linalg.norm(vals[3]) + 1e-6

    def test_accepts_sample_mask(self):
        sm = SampleMask((3, 4), (np.array([0, 1]), np.array([1, 2]), np.array([0, 3])), 0.5)
        vals = np.arange(12.0).reshape(3, 4)
        r = solve_observed_nnm(sm, vals)
        b = sm.to_boolean()
        np.testing.assert_allclose(r.solution[b], vals[b], atol=1e-9)

    def test_empty_mask(self):
        with pytest.raises(InvalidArgumentError):
            solve_observed_nnm(np.zeros((3, 3), bool), np.zeros((3, 3)))

    def test_shape_checks(self):
        with pytest.raises(InvalidArgumentError):
            solve_observed_nnm(np.ones((3, 3), bool), np.zeros((3, 4)))
        with pytest.raises(InvalidArgumentError):
            solve_observed_nnm(np.ones((3, 3), bool), np.zeros((3, 3)), shape=(4, 4))
