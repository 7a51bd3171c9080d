import warnings

import numpy as np
import pytest

from radiomap.channel import GridSpec, default_scene, noiseless_map, shadowing_rng
from radiomap.exceptions import InvalidArgumentError
from radiomap.lowrank import solve_box_nnm
from radiomap.lpr import (
    DEFAULT_BANDWIDTHS,
    LprConfig,
    lpr_loocv,
    lpr_map,
    lpr_mc,
    lpr_predict,
    resolve_bandwidth,
)
from radiomap.metrics import nmse
from radiomap.rbf import SliceMeasurements
from radiomap.sampling import build_mask

# NMSE of lpr_map on the noiseless default scene, rho=0.2, uniform mask seed 0,
# auto bandwidth; frozen from this implementation's first run
GOLDEN_LPR_NMSE = 14.98805333983996


def wls_oracle(r, g, q, h):
    w = np.exp(-0.5 * ((r - q) / h) ** 2)
    x = np.column_stack([np.ones_like(r), r - q])
    a = x.T @ (w[:, None] * x)
    b = x.T @ (w * g)
    return np.linalg.solve(a, b)[0]


@pytest.fixture
def slice6():
    rng = np.random.default_rng(3)
    r = np.sort(rng.uniform(0.5, 4.0, 6))
    return SliceMeasurements(0, r, rng.normal(-90, 5, 6))


class TestPredict:
    @pytest.mark.parametrize("h", [0.1, 0.4, 1.6, 10.0])
    def test_affine_reproduction(self, h):
        r = np.array([0.3, 0.9, 1.4, 2.2, 3.0])
        meas = SliceMeasurements(0, r, 2 + 3 * r)
        q = np.linspace(0.1, 4.0, 17)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            np.testing.assert_allclose(lpr_predict(meas, q, LprConfig(h)), 2 + 3 * q, atol=1e-9)

    def test_constant(self):
        meas = SliceMeasurements(0, [1.0, 2.0, 3.0], [-71.0] * 3)
        assert lpr_predict(meas, 2.4, LprConfig(0.8)) == pytest.approx(-71.0, abs=1e-12)

    def test_wls_oracle(self, slice6):
        q = 0.5 * (slice6.radii[2] + slice6.radii[3])
        expected = wls_oracle(slice6.radii, slice6.values, q, 0.8)
        assert lpr_predict(slice6, q, LprConfig(0.8)) == pytest.approx(expected, abs=1e-9)

    def test_translation_invariance(self, slice6):
        q = np.array([0.7, 1.9, 3.3])
        shifted = SliceMeasurements(0, slice6.radii + 12.5, slice6.values)
        a = lpr_predict(slice6, q, LprConfig(0.4))
        b = lpr_predict(shifted, q + 12.5, LprConfig(0.4))
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_widening_warns(self):
        meas = SliceMeasurements(0, [1.0, 5.0, 9.0], [1.0, 2.0, 3.0])
        with pytest.warns(RuntimeWarning, match="widened"):
            v = lpr_predict(meas, 3.0, LprConfig(0.01))
        assert np.isfinite(v)

    def test_too_few(self):
        with pytest.raises(InvalidArgumentError):
            lpr_predict(SliceMeasurements(0, [1.0], [1.0]), 1.0)

    @pytest.mark.parametrize("kw", [{"bandwidth": 0.0}, {"bandwidth": "cv"}, {"candidates": ()}])
    def test_bad_config(self, kw):
        with pytest.raises(InvalidArgumentError):
            LprConfig(**kw)


class TestBandwidth:
    def test_auto_matches_exhaustive(self, slice6):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            chosen = resolve_bandwidth(slice6, LprConfig())
            scores = []
            for h in DEFAULT_BANDWIDTHS:
                errs = []
                for k in range(len(slice6)):
                    red = slice6.without(k)
                    errs.append(slice6.values[k] - lpr_predict(red, slice6.radii[k], LprConfig(h)))
                scores.append(np.mean(np.square(errs)))
        assert chosen == DEFAULT_BANDWIDTHS[int(np.argmin(scores))]

    def test_loocv_excludes_self(self, slice6):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = lpr_loocv(slice6, 0.8)
            red = slice6.without(2)
            expected = slice6.values[2] - lpr_predict(red, slice6.radii[2], LprConfig(0.8))
        assert res[2] == pytest.approx(expected, abs=1e-9)

    def test_fixed(self, slice6):
        assert resolve_bandwidth(slice6, LprConfig(0.3)) == 0.3


class TestLprMap:
    grid = GridSpec(-80, 80, 0.1, 10, 6, 30)

    def test_full_affine_rows(self):
        r = self.grid.radii
        z = np.vstack([a + b * r for a, b in zip(range(6), np.linspace(-3, 3, 6))])
        prior, _ = lpr_map(build_mask(self.grid, 1.0), z, self.grid, LprConfig(0.4))
        np.testing.assert_allclose(prior, z, atol=1e-9)

    def test_constant_map(self):
        z = np.full(self.grid.shape, -66.0)
        m = build_mask(self.grid, 0.2, seed=1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            prior, _ = lpr_map(m, z, self.grid)
        np.testing.assert_allclose(prior, -66.0, atol=1e-9)

    def test_golden_value(self):
        grid, geom = default_scene()
        z = noiseless_map(grid, geom)
        m = build_mask(grid, 0.2, "uniform", seed=0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            prior, _ = lpr_map(m, z, grid)
        err = nmse(z, prior)
        assert np.isfinite(err)
        assert err == pytest.approx(GOLDEN_LPR_NMSE, rel=1e-9)


class TestLprMc:
    def test_delta_zero(self):
        grid = GridSpec(-80, 80, 0.1, 10, 8, 30)
        z = np.random.default_rng(0).normal(-80, 3, grid.shape)
        m = build_mask(grid, 0.2, seed=0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            prior, _ = lpr_map(m, z, grid)
            out = lpr_mc(m, z, grid, delta=0.0)
        np.testing.assert_array_equal(out.solution, prior)

    def test_rank_one_exact_prior(self):
        # affine-in-r rows scaled per angle: LPR reproduces them, so the prior is exact
        grid = GridSpec(-80, 80, 0.1, 10, 8, 30)
        z = -np.outer(np.linspace(1, 2, 8), 40 + 2 * grid.radii)
        m = build_mask(grid, 0.2, seed=0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            out = lpr_mc(m, z, grid)
        np.testing.assert_allclose(out.solution, solve_box_nnm(z, out.delta).solution, atol=1e-9)
        assert np.abs(out.solution - z).max() <= out.delta + 1e-6

    def test_improves_on_lpr(self):
        grid, geom = default_scene()
        base = noiseless_map(grid, geom)
        wins = 0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for seed in range(50):
                z = base + 3 * shadowing_rng(seed).standard_normal(grid.shape)
                m = build_mask(grid, 0.1, "mulaw", seed=2**32 + seed)
                prior, _ = lpr_map(m, z, grid)
                wins += nmse(z, lpr_mc(m, z, grid).solution) <= nmse(z, prior)
        assert wins >= 40

    def test_unknown_rule(self):
        grid = GridSpec(-80, 80, 0.1, 10, 4, 20)
        with pytest.raises(InvalidArgumentError):
            lpr_mc(build_mask(grid, 0.5), np.zeros(grid.shape), grid, delta="mad")
