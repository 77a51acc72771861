import numpy as np
import pytest

from gvgeom.fusion import SIGMA_FLOOR, activate_log_uncertainty, fuse, gedepth_combine
from gvgeom.maps import DepthMap, UncertaintyMap


def _maps(df, dy, sf, sy):
    shape = np.shape(df)
    return (DepthMap(np.full(shape, 1.0) * df), DepthMap(np.full(shape, 1.0) * dy),
            UncertaintyMap(np.full(shape, 1.0) * sf),
            UncertaintyMap(np.full(shape, 1.0) * sy))


class TestActivateLogUncertainty:
    def test_zero_maps_to_one(self):
        u = activate_log_uncertainty(np.zeros((2, 2)))
        assert np.array_equal(u.values, np.ones((2, 2)))

    def test_log_two(self):
        u = activate_log_uncertainty(np.full((1, 1), np.log(2.0)))
        assert u.values[0, 0] == pytest.approx(2.0, rel=1e-12)

    def test_floor(self):
        u = activate_log_uncertainty(np.full((1, 1), -50.0))
        assert u.values[0, 0] == SIGMA_FLOOR

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            activate_log_uncertainty(np.array([[np.inf]]))


class TestFuse:
    def test_symmetric_mean(self):
        fused = fuse(*_maps(np.ones((2, 2)) * 10, 20.0, 1.0, 1.0))
        assert np.allclose(fused.values, 15.0)

    def test_certain_cue_dominates(self):
        fused = fuse(*_maps(np.ones((1, 1)) * 10, 20.0, SIGMA_FLOOR, 1.0))
        assert fused.values[0, 0] == pytest.approx(10.0, abs=1e-4)

    def test_literal_weighting(self):
        # The higher-uncertainty focal cue pushes the estimate toward d_y:
        # (1 * 10 + 3 * 20) / (1 + 3) = 17.5.
        fused = fuse(*_maps(np.ones((1, 1)) * 10, 20.0, 3.0, 1.0))
        assert fused.values[0, 0] == pytest.approx(17.5, rel=1e-12)

    def test_mask_intersection(self):
        d_f = DepthMap(np.ones((2, 2)), np.array([[True, True], [False, True]]))
        d_y = DepthMap(np.ones((2, 2)) * 3, np.array([[True, False], [True, True]]))
        s = UncertaintyMap(np.ones((2, 2)))
        fused = fuse(d_f, d_y, s, s)
        assert np.array_equal(fused.mask, [[True, False], [False, True]])
        assert fused.values[0, 1] == 0.0  # invalid pixels zeroed

    def test_betweenness(self):
        rng = np.random.default_rng(20)
        n = 100_000
        d_f, d_y = rng.uniform(1, 80, (2, 1, n))
        s_f, s_y = rng.uniform(1e-5, 10, (2, 1, n))
        fused = fuse(DepthMap(d_f), DepthMap(d_y),
                     UncertaintyMap(s_f), UncertaintyMap(s_y))
        lo = np.minimum(d_f, d_y) - 1e-12
        hi = np.maximum(d_f, d_y) + 1e-12
        assert np.all(fused.values >= lo) and np.all(fused.values <= hi)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(21)
        d_f, d_y = rng.uniform(1, 80, (2, 4, 4))
        s_f, s_y = rng.uniform(0.01, 5, (2, 4, 4))
        base = fuse(DepthMap(d_f), DepthMap(d_y),
                    UncertaintyMap(s_f), UncertaintyMap(s_y))
        k = 2.5
        scaled = fuse(DepthMap(k * d_f), DepthMap(k * d_y),
                      UncertaintyMap(s_f), UncertaintyMap(s_y))
        assert np.allclose(scaled.values, k * base.values, rtol=1e-12)

    def test_sigma_scale_invariance(self):
        rng = np.random.default_rng(22)
        d_f, d_y = rng.uniform(1, 80, (2, 4, 4))
        s_f, s_y = rng.uniform(0.01, 5, (2, 4, 4))
        base = fuse(DepthMap(d_f), DepthMap(d_y),
                    UncertaintyMap(s_f), UncertaintyMap(s_y))
        scaled = fuse(DepthMap(d_f), DepthMap(d_y),
                      UncertaintyMap(7.0 * s_f), UncertaintyMap(7.0 * s_y))
        assert np.allclose(scaled.values, base.values, rtol=1e-12)

    def test_continuity_at_fallback(self):
        # As both scales shrink to the floor the formula approaches the mean,
        # which is exactly the fallback value.
        d_f, d_y = np.full((1, 1), 10.0), np.full((1, 1), 20.0)
        for s in (1e-3, 1e-4, 2e-6):
            fused = fuse(DepthMap(d_f), DepthMap(d_y),
                         UncertaintyMap(np.full((1, 1), s)),
                         UncertaintyMap(np.full((1, 1), s)))
            assert fused.values[0, 0] == pytest.approx(15.0, rel=1e-9)
        at_floor = fuse(DepthMap(d_f), DepthMap(d_y),
                        UncertaintyMap(np.full((1, 1), SIGMA_FLOOR)),
                        UncertaintyMap(np.full((1, 1), SIGMA_FLOOR)))
        assert at_floor.values[0, 0] == 15.0

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            fuse(*_maps(np.ones((1, 1)), 1.0, -1.0, 1.0))


class TestGedepthCombine:
    def test_attention_one_selects_ground(self):
        d_g, d_r = DepthMap(np.full((2, 2), 10.0)), DepthMap(np.full((2, 2), 20.0))
        out = gedepth_combine(np.ones((2, 2)), d_g, d_r)
        assert np.array_equal(out.values, d_g.values)

    def test_attention_zero_selects_residual(self):
        d_g, d_r = DepthMap(np.full((2, 2), 10.0)), DepthMap(np.full((2, 2), 20.0))
        out = gedepth_combine(np.zeros((2, 2)), d_g, d_r)
        assert np.array_equal(out.values, d_r.values)

    def test_half_and_half(self):
        d_g, d_r = DepthMap(np.full((1, 1), 10.0)), DepthMap(np.full((1, 1), 20.0))
        out = gedepth_combine(np.full((1, 1), 0.5), d_g, d_r)
        assert out.values[0, 0] == 15.0

    def test_rejects_out_of_range_attention(self):
        d = DepthMap(np.ones((1, 1)))
        with pytest.raises(ValueError):
            gedepth_combine(np.full((1, 1), 1.5), d, d)
        with pytest.raises(ValueError):
            gedepth_combine(np.full((1, 1), -0.1), d, d)
