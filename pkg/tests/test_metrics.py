import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spixct.errors import InvalidArgument
from spixct.grid import Grid, ImageGrid, ScalarField
from spixct.metrics import (NoiseSpec, add_relative_noise, gradient_l2_norm, h1_norm,
                            interior_window, inverse_poincare_ratio, l2_norm,
                            perturbation_pairs, random_bump_image, relative_l2_error,
                            stability_audit, stability_record)


def plane(grid, a, b, c):
    X, Y = grid.coordinates()
    return ImageGrid(grid, a * X + b * Y + c)


class TestNorms:
    @settings(max_examples=20, deadline=None)
    @given(c=st.floats(-10, 10).filter(lambda v: v == 0 or abs(v) > 1e-100), n=st.integers(3, 40), hw=st.floats(0.2, 5))
    def test_constant(self, c, n, hw):
        img = ImageGrid(Grid(n, hw), np.full((n, n), c))
        assert l2_norm(img) == pytest.approx(2 * hw * abs(c), rel=1e-12)
        assert gradient_l2_norm(img) == 0.0

    def test_linear_ramp_gradient_exact(self):
        # Central and one-sided differences are exact on affine functions.
        img = plane(Grid(17, 1.5), 2.0, -1.0, 0.3)
        area = 3.0**2
        assert gradient_l2_norm(img) == pytest.approx(math.sqrt(5 * area), rel=1e-12)

    def test_l2_converges_at_second_order(self):
        exact = math.sinh(2.0) ** 2  # int over [-1, 1]^2 of exp(2x + 2y)
        errs = []
        for n in (17, 33, 65):
            X, Y = Grid(n).coordinates()
            errs.append(abs(l2_norm(ImageGrid(Grid(n), np.exp(X + Y))) ** 2 - exact))
        assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5

    def test_h1_combines(self):
        img = plane(Grid(9), 1.0, 0.0, 1.0)
        assert h1_norm(img) == pytest.approx(math.hypot(l2_norm(img), gradient_l2_norm(img)))

    def test_accepts_scalar_fields(self):
        f = ScalarField(Grid(5), np.ones((5, 5)))
        assert l2_norm(f) == pytest.approx(2.0)

    def test_relative_error_and_window(self):
        grid = Grid(20)
        truth = ImageGrid(grid, np.ones(grid.shape))
        est = np.ones(grid.shape)
        est[0, :] = 3.0
        w = interior_window(grid, 0.8)
        assert relative_l2_error(ImageGrid(grid, est), truth, w) == 0.0
        assert relative_l2_error(ImageGrid(grid, est), truth) == pytest.approx(
            math.sqrt(4 * 20 / 400))
        assert w.sum() == 16 * 16

    def test_relative_error_of_zero_truth(self):
        with pytest.raises(InvalidArgument):
            relative_l2_error(Grid(4).zeros(), Grid(4).zeros())


class TestNoise:
    def test_zero_level_is_identity(self):
        data = ScalarField(Grid(8), np.random.default_rng(0).random((8, 8)))
        out = add_relative_noise(data, NoiseSpec(0.0))
        np.testing.assert_array_equal(out.values, data.values)

    def test_seeded_and_reproducible(self):
        data = ScalarField(Grid(16), np.full((16, 16), 5.0))
        a = add_relative_noise(data, NoiseSpec(0.01, seed=3)).values
        b = add_relative_noise(data, NoiseSpec(0.01, seed=3)).values
        c = add_relative_noise(data, NoiseSpec(0.01, seed=4)).values
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_global_scale(self):
        grid = Grid(200)
        rng = np.random.default_rng(1)
        signal = rng.standard_normal(grid.shape)
        data = ScalarField(grid, 2 * np.pi + signal)
        noise = add_relative_noise(data, NoiseSpec(0.05, seed=0)).values - data.values
        rms = math.sqrt(np.mean(signal**2))
        assert noise.std() == pytest.approx(0.05 * rms, rel=0.02)
        assert abs(noise.mean()) < 0.05 * rms * 5 / 200

    def test_noise_scales_linearly_with_level(self):
        grid = Grid(16)
        data = ScalarField(grid, 2 * np.pi - np.random.default_rng(0).random(grid.shape))
        n1 = add_relative_noise(data, NoiseSpec(0.001, 7)).values - data.values
        n10 = add_relative_noise(data, NoiseSpec(0.01, 7)).values - data.values
        np.testing.assert_allclose(n10, 10 * n1, rtol=1e-9, atol=1e-15)

    def test_pixelwise_leaves_baseline_pixels_alone(self):
        values = np.full((8, 8), 2 * np.pi)
        values[2, 3] = 1.0
        out = add_relative_noise(ScalarField(Grid(8), values), NoiseSpec(0.1), pixelwise=True)
        changed = out.values != values
        assert changed.sum() == 1 and changed[2, 3]

    def test_negative_level_rejected(self):
        with pytest.raises(InvalidArgument):
            NoiseSpec(-0.1)


class TestStability:
    def test_identical_pair_is_undefined(self):
        f = random_bump_image(Grid(16), 0.1, np.random.default_rng(0))
        rec = stability_record(f, f, 32)
        assert not rec.defined and rec.l2_diff == 0.0 and rec.data_h1_diff == 0.0

    def test_bump_images(self):
        grid = Grid(32)
        img = random_bump_image(grid, 0.2, np.random.default_rng(0))
        assert img.values.max() == pytest.approx(0.2)
        assert img.values.min() >= 0 and img.is_supported()

    def test_pairs_are_seeded(self):
        a = perturbation_pairs(Grid(16), [0.1, 1.0], 3, seed=5)
        b = perturbation_pairs(Grid(16), [0.1, 1.0], 3, seed=5)
        assert len(a) == 6
        for (p, q), (r, s) in zip(a, b):
            np.testing.assert_array_equal(p.values, r.values)
            np.testing.assert_array_equal(q.values, s.values)
        assert a[3][0].values.max() == pytest.approx(1.0)

    def test_audit_small_perturbations(self):
        grid = Grid(24)
        pairs = perturbation_pairs(grid, [0.05], 6, seed=0)
        audit = stability_audit(pairs, 48)
        ratios = [r.lower_ratio for r in audit.records]
        assert audit.min_lower_ratio == min(ratios) > 0
        assert max(ratios) / min(ratios) < 2
        # Small perturbations act almost linearly: data difference ~ l2 difference.
        assert audit.fitted_exponent == pytest.approx(1.0, abs=0.2)

    def test_large_perturbations_have_smaller_ratio(self):
        grid = Grid(24)
        small = stability_audit(perturbation_pairs(grid, [0.05], 6, seed=1), 48)
        large = stability_audit(perturbation_pairs(grid, [8.0], 6, seed=1), 48)
        assert np.median([r.lower_ratio for r in large.records]) < \
            np.median([r.lower_ratio for r in small.records])

    def test_audit_csv(self, tmp_path):
        grid = Grid(16)
        f = random_bump_image(grid, 0.1, np.random.default_rng(0))
        pairs = perturbation_pairs(grid, [0.1], 2, seed=0) + [(f, f)]
        audit = stability_audit(pairs, 32)
        audit.to_csv(tmp_path / "a.csv", comments=["seed=0"])
        lines = (tmp_path / "a.csv").read_text().splitlines()
        rows = list(csv.reader(lines[1:-1]))
        assert rows[0] == ["M", "l2_diff", "h1_grad_diff", "data_h1_diff", "lower_ratio"]
        assert rows[-1][-1] == "undefined"
        assert lines[-1].startswith("# min_lower_ratio=")

    def test_inverse_poincare(self):
        grid = Grid(12)
        a = ImageGrid(grid, np.ones(grid.shape))
        assert inverse_poincare_ratio(a, grid.zeros()) == math.inf
        ramp = plane(grid, 1.0, 0.0, 0.0)
        assert inverse_poincare_ratio(ramp, grid.zeros()) == pytest.approx(
            l2_norm(ramp) / 2.0)
