import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spixct.errors import InvalidArgument
from spixct.grid import Grid, ImageGrid
from spixct.phantom import generate_disk, generate_gaussian
from spixct.projector import (PixelRayField, RayGeometry, Sinogram, line_integrals,
                              normal_operator, pixel_ray_adjoint, pixel_ray_field,
                              pixel_ray_half, pixel_ray_normal, riesz_oracle,
                              riesz_self_integral, xray_adjoint, xray_forward)


def image_inner(a, b):
    return float(np.sum(a.values * b.values) * a.pixel_spacing**2)


def field_inner(a, b_values):
    return float(np.sum(a.values * b_values) * a.angle_step * a.grid.spacing**2)


def gaussian_chord(offset, sigma, amplitude=1.0):
    """Line integral of a centered isotropic Gaussian at signed distance ``offset``."""
    return amplitude * sigma * math.sqrt(2 * math.pi) * math.exp(-offset**2 / (2 * sigma**2))


class TestRayGeometry:
    @pytest.mark.parametrize("layout", ["uniform", "adaptive"])
    def test_for_grid_covers_the_square(self, layout):
        grid = Grid(32, 1.5)
        geo = RayGeometry.for_grid(grid, 30, offset_layout=layout)
        geo.check_grid(grid)
        assert geo.offsets.shape == (30, geo.n_offsets)
        assert np.all(np.abs(geo.offsets).max(axis=1) >= grid.half_width * math.sqrt(2))

    def test_angles_cover_half_circle(self):
        geo = RayGeometry(8, 5, 2.0)
        np.testing.assert_allclose(geo.angles, np.pi * np.arange(8) / 8)

    def test_adaptive_scale_range(self):
        geo = RayGeometry.for_grid(Grid(16), 64, offset_layout="adaptive")
        assert geo.offset_scale.min() == pytest.approx(1.0)
        assert geo.offset_scale.max() == pytest.approx(math.sqrt(2))

    def test_short_extent_rejected(self):
        with pytest.raises(InvalidArgument):
            RayGeometry(4, 5, 1.0).check_grid(Grid(8))

    @pytest.mark.parametrize("kwargs", [dict(n_angles=0), dict(n_offsets=1),
                                        dict(offset_extent=0.0), dict(offset_layout="odd")])
    def test_invalid_arguments(self, kwargs):
        base = dict(n_angles=4, n_offsets=5, offset_extent=2.0)
        base.update(kwargs)
        with pytest.raises(InvalidArgument):
            RayGeometry(**base)

    def test_sinogram_shape_checked(self):
        with pytest.raises(InvalidArgument):
            Sinogram(RayGeometry(4, 5, 2.0), np.zeros((5, 4)))


class TestAdjoints:
    @settings(max_examples=20, deadline=None)
    @given(n=st.integers(16, 32), n_angles=st.integers(1, 40), seed=st.integers(0, 10**6),
           layout=st.sampled_from(["uniform", "adaptive"]), spp=st.integers(1, 3),
           hw=st.floats(0.5, 3.0))
    def test_sinogram_dot_product(self, n, n_angles, seed, layout, spp, hw):
        rng = np.random.default_rng(seed)
        grid = Grid(n, hw)
        geo = RayGeometry.for_grid(grid, n_angles, spp, offset_layout=layout)
        f = ImageGrid(grid, rng.standard_normal(grid.shape))
        psi = Sinogram(geo, rng.standard_normal((geo.n_angles, geo.n_offsets)))
        lhs = xray_forward(f, geo).inner(psi)
        rhs = image_inner(f, xray_adjoint(psi, grid))
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))

    @settings(max_examples=20, deadline=None)
    @given(n=st.integers(16, 32), half=st.integers(1, 24), seed=st.integers(0, 10**6),
           spp=st.integers(1, 3))
    def test_pixel_ray_dot_product(self, n, half, seed, spp):
        rng = np.random.default_rng(seed)
        grid = Grid(n)
        n_full = 2 * half
        f = ImageGrid(grid, rng.standard_normal(grid.shape))
        w = rng.standard_normal((n * n, n_full))
        fx = pixel_ray_field(f, n_full, spp)
        lhs = field_inner(fx, w)
        rhs = image_inner(f, pixel_ray_adjoint(w, grid, n_full, spp))
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))


class TestLineIntegrals:
    @pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 4, 1.2, math.pi / 2, 2.5])
    def test_gaussian_chords(self, theta):
        sigma = 0.15
        g = generate_gaussian(128, 1.0, sigma, 1.0)
        offsets = np.linspace(-0.4, 0.4, 9)
        got = line_integrals(g, [theta], offsets)[0]
        expected = np.array([gaussian_chord(s, sigma) for s in offsets])
        # Bilinear interpolation error is at most h^2/8 * |Laplacian| ~ h^2/(4 sigma^2).
        h = g.pixel_spacing
        np.testing.assert_allclose(got, expected, rtol=2 * h**2 / (4 * sigma**2), atol=1e-4)

    def test_zero_image(self):
        grid = Grid(16)
        geo = RayGeometry.for_grid(grid, 12)
        assert np.all(xray_forward(grid.zeros(), geo).values == 0)

    def test_lines_missing_the_square_are_zero(self):
        g = ImageGrid(Grid(16), np.ones((16, 16)))
        assert np.all(line_integrals(g, [0.1, 1.0], [-5.0, 5.0]) == 0)

    def test_constant_chord_length(self):
        # Horizontal line through the middle of a unit constant: the bilinear
        # interpolant is 1 on [-hw, hw] and tapers over one pixel beyond it.
        g = ImageGrid(Grid(21), np.ones((21, 21)))
        h = g.pixel_spacing
        value = line_integrals(g, [0.0], [0.0])[0, 0]
        assert value == pytest.approx(2.0 + h, rel=1e-12)

    def test_pixel_ray_matches_sinogram_line(self):
        g = generate_gaussian(32, 1.0, 0.2, 1.0)
        half = pixel_ray_half(g.values, g.grid, 16)
        X, Y = g.grid.coordinates()
        rows, cols = [3, 16, 27], [5, 20, 30]
        for k, theta in enumerate(2 * np.pi * np.arange(8) / 16):
            c, s = math.cos(theta), math.sin(theta)
            for i, j in zip(rows, cols):
                off = -X[i, j] * s + Y[i, j] * c
                line = line_integrals(g, [theta], [off])[0, 0]
                assert half[k, i, j] == pytest.approx(line, rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize("theta", [0.0, 0.7, math.pi / 4, 2.0])
    @pytest.mark.parametrize("d", [0.0, 0.3])
    def test_disk_chords(self, theta, d):
        disk = generate_disk(201, 1.0, 0.5, 1.0)
        got = line_integrals(disk, [theta], [d])[0, 0]
        # Pixel-center sampling moves the edge by at most one pixel per side.
        assert got == pytest.approx(2 * math.sqrt(0.25 - d * d), abs=1.5 * disk.pixel_spacing)

    def test_pixel_ray_disk_chord_through_center(self):
        disk = generate_disk(101, 1.0, 0.5, 1.0)
        half = pixel_ray_half(disk.values, disk.grid, 72)[:, 50, 50]
        np.testing.assert_allclose(half, 1.0, atol=1.5 * disk.pixel_spacing)

    def test_linearity(self):
        rng = np.random.default_rng(5)
        grid = Grid(20)
        geo = RayGeometry.for_grid(grid, 30)
        a, b = rng.standard_normal((2, 20, 20))
        lhs = xray_forward(ImageGrid(grid, 2 * a - 0.5 * b), geo).values
        rhs = 2 * xray_forward(ImageGrid(grid, a), geo).values - 0.5 * xray_forward(
            ImageGrid(grid, b), geo).values
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(rhs).max())

    def test_sinogram_vanishes_beyond_support(self):
        grid = Grid(32)
        rng = np.random.default_rng(0)
        f = ImageGrid(grid, rng.random(grid.shape) * grid.support_mask())
        geo = RayGeometry.for_grid(grid, 24)
        sino = xray_forward(f, geo).values
        far = np.abs(geo.offsets) > grid.support_radius + math.sqrt(2) * grid.spacing
        assert np.all(sino[far] == 0)

    def test_pixel_ray_field_is_half_circle_periodic(self):
        g = generate_gaussian(16, 1.0, 0.3, 1.0)
        v = pixel_ray_field(g, 20).values
        np.testing.assert_array_equal(v[:, :10], v[:, 10:])


class TestNormalOperator:
    @pytest.mark.parametrize("layout", ["uniform", "adaptive"])
    def test_backprojection_of_ones(self, layout):
        grid = Grid(32)
        geo = RayGeometry.for_grid(grid, 90, offset_layout=layout)
        ones = Sinogram(geo, np.ones((geo.n_angles, geo.n_offsets)))
        bp = xray_adjoint(ones, grid).values[grid.support_mask()]
        tol = 1e-12 if layout == "adaptive" else 5e-3
        np.testing.assert_allclose(bp, 2 * np.pi, rtol=tol)

    def test_disk_at_origin(self):
        # X'X 1_B(0) = 2 * int_B dy/|y| = 4 pi r at the center of a disk of radius r.
        r = 0.5
        d = generate_disk(101, 1.0, r, 1.0)
        value = normal_operator(d).values[50, 50]
        assert value == pytest.approx(4 * np.pi * r, rel=0.02)

    def test_pixel_ray_disk_at_origin(self):
        d = generate_disk(101, 1.0, 0.5, 1.0)
        value = pixel_ray_normal(d, 360).values[50, 50]
        assert value == pytest.approx(2 * np.pi, rel=0.02)

    def test_riesz_self_integral(self):
        from scipy import integrate
        h = 0.3
        val, _ = integrate.dblquad(lambda y, x: 1 / math.hypot(x, y), 0, h / 2, 0, h / 2)
        assert riesz_self_integral(h) == pytest.approx(4 * val, rel=1e-8)

    def test_sinogram_path_close_to_oracle(self):
        rng = np.random.default_rng(3)
        grid = Grid(24)
        f = ImageGrid(grid, rng.random(grid.shape) * grid.support_mask())
        oracle = riesz_oracle(f).values
        got = normal_operator(f, RayGeometry.for_grid(grid, 180)).values
        assert np.linalg.norm(got - oracle) / np.linalg.norm(oracle) < 0.05

    def test_pixel_ray_path_close_to_oracle(self):
        rng = np.random.default_rng(4)
        grid = Grid(24)
        f = ImageGrid(grid, rng.random(grid.shape) * grid.support_mask())
        oracle = riesz_oracle(f).values
        got = pixel_ray_normal(f, 360).values
        assert np.linalg.norm(got - oracle) / np.linalg.norm(oracle) < 0.05

    def test_pixel_ray_normal_is_translation_covariant(self):
        grid = Grid(40)
        X, Y = grid.coordinates()
        bump = np.exp(-((X + 0.2) ** 2 + Y**2) / 0.02)
        f = ImageGrid(grid, bump)
        shifted = ImageGrid(grid, np.roll(bump, 5, axis=1))
        a = pixel_ray_normal(f, 64).values
        b = pixel_ray_normal(shifted, 64).values
        # Compare away from the border, where no mass enters or leaves.
        np.testing.assert_allclose(np.roll(a, 5, axis=1)[:, 10:30], b[:, 10:30],
                                   rtol=0, atol=1e-10)

    def test_pixel_ray_normal_is_symmetric(self):
        rng = np.random.default_rng(0)
        grid = Grid(18)
        f = ImageGrid(grid, rng.standard_normal(grid.shape))
        g = ImageGrid(grid, rng.standard_normal(grid.shape))
        lhs = image_inner(pixel_ray_normal(f, 30), g)
        rhs = image_inner(f, pixel_ray_normal(g, 30))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_riesz_oracle_single_pixel(self):
        grid = Grid(21)
        v = np.zeros(grid.shape)
        v[10, 10] = 1.0
        out = riesz_oracle(ImageGrid(grid, v)).values
        h = grid.spacing
        X, Y = grid.coordinates()
        r = np.hypot(X, Y)
        far = r > 0
        np.testing.assert_allclose(out[far], 2 * h * h / r[far], rtol=1e-14)
        assert out[10, 10] == pytest.approx(2 * riesz_self_integral(h))

    def test_riesz_oracle_warns_when_large(self):
        with pytest.warns(RuntimeWarning):
            riesz_oracle(Grid(65).zeros())
