import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spixct import _backend, _kernels_py
from spixct._stencil import pixel_ray_stencils
from spixct.grid import Grid
from spixct.projector import RayGeometry

compiled = pytest.importorskip("spixct._kernels")


def stencil_case(n, n_half, spp, seed):
    rng = np.random.default_rng(seed)
    half = tuple(np.pi * np.arange(n_half) / n_half)
    return rng, pixel_ray_stencils(n, half, spp)


class TestCompiledMatchesFallback:
    @settings(max_examples=15, deadline=None)
    @given(n=st.integers(4, 24), n_half=st.integers(1, 12), spp=st.integers(1, 3),
           seed=st.integers(0, 10**6))
    def test_stencil_kernels(self, n, n_half, spp, seed):
        rng, stencils = stencil_case(n, n_half, spp, seed)
        image = rng.standard_normal((n, n))
        field = rng.standard_normal((n_half, n, n))
        np.testing.assert_allclose(compiled.stencil_forward(image, *stencils),
                                   _kernels_py.stencil_forward(image, *stencils),
                                   rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(compiled.stencil_adjoint(field, *stencils),
                                   _kernels_py.stencil_adjoint(field, *stencils),
                                   rtol=1e-13, atol=1e-13)

    @settings(max_examples=15, deadline=None)
    @given(n=st.integers(4, 24), n_angles=st.integers(1, 20), spp=st.integers(1, 3),
           layout=st.sampled_from(["uniform", "adaptive"]), seed=st.integers(0, 10**6))
    def test_line_kernels(self, n, n_angles, spp, layout, seed):
        rng = np.random.default_rng(seed)
        grid = Grid(n, 1.3)
        geo = RayGeometry.for_grid(grid, n_angles, spp, offset_layout=layout)
        th = geo.angles
        args = (grid.half_width, np.cos(th), np.sin(th), geo.offsets, spp)
        image = rng.standard_normal(grid.shape)
        sino = rng.standard_normal((n_angles, geo.n_offsets))
        np.testing.assert_allclose(compiled.line_forward(image, *args),
                                   _kernels_py.line_forward(image, *args),
                                   rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(compiled.line_adjoint(sino, n, *args),
                                   _kernels_py.line_adjoint(sino, n, *args),
                                   rtol=1e-13, atol=1e-13)


class TestSelection:
    def test_compiled_is_default(self):
        if os.environ.get("SPIXCT_PURE_PYTHON", "") in ("", "0"):
            assert _backend.BACKEND == "cython"

    def test_environment_forces_fallback(self):
        env = dict(os.environ, SPIXCT_PURE_PYTHON="1")
        out = subprocess.run(
            [sys.executable, "-c", "from spixct._backend import BACKEND; print(BACKEND)"],
            env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "python"
