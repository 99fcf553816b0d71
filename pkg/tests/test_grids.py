import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cylwave.grids import (DIRICHLET, NEUMANN, CrossSectionField, Field,
                           GridConfig, GridError, apply_boundary, build_grid,
                           laplacian_advection, transport_operator)


def grid_1d(n_z=401, z=(-20.0, 20.0), axial_right=DIRICHLET):
    return build_grid(GridConfig(n_y=1, n_z=n_z, z_min=z[0], z_max=z[1],
                                 bc_axial_right=axial_right))


def grid_2d(n_y=33, n_z=41, bc=NEUMANN, axial_right=NEUMANN):
    return build_grid(GridConfig(n_y=n_y, n_z=n_z, y_min=0.0, y_max=1.0,
                                 z_min=-2.0, z_max=2.0, bc_left=bc, bc_right=bc,
                                 bc_axial_right=axial_right))


class TestBuildGrid:
    def test_axial_spacing(self):
        g = grid_1d(n_z=401, z=(-20.0, 20.0))
        assert g.dz == pytest.approx(0.1)

    def test_section_spacing(self):
        g = grid_2d(n_y=33)
        assert g.dy == pytest.approx(1.0 / 32.0)

    def test_too_few_axial_points(self):
        with pytest.raises(GridError, match="axial resolution too small"):
            build_grid(GridConfig(n_y=1, n_z=8, z_min=0.0, z_max=1.0))

    def test_empty_window(self):
        with pytest.raises(GridError):
            build_grid(GridConfig(n_z=32, z_min=1.0, z_max=1.0))

    def test_unknown_tag(self):
        with pytest.raises(GridError, match="unknown boundary tag"):
            build_grid(GridConfig(n_y=5, n_z=32, z_min=0, z_max=1, bc_left="robin"))

    def test_pure_1d_requires_neumann(self):
        with pytest.raises(GridError):
            build_grid(GridConfig(n_y=1, n_z=32, z_min=0, z_max=1, bc_left=DIRICHLET))

    def test_deterministic(self):
        cfg = GridConfig(n_y=5, n_z=32, z_min=0.0, z_max=1.0)
        assert build_grid(cfg) == build_grid(cfg)

    def test_grid_is_immutable(self):
        g = grid_1d()
        with pytest.raises(Exception):
            g.n_z = 10


class TestFields:
    def test_shape_mismatch(self):
        g = grid_1d(n_z=32)
        with pytest.raises(GridError):
            Field(g, np.zeros((1, 31)))

    def test_nonfinite_rejected(self):
        g = grid_1d(n_z=32)
        vals = np.zeros((1, 32))
        vals[0, 3] = np.nan
        with pytest.raises(GridError):
            Field(g, vals)

    def test_section_dirichlet_ends_zeroed(self):
        g = grid_2d(bc=DIRICHLET)
        f = CrossSectionField(g, np.ones(g.n_y))
        assert f.values[0] == 0.0 and f.values[-1] == 0.0


class TestApplyBoundary:
    def test_dirichlet_rows_zeroed(self):
        g = grid_2d(bc=DIRICHLET, axial_right=DIRICHLET)
        out = apply_boundary(Field(g, np.ones(g.shape)))
        assert np.all(out.values[0, :] == 0.0)
        assert np.all(out.values[-1, :] == 0.0)
        assert np.all(out.values[:, -1] == 0.0)

    def test_neumann_leaves_constants(self):
        g = grid_2d(bc=NEUMANN, axial_right=NEUMANN)
        u = Field(g, np.ones(g.shape))
        assert np.array_equal(apply_boundary(u).values, u.values)

    def test_idempotent(self):
        g = grid_2d(bc=DIRICHLET, axial_right=DIRICHLET)
        rng = np.random.default_rng(0)
        u = Field(g, rng.uniform(size=g.shape))
        once = apply_boundary(u)
        twice = apply_boundary(once)
        assert np.array_equal(once.values, twice.values)

    def test_mirror_ghost_kills_normal_derivative(self):
        # linear-in-y data: the operator's boundary row must equal the
        # mirror-ghost stencil, whose implied centered normal derivative is 0
        g = grid_2d(bc=NEUMANN, axial_right=NEUMANN)
        u = Field(g, np.tile(g.y[:, None], (1, g.n_z)))
        lap = laplacian_advection(u, 0.0)
        mirror_row0 = 2.0 * (u.values[1, :] - u.values[0, :]) / g.dy ** 2
        np.testing.assert_allclose(lap.values[0, :], mirror_row0, atol=1e-12)
        ghost = u.values[1, :]  # reflection
        normal = (u.values[1, :] - ghost) / (2 * g.dy)
        assert np.max(np.abs(normal)) == 0.0


class TestLaplacianAdvection:
    def test_constants_annihilated(self):
        g = grid_2d(bc=NEUMANN, axial_right=NEUMANN)
        out = laplacian_advection(Field(g, np.ones(g.shape)), 0.7)
        np.testing.assert_allclose(out.values, 0.0, atol=1e-12)

    def test_linear_axial_advection_exact(self):
        g = grid_1d(n_z=81, z=(-4.0, 4.0), axial_right=NEUMANN)
        u = Field(g, np.tile(g.z, (1, 1)))
        out = laplacian_advection(u, 2.0)
        np.testing.assert_allclose(out.values[0, 1:-1], 2.0, atol=1e-11)

    def test_dirichlet_sine_eigenfunction(self):
        errs = []
        for n_y in (33, 65):
            g = build_grid(GridConfig(n_y=n_y, n_z=17, y_min=0.0, y_max=1.0,
                                      z_min=0.0, z_max=1.0, bc_left=DIRICHLET,
                                      bc_right=DIRICHLET, bc_axial_right=NEUMANN))
            u = Field(g, np.tile(np.sin(np.pi * g.y)[:, None], (1, g.n_z)))
            out = laplacian_advection(u, 0.0)
            expect = -np.pi ** 2 * u.values[1:-1, 1:-1]
            errs.append(np.max(np.abs(out.values[1:-1, 1:-1] - expect)))
        assert errs[0] < 0.01 * np.pi ** 2
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)

    def test_interior_row_sums_vanish(self):
        g = grid_2d(bc=NEUMANN, axial_right=NEUMANN)
        A = transport_operator(g, 0.9).toarray()
        sums = A.sum(axis=1).reshape(g.shape)
        np.testing.assert_allclose(sums, 0.0, atol=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
    def test_linearity(self, seed, alpha, beta):
        g = grid_2d(n_y=9, n_z=17)
        rng = np.random.default_rng(seed)
        u, v = rng.normal(size=g.shape), rng.normal(size=g.shape)
        lhs = laplacian_advection(Field(g, alpha * u + beta * v), 0.4).values
        rhs = (alpha * laplacian_advection(Field(g, u), 0.4).values
               + beta * laplacian_advection(Field(g, v), 0.4).values)
        np.testing.assert_allclose(lhs, rhs, atol=1e-8 * (1 + abs(alpha) + abs(beta)))

    def test_negative_speed_rejected(self):
        g = grid_1d(n_z=32)
        with pytest.raises(GridError):
            laplacian_advection(Field(g, np.zeros(g.shape)), -0.1)
