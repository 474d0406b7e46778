import math

import numpy as np
import pytest

from ksfv.grid import (Field, GridSpec, apply_face_fluxes, constant_field,
                       face_gradient, grad_square_integral, integrate,
                       laplacian, lp_norm)


def grid1d(n=8, L=1.0):
    return GridSpec(dim=1, cells=(n,), extent=(L,))


def grid2d(nx=8, ny=8, Lx=1.0, Ly=1.0):
    return GridSpec(dim=2, cells=(nx, ny), extent=(Lx, Ly))


class TestGridSpec:
    def test_spacing_and_volume(self):
        g = grid2d(10, 20, 2.0, 1.0)
        assert g.spacing == (0.2, 0.05)
        assert g.cell_volume == pytest.approx(0.01)
        assert g.num_cells == 200

    def test_rejects_too_few_cells(self):
        with pytest.raises(ValueError):
            GridSpec(dim=1, cells=(2,), extent=(1.0,))

    def test_rejects_nonpositive_extent(self):
        with pytest.raises(ValueError):
            GridSpec(dim=1, cells=(4,), extent=(0.0,))

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            GridSpec(dim=3, cells=(4, 4, 4), extent=(1.0, 1.0, 1.0))


class TestField:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            Field(grid1d(4), np.zeros(5))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            Field(grid1d(4), np.array([0.0, np.nan, 0.0, 0.0]))

    def test_values_read_only(self):
        f = constant_field(grid1d(4), 1.0)
        with pytest.raises(ValueError):
            f.values[0] = 2.0


class TestFaceGradient:
    def test_constant_field_zero(self):
        f = constant_field(grid2d(5, 5), 3.7)
        for axis in range(2):
            assert np.all(face_gradient(f, axis) == 0.0)

    def test_linear_ramp(self):
        g = grid1d(3, 3.0)  # h = 1
        h = g.spacing[0]
        f = Field(g, np.array([0.0, h, 2 * h]))
        np.testing.assert_allclose(face_gradient(f, 0), [0.0, 1.0, 1.0, 0.0])

    def test_two_cell_difference(self):
        g = grid1d(3, 1.5)  # h = 0.5
        f = Field(g, np.array([1.0, 0.0, 0.0]))
        grad = face_gradient(f, 0)
        assert grad[1] == pytest.approx(-1.0 / 0.5)
        assert grad[0] == 0.0 and grad[-1] == 0.0

    def test_boundary_faces_exactly_zero(self):
        rng = np.random.default_rng(3)
        f = Field(grid2d(6, 5), rng.uniform(-1, 1, (6, 5)))
        gx = face_gradient(f, 0)
        gy = face_gradient(f, 1)
        assert np.all(gx[0, :] == 0.0) and np.all(gx[-1, :] == 0.0)
        assert np.all(gy[:, 0] == 0.0) and np.all(gy[:, -1] == 0.0)

    def test_axis_out_of_range(self):
        f = constant_field(grid1d(4), 1.0)
        with pytest.raises(ValueError):
            face_gradient(f, 1)


class TestLaplacian:
    def test_constant_is_zero(self):
        f = constant_field(grid2d(5, 7), 2.0)
        assert np.all(laplacian(f).values == 0.0)

    def test_hand_stencil(self):
        g = grid1d(3, 3.0)  # h = 1
        f = Field(g, np.array([0.0, 1.0, 0.0]))
        np.testing.assert_allclose(laplacian(f).values, [1.0, -2.0, 1.0])

    def test_discrete_integral_vanishes(self):
        rng = np.random.default_rng(7)
        f = Field(grid2d(16, 16), rng.uniform(0, 5, (16, 16)))
        total = integrate(laplacian(f))
        assert abs(total) <= 1e-12 * lp_norm(f, 2)


class TestIntegrate:
    def test_constant_on_unit_box(self):
        assert integrate(constant_field(grid2d(4, 4), 1.0)) == pytest.approx(1.0)

    def test_constant_on_half_volume(self):
        g = GridSpec(dim=1, cells=(10,), extent=(0.5,))
        assert integrate(constant_field(g, 2.0)) == pytest.approx(1.0)

    def test_matches_compensated_sum(self):
        rng = np.random.default_rng(11)
        g = grid2d(32, 32, 1.3, 0.7)
        vals = rng.uniform(0, 1, (32, 32))
        f = Field(g, vals)
        oracle = math.fsum(vals.flatten().tolist()) * g.cell_volume
        assert integrate(f) == pytest.approx(oracle, rel=1e-13)


class TestLpNorm:
    def test_constant_any_p(self):
        f = constant_field(grid2d(4, 4), -2.5)
        for p in (1.0, 2.0, 3.5, math.inf):
            assert lp_norm(f, p) == pytest.approx(2.5)

    def test_sup_norm(self):
        f = Field(grid1d(3, 3.0), np.array([1.0, -3.0, 2.0]))
        assert lp_norm(f, math.inf) == 3.0

    def test_p2_against_quadrature_oracle(self):
        rng = np.random.default_rng(13)
        g = grid1d(64, 2.0)
        vals = rng.uniform(-1, 1, 64)
        f = Field(g, vals)
        oracle = math.sqrt(math.fsum((v * v * g.cell_volume) for v in vals.tolist()))
        assert lp_norm(f, 2.0) == pytest.approx(oracle, rel=1e-13)

    def test_rejects_p_below_one(self):
        with pytest.raises(ValueError):
            lp_norm(constant_field(grid1d(4), 1.0), 0.5)

    def test_homogeneity(self):
        rng = np.random.default_rng(17)
        g = grid2d(8, 8)
        vals = rng.uniform(-2, 2, (8, 8))
        for p in (1.0, 2.0, 5.0, math.inf):
            a = lp_norm(Field(g, 3.25 * vals), p)
            b = 3.25 * lp_norm(Field(g, vals), p)
            assert a == pytest.approx(b, rel=1e-14)

    def test_monotone_in_absolute_values(self):
        rng = np.random.default_rng(19)
        g = grid1d(32)
        vals = rng.uniform(-1, 1, 32)
        bigger = vals * rng.uniform(1.0, 2.0, 32)
        for p in (1.0, 2.0, math.inf):
            assert lp_norm(Field(g, vals), p) <= lp_norm(Field(g, bigger), p)


class TestConservativeUpdate:
    def test_any_face_fluxes_conserve_mass(self):
        rng = np.random.default_rng(23)
        g = grid2d(12, 9, 1.1, 0.9)
        f = Field(g, rng.uniform(0, 2, (12, 9)))
        fluxes = []
        for axis in range(2):
            shape = list(g.cells)
            shape[axis] += 1
            F = rng.uniform(-1, 1, shape)
            # zero-flux boundary closure
            sl0 = tuple(0 if k == axis else slice(None) for k in range(2))
            sl1 = tuple(-1 if k == axis else slice(None) for k in range(2))
            F[sl0] = 0.0
            F[sl1] = 0.0
            fluxes.append(F)
        before = integrate(f)
        after = integrate(apply_face_fluxes(f, fluxes, dt=1e-3))
        assert after == pytest.approx(before, rel=1e-12)


def test_grad_square_integral_matches_manual():
    g = grid1d(4, 4.0)  # h = 1
    f = Field(g, np.array([0.0, 1.0, 3.0, 3.0]))
    # interior gradients: 1, 2, 0; integral = (1 + 4) * h
    assert grad_square_integral(f) == pytest.approx(5.0)
