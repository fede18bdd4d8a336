import math

import numpy as np
import pytest

from chemovir.grid import (
    Grid,
    State,
    grad_norm_sq,
    integrate,
    lp_norm,
    read_snapshot,
    write_snapshot,
)


class TestGridGeometry:
    def test_derived_quantities(self):
        grid = Grid((4, 8), (2.0, 1.0))
        assert grid.ndim == 2
        assert grid.spacing == (0.5, 0.125)
        assert grid.cell_volume == 0.0625
        assert grid.n_cells == 32
        assert grid.volume == 2.0

    def test_default_unit_lengths(self):
        assert Grid((10,)).lengths == (1.0,)

    @pytest.mark.parametrize("shape", [(2,), (3, 2), ()])
    def test_rejects_small_axes(self, shape):
        with pytest.raises(ValueError):
            Grid(shape)

    def test_rejects_four_dimensions(self):
        with pytest.raises(ValueError):
            Grid((4, 4, 4, 4))

    def test_rejects_nonpositive_length(self):
        with pytest.raises(ValueError):
            Grid((4,), (0.0,))

    def test_cell_centers(self):
        centers = Grid((4,)).cell_centers(0)
        np.testing.assert_allclose(centers, [0.125, 0.375, 0.625, 0.875])


class TestIntegrate:
    def test_constant_on_unit_box(self):
        grid = Grid((8, 8))
        assert integrate(grid.new_field(1.0), grid) == pytest.approx(1.0, rel=1e-15)

    def test_constant_scales_with_volume(self):
        grid = Grid((5, 5), (2.0, 3.0))
        assert integrate(grid.new_field(4.0), grid) == pytest.approx(24.0, rel=1e-14)

    def test_midpoint_exact_on_linear(self):
        grid = Grid((10,))
        assert integrate(grid.cell_centers(0), grid) == pytest.approx(0.5, rel=1e-14)

    def test_linearity(self):
        rng = np.random.default_rng(3)
        grid = Grid((6, 7))
        f, g = rng.normal(size=(2, 6, 7))
        lhs = integrate(2.5 * f - 1.25 * g, grid)
        rhs = 2.5 * integrate(f, grid) - 1.25 * integrate(g, grid)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            integrate(np.zeros(5), Grid((6,)))


class TestLpNorm:
    def test_constant_l2(self):
        grid = Grid((16,))
        assert lp_norm(grid.new_field(2.0), grid, 2) == pytest.approx(2.0, rel=1e-14)

    def test_sup_norm_single_spike(self):
        grid = Grid((10,))
        field = grid.new_field(0.0)
        field[3] = 5.0
        assert lp_norm(field, grid, math.inf) == 5.0

    def test_alternating_l1(self):
        grid = Grid((16,))
        field = np.where(np.arange(16) % 2 == 0, 1.0, -1.0)
        assert lp_norm(field, grid, 1) == pytest.approx(1.0, rel=1e-14)

    def test_rejects_p_below_one(self):
        with pytest.raises(ValueError):
            lp_norm(np.zeros(8), Grid((8,)), 0.5)

    def test_monotone_and_triangle(self):
        rng = np.random.default_rng(11)
        grid = Grid((12,))
        for p in (1, 1.5, 2, 3, math.inf):
            for _ in range(25):
                f, g = rng.normal(size=(2, 12))
                assert lp_norm(f + g, grid, p) <= lp_norm(f, grid, p) + lp_norm(g, grid, p) + 1e-12
                smaller = np.where(np.abs(g) <= np.abs(f), g, f)
                assert lp_norm(smaller, grid, p) <= lp_norm(f, grid, p) + 1e-12


class TestGradNormSq:
    def test_constant_is_zero_exactly(self):
        grid = Grid((9, 9))
        assert grad_norm_sq(grid.new_field(3.7), grid) == 0.0

    @pytest.mark.parametrize("slope", [1.0, -2.0, 3.5])
    def test_exact_on_linear_1d(self, slope):
        grid = Grid((10,))
        field = slope * grid.cell_centers(0)
        assert abs(grad_norm_sq(field, grid) - slope ** 2) <= 1e-12

    def test_cosine_against_analytic(self):
        grid = Grid((64,))
        field = np.cos(np.pi * grid.cell_centers(0))
        exact = np.pi ** 2 / 2.0  # integral of pi^2 sin^2(pi x)
        assert grad_norm_sq(field, grid) == pytest.approx(exact, rel=0.02)

    def test_exact_on_linear_2d(self):
        grid = Grid((8, 12))
        x = grid.cell_centers(0)[:, None]
        y = grid.cell_centers(1)[None, :]
        field = 2.0 * x - 1.0 * y
        assert grad_norm_sq(field, grid) == pytest.approx(5.0, rel=1e-12)

    def test_translation_invariance_exact(self):
        rng = np.random.default_rng(5)
        grid = Grid((7, 6))
        field = rng.normal(size=(7, 6))
        assert grad_norm_sq(field, grid) == grad_norm_sq(field + 11.25, grid)


class TestSnapshotIO:
    def test_round_trip_lossless(self, tmp_path):
        rng = np.random.default_rng(1)
        grid = Grid((4, 5), (1.0, 2.5))
        state = State(rng.uniform(0, 2, (4, 5)), rng.uniform(0, 1, (4, 5)),
                      rng.uniform(0, 1, (4, 5)), t=1.234567890123)
        path = tmp_path / "state.cvf"
        write_snapshot(path, state, grid)
        loaded, loaded_grid = read_snapshot(path)
        assert loaded_grid == grid
        assert loaded.t == state.t
        for name in ("u", "v", "w"):
            np.testing.assert_array_equal(getattr(loaded, name), getattr(state, name))

    def test_format_layout(self, tmp_path):
        grid = Grid((3,))
        state = State(grid.new_field(1.0), grid.new_field(0.0), grid.new_field(0.0), t=0.5)
        path = tmp_path / "state.cvf"
        write_snapshot(path, state, grid)
        lines = path.read_text().splitlines()
        assert lines[0] == "CVF1"
        assert lines[1] == "1 3"
        assert lines[2] == "1"
        assert lines[3] == "t=0.5"
        assert lines[4] == "u"
        assert lines[8] == "v"
        assert lines[12] == "w"
        assert len(lines) == 4 + 3 * 4

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bad.cvf"
        path.write_text("NOPE\n1 3\n1\nt=0\n")
        with pytest.raises(ValueError, match="CVF1"):
            read_snapshot(path)

    def test_rejects_truncated_block(self, tmp_path):
        path = tmp_path / "short.cvf"
        path.write_text("CVF1\n1 3\n1\nt=0\nu\n1\n1\n")
        with pytest.raises(ValueError, match="truncated"):
            read_snapshot(path)


class TestStateValidation:
    def test_rejects_negative_component(self):
        grid = Grid((4,))
        state = State(grid.new_field(1.0), grid.new_field(-0.1), grid.new_field(0.0))
        with pytest.raises(ValueError, match="negative"):
            state.validate(grid)

    def test_rejects_non_finite(self):
        grid = Grid((4,))
        u = grid.new_field(1.0)
        u[2] = np.inf
        with pytest.raises(ValueError, match="finite"):
            State(u, grid.new_field(0.0), grid.new_field(0.0)).validate(grid)
