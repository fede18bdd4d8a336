import math

import numpy as np
import pytest

from chemovir.grid import Grid
from chemovir.model import alpha_threshold
from chemovir.stepper import StepControl
from chemovir.sweep import (
    SWEEP_CSV_COLUMNS,
    SweepSpec,
    initial_condition_preset,
    run_sweep,
)


class TestPresets:
    def test_steady_infection_free(self):
        grid = Grid((8,))
        state = initial_condition_preset("steady-infection-free", grid, 1.5)
        np.testing.assert_array_equal(state.u, 1.5)
        np.testing.assert_array_equal(state.v, 0.0)
        np.testing.assert_array_equal(state.w, 0.0)

    def test_constant(self):
        grid = Grid((8,))
        state = initial_condition_preset("constant", grid, 0.0, constants=(2.0, 1.0, 0.5))
        np.testing.assert_array_equal(state.u, 2.0)
        np.testing.assert_array_equal(state.v, 1.0)
        np.testing.assert_array_equal(state.w, 0.5)

    def test_constant_rejects_negative(self):
        with pytest.raises(ValueError):
            initial_condition_preset("constant", Grid((8,)), 0.0, constants=(-1.0, 0.0, 0.0))

    def test_gaussian_bump_formula_1d(self):
        grid = Grid((64,))
        kappa = 1.0
        state = initial_condition_preset("gaussian-bump-v", grid, kappa)
        x = grid.cell_centers(0)
        np.testing.assert_allclose(state.v, np.exp(-50.0 * (x - 0.5) ** 2), rtol=1e-14)
        np.testing.assert_array_equal(state.u, kappa + 1.0)
        np.testing.assert_array_equal(state.w, 0.0)

    def test_gaussian_bump_maximum_at_center_2d(self):
        grid = Grid((32, 32))
        state = initial_condition_preset("gaussian-bump-v", grid, 0.0)
        assert state.v.max() <= 1.0
        peak = np.unravel_index(np.argmax(state.v), state.v.shape)
        assert peak == (15, 16) or peak == (16, 16) or peak == (15, 15) or peak == (16, 15)

    @pytest.mark.parametrize("ndim,shape", [(1, (16,)), (2, (8, 8)), (3, (4, 4, 4))])
    def test_random_smooth_nonnegative_and_seeded(self, ndim, shape):
        grid = Grid(shape)
        for seed in range(5):
            state = initial_condition_preset("random-smooth", grid, 0.5, seed=seed)
            assert state.u.min() >= 0.0
            assert state.v.min() >= 0.0
            assert state.w.min() >= 0.0
            again = initial_condition_preset("random-smooth", grid, 0.5, seed=seed)
            np.testing.assert_array_equal(state.u, again.u)
            np.testing.assert_array_equal(state.v, again.v)
        other = initial_condition_preset("random-smooth", grid, 0.5, seed=999)
        assert not np.array_equal(other.u,
                                  initial_condition_preset("random-smooth", grid, 0.5, 0).u)

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown preset"):
            initial_condition_preset("vortex", Grid((8,)), 0.0)


def small_spec(**overrides):
    settings = dict(alphas=(2.0,), grid=Grid((16,)), kappa=1.0,
                    preset="gaussian-bump-v", t_end=2.0, monitor_every=0.2,
                    control=StepControl())
    settings.update(overrides)
    return SweepSpec(**settings)


class TestSweepSpec:
    def test_rejects_empty_alphas(self):
        with pytest.raises(ValueError):
            small_spec(alphas=())

    def test_rejects_negative_alpha(self):
        with pytest.raises(ValueError):
            small_spec(alphas=(1.0, -0.5))

    def test_rejects_sparse_cadence(self):
        with pytest.raises(ValueError, match="10 records"):
            small_spec(monitor_every=1.0)


class TestRunSweep:
    def test_single_alpha_above_threshold(self):
        result = run_sweep(small_spec())
        assert len(result.rows) == 1
        row = result.rows[0]
        assert row.above_threshold is True
        assert row.p_feasible is True
        assert row.run_status == "completed"
        assert row.verdict == "bounded-plateau"

    def test_below_threshold_row_still_executes(self):
        result = run_sweep(small_spec(alphas=(0.1,), grid=Grid((8, 8)), t_end=2.0))
        row = result.rows[0]
        assert row.above_threshold is False
        assert row.p_feasible is False
        assert math.isnan(row.p_value)
        assert row.run_status == "completed"

    def test_threshold_flag_consistency(self):
        alphas = (0.5, 0.75, 0.7500000001, 1.0)
        result = run_sweep(small_spec(alphas=alphas, grid=Grid((8, 8))))
        threshold = alpha_threshold(2)
        for row in result.rows:
            assert row.above_threshold == (row.alpha > float(threshold))

    def test_steady_preset_rows_plateau_at_initial(self):
        spec = small_spec(alphas=(1.0, 2.0), preset="steady-infection-free", kappa=1.5)
        result = run_sweep(spec)
        for row in result.rows:
            assert row.verdict == "bounded-plateau"
            assert row.peak_sup_u == pytest.approx(1.5, rel=1e-12)

    def test_rows_sorted_by_key(self):
        spec = small_spec(alphas=(2.0, 1.0), seeds=(1, 0))
        result = run_sweep(spec)
        keys = [(row.alpha, row.seed) for row in result.rows]
        assert keys == sorted(keys)

    def test_parallel_identical_to_sequential(self):
        spec = small_spec(alphas=(1.0, 2.0), seeds=(0, 1), preset="random-smooth")
        sequential = run_sweep(spec, jobs=1)
        parallel = run_sweep(spec, jobs=2)
        assert sequential.to_csv_text() == parallel.to_csv_text()

    def test_csv_schema(self, tmp_path):
        result = run_sweep(small_spec())
        path = tmp_path / "sweep.csv"
        result.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(SWEEP_CSV_COLUMNS)
        assert len(lines) == 2
        first = lines[1].split(",")
        assert first[0] == repr(2.0)
        assert first[2] == "true"
        assert first[8] == "completed"
