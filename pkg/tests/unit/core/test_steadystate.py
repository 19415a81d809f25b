"""稳态求解单元测试."""

import numpy as np
import pytest

from src.core.exceptions import DegenerateNullSpace, ParameterError
from src.core.model import BATHS, BathSet, SystemParams, eigenoperator_channels
from src.core.rates import PopulationGenerator, assemble_generator
from src.core.steadystate import (
    SolveMethod,
    count_closed_classes,
    evolve_ode,
    gibbs_populations,
    liouvillian_steady_density,
    relaxation_horizon,
    solve_approximate,
    solve_full_liouvillian,
    solve_numerical,
)


def _generator(params, baths):
    return assemble_generator(eigenoperator_channels(params), baths, params)


class TestSolveNumerical:
    """数值稳态测试."""

    def test_equal_temperatures_return_gibbs_distribution(self, reference_params):
        """测试数值稳态_三热库同温_等于缀饰态吉布斯分布."""
        # Given
        t = 2.0
        generator = _generator(reference_params, BathSet.equilibrium(t))

        # When
        state = solve_numerical(generator)

        # Then
        expected = gibbs_populations(reference_params, t)
        mask = expected > 1e-12
        np.testing.assert_allclose(state.populations[mask], expected[mask], rtol=1e-10)
        assert state.method is SolveMethod.NUMERICAL

    def test_residual_and_normalization(self, regime_draws):
        """测试数值稳态_随机参数_残差低于1e-10倍生成元尺度."""
        for params, baths in regime_draws:
            # When
            generator = _generator(params, baths)
            state = solve_numerical(generator)

            # Then
            assert state.residual < 1e-10 * generator.scale()
            assert state.populations.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(state.populations >= 0)

    def test_figure_two_ordering_levels_one_and_four_smallest(self, reference_params, reference_baths):
        """测试数值稳态_图2参数T_M为2_ρ11与ρ44最小且小于ρ22."""
        # When
        rho = solve_numerical(_generator(reference_params, reference_baths)).populations

        # Then
        assert set(np.argsort(rho)[:2]) == {0, 3}
        assert rho[0] < rho[1]
        assert rho[3] < rho[1]

    def test_all_zero_temperatures_return_ground_state(self, reference_params):
        """测试数值稳态_全部零温_布居全部在λ6."""
        # When
        state = solve_numerical(_generator(reference_params, BathSet.of(0.0, 0.0, 0.0)))

        # Then
        np.testing.assert_array_equal(state.populations, [0, 0, 0, 0, 0, 1])

    def test_disconnected_generator_raises_degenerate_null_space(self):
        """测试数值稳态_无跃迁的生成元_抛出零空间退化异常."""
        # Given
        zeros = np.zeros((6, 6))
        generator = PopulationGenerator(matrix=zeros, per_bath={b: zeros for b in BATHS}, channels=(), rates=())

        # When / Then
        assert count_closed_classes(zeros) == 6
        with pytest.raises(DegenerateNullSpace):
            solve_numerical(generator)

    def test_keeps_high_precision_populations(self, reference_params, reference_baths):
        """测试数值稳态_保存高精度布居_舍入后等于双精度结果."""
        # When
        state = solve_numerical(_generator(reference_params, reference_baths))

        # Then
        assert len(state.high_precision) == 6
        assert [float(p) for p in state.high_precision] == pytest.approx(list(state.populations), rel=1e-15)

    def test_matches_ode_oracle(self, reference_params, reference_baths):
        """测试数值稳态_图2参数_与长时间积分一致到1e-8."""
        # Given
        generator = _generator(reference_params, reference_baths)

        # When
        numerical = solve_numerical(generator).populations
        ode = evolve_ode(generator, np.full(6, 1 / 6)).populations

        # Then
        np.testing.assert_allclose(numerical, ode, atol=1e-8)


class TestSolveApproximate:
    """近似解析稳态测试."""

    def test_levels_one_and_four_exactly_empty(self, reference_params, reference_baths):
        """测试近似稳态_ρ11与ρ44严格为零."""
        # When
        state = solve_approximate(reference_params, reference_baths)

        # Then
        assert state.populations[0] == 0.0
        assert state.populations[3] == 0.0
        assert state.populations.sum() == pytest.approx(1.0, abs=1e-12)
        assert state.method is SolveMethod.APPROXIMATE

    def test_close_to_numerical_at_figure_two_point(self, reference_params, reference_baths):
        """测试近似稳态_图2参数T_M为2_与数值解偏差小于0.02."""
        # When
        approximate = solve_approximate(reference_params, reference_baths).populations
        numerical = solve_numerical(_generator(reference_params, reference_baths)).populations

        # Then
        assert np.max(np.abs(approximate - numerical)) < 0.02

    def test_invariant_under_gamma_scaling(self, reference_params, reference_baths):
        """测试近似稳态_所有γ乘以同一常数_布居不变."""
        # When
        base = solve_approximate(reference_params, reference_baths).populations
        scaled = solve_approximate(reference_params.scaled_gamma(7.5), reference_baths).populations

        # Then
        np.testing.assert_allclose(scaled, base, rtol=1e-12, atol=0)

    def test_cold_modulation_concentrates_in_low_levels(self, reference_params):
        """测试近似稳态_T_M为0.01_ρ66加ρ33超过0.9."""
        # Given
        baths = BathSet.of(2.0, 0.01, 0.2)

        # When
        approximate = solve_approximate(reference_params, baths).populations
        numerical = solve_numerical(_generator(reference_params, baths)).populations

        # Then
        assert approximate[2] + approximate[5] > 0.9
        assert numerical[2] + numerical[5] > 0.9

    def test_zero_temperatures_return_ground_state(self, reference_params):
        """测试近似稳态_全部零温_布居全部在λ6."""
        state = solve_approximate(reference_params, BathSet.of(0.0, 0.0, 0.0))
        np.testing.assert_array_equal(state.populations, [0, 0, 0, 0, 0, 1])

    def test_deviation_shrinks_as_coupling_grows(self, reference_baths):
        """测试近似有效性_g除以E1增大_最大偏差不增."""
        deviations = []
        for ratio in (0.25, 0.5, 0.75):
            # Given
            params = SystemParams.uniform(e1=4.0, e2=40.0, g=ratio * 4.0, gamma=0.04)

            # When
            approximate = solve_approximate(params, reference_baths).populations
            numerical = solve_numerical(_generator(params, reference_baths)).populations
            deviations.append(np.max(np.abs(approximate - numerical)))

        # Then
        assert deviations[0] >= deviations[1] >= deviations[2]


class TestEvolveOde:
    """ODE 校验路线测试."""

    def test_zero_time_returns_initial(self, reference_params, reference_baths):
        """测试积分_t为0_返回初态."""
        # Given
        initial = np.array([0.1, 0.2, 0.3, 0.1, 0.2, 0.1])

        # When
        state = evolve_ode(_generator(reference_params, reference_baths), initial, t_final=0.0)

        # Then
        np.testing.assert_array_equal(state.populations, initial)
        assert state.method is SolveMethod.ODE_ORACLE

    def test_different_initial_states_reach_same_limit(self, reference_params, reference_baths):
        """测试积分_两个不同初态_收敛到同一极限."""
        # Given
        generator = _generator(reference_params, reference_baths)
        horizon = relaxation_horizon(generator)

        # When
        from_ground = evolve_ode(generator, [0, 0, 0, 0, 0, 1], horizon).populations
        from_top = evolve_ode(generator, [1, 0, 0, 0, 0, 0], horizon).populations

        # Then
        np.testing.assert_allclose(from_ground, from_top, atol=1e-8)

    def test_invalid_initial_raises_parameter_error(self, reference_params, reference_baths):
        """测试积分_初态和不为1_抛出参数异常."""
        with pytest.raises(ParameterError):
            evolve_ode(_generator(reference_params, reference_baths), [0.5, 0, 0, 0, 0, 0])


class TestFullLiouvillian:
    """完整刘维尔校验路线测试."""

    def test_diagonal_matches_numerical(self, reference_params, reference_baths):
        """测试刘维尔稳态_图2参数_对角元与数值解一致到1e-9."""
        # When
        oracle = solve_full_liouvillian(reference_params, reference_baths)
        numerical = solve_numerical(_generator(reference_params, reference_baths))

        # Then
        np.testing.assert_allclose(oracle.populations, numerical.populations, atol=1e-9)
        assert oracle.method is SolveMethod.FULL_LIOUVILLIAN_ORACLE

    def test_density_hermitian_with_unit_trace(self, reference_params, reference_baths):
        """测试刘维尔稳态_密度矩阵厄米且迹为1."""
        # When
        rho = liouvillian_steady_density(reference_params, reference_baths)

        # Then
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
        assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
        off_diagonal = rho - np.diag(np.diag(rho))
        assert np.max(np.abs(off_diagonal)) < 1e-10


@pytest.mark.slow
class TestOracleTriangle:
    """三条求解路线两两一致性测试."""

    def test_random_draws_agree_pairwise(self, regime_draws):
        """测试三路一致_20组随机参数_两两偏差小于1e-8."""
        for params, baths in regime_draws:
            # When
            generator = _generator(params, baths)
            numerical = solve_numerical(generator).populations
            ode = evolve_ode(generator, np.full(6, 1 / 6)).populations
            liouvillian = solve_full_liouvillian(params, baths).populations

            # Then
            np.testing.assert_allclose(numerical, ode, atol=1e-8)
            np.testing.assert_allclose(numerical, liouvillian, atol=1e-8)
            np.testing.assert_allclose(ode, liouvillian, atol=1e-8)
