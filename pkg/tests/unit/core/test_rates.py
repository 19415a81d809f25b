"""速率模块单元测试."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st

from src.core.exceptions import IncompleteChannels, NonPositiveFrequency
from src.core.model import BATHS, Bath, BathSet, SystemParams, eigenoperator_channels
from src.core.rates import (
    assemble_generator,
    assemble_block_generator,
    bose_occupation,
    rate_pair,
    relative_mismatch,
)


def _generator(params, baths):
    return assemble_generator(eigenoperator_channels(params), baths, params)


class TestBoseOccupation:
    """热占据数测试."""

    def test_unit_ratio_returns_textbook_value(self):
        """测试占据数_ω等于T_返回1除以e减1."""
        assert bose_occupation(1.0, 1.0) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-15)

    def test_large_ratio_underflows_to_zero(self):
        """测试占据数_ω除以T极大_干净下溢_无NaN."""
        # When
        n = bose_occupation(41.0, 0.2)
        deep = bose_occupation(47.0, 0.01)

        # Then
        assert n == pytest.approx(math.exp(-205.0), rel=1e-12)
        assert deep == 0.0

    def test_zero_temperature_returns_zero(self):
        """测试占据数_零温_返回0."""
        assert bose_occupation(3.0, 0.0) == 0.0

    def test_small_ratio_matches_classical_limit(self):
        """测试占据数_ω除以T极小_趋于T除以ω."""
        # When
        n = bose_occupation(1e-8, 1.0)

        # Then
        assert n == pytest.approx(1e8 - 0.5, rel=1e-12)

    def test_ratio_below_threshold_uses_classical_limit(self):
        """测试占据数_ω除以T低于阈值_返回T除以ω减0.5."""
        assert bose_occupation(1e-10, 1.0) == pytest.approx(1e10 - 0.5, rel=1e-15)
        assert bose_occupation(2e-9, 2.0) == pytest.approx(1e9 - 0.5, rel=1e-12)

    def test_underflowing_ratio_returns_inf_without_warning(self):
        """测试占据数_ω除以T下溢为0_返回inf且不产生除零警告."""
        # When
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            n = bose_occupation(1e-300, 1e10)

        # Then
        assert n == math.inf

    @pytest.mark.parametrize("omega", [0.0, -1.0])
    def test_nonpositive_frequency_raises(self, omega):
        """测试占据数_非正频率_抛出异常."""
        with pytest.raises(NonPositiveFrequency):
            bose_occupation(omega, 1.0)


class TestRatePair:
    """通道速率测试."""

    def test_rate_pair_matches_reference_example(self, reference_params):
        """测试速率对_ω为40_T_L为2_与参考值一致."""
        # Given
        channel = next(c for c in eigenoperator_channels(reference_params) if (c.upper, c.lower) == (5, 6))
        baths = BathSet.of(2.0, 2.0, 0.2)

        # When
        pair = rate_pair(channel, baths, reference_params)

        # Then
        assert pair.b == pytest.approx(0.04 / math.expm1(20.0), rel=1e-12)
        assert pair.b == pytest.approx(8.245e-11, rel=1e-3)
        assert pair.a == pytest.approx(0.04, rel=1e-8)

    def test_zero_temperature_gives_pure_emission(self, reference_params):
        """测试速率对_零温_a等于γ_b等于0."""
        # Given
        baths = BathSet.of(0.0, 0.0, 0.0)

        # When / Then
        for channel in eigenoperator_channels(reference_params):
            pair = rate_pair(channel, baths, reference_params)
            assert (pair.a, pair.b) == (0.04, 0.0)

    @hypothesis_settings(max_examples=50, deadline=None)
    @given(t=st.floats(min_value=0.2, max_value=50.0))
    def test_detailed_balance_ratio(self, t):
        """测试细致平衡_任意正温度_b除以a等于exp负ω除以T."""
        # Given
        params = SystemParams.reference_defaults()
        channel = eigenoperator_channels(params)[0]

        # When
        pair = rate_pair(channel, BathSet.of(t, t, t), params)

        # Then
        assert pair.a > pair.b >= 0
        assert pair.detailed_balance_ratio == pytest.approx(math.exp(-channel.omega / t), rel=1e-12)

    def test_rates_increase_with_temperature(self, reference_params):
        """测试单调性_温度升高_a与b都严格增大."""
        # Given
        channel = eigenoperator_channels(reference_params)[3]
        cold, hot = BathSet.equilibrium(1.0), BathSet.equilibrium(1.5)

        # When
        low, high = rate_pair(channel, cold, reference_params), rate_pair(channel, hot, reference_params)

        # Then
        assert high.a > low.a
        assert high.b > low.b


class TestAssembleGenerator:
    """生成元组装测试."""

    def test_column_sums_vanish(self, regime_draws):
        """测试概率守恒_随机参数_每列之和为零."""
        for params, baths in regime_draws:
            # When
            generator = _generator(params, baths)

            # Then
            assert np.max(np.abs(generator.column_sums())) < 1e-13 * generator.scale()

    def test_per_bath_sign_structure(self, reference_params, reference_baths):
        """测试生成元符号_非对角非负_对角非正."""
        # When
        generator = _generator(reference_params, reference_baths)

        # Then
        for bath in BATHS:
            w = generator.bath_matrix(bath)
            off_diagonal = w - np.diag(np.diag(w))
            assert np.all(off_diagonal >= 0)
            assert np.all(np.diag(w) <= 0)
        np.testing.assert_array_equal(generator.matrix, sum(generator.per_bath.values()))

    def test_zero_temperature_has_only_emission_entries(self, reference_params):
        """测试零温生成元_只含向下跃迁项."""
        # When
        generator = _generator(reference_params, BathSet.of(0.0, 0.0, 0.0))

        # Then: W[i, j] 表示 j → i, 只有 λ_i < λ_j 的元素非零
        energies = [48.0, 41.0, 4.0, 47.0, 40.0, 0.0]
        for i in range(6):
            for j in range(6):
                if i != j and generator.matrix[i, j] != 0:
                    assert energies[i] < energies[j]

    def test_doubling_gamma_doubles_generator(self, reference_params, reference_baths):
        """测试线性_所有γ加倍_生成元加倍."""
        # When
        base = _generator(reference_params, reference_baths)
        doubled = _generator(reference_params.scaled_gamma(2.0), reference_baths)

        # Then
        np.testing.assert_array_equal(doubled.matrix, 2.0 * base.matrix)

    def test_missing_channel_raises_incomplete_channels(self, reference_params, reference_baths):
        """测试通道不完整_少一条_抛出异常."""
        # Given
        channels = eigenoperator_channels(reference_params)[:-1]

        # When / Then
        with pytest.raises(IncompleteChannels):
            assemble_generator(channels, reference_baths, reference_params)

    def test_duplicated_channel_raises_incomplete_channels(self, reference_params, reference_baths):
        """测试通道重复_替换一条为重复项_抛出异常."""
        # Given
        channels = eigenoperator_channels(reference_params)
        channels[-1] = channels[0]

        # When / Then
        with pytest.raises(IncompleteChannels):
            assemble_generator(channels, reference_baths, reference_params)

    def test_single_channel_detailed_balance(self, reference_params):
        """测试单通道细致平衡_W_jі除以W_ij等于exp_ω除以T."""
        # Given
        t = 1.3
        generator = _generator(reference_params, BathSet.equilibrium(t))

        # When / Then
        for channel in eigenoperator_channels(reference_params):
            w = generator.bath_matrix(channel.bath)
            i, j = channel.upper - 1, channel.lower - 1
            assert w[j, i] / w[i, j] == pytest.approx(math.exp(channel.omega / t), rel=1e-12)

    def test_flipped_entry_changes_only_one_element(self, reference_params, reference_baths):
        """测试故障注入_翻转W_R中一个元素_其余不变."""
        # Given
        generator = _generator(reference_params, reference_baths)

        # When
        faulty = generator.with_flipped_entry(Bath.R, 6, 2)

        # Then
        diff = faulty.matrix - generator.matrix
        assert np.count_nonzero(diff) == 1
        assert faulty.matrix[5, 1] == -generator.matrix[5, 1]


class TestAssembleBlockGenerator:
    """分块形式交叉核对测试."""

    def test_matches_generic_generator_on_random_draws(self):
        """测试交叉核对_50组随机参数与温度_相对误差低于1e-12."""
        rng = np.random.default_rng(7)
        for _ in range(50):
            # Given
            e1 = rng.uniform(2.0, 6.0)
            e2 = rng.uniform(20.0, 60.0)
            params = SystemParams(
                e1=e1, e2=e2, e3=e1 + e2, g=rng.uniform(0.1, 0.9) * e1,
                gamma={bath: rng.uniform(0.005, 0.1) for bath in BATHS},
            )
            baths = BathSet.of(*rng.uniform(0.05, 6.0, size=3))
            generator = _generator(params, baths)

            # When / Then
            for bath in BATHS:
                assert relative_mismatch(bath, generator, baths, params) < 1e-12

    def test_bath_r_matches_at_cold_terminal(self, reference_params):
        """测试交叉核对_图2参数_T_R为0.2_R块逐元素一致."""
        # Given
        baths = BathSet.of(2.0, 2.0, 0.2)

        # When
        generic = _generator(reference_params, baths).bath_matrix(Bath.R)
        blocks = assemble_block_generator(Bath.R, baths, reference_params)

        # Then
        np.testing.assert_allclose(generic, blocks, rtol=1e-12, atol=1e-12 * np.max(np.abs(blocks)))

    def test_bath_r_leaves_level_five_untouched(self, reference_params, reference_baths):
        """测试R块支撑_能级5所在行列全为零."""
        # When
        m_r = assemble_block_generator(Bath.R, reference_baths, reference_params)

        # Then
        assert not np.any(m_r[4, :])
        assert not np.any(m_r[:, 4])
        support = {i for i in range(6) if np.any(m_r[i, :]) or np.any(m_r[:, i])}
        assert support == {0, 1, 2, 3, 5}

    def test_bath_m_uses_three_frequencies(self, reference_params):
        """测试M块_包含E1_E1减g_E1加g三个频率的贡献."""
        # Given
        t = 1.0
        m_m = assemble_block_generator(Bath.M, BathSet.equilibrium(t), reference_params)

        # When: 上行速率与下行速率之比给出各块的频率
        ratios = {
            (3, 6): m_m[2, 5] / m_m[5, 2],
            (2, 5): m_m[1, 4] / m_m[4, 1],
            (1, 2): m_m[0, 1] / m_m[1, 0],
        }

        # Then
        assert ratios[(3, 6)] == pytest.approx(math.exp(-4.0), rel=1e-12)
        assert ratios[(2, 5)] == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert ratios[(1, 2)] == pytest.approx(math.exp(-7.0), rel=1e-12)
