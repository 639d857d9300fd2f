"""Unit tests for the base kernel families."""

import math

import numpy as np
import pytest

from hdmrgp.kernels import FAMILIES, BaseKernel, eval_base, eval_on_subset

# Frozen reference values computed with 40-digit arithmetic.
EXP_MINUS_1 = 0.36787944117144233
MATERN32_L1_R1 = 0.48335772459650765
MATERN52_L1_R1 = 0.5239941088318203


class TestEvalBase:
    def test_unit_self_covariance(self):
        for family in FAMILIES:
            assert eval_base(BaseKernel(family, 1.3), 0.0) == 1.0

    def test_squared_exponential_at_sqrt2(self):
        value = eval_base(BaseKernel("se", 1.0), math.sqrt(2.0))
        assert value == pytest.approx(EXP_MINUS_1, rel=1e-15)

    def test_exponential(self):
        assert eval_base(BaseKernel("exp", 2.0), 2.0) == pytest.approx(EXP_MINUS_1, rel=1e-15)

    def test_matern32(self):
        assert eval_base(BaseKernel("matern32", 1.0), 1.0) == pytest.approx(
            MATERN32_L1_R1, rel=1e-15
        )

    def test_matern52(self):
        assert eval_base(BaseKernel("matern52", 1.0), 1.0) == pytest.approx(
            MATERN52_L1_R1, rel=1e-15
        )

    @pytest.mark.parametrize("family", FAMILIES)
    def test_strictly_decreasing(self, family):
        kernel = BaseKernel(family, 0.8)
        rng = np.random.default_rng(42)
        for _ in range(200):
            r1, r2 = np.sort(rng.uniform(0.0, 5.0, size=2))
            if r1 == r2:
                continue
            assert eval_base(kernel, r1) > eval_base(kernel, r2)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_range(self, family):
        kernel = BaseKernel(family, 1.0)
        rng = np.random.default_rng(7)
        values = [eval_base(kernel, r) for r in rng.uniform(0.0, 10.0, size=100)]
        assert all(0.0 < v <= 1.0 for v in values)

    def test_underflow_flushes_to_zero(self):
        assert eval_base(BaseKernel("se", 1e-3), 10.0) == 0.0

    @pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
    def test_domain_errors(self, bad):
        with pytest.raises(ValueError):
            eval_base(BaseKernel("se", 1.0), bad)

    def test_invalid_family(self):
        with pytest.raises(ValueError, match="family"):
            BaseKernel("periodic", 1.0)

    @pytest.mark.parametrize("bad", [0.0, -2.0, math.nan, math.inf])
    def test_invalid_length(self, bad):
        with pytest.raises(ValueError, match="length"):
            BaseKernel("se", bad)


class TestEvalOnSubset:
    def test_ignores_coordinates_outside_subset(self):
        kernel = BaseKernel("se", 1.0)
        value = eval_on_subset(kernel, (0,), (0.0, 9.0), (math.sqrt(2.0), 9.0))
        assert value == pytest.approx(EXP_MINUS_1, rel=1e-15)

    def test_zero_distance(self):
        kernel = BaseKernel("se", 1.0)
        assert eval_on_subset(kernel, (0, 1), (1.0, 1.0), (1.0, 1.0)) == 1.0

    def test_equals_eval_base_on_restricted_distance(self):
        rng = np.random.default_rng(3)
        kernel = BaseKernel("matern52", 0.9)
        for _ in range(50):
            x, x2 = rng.uniform(size=5), rng.uniform(size=5)
            subset = (1, 3, 4)
            r = float(np.linalg.norm(x[list(subset)] - x2[list(subset)]))
            assert eval_on_subset(kernel, subset, x, x2) == pytest.approx(
                eval_base(kernel, r), rel=1e-14
            )

    def test_se_product_factorization_single_index(self):
        # one-dimensional subsets are the degenerate case of the product rule
        rng = np.random.default_rng(11)
        kernel = BaseKernel("se", 1.22)
        for _ in range(50):
            x, x2 = rng.uniform(size=4), rng.uniform(size=4)
            direct = eval_on_subset(kernel, (2,), x, x2)
            product = eval_base(kernel, abs(x[2] - x2[2]))
            assert direct == pytest.approx(product, rel=1e-14)

    def test_se_product_factorization_multi_index(self):
        rng = np.random.default_rng(12)
        kernel = BaseKernel("se", 1.22)
        for _ in range(50):
            x, x2 = rng.uniform(size=6), rng.uniform(size=6)
            subset = (0, 2, 5)
            direct = eval_on_subset(kernel, subset, x, x2)
            product = 1.0
            for i in subset:
                product *= eval_base(kernel, abs(x[i] - x2[i]))
            assert direct == pytest.approx(product, rel=1e-14)

    def test_symmetry_is_exact(self):
        rng = np.random.default_rng(5)
        for family in FAMILIES:
            kernel = BaseKernel(family, 0.6)
            x, x2 = rng.uniform(size=4), rng.uniform(size=4)
            assert eval_on_subset(kernel, (0, 2), x, x2) == eval_on_subset(kernel, (0, 2), x2, x)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            eval_on_subset(BaseKernel("se", 1.0), (0, 2), (0.0, 1.0), (1.0, 0.0))


@pytest.mark.parametrize("family", FAMILIES)
def test_gram_is_numerically_psd(family):
    rng = np.random.default_rng(17)
    points = rng.uniform(size=(20, 3))
    kernel = BaseKernel(family, 0.5)
    gram = np.empty((20, 20))
    for i in range(20):
        for j in range(20):
            gram[i, j] = eval_on_subset(kernel, (0, 1, 2), points[i], points[j])
    assert np.linalg.eigvalsh(gram).min() > -1e-10
