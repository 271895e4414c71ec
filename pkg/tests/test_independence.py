"""Hoeffding's D and its permutation test."""

import numpy as np
import pytest

from crimepatterns import PairedSample, hoeffding_d, hoeffding_test


def hoeffding_brute(x, y):
    """Hoeffding's D from its combinatorial definition (tie-free data).

    Averages the kernel

        (1/4) * [1(x1<x5) - 1(x2<x5)] * [1(x3<x5) - 1(x4<x5)]
              * [1(y1<y5) - 1(y2<y5)] * [1(y3<y4) ... same in y]

    over every ordered 5-tuple of distinct indices and scales by 30, so
    a strictly monotone relation scores exactly 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    xlt = (x[:, None] < x[None, :]).astype(float)
    ylt = (y[:, None] < y[None, :]).astype(float)
    idx = np.arange(n)
    m = n - 1
    i = np.arange(m)
    distinct = (
        (i[:, None, None, None] != i[None, :, None, None])
        & (i[:, None, None, None] != i[None, None, :, None])
        & (i[:, None, None, None] != i[None, None, None, :])
        & (i[None, :, None, None] != i[None, None, :, None])
        & (i[None, :, None, None] != i[None, None, None, :])
        & (i[None, None, :, None] != i[None, None, None, :])
    )
    total = 0.0
    for i5 in range(n):
        others = idx[idx != i5]
        a = xlt[others, i5]
        b = ylt[others, i5]
        f = (a[:, None] - a[None, :]) * (b[:, None] - b[None, :])
        np.fill_diagonal(f, 0.0)
        total += (f[:, :, None, None] * f[None, None, :, :] * distinct).sum() / 4.0
    return 30.0 * total / (n * (n - 1) * (n - 2) * (n - 3) * (n - 4))


class TestHoeffdingD:
    def test_monotone_identity_scores_one(self):
        x = np.arange(1.0, 21.0)
        s = PairedSample(x, x.copy())
        assert hoeffding_d(s) == pytest.approx(1.0, abs=1e-12)
        assert hoeffding_brute(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_matches_brute_force_on_random_data(self):
        rng = np.random.default_rng(7)
        for _ in range(3):
            x = rng.normal(size=12)
            y = rng.normal(size=12)
            assert hoeffding_d(PairedSample(x, y)) == pytest.approx(
                hoeffding_brute(x, y), abs=1e-12
            )

    def test_independent_uniforms_have_tiny_d(self):
        small = 0
        for r in range(100):
            g = np.random.default_rng(700 + r)
            s = PairedSample(g.uniform(size=1000), g.uniform(size=1000))
            small += abs(hoeffding_d(s)) < 0.01
        assert small >= 95

    def test_sample_too_small_is_an_error(self):
        with pytest.raises(ValueError):
            PairedSample(np.arange(4.0), np.arange(4.0))

    def test_length_mismatch_is_an_error(self):
        with pytest.raises(ValueError):
            PairedSample(np.arange(6.0), np.arange(5.0))

    def test_invariant_under_monotone_transforms(self):
        rng = np.random.default_rng(15)
        x = rng.normal(size=25)
        y = x + rng.normal(size=25)
        d = hoeffding_d(PairedSample(x, y))
        d2 = hoeffding_d(PairedSample(np.exp(x), y**3))
        assert d2 == pytest.approx(d, abs=1e-12)


class TestHoeffdingTest:
    def test_strong_monotone_dependence_is_detected(self):
        x = np.random.default_rng(45).normal(size=30)
        p = hoeffding_test(PairedSample(x, x**3), n_perm=999, seed=46)
        assert p <= 0.001

    def test_noisy_linear_dependence_is_detected(self):
        x = np.random.default_rng(42).normal(size=20)
        y = x + 0.05 * np.random.default_rng(43).normal(size=20)
        p = hoeffding_test(PairedSample(x, y), n_perm=999, seed=44)
        assert p <= 0.001

    def test_calibration_under_independence(self):
        rejections = 0
        for r in range(50):
            x = np.random.default_rng(8000 + r).normal(size=20)
            y = np.random.default_rng(8500 + r).normal(size=20)
            p = hoeffding_test(PairedSample(x, y), n_perm=999, seed=9000 + r)
            rejections += p <= 0.05
        assert 1 <= rejections <= 6  # 1%..12% of 50 runs

    def test_constant_y_gives_p_one(self):
        x = np.random.default_rng(1).normal(size=15)
        p = hoeffding_test(PairedSample(x, np.full(15, 3.0)), n_perm=999, seed=2)
        assert p == 1.0

    def test_p_value_invariant_under_relabeling(self):
        rng = np.random.default_rng(33)
        x = rng.normal(size=18)
        y = rng.normal(size=18)
        p1 = hoeffding_test(PairedSample(x, y), n_perm=999, seed=5)
        relabel = rng.permutation(18)
        p2 = hoeffding_test(PairedSample(x[relabel], y[relabel]), n_perm=999, seed=5)
        assert p1 == pytest.approx(p2, abs=0.02)

    def test_too_few_permutations_is_an_error(self):
        s = PairedSample(np.arange(10.0), np.arange(10.0))
        with pytest.raises(ValueError):
            hoeffding_test(s, n_perm=99)
