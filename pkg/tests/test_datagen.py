import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from puprior.datagen import (
    LabeledDataset,
    SyntheticConfig,
    downsample_to_prior,
    gen_synthetic,
    load_csv,
    load_features_csv,
    make_pu_sample,
    pu_scaling,
    pu_sizes,
    standardize,
    write_features_csv,
)
from puprior.errors import InputError
from puprior.estimator import estimate_target_prior
from puprior.kernel import KernelConfig


def binomial_interval(n, p, level=0.999):
    tail = (1 - level) / 2
    return binom.ppf(tail, n, p), binom.ppf(1 - tail, n, p)


def labeled(n_pos, n_neg, p=2, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n_pos + n_neg, p))
    y = np.array([1] * n_pos + [-1] * n_neg)
    return LabeledDataset(x, y)


class TestPUSizes:
    def test_full_labeling(self):
        assert pu_scaling(0.5, 1.0) == 2.0
        assert pu_sizes(0.5, 1.0, 1000) == (1000, 0)

    def test_reference(self):
        assert pu_scaling(0.2, 0.5) == pytest.approx(5 / 3)
        assert pu_sizes(0.2, 0.5, 1000) == (167, 833)

    def test_half_to_even(self):
        # c = 0.5, pi = 0.5: A = 4/3, so m = n / 3 and n_u = 2 n / 3.
        assert pu_sizes(0.5, 0.5, 3) == (1, 2)
        assert pu_sizes(0.0, 0.5, 5) == (0, 5)

    @pytest.mark.parametrize("pi,c", [(0.0, 1.0), (1.0, 0.5), (0.3, 0.0), (0.3, 1.5)])
    def test_invalid(self, pi, c):
        with pytest.raises(InputError):
            pu_sizes(pi, c, 100)

    @settings(max_examples=300)
    @given(pi=st.floats(0.001, 0.99), c=st.floats(0.01, 1.0), n=st.integers(1, 100000))
    def test_total_within_one(self, pi, c, n):
        m, n_u = pu_sizes(pi, c, n)
        assert abs(m + n_u - n) <= 1


class TestMakePUSample:
    def test_sizes_and_provenance(self):
        data = labeled(600, 1400)
        pos, unl = make_pu_sample(data, 0.3, 0.5, 1000, seed=1)
        m, n_u = pu_sizes(0.3, 0.5, 1000)
        assert pos.shape == (m, 2) and unl.shape == (n_u, 2)
        pos_rows = {tuple(r) for r in data.features[data.labels == 1]}
        assert all(tuple(r) in pos_rows for r in pos)

    def test_deterministic(self):
        data = labeled(300, 700)
        a = make_pu_sample(data, 0.3, 0.5, 800, seed=5)
        b = make_pu_sample(data, 0.3, 0.5, 800, seed=5)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_deficit_named(self):
        data = labeled(50, 950)
        with pytest.raises(InputError, match="deficit"):
            make_pu_sample(data, 0.2, 0.5, 1000, seed=0)

    def test_unlabeled_positive_count_binomial(self):
        """Positive count in the unlabeled draw stays inside the binomial
        99.9% interval (hypergeometric is narrower, so this is conservative)."""
        data = labeled(2000, 8000)
        _, n_u = pu_sizes(0.2, 0.5, 5000)
        lo, hi = binomial_interval(n_u, 0.2)
        pos_rows = {tuple(r) for r in data.features[:2000]}
        for seed in range(10):
            _, unl = make_pu_sample(data, 0.2, 0.5, 5000, seed=seed)
            k = sum(tuple(r) in pos_rows for r in unl)
            assert lo <= k <= hi


class TestDownsample:
    def test_already_at_prior(self):
        data = labeled(20, 80)
        assert downsample_to_prior(data, 0.2, seed=0) is data

    def test_diabetes_like_low(self):
        out = downsample_to_prior(labeled(268, 500), 0.2, seed=1)
        assert (out.n_positive, out.n - out.n_positive) == (125, 500)

    def test_diabetes_like_high(self):
        out = downsample_to_prior(labeled(268, 500), 0.8, seed=1)
        assert (out.n_positive, out.n - out.n_positive) == (268, 67)

    def test_kept_class_untouched(self):
        data = labeled(268, 500)
        out = downsample_to_prior(data, 0.2, seed=2)
        np.testing.assert_array_equal(out.features[out.labels == -1], data.features[data.labels == -1])

    @settings(max_examples=100, deadline=None)
    @given(n_pos=st.integers(1, 300), n_neg=st.integers(1, 300), target=st.floats(0.05, 0.95))
    def test_fraction_within_one_row(self, n_pos, n_neg, target):
        data = labeled(n_pos, n_neg)
        try:
            out = downsample_to_prior(data, target, seed=0)
        except InputError:
            return
        assert abs(out.positive_fraction - target) <= 1.0 / out.n or out is data

    def test_unreachable(self):
        with pytest.raises(InputError):
            downsample_to_prior(labeled(1, 1000), 0.9999, seed=0)

    @pytest.mark.parametrize("pi", [0.0, 1.0])
    def test_prior_range(self, pi):
        with pytest.raises(InputError):
            downsample_to_prior(labeled(10, 10), pi, seed=0)


class TestSynthetic:
    def test_deterministic(self):
        cfg = SyntheticConfig(n_source=300, n_target=200, seed=9)
        a, b = gen_synthetic(cfg), gen_synthetic(cfg)
        for x, y in ((a.positives, b.positives), (a.unlabeled, b.unlabeled), (a.target, b.target)):
            assert np.array_equal(x.values, y.values)

    def test_seed_changes_output(self):
        a = gen_synthetic(SyntheticConfig(n_source=100, n_target=100, seed=1))
        b = gen_synthetic(SyntheticConfig(n_source=100, n_target=100, seed=2))
        assert not np.array_equal(a.target.values, b.target.values)

    def test_sizes_follow_pu_formula(self):
        ds = gen_synthetic(SyntheticConfig(pi=0.2, c=0.5, n_source=1000, n_target=700))
        assert (ds.positives.n, ds.unlabeled.n, ds.target.n) == (167, 833, 700)
        assert ds.positives.p == 10

    def test_target_positive_count_binomial(self):
        lo, hi = binomial_interval(2000, 0.8)
        assert (lo, hi) == pytest.approx((1541, 1658), abs=3)
        for seed in range(20):
            ds = gen_synthetic(SyntheticConfig(pi=0.2, pi_prime=0.8, n_target=2000, seed=seed))
            assert lo <= ds.meta["target_positive_count"] <= hi

    def test_class_means(self):
        ds = gen_synthetic(SyntheticConfig(pi=0.2, n_source=4000, seed=3))
        m = ds.positives.n
        np.testing.assert_array_less(np.abs(ds.positives.values.mean(0) - 1.0), 4 / math.sqrt(m))

    def test_disturbance_moves_target_positives(self):
        base = SyntheticConfig(pi_prime=1.0, n_target=3000, seed=4)
        g0 = gen_synthetic(base).target.values.mean(0)
        g1 = gen_synthetic(SyntheticConfig(pi_prime=1.0, n_target=3000, seed=4,
                                           disturbance_g=0.5)).target.values.mean(0)
        np.testing.assert_allclose(g1 - g0, 0.5, atol=1e-12)

    def test_pure_negative_target(self):
        ds = gen_synthetic(SyntheticConfig(pi_prime=0.0, n_source=2000, n_target=2000, seed=5))
        assert ds.meta["target_positive_count"] == 0
        est = estimate_target_prior(KernelConfig.gaussian(p=10), ds.unlabeled, ds.positives,
                                    ds.target, 0.2)
        assert abs(est.raw) < 0.05

    def test_pool_mode(self):
        ds = gen_synthetic(SyntheticConfig(pu_mode="pool", pi=0.3, n_source=1000, seed=6))
        assert (ds.positives.n, ds.unlabeled.n) == pu_sizes(0.3, 0.5, 1000)

    def test_custom_shift(self):
        shift = tuple(np.linspace(0, 2, 10))
        ds = gen_synthetic(SyntheticConfig(shift=shift, n_source=4000, seed=7))
        assert ds.positives.values.mean(0)[-1] > ds.positives.values.mean(0)[0] + 1

    @pytest.mark.parametrize("kw", [dict(pi=1.0), dict(c=0.0), dict(p=0), dict(n_target=0),
                                    dict(shift=(1.0, 2.0)), dict(pu_mode="other")])
    def test_invalid(self, kw):
        with pytest.raises(InputError):
            SyntheticConfig(**kw)

    def test_degenerate_sizes(self):
        with pytest.raises(InputError):
            gen_synthetic(SyntheticConfig(c=1.0))


class TestCSV:
    def test_three_line_file(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("f1,f2,y\n1.0,2.0,pos\n3.0,4.0,neg\n")
        data = load_csv(f, "y", "pos")
        assert data.n == 2 and data.p == 2
        assert list(data.labels) == [1, -1]

    def test_non_numeric_line_number(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("f1,f2,y\n1.0,2.0,1\n3.0,abc,0\n")
        with pytest.raises(InputError, match=":3:"):
            load_csv(f, "y", "1")

    def test_missing_column_lists_available(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("a,b\n1,2\n")
        with pytest.raises(InputError, match="available columns: a, b"):
            load_csv(f, "label", "1")

    def test_other_labels_negative(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("x,y\n0,1\n1,2\n2,cat\n3,1\n")
        assert list(load_csv(f, "y", "1").labels) == [1, -1, -1, 1]

    def test_ragged_row(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("x,y\n0,1\n1\n")
        with pytest.raises(InputError, match=":3:"):
            load_csv(f, "y", "1")

    def test_features_roundtrip(self, tmp_path):
        x = np.random.default_rng(0).normal(size=(5, 3))
        write_features_csv(tmp_path / "x.csv", x)
        np.testing.assert_array_equal(load_features_csv(tmp_path / "x.csv"), x)

    def test_empty(self, tmp_path):
        f = tmp_path / "e.csv"
        f.write_text("")
        with pytest.raises(InputError):
            load_features_csv(f)


def test_standardize_pooled():
    rng = np.random.default_rng(1)
    a, b = rng.normal(3, 2, size=(50, 2)), rng.normal(-1, 5, size=(30, 2))
    sa, sb = standardize(a, b)
    pooled = np.vstack([sa, sb])
    np.testing.assert_allclose(pooled.mean(0), 0, atol=1e-12)
    np.testing.assert_allclose(pooled.std(0), 1, atol=1e-12)
