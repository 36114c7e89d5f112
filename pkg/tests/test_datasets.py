import numpy as np
import pytest

from dii.datasets import (
    CsvFormatError,
    DatasetBundle,
    GAUSSIAN_GT_WEIGHTS,
    MONOMIAL_GT_WEIGHTS,
    cosine_similarity,
    gen_gaussian_benchmark,
    gen_monomial_benchmark,
    load_bundle,
    load_csv,
    monomial_names,
    save_bundle,
    standardize,
)


class TestLoadCsv:
    def write(self, tmp_path, text):
        path = tmp_path / "data.csv"
        path.write_text(text)
        return path

    def test_roles(self, tmp_path):
        path = self.write(tmp_path, "a,b,c,d\n1,2,3,4\n5,6,7,8\n")
        bundle = load_csv(path, gt_cols=["c"], ignore_cols=["d"])
        assert bundle.feature_names == ["a", "b"]
        np.testing.assert_array_equal(bundle.features, [[1, 2], [5, 6]])
        np.testing.assert_array_equal(bundle.ground_truth, [[3], [7]])
        assert bundle.gt_names == ["c"]

    def test_malformed_inputs(self, tmp_path):
        with pytest.raises(CsvFormatError, match="ragged"):
            load_csv(self.write(tmp_path, "a,b\n1,2\n3\n"))
        with pytest.raises(CsvFormatError, match="non-numeric"):
            load_csv(self.write(tmp_path, "a,b\n1,x\n3,4\n"))
        with pytest.raises(CsvFormatError, match="non-finite"):
            load_csv(self.write(tmp_path, "a,b\n1,inf\n3,4\n"))
        with pytest.raises(CsvFormatError, match="duplicate"):
            load_csv(self.write(tmp_path, "a,a\n1,2\n3,4\n"))
        with pytest.raises(CsvFormatError, match="empty"):
            load_csv(self.write(tmp_path, ""))
        with pytest.raises(CsvFormatError, match="at least 2"):
            load_csv(self.write(tmp_path, "a,b\n1,2\n"))
        with pytest.raises(CsvFormatError, match="no column"):
            load_csv(self.write(tmp_path, "a,b\n1,2\n3,4\n"), gt_cols=["z"])


class TestBundleRoundTrip:
    def test_save_and_load(self, tmp_path, rng):
        bundle = DatasetBundle(
            features=rng.standard_normal((5, 2)),
            feature_names=["f1", "f2"],
            ground_truth=rng.standard_normal((5, 1)),
            gt_names=["g"],
            gt_weights=np.array([2.0, 0.5]),
            seed=42,
        )
        save_bundle(bundle, tmp_path / "d.csv")
        loaded = load_bundle(tmp_path / "d.csv")
        assert loaded.feature_names == ["f1", "f2"]
        np.testing.assert_array_equal(loaded.features, bundle.features)
        np.testing.assert_array_equal(loaded.ground_truth, bundle.ground_truth)
        np.testing.assert_array_equal(loaded.gt_weights, bundle.gt_weights)
        assert loaded.seed == 42

    def test_bundle_validation(self, rng):
        with pytest.raises(ValueError):
            DatasetBundle(rng.standard_normal((4, 2)), ["a"])
        with pytest.raises(ValueError):
            DatasetBundle(rng.standard_normal((4, 2)), ["a", "a"])
        with pytest.raises(ValueError):
            DatasetBundle(
                rng.standard_normal((4, 2)), ["a", "b"],
                ground_truth=rng.standard_normal((3, 1)),
            )


class TestGaussianBenchmark:
    def test_structure(self):
        bundle = gen_gaussian_benchmark(n=200, seed=7)
        assert bundle.features.shape == (200, 10)
        assert bundle.feature_names == [f"X{i}" for i in range(1, 11)]
        np.testing.assert_array_equal(
            bundle.ground_truth, bundle.features * np.array(GAUSSIAN_GT_WEIGHTS)
        )

    def test_seed_determinism(self):
        a = gen_gaussian_benchmark(n=50, seed=3)
        b = gen_gaussian_benchmark(n=50, seed=3)
        c = gen_gaussian_benchmark(n=50, seed=4)
        assert a.features.tobytes() == b.features.tobytes()
        assert a.features.tobytes() != c.features.tobytes()


class TestMonomialBenchmark:
    def test_name_counts(self):
        names = monomial_names(10, 3)
        assert len(names) == 285
        assert len(set(names)) == 285
        degree_one = [n for n in names if "*" not in n and "^" not in n]
        assert degree_one == [f"X{i}" for i in range(1, 11)]

    def test_columns_are_products_of_base_variables(self):
        bundle = gen_monomial_benchmark(n=100, seed=2)
        names = bundle.feature_names
        x1 = bundle.features[:, names.index("X1")]
        x2 = bundle.features[:, names.index("X2")]
        np.testing.assert_allclose(
            bundle.features[:, names.index("X1^2")], x1 * x1, rtol=1e-12
        )
        np.testing.assert_allclose(
            bundle.features[:, names.index("X1*X2")], x1 * x2, rtol=1e-12
        )
        np.testing.assert_allclose(
            bundle.features[:, names.index("X1^2*X2")], x1 * x1 * x2, rtol=1e-12
        )

    def test_ground_truth_uses_supported_monomials(self):
        bundle = gen_monomial_benchmark(n=60, seed=5)
        names = bundle.feature_names
        for k, (mono, weight) in enumerate(MONOMIAL_GT_WEIGHTS.items()):
            np.testing.assert_allclose(
                bundle.ground_truth[:, k],
                weight * bundle.features[:, names.index(mono)],
                rtol=1e-12,
            )
        assert np.count_nonzero(bundle.gt_weights) == 10

    def test_explicit_support(self):
        bundle = gen_monomial_benchmark(
            n=50, base_d=3, order=2, gt_support=[0, 4], gt_weights=[2.0, 1.0], seed=1
        )
        assert bundle.features.shape == (50, 9)
        assert bundle.ground_truth.shape == (50, 2)

    def test_bad_support_rejected(self):
        with pytest.raises(ValueError):
            gen_monomial_benchmark(n=50, gt_support=[999], gt_weights=[1.0])
        with pytest.raises(ValueError):
            gen_monomial_benchmark(n=50, gt_weights=[1.0])


class TestMetrics:
    def test_cosine_similarity(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)
        assert cosine_similarity([2.0, 1.0], [4.0, 2.0]) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            cosine_similarity([1.0, 0.0], [0.0, 0.0])
        with pytest.raises(ValueError):
            cosine_similarity([1.0], [1.0, 2.0])

    def test_standardize(self, rng):
        x = rng.standard_normal((200, 3)) * 5.0 + 2.0
        out, mean, std = standardize(x)
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-12)
        np.testing.assert_allclose(mean, x.mean(axis=0))

    def test_standardize_constant_feature(self, rng):
        x = rng.standard_normal((50, 2))
        x[:, 0] = 3.0
        with pytest.warns(RuntimeWarning):
            out, _, _ = standardize(x)
        assert (out[:, 0] == 0.0).all()
