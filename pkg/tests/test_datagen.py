"""Tests for data generation and the dataset schemas"""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from tylershape.schemas.datasets import (
    ContaminationSpec,
    DataSet,
    EllipticalModel,
    OutlierModel,
    ShapeMatrix,
    ULaw,
    XiMode,
)
from tylershape.services.datagen import (
    ar_shape,
    contaminate,
    haar_orthogonal,
    outlier_shape,
    pair_differences,
    sample_elliptical,
    sample_symmetrized,
)
from tylershape.utils.rng import realization_stream


@pytest.mark.unit
class TestShapeMatrix:
    """Test the trace-p shape matrix schema"""

    def test_ar_shape_entries(self):
        """AR shape has rho^|i-j| entries and trace p"""
        s = ar_shape(5, 0.7)
        assert s.dim == 5
        assert np.trace(s.entries) == pytest.approx(5.0)
        assert s.entries[0, 3] == pytest.approx(0.7**3)
        assert s.entries[4, 2] == pytest.approx(0.7**2)
        assert s.max_diag == pytest.approx(1.0)

    def test_ar_shape_rejects_unit_rho(self):
        with pytest.raises(ValueError):
            ar_shape(4, 1.0)

    def test_normalized_rescales_trace(self):
        """normalized() brings any PSD matrix to trace p"""
        s = ShapeMatrix.normalized(np.diag([2.0, 4.0, 6.0]))
        assert np.allclose(np.diag(s.entries), [0.5, 1.0, 1.5])

    def test_rejects_wrong_trace(self):
        with pytest.raises(ValidationError):
            ShapeMatrix(entries=2.0 * np.eye(3))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            ShapeMatrix(entries=np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(ValidationError):
            ShapeMatrix(entries=np.array([[2.0, 1.5], [1.5, 0.0]]))


@pytest.mark.unit
class TestDataSet:
    """Test the dataset schema"""

    def test_rejects_zero_sample(self):
        with pytest.raises(ValidationError):
            DataSet(samples=np.array([[1.0, 2.0], [0.0, 0.0]]))

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            DataSet(samples=np.array([[1.0, np.nan]]))

    def test_labels_must_match_n(self):
        with pytest.raises(ValidationError):
            DataSet(samples=np.ones((3, 2)), labels=np.array([True, False]))

    def test_subset_keeps_labels(self):
        data = DataSet(
            samples=np.arange(1.0, 9.0).reshape(4, 2), labels=np.array([0, 1, 0, 1])
        )
        sub = data.subset([1, 3])
        assert sub.n == 2
        assert sub.labels.tolist() == [True, True]
        assert data.gamma == pytest.approx(0.5)


@pytest.mark.unit
class TestEllipticalSampling:
    """Test elliptical sampling"""

    def test_shape_and_meta(self, rng):
        model = EllipticalModel(shape=ar_shape(6, 0.5))
        data = sample_elliptical(model, 30, rng)
        assert data.samples.shape == (30, 6)
        assert data.meta["model"]["u_law"] == "constant"

    def test_same_stream_same_data(self):
        """Identical (seed, realization) gives identical samples"""
        model = EllipticalModel(shape=ar_shape(4, 0.7), u_law=ULaw.CAUCHY)
        a = sample_elliptical(model, 50, realization_stream(7, 3))
        b = sample_elliptical(model, 50, realization_stream(7, 3))
        assert np.array_equal(a.samples, b.samples)

    def test_u_laws_share_directions(self):
        """Changing only the u-law rescales each sample along the same direction"""
        shape = ar_shape(5, 0.7)
        base = sample_elliptical(EllipticalModel(shape=shape), 40, realization_stream(1, 0))
        for law in (ULaw.LAPLACE, ULaw.CAUCHY):
            other = sample_elliptical(
                EllipticalModel(shape=shape, u_law=law), 40, realization_stream(1, 0)
            )
            a = base.samples / np.linalg.norm(base.samples, axis=1, keepdims=True)
            b = other.samples / np.linalg.norm(other.samples, axis=1, keepdims=True)
            assert np.allclose(np.abs(np.sum(a * b, axis=1)), 1.0)

    @pytest.mark.slow
    def test_moments_of_gaussian_model(self, rng):
        """Identity shape, u = 1 and Gaussian xi: sample covariance near I, mean near 0"""
        p = 5
        data = sample_elliptical(EllipticalModel(shape=ar_shape(p, 0.0)), 100_000, rng)
        cov = data.samples.T @ data.samples / data.n
        assert np.max(np.abs(np.linalg.eigvalsh(cov - np.eye(p)))) <= 0.05
        assert np.linalg.norm(data.samples.mean(axis=0)) <= 0.05 * np.sqrt(p)

    def test_sphere_uniform_unit_norm(self, rng):
        """With identity shape and u = 1 the sphere mode gives unit vectors"""
        model = EllipticalModel(shape=ar_shape(7, 0.0), xi_mode=XiMode.SPHERE_UNIFORM)
        data = sample_elliptical(model, 25, rng)
        assert np.allclose(np.linalg.norm(data.samples, axis=1), 1.0)

    def test_location_shift(self, rng):
        loc = np.array([5.0, -5.0])
        model = EllipticalModel(shape=ar_shape(2, 0.0), location=loc)
        data = sample_elliptical(model, 2000, rng)
        assert np.allclose(data.samples.mean(axis=0), loc, atol=0.2)

    def test_location_length_checked(self):
        with pytest.raises(ValidationError):
            EllipticalModel(shape=ar_shape(3, 0.0), location=np.zeros(2))


@pytest.mark.unit
class TestSymmetrization:
    """Test pairwise differencing"""

    def test_pair_differences(self):
        raw = np.array([[1.0, 1.0], [3.0, 2.0], [0.0, 1.0], [2.0, 5.0]])
        data = pair_differences(raw)
        assert np.array_equal(data.samples, [[2.0, 1.0], [2.0, 4.0]])

    def test_odd_count_rejected(self):
        with pytest.raises(ValueError):
            pair_differences(np.ones((3, 2)))

    def test_removes_location(self, rng):
        """Differences of shifted data are centered"""
        model = EllipticalModel(shape=ar_shape(3, 0.0), location=np.full(3, 100.0))
        data = sample_symmetrized(model, 500, rng)
        assert data.n == 500
        assert np.all(np.abs(data.samples.mean(axis=0)) < 0.3)


@pytest.mark.unit
class TestContamination:
    """Test Haar rotations and the contaminated mixture"""

    def test_haar_is_orthogonal(self, rng):
        q = haar_orthogonal(8, rng)
        assert np.allclose(q.T @ q, np.eye(8), atol=1e-12)

    def test_haar_one_dimension(self, rng):
        q = haar_orthogonal(1, rng)
        assert q.shape == (1, 1)
        assert abs(q[0, 0]) == pytest.approx(1.0)

    def test_haar_invariance(self, rng):
        """For p = 3 the corner entry of Q and of V Q are both uniform on [-1, 1]"""
        v = haar_orthogonal(3, rng)
        draws = [haar_orthogonal(3, rng) for _ in range(2000)]
        plain = [q[0, 0] for q in draws]
        rotated = [(v @ q)[0, 0] for q in draws]
        uniform = stats.uniform(loc=-1.0, scale=2.0).cdf
        assert stats.kstest(plain, uniform).pvalue > 1e-3
        assert stats.kstest(rotated, uniform).pvalue > 1e-3

    def test_spiked_spectrum(self, rng):
        """Spiked outlier shape has eigenvalues p D / tr D with D = (p, p/2, 1, ...)"""
        p = 6
        s = outlier_shape(p, OutlierModel.SPIKED, rng)
        d = np.array([6.0, 3.0, 1.0, 1.0, 1.0, 1.0])
        expected = np.sort(p * d / d.sum())
        assert np.allclose(np.linalg.eigvalsh(s.entries), expected)

    def test_uniform_spectrum_range(self, rng):
        s = outlier_shape(10, OutlierModel.UNIFORM, rng)
        eigs = np.linalg.eigvalsh(s.entries)
        assert eigs.max() / eigs.min() <= 5.0 + 1e-9
        assert np.trace(s.entries) == pytest.approx(10.0)

    @pytest.mark.parametrize(
        "epsilon,n,expected", [(0.0, 50, 0), (0.2, 200, 40), (0.25, 10, 3), (0.05, 30, 2)]
    )
    def test_outlier_count(self, epsilon, n, expected):
        """round(eps n) with halves rounded up"""
        spec = ContaminationSpec(
            epsilon=epsilon, inlier=EllipticalModel(shape=ar_shape(3, 0.5))
        )
        assert spec.outlier_count(n) == expected

    def test_epsilon_below_one(self):
        with pytest.raises(ValidationError):
            ContaminationSpec(epsilon=1.0, inlier=EllipticalModel(shape=ar_shape(3, 0.5)))

    def test_contaminate_labels(self, rng):
        spec = ContaminationSpec(
            epsilon=0.2,
            inlier=EllipticalModel(shape=ar_shape(10, 0.7)),
            outlier_d_spec=OutlierModel.SPIKED,
        )
        data = contaminate(spec, 200, rng)
        assert data.n == 200
        assert int(data.labels.sum()) == 40
        assert data.meta["outlier_model"] == "spiked"
        # shuffled: outliers are not all at the end
        assert not data.labels[-40:].all()
