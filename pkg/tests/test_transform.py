import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from perfweave.errors import (
    DegenerateRange,
    DivZero,
    InsufficientData,
    MissingFitted,
    NonPositive,
    ZeroVariance,
)
from perfweave.timealign import Series
from perfweave.transform import TransformSpec, inverse_transform, transform_series


def series(*vals):
    return Series.from_list(list(vals))


class TestExamples:
    def test_zscore(self):
        out, fitted = transform_series(series(1, 2, 3), TransformSpec("zscore"))
        assert out.to_list() == [-1, 0, 1]
        assert fitted == {"mean": 2.0, "sd": 1.0}

    def test_zscore_constant_rejected(self):
        with pytest.raises(ZeroVariance):
            transform_series(series(5, 5, 5), TransformSpec("zscore"))

    def test_minmax(self):
        out, _ = transform_series(series(0, 50, 100), TransformSpec("minmax"))
        assert out.to_list() == [0, 0.5, 1]

    def test_minmax_degenerate(self):
        with pytest.raises(DegenerateRange):
            transform_series(series(5, 5), TransformSpec("minmax"))

    def test_center(self):
        out, fitted = transform_series(series(1, 3), TransformSpec("center"))
        assert out.to_list() == [-1, 1] and fitted == {"mean": 2.0}

    def test_log_requires_positive(self):
        with pytest.raises(NonPositive):
            transform_series(series(0, 1), TransformSpec("log"))
        out, _ = transform_series(series(0, 1), TransformSpec("log", log_offset=1.0))
        assert out.values[0] == 0.0

    def test_inverse_rejects_zero(self):
        with pytest.raises(DivZero):
            transform_series(series(0, 1), TransformSpec("inverse"))

    def test_needs_two_present(self):
        with pytest.raises(InsufficientData):
            transform_series(series(1, None), TransformSpec("center"))

    def test_missing_passes_through(self):
        out, _ = transform_series(series(1, None, 3), TransformSpec("center"))
        assert out.to_list() == [-1, None, 1]

    def test_wildly_different_magnitudes_become_comparable(self):
        rng = np.random.default_rng(2)
        huge = Series.from_list(list(1e6 * (1 + 0.1 * rng.standard_normal(100))))
        tiny = Series.from_list(list(1e-3 * (1 + 0.1 * rng.standard_normal(100))))
        for src in (huge, tiny):
            out, _ = transform_series(src, TransformSpec("zscore"))
            assert np.std(out.values, ddof=1) == pytest.approx(1.0, abs=1e-9)
            assert abs(np.mean(out.values)) < 1e-9


class TestInverse:
    def test_round_trip_zscore(self):
        src = series(1, 2, 3)
        out, fitted = transform_series(src, TransformSpec("zscore"))
        back = inverse_transform(out, TransformSpec("zscore"), fitted)
        assert back.to_list() == [1, 2, 3]

    def test_round_trip_log_with_offset(self):
        spec = TransformSpec("log", log_offset=1.0)
        src = series(0, 1)
        out, fitted = transform_series(src, spec)
        assert inverse_transform(out, spec, fitted).to_list() == pytest.approx([0, 1])

    def test_missing_fitted_rejected(self):
        out, _ = transform_series(series(1, 2, 3), TransformSpec("zscore"))
        with pytest.raises(MissingFitted):
            inverse_transform(out, TransformSpec("zscore"), {"mean": 2.0})

    def test_wrong_fitted_is_caller_detectable(self):
        src = series(1, 2, 3)
        out, fitted = transform_series(src, TransformSpec("zscore"))
        wrong = inverse_transform(out, TransformSpec("zscore"),
                                  {"mean": 0.0, "sd": 2.0})
        assert wrong.to_list() != src.to_list()  # no silent magic

    @given(
        st.lists(st.floats(0.5, 1e6), min_size=2, max_size=30),
        st.sampled_from(["center", "zscore", "minmax", "log", "inverse"]),
    )
    def test_round_trip_identity(self, vals, method):
        src = Series.from_list(vals)
        spec = TransformSpec(method, log_offset=1.0)
        try:
            out, fitted = transform_series(src, spec)
        except (ZeroVariance, DegenerateRange):
            assume(False)
            return
        back = inverse_transform(out, spec, fitted)
        np.testing.assert_allclose(back.values, src.values, rtol=1e-9)


def pearson(a, b):
    return float(np.corrcoef(a, b)[0, 1])


class TestCorrelationInteraction:
    """Affine rescaling never changes |r|; nonlinear transforms may."""

    def test_affine_transforms_preserve_abs_r(self):
        rng = np.random.default_rng(11)
        x = rng.normal(50, 10, 200)
        y = 0.8 * x + rng.normal(0, 5, 200)
        base = abs(pearson(x, y))
        for method in ("center", "zscore", "minmax"):
            out, _ = transform_series(Series.from_list(list(x)), TransformSpec(method))
            assert abs(pearson(out.values, y)) == pytest.approx(base, abs=1e-9)

    def test_log_changes_r(self):
        rng = np.random.default_rng(12)
        x = np.exp(rng.normal(3, 1, 300))
        y = 2.0 * x + rng.normal(0, 1, 300)
        out, _ = transform_series(Series.from_list(list(x)), TransformSpec("log"))
        assert abs(pearson(out.values, y) - pearson(x, y)) > 1e-3

    def test_log_and_minmax_preserve_order(self):
        rng = np.random.default_rng(13)
        x = np.abs(rng.normal(5, 2, 100)) + 0.1
        order = np.argsort(x)
        for spec in (TransformSpec("log"), TransformSpec("minmax")):
            out, _ = transform_series(Series.from_list(list(x)), spec)
            assert np.array_equal(np.argsort(out.values), order)
