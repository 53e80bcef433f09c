"""Unit tests for windows, patterns, priors and the exponential family form."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from shadowsa.core import (
    ConfigError,
    ContractViolation,
    Pattern,
    PriorBox,
    Violation,
    Window,
    log_unnorm_density,
    pattern_validate,
    prior_log_density,
    wrap_orientation,
)


def unit_square():
    return Window(lower=(0.0, 0.0), upper=(1.0, 1.0))


class TestWindow:
    def test_volume(self):
        assert unit_square().volume == 1.0
        w = Window(lower=(0.0, 0.0, 0.0), upper=(2.0, 3.0, 4.0))
        assert w.volume == 24.0
        assert w.dim == 3

    def test_contains_is_closed(self):
        w = unit_square()
        mask = w.contains([[0.0, 0.0], [1.0, 1.0], [0.5, 0.5], [1.0000001, 0.5]])
        assert mask.tolist() == [True, True, True, False]

    def test_rejects_bad_bounds(self):
        with pytest.raises(ConfigError):
            Window(lower=(0.0, 0.0), upper=(1.0, 0.0))
        with pytest.raises(ConfigError):
            Window(lower=(0.0,), upper=(1.0,))


class TestLogUnnormDensity:
    def test_hand_value(self):
        # Oracle: independent summation of the two products.
        theta = (4.60, -0.69)
        stats = (45.30, 17.99)
        expected = math.fsum(a * b for a, b in zip(theta, stats))
        got = log_unnorm_density(theta, stats)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(195.9669, abs=1e-4)

    def test_empty_pattern_statistics(self):
        assert log_unnorm_density((4.60, -0.69), (0.0, 0.0)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            log_unnorm_density((1.0, 2.0), (1.0, 2.0, 3.0))

    @given(
        st.lists(st.floats(-50, 50), min_size=1, max_size=5),
        st.lists(st.floats(-50, 50), min_size=1, max_size=5),
        st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=5),
    )
    def test_linear_in_theta(self, a, b, t):
        k = min(len(a), len(b), len(t))
        a, b, t = np.array(a[:k]), np.array(b[:k]), np.array(t[:k])
        lhs = log_unnorm_density(a + b, t)
        rhs = log_unnorm_density(a, t) + log_unnorm_density(b, t)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-7)


class TestPriorBox:
    def test_uniform_log_density(self):
        box = PriorBox(lower=(0.0, -7.0), upper=(7.0, 0.0))
        assert prior_log_density((4.6, -0.69), box) == pytest.approx(-math.log(49.0))
        assert prior_log_density((8.0, 0.0), box) == -math.inf

    def test_closed_boundary(self):
        box = PriorBox(lower=(0.0, -7.0), upper=(7.0, 0.0))
        assert box.contains((0.0, -7.0))
        assert box.contains((7.0, 0.0))
        assert not box.contains((7.0 + 1e-12, 0.0))

    @given(st.lists(st.floats(0.01, 0.99), min_size=2, max_size=2))
    def test_constant_inside(self, u):
        box = PriorBox(lower=(0.0, -7.0), upper=(7.0, 0.0))
        theta = box.lower + box.widths * np.array(u)
        assert box.log_density(theta) == pytest.approx(-math.log(49.0))

    def test_dimension_mismatch(self):
        box = PriorBox(lower=(0.0, -7.0), upper=(7.0, 0.0))
        with pytest.raises(ContractViolation):
            box.contains((1.0, 2.0, 3.0))

    def test_sample_stays_inside(self):
        box = PriorBox(lower=(0.0, -7.0), upper=(7.0, 0.0))
        rng = np.random.default_rng(7)
        for _ in range(100):
            assert box.contains(box.sample(rng))


class TestOrientation:
    def test_wraparound(self):
        assert wrap_orientation(-1.6) == pytest.approx(math.pi - 1.6)
        assert wrap_orientation(math.pi) == pytest.approx(0.0)
        assert wrap_orientation(4.0) == pytest.approx(4.0 - math.pi)
        assert wrap_orientation(0.3) == pytest.approx(0.3)

    @given(st.floats(-1e6, 1e6))
    def test_always_in_range(self, phi):
        w = float(wrap_orientation(phi))
        assert 0.0 <= w < math.pi


class TestPattern:
    def test_point_pattern_basics(self):
        p = Pattern(unit_square(), [[0.2, 0.3], [0.9, 0.1]])
        assert p.kind == "points"
        assert p.n == 2
        assert pattern_validate(p) is None

    def test_empty_pattern(self):
        p = Pattern(unit_square(), [])
        assert p.n == 0
        assert pattern_validate(p) is None

    def test_validate_reports_first_offender(self):
        p = Pattern(unit_square(), [[1.5, 0.5], [0.2, 0.2]])
        v = pattern_validate(p)
        assert v == Violation(0, "center outside window")

    def test_validate_non_finite(self):
        p = Pattern(unit_square(), [[0.2, 0.2], [math.nan, 0.5]])
        v = pattern_validate(p)
        assert v is not None and v.index == 1 and "finite" in v.reason

    def test_segment_orientations_normalized(self):
        w = Window(lower=(0.0, 0.0), upper=(3.0, 1.0))
        p = Pattern(w, [[1.0, 0.5]], orientation=[-1.6], seg_length=0.12)
        assert p.kind == "segments"
        assert p.orientation[0] == pytest.approx(math.pi - 1.6)
        assert pattern_validate(p) is None

    def test_segment_endpoints(self):
        w = Window(lower=(0.0, 0.0), upper=(3.0, 1.0))
        p = Pattern(w, [[1.0, 0.5], [2.0, 0.5]], orientation=[0.0, math.pi / 2], seg_length=0.12)
        ends = p.endpoints()
        assert_allclose(ends[0], [[0.94, 0.5], [1.06, 0.5]], atol=1e-12)
        assert_allclose(ends[1], [[2.0, 0.44], [2.0, 0.56]], atol=1e-12)

    def test_segment_length_must_be_positive(self):
        w = Window(lower=(0.0, 0.0), upper=(3.0, 1.0))
        with pytest.raises(ConfigError):
            Pattern(w, [[1.0, 0.5]], orientation=[0.1], seg_length=0.0)

    def test_orientation_needs_length(self):
        with pytest.raises(ConfigError):
            Pattern(unit_square(), [[0.5, 0.5]], orientation=[0.1])

    def test_shape_mismatch(self):
        with pytest.raises(ConfigError):
            Pattern(unit_square(), [[0.1, 0.2, 0.3]])

    def test_endpoints_only_for_segments(self):
        with pytest.raises(ContractViolation):
            Pattern(unit_square(), [[0.5, 0.5]]).endpoints()
