import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelab import (
    DuplicatePosition,
    FiniteConfiguration,
    MarkAnnulus,
    MarkedPoint,
    PositionWindow,
    VectorDiscreteMeasure,
    ZeroVelocity,
    local_velocity,
    project,
    reflect,
    unreflect,
    validate_pinpointed,
)
from conelab.configuration import (
    configuration_from_csv,
    configuration_to_csv,
    measure_from_csv,
    measure_to_csv,
)

from conftest import random_configuration


def mp(v, x):
    return MarkedPoint((v,), (x,))


class TestMarkedPoint:
    def test_zero_velocity_rejected(self):
        with pytest.raises(ZeroVelocity):
            MarkedPoint((0.0,), (0.3,))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            MarkedPoint((1.0, 2.0), (0.3,))

    def test_speed(self):
        assert MarkedPoint((3.0, 4.0), (0.0, 0.0)).speed == 5.0


class TestValidatePinpointed:
    def test_duplicate_position(self):
        with pytest.raises(DuplicatePosition):
            validate_pinpointed([mp(2.0, 0.3), mp(1.0, 0.3)])

    def test_zero_velocity(self):
        with pytest.raises(ZeroVelocity):
            validate_pinpointed([mp(0.0, 0.3)])

    def test_canonical_sort(self):
        gamma = validate_pinpointed([mp(2.0, 0.7), mp(1.0, 0.3)])
        assert gamma.points == (mp(1.0, 0.3), mp(2.0, 0.7))


class TestReflection:
    def test_empty(self):
        assert reflect(FiniteConfiguration(())).entries == ()
        assert unreflect(VectorDiscreteMeasure({})).points == ()

    def test_singleton(self):
        eta = reflect(FiniteConfiguration([mp(2.0, 0.3)]))
        assert eta.atoms == {(0.3,): (2.0,)}
        assert unreflect(eta) == FiniteConfiguration([mp(2.0, 0.3)])

    def test_two_points(self):
        eta = reflect(FiniteConfiguration([mp(2.0, 0.3), mp(-1.5, 0.7)]))
        assert eta.atoms == {(0.3,): (2.0,), (0.7,): (-1.5,)}

    def test_round_trip_random(self):
        gen = np.random.default_rng(2024)
        for _ in range(100):
            gamma = random_configuration(gen, 10)
            eta = reflect(gamma)
            assert unreflect(eta) == gamma
            assert reflect(unreflect(eta)) == eta


class TestLocalVelocity:
    def test_two_atoms(self):
        gamma = FiniteConfiguration([mp(2.0, 0.3), mp(-1.5, 0.7)])
        assert local_velocity(gamma, PositionWindow(0.0, 1.0)) == 3.5

    def test_empty(self):
        assert local_velocity(FiniteConfiguration(()), PositionWindow(0.0, 1.0)) == 0.0

    def test_disjoint_window(self):
        gamma = FiniteConfiguration([mp(2.0, 0.3), mp(-1.5, 0.7)])
        assert local_velocity(gamma, PositionWindow(2.0, 3.0)) == 0.0

    def test_additive_over_disjoint_windows(self):
        gen = np.random.default_rng(7)
        for _ in range(25):
            gamma = random_configuration(gen, 12)
            left = PositionWindow(0.0, 0.4999)
            right = PositionWindow(0.4999, 1.0)
            whole = PositionWindow(0.0, 1.0)
            # boundary hits have probability zero for uniform positions
            total = local_velocity(gamma, left) + local_velocity(gamma, right)
            assert total == pytest.approx(local_velocity(gamma, whole), rel=1e-12)

    def test_always_finite(self):
        gen = np.random.default_rng(8)
        gamma = random_configuration(gen, 20)
        assert math.isfinite(local_velocity(gamma, PositionWindow(0.0, 1.0)))


class TestProject:
    def setup_method(self):
        self.eta = VectorDiscreteMeasure({(0.3,): (2.0,), (0.7,): (-0.1,)})

    def test_full_window_identity(self):
        full = project(self.eta, PositionWindow(0.0, 1.0), MarkAnnulus(0.01, 10.0))
        assert full == self.eta

    def test_zero_volume_window(self):
        none = project(self.eta, PositionWindow(5.0, 5.0), MarkAnnulus(0.01, 10.0))
        assert none.entries == ()

    def test_mark_filter(self):
        kept = project(self.eta, PositionWindow(0.0, 1.0), MarkAnnulus(0.5, 2.0))
        assert kept.atoms == {(0.3,): (2.0,)}

    def test_idempotent_and_monotone(self):
        gen = np.random.default_rng(9)
        for _ in range(25):
            eta = reflect(random_configuration(gen, 10))
            window = PositionWindow(0.2, 0.8)
            marks = MarkAnnulus(0.3, 1.5)
            once = project(eta, window, marks)
            assert project(once, window, marks) == once
            smaller = project(eta, PositionWindow(0.3, 0.6), marks)
            assert set(smaller.entries) <= set(once.entries)


class TestImmutability:
    def test_frozen(self):
        p = mp(1.0, 0.5)
        with pytest.raises(AttributeError):
            p.velocity = (2.0,)

    def test_hashable_and_structural_equality(self):
        a = FiniteConfiguration([mp(1.0, 0.3), mp(2.0, 0.7)])
        b = FiniteConfiguration([mp(2.0, 0.7), mp(1.0, 0.3)])
        assert a == b
        assert hash(a) == hash(b)


class TestCsv:
    def test_header_required(self):
        with pytest.raises(ValueError):
            configuration_from_csv("0.3,2.0\n")

    def test_round_trip(self):
        gamma = FiniteConfiguration([mp(2.0, 0.3), mp(-1.5, 0.7)])
        text = configuration_to_csv(gamma)
        assert text.splitlines()[0] == "x_1,v_1"
        assert configuration_from_csv(text) == gamma

    def test_round_trip_2d(self):
        gamma = FiniteConfiguration(
            [MarkedPoint((2.0, -1.0), (0.3, 0.4)), MarkedPoint((0.5, 0.25), (0.7, 0.1))]
        )
        text = configuration_to_csv(gamma)
        assert text.splitlines()[0] == "x_1,x_2,v_1,v_2"
        assert configuration_from_csv(text) == gamma

    def test_measure_round_trip(self):
        eta = VectorDiscreteMeasure({(0.3,): (2.0,), (0.7,): (-1.5,)})
        assert measure_from_csv(measure_to_csv(eta)) == eta


@given(
    st.lists(
        st.tuples(
            st.floats(min_value=-3.0, max_value=3.0).filter(lambda v: abs(v) > 1e-3),
            st.floats(min_value=0.0, max_value=1.0),
        ),
        max_size=8,
        unique_by=lambda t: t[1],
    )
)
@settings(max_examples=200, deadline=None)
def test_reflection_bijection_property(pairs):
    gamma = FiniteConfiguration([mp(v, x) for v, x in pairs])
    assert unreflect(reflect(gamma)) == gamma
