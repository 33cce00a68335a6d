import math

import numpy as np
import pytest

from conelab import (
    DivergentMoment,
    IntensitySpec,
    MarkAnnulus,
    PositionWindow,
    VelocityLaw,
    lambda_mass,
    lambda_moment,
    phi_lambda_h,
    sample_velocity,
    sigma_mass,
)
from conelab.intensity import (
    angular_even_moment,
    lambda_callable_integral,
    log_phi_lambda_h,
    radial_cdf,
    sample_radius,
    surface_area,
)
from conelab.streams import RandomStream

from conftest import (
    CONE_EXPONENT,
    LAMBDA_MASS,
    MOMENT1_ANNULUS,
    MOMENT1_FULL,
    MOMENT2_FULL,
    TWO_LN2,
)


class TestLawValidation:
    def test_alpha_range(self):
        with pytest.raises(ValueError):
            VelocityLaw(1, 0.5, 2.0)
        with pytest.raises(ValueError):
            VelocityLaw(1, 2.0, 2.0)

    def test_beta_positive(self):
        with pytest.raises(ValueError):
            VelocityLaw(1, 1.0, 0.0)

    def test_annulus_validation(self):
        with pytest.raises(ValueError):
            MarkAnnulus(0.0, 1.0)
        with pytest.raises(ValueError):
            MarkAnnulus(2.0, 1.0)

    def test_one_sided_needs_d1(self):
        with pytest.raises(ValueError):
            IntensitySpec(
                VelocityLaw(2, 2.0, 2.0),
                MarkAnnulus(0.5, 2.0, one_sided=True),
                PositionWindow((0.0, 0.0), (1.0, 1.0)),
            )


class TestLambdaMass:
    def test_reference_value(self, law, marks):
        assert lambda_mass(law, marks) == pytest.approx(LAMBDA_MASS, rel=1e-9)

    def test_degenerate_annulus(self, law):
        assert lambda_mass(law, MarkAnnulus(2.0, 2.0)) == 0.0

    def test_monotone_in_annulus(self, law):
        assert lambda_mass(law, MarkAnnulus(0.25, 2.0)) > lambda_mass(
            law, MarkAnnulus(0.5, 2.0)
        )

    def test_additive_over_adjacent_annuli(self, law):
        a = lambda_mass(law, MarkAnnulus(0.25, 0.9))
        b = lambda_mass(law, MarkAnnulus(0.9, 2.5))
        c = lambda_mass(law, MarkAnnulus(0.25, 2.5))
        assert a + b == pytest.approx(c, rel=1e-9)

    def test_one_sided_halves(self, law, marks):
        one = lambda_mass(law, MarkAnnulus(0.5, 2.0, one_sided=True))
        assert one == pytest.approx(0.5 * lambda_mass(law, marks), rel=1e-12)

    def test_divergence_at_singularity(self, law):
        # alpha = d: lambda([eps, 2]) - lambda([2 eps, 2]) -> 2 ln 2 as eps -> 0
        eps = 1e-4
        diff = lambda_mass(law, MarkAnnulus(eps, 2.0)) - lambda_mass(
            law, MarkAnnulus(2 * eps, 2.0)
        )
        assert abs(diff - TWO_LN2) <= 0.01 * TWO_LN2


class TestLambdaMoment:
    def test_first_full(self, law):
        assert lambda_moment(law, 1) == pytest.approx(MOMENT1_FULL, abs=1e-9)

    def test_second_full(self, law):
        assert lambda_moment(law, 2) == pytest.approx(MOMENT2_FULL, abs=1e-9)

    def test_zeroth_full_diverges(self, law):
        with pytest.raises(DivergentMoment):
            lambda_moment(law, 0)

    def test_annulus_first(self, law, marks):
        assert lambda_moment(law, 1, marks) == pytest.approx(MOMENT1_ANNULUS, rel=1e-9)

    def test_full_moments_other_laws(self):
        # beta = 1, alpha = 2.5, d = 2: s_1 * int_0^inf r^{d-1+n-alpha} e^{-r}
        # = 2 pi Gamma(d + n - alpha)
        law = VelocityLaw(2, 2.5, 1.0)
        expected = surface_area(2) * math.gamma(2 + 1 - 2.5)
        assert lambda_moment(law, 1) == pytest.approx(expected, rel=1e-9)


class TestSigmaMass:
    def test_product_form(self, sigma, law, marks):
        assert sigma_mass(sigma) == pytest.approx(LAMBDA_MASS, rel=1e-9)

    def test_zero_volume(self, law, marks):
        spec = IntensitySpec(law, marks, PositionWindow(1.0, 1.0))
        assert sigma_mass(spec) == 0.0

    def test_doubling_window(self, law, marks, sigma):
        double = IntensitySpec(law, marks, PositionWindow(0.0, 2.0))
        assert sigma_mass(double) == pytest.approx(2 * sigma_mass(sigma), rel=1e-12)


class TestAngularMoments:
    def test_surface_areas(self):
        assert surface_area(1) == pytest.approx(2.0)
        assert surface_area(2) == pytest.approx(2 * math.pi)
        assert surface_area(3) == pytest.approx(4 * math.pi)

    def test_even_moment_values(self):
        assert angular_even_moment(1, 2) == pytest.approx(1.0)
        assert angular_even_moment(2, 2) == pytest.approx(0.5)
        assert angular_even_moment(3, 2) == pytest.approx(1.0 / 3.0)
        assert angular_even_moment(3, 4) == pytest.approx(0.2)

    def test_odd_moment_zero(self):
        assert angular_even_moment(3, 3) == 0.0


class TestCallableIntegral:
    def test_matches_mass(self, law, marks):
        got = lambda_callable_integral(law, marks, lambda v: 1.0)
        assert got == pytest.approx(LAMBDA_MASS, rel=1e-9)

    def test_2d_radial(self):
        law = VelocityLaw(2, 2.0, 2.0)
        marks = MarkAnnulus(0.5, 2.0)
        got = lambda_callable_integral(law, marks, lambda v: math.hypot(*v))
        expected = lambda_moment(law, 1, marks)
        assert got == pytest.approx(expected, rel=1e-9)

    def test_2d_directional(self):
        law = VelocityLaw(2, 2.0, 2.0)
        marks = MarkAnnulus(0.5, 2.0)
        got = lambda_callable_integral(
            law, marks, lambda v: v[0] * v[0], direction=(1.0, 0.0)
        )
        expected = lambda_moment(law, 2, marks) / 2.0
        assert got == pytest.approx(expected, rel=1e-8)


class TestPhiLambdaH:
    def test_zero_argument(self, law, marks):
        assert phi_lambda_h(law, marks, (1.0,), 0.0) == 1.0

    def test_reference_exponent(self, law, marks):
        assert log_phi_lambda_h(law, marks, (1.0,), 0.5) == pytest.approx(
            CONE_EXPONENT, rel=1e-9
        )

    def test_symmetry_in_r(self, law, marks):
        # two-sided law: Phi is even in r
        assert log_phi_lambda_h(law, marks, (1.0,), 0.3) == pytest.approx(
            log_phi_lambda_h(law, marks, (1.0,), -0.3), rel=1e-12
        )

    def test_2d_matches_series(self):
        # small r: log Phi ~ r^2/2 * int <h,v>^2 lambda(dv)
        law = VelocityLaw(2, 2.0, 2.0)
        marks = MarkAnnulus(0.5, 2.0)
        r = 1e-3
        second = lambda_moment(law, 2, marks) / 2.0
        assert log_phi_lambda_h(law, marks, (1.0, 0.0), r) == pytest.approx(
            0.5 * r * r * second, rel=1e-4
        )


class TestSampling:
    def test_support(self, law, marks):
        rng = RandomStream(11, 0)
        for _ in range(2000):
            v = sample_velocity(law, marks, rng)
            assert marks.eps <= abs(v[0]) <= marks.rmax

    def test_radial_ks(self, law, marks):
        n = 10_000
        rng = RandomStream(12, 0)
        radii = np.sort([abs(sample_velocity(law, marks, rng)[0]) for _ in range(n)])
        cdf = radial_cdf(law, marks, radii)
        grid = np.arange(1, n + 1) / n
        ks = max(np.max(np.abs(cdf - grid)), np.max(np.abs(cdf - (grid - 1.0 / n))))
        assert ks <= 1.628 / math.sqrt(n)

    def test_sign_balance(self, law, marks):
        n = 10_000
        rng = RandomStream(13, 0)
        positive = sum(sample_velocity(law, marks, rng)[0] > 0 for _ in range(n))
        assert abs(positive / n - 0.5) <= 3 * 0.5 / math.sqrt(n)

    def test_one_sided_all_positive(self, law):
        marks = MarkAnnulus(0.5, 2.0, one_sided=True)
        rng = RandomStream(14, 0)
        assert all(sample_velocity(law, marks, rng)[0] > 0 for _ in range(500))

    def test_empirical_mean_speed(self, law, marks):
        n = 100_000
        gen = RandomStream(15, 0).generator()
        u = gen.random(n)
        radii = np.array([sample_radius(law, marks, float(x)) for x in u])
        expected = lambda_moment(law, 1, marks) / lambda_mass(law, marks)
        se = radii.std(ddof=1) / math.sqrt(n)
        assert abs(radii.mean() - expected) <= 3 * se

    def test_2d_direction_uniform(self):
        law = VelocityLaw(2, 2.0, 2.0)
        marks = MarkAnnulus(0.5, 2.0)
        rng = RandomStream(16, 0)
        vs = [sample_velocity(law, marks, rng) for _ in range(4000)]
        angles = np.array([math.atan2(v[1], v[0]) for v in vs])
        # quadrant balance within 4 sigma of a fair multinomial
        for quadrant in range(4):
            lo = -math.pi + quadrant * math.pi / 2
            frac = np.mean((angles >= lo) & (angles < lo + math.pi / 2))
            assert abs(frac - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / 4000)

    def test_determinism(self, law, marks):
        rng_a = RandomStream(17, 3)
        rng_b = RandomStream(17, 3)
        a = [sample_velocity(law, marks, rng_a) for _ in range(5)]
        b = [sample_velocity(law, marks, rng_b) for _ in range(5)]
        assert a == b
        assert len(set(a)) > 1  # the stream advances between draws
