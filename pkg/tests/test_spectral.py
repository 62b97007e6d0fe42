import math

import numpy as np
import pytest

from unobs_stab.bessel import bessel_j, find_zeros
from unobs_stab.spectral import (
    J0_RADIAL,
    J2_COS2THETA,
    NORM,
    NORM_SQ,
    BESSEL_SERIES,
    OutputSpec,
    SpectralParams,
    apply_generator,
    default_j,
    embed,
    embedded_target,
    generator_matrix,
    inverse_lipschitz,
    left_inverse,
    linearized_output,
    mode_orders,
    observer_matrix,
    output_value,
    output_vector,
    sample_hold_feedback,
    state_from_coef,
    truncation_tail_bound,
    weak_norm,
    weak_norm_bound,
)

from oracles import bessel_tail_energy


def polar(r, theta):
    return np.array([r * math.cos(theta), r * math.sin(theta)])


class TestEmbed:
    def test_origin_is_constant_mode(self):
        z = embed([0.0, 0.0], mu=0.5, n=6)
        assert np.allclose(z, embedded_target(6))

    def test_positive_axis(self):
        mu, n = 0.7, 8
        r = 1.3
        z = embed([r, 0.0], mu, n)
        for k in range(-n, n + 1):
            want = (1j) ** k * bessel_j(k, mu * r)
            assert z[k + n] == pytest.approx(want, abs=1e-14)

    def test_conjugate_symmetry(self):
        z = embed(polar(1.1, 0.8), mu=1.0, n=10)
        for k in range(1, 11):
            assert z[10 - k] == pytest.approx((-1.0) ** k * np.conj(z[10 + k]), abs=1e-14)

    def test_unit_norm_up_to_tail(self):
        # mu*r = 1, N = 20: the dropped tail is far below 1e-12
        z = embed([1.0, 0.0], mu=1.0, n=20)
        assert np.sum(np.abs(z) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_tiny_truncation(self):
        with pytest.raises(ValueError):
            embed([1.0, 0.0], mu=1.0, n=0)


class TestGenerator:
    def test_u_zero_is_diagonal(self):
        rng = np.random.default_rng(0)
        z = rng.normal(size=9) + 1j * rng.normal(size=9)
        out = apply_generator(0.0, 2.0, z)
        k = mode_orders(4)
        assert np.allclose(out, -1j * k * z)

    def test_constant_mode_image(self):
        # sin(s) = (e_1 - e_{-1}) / (2i): driving the constant mode populates
        # the neighbors with -+1/2
        n = 3
        out = apply_generator(1.0, 1.0, embedded_target(n))
        want = np.zeros(2 * n + 1, dtype=complex)
        want[n + 1] = 0.5
        want[n - 1] = -0.5
        assert np.allclose(out, want)

    def test_skew_symmetry_of_quadratic_form(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            n = int(rng.integers(2, 12))
            z = rng.normal(size=2 * n + 1) + 1j * rng.normal(size=2 * n + 1)
            u = float(rng.normal())
            out = apply_generator(u, 0.8, z)
            assert abs(np.real(np.vdot(z, out))) < 1e-14 * np.vdot(z, z).real

    def test_matrix_matches_apply_and_is_skew_hermitian(self):
        rng = np.random.default_rng(2)
        n = 7
        g = generator_matrix(0.4, 1.3, n)
        assert np.array_equal(g, -g.conj().T)
        z = rng.normal(size=2 * n + 1) + 1j * rng.normal(size=2 * n + 1)
        assert np.allclose(g @ z, apply_generator(0.4, 1.3, z), atol=1e-14)


class TestObserverMatrix:
    def test_alpha_zero_reduces_to_generator(self):
        n = 5
        zeta = embedded_target(n)
        assert np.allclose(observer_matrix(0.3, 1.0, 0.0, zeta),
                           generator_matrix(0.3, 1.0, n))

    def test_rank_one_correction(self):
        n = 4
        zeta = embedded_target(n)
        m = observer_matrix(0.0, 1.0, 1.0, zeta)
        want = generator_matrix(0.0, 1.0, n) - np.outer(zeta, zeta.conj())
        assert np.allclose(m, want)

    def test_hermitian_part(self):
        rng = np.random.default_rng(3)
        n = 6
        zeta = rng.normal(size=2 * n + 1) + 1j * rng.normal(size=2 * n + 1)
        alpha = 1.7
        m = observer_matrix(0.9, 0.5, alpha, zeta)
        herm = 0.5 * (m + m.conj().T)
        assert np.allclose(herm, -alpha * np.outer(zeta, zeta.conj()), atol=1e-14)
        assert np.max(np.linalg.eigvalsh(herm)) <= 1e-13

    def test_error_norm_derivative_quadratic_form(self):
        # d||eps||^2/dt = 2 Re <M eps, eps> = -2 alpha |<eps, zeta>|^2
        rng = np.random.default_rng(6)
        n = 8
        zeta = embedded_target(n)
        zeta[n + 2] = 0.5j  # non-trivial functional
        alpha = 2.3
        m = observer_matrix(0.7, 1.1, alpha, zeta)
        for _ in range(10):
            eps = rng.normal(size=2 * n + 1) + 1j * rng.normal(size=2 * n + 1)
            got = 2.0 * np.real(np.vdot(eps, m @ eps))
            want = -2.0 * alpha * abs(np.vdot(zeta, eps)) ** 2
            assert got == pytest.approx(want, abs=1e-13 * np.vdot(eps, eps).real)


class TestOutputs:
    def test_linearized_output_examples(self):
        mu = 0.8
        spec = OutputSpec(kind=NORM_SQ, mu=mu)
        assert linearized_output(spec, 0.0) == pytest.approx(1.0)
        r = 1.2
        assert linearized_output(spec, 0.5 * r * r) == pytest.approx(bessel_j(0, mu * r))
        spec = OutputSpec(kind=J0_RADIAL, mu=mu)
        assert linearized_output(spec, bessel_j(0, mu * r) - 1.0) == pytest.approx(
            bessel_j(0, mu * r))
        spec = OutputSpec(kind=NORM, mu=mu)
        assert linearized_output(spec, r) == pytest.approx(bessel_j(0, mu * r))
        spec = OutputSpec(kind=J2_COS2THETA, mu=mu)
        assert linearized_output(spec, 0.123) == pytest.approx(0.123)

    def test_negative_measurements_rejected(self):
        spec = OutputSpec(kind=NORM_SQ, mu=1.0)
        with pytest.raises(ValueError):
            linearized_output(spec, -1e-3)
        spec = OutputSpec(kind=NORM, mu=1.0)
        with pytest.raises(ValueError):
            linearized_output(spec, -0.2)

    def test_radial_kinds_measure_constant_mode(self):
        for kind in (NORM_SQ, J0_RADIAL, NORM):
            zeta = output_vector(OutputSpec(kind=kind, mu=0.5), 6)
            assert np.allclose(zeta, embedded_target(6))

    def test_j2_functional_support(self):
        zeta = output_vector(OutputSpec(kind=J2_COS2THETA, mu=0.5), 6)
        assert zeta[6 + 2] == pytest.approx(-0.5)
        assert zeta[6 - 2] == pytest.approx(-0.5)
        assert np.count_nonzero(zeta) == 2
        with pytest.raises(ValueError):
            output_vector(OutputSpec(kind=J2_COS2THETA, mu=0.5), 1)

    def test_functional_matches_transformed_measurement_on_grid(self):
        # <embed(x), zeta> = linearized_output(h(x)) on a polar grid
        n = 20
        specs = [
            OutputSpec(kind=NORM_SQ, mu=1.0),
            OutputSpec(kind=J0_RADIAL, mu=0.7),
            OutputSpec(kind=NORM, mu=1.3),
            OutputSpec(kind=J2_COS2THETA, mu=1.0),
            OutputSpec(kind=BESSEL_SERIES, mu=0.9,
                       coeffs={-1: 0.4 - 0.2j, 0: 1.0, 3: 0.25j}),
        ]
        for spec in specs:
            zeta = output_vector(spec, n)
            for r in (0.0, 0.4, 1.1, 2.0 / spec.mu):
                for theta in (0.0, 0.9, 2.4, 4.4):
                    x = polar(r, theta)
                    lhs = np.vdot(zeta, embed(x, spec.mu, n))
                    rhs = linearized_output(spec, output_value(spec, x))
                    assert abs(lhs - rhs) < 1e-10, (spec.kind, r, theta)

    def test_bessel_series_requires_coeff(self):
        with pytest.raises(ValueError):
            OutputSpec(kind=BESSEL_SERIES, mu=1.0, coeffs={})
        with pytest.raises(ValueError):
            output_vector(OutputSpec(kind=BESSEL_SERIES, mu=1.0, coeffs={5: 1.0}), 3)


class TestWeakNorm:
    def test_examples(self):
        assert weak_norm(np.zeros(7)) == 0.0
        e1 = np.zeros(5, dtype=complex)
        e1[2 + 1] = 1.0
        assert weak_norm(e1) == pytest.approx(1.0 / math.sqrt(2.0))

    def test_constant_value(self):
        nu = weak_norm_bound()
        assert nu == pytest.approx(1.7758, abs=1e-4)
        # direct summation with integral tail correction
        k = np.arange(1, 1_000_001, dtype=float)
        direct = 1.0 + 2.0 * np.sum(1.0 / (k * k + 1.0)) + 2.0 / 1_000_000.5
        assert nu == pytest.approx(math.sqrt(direct), abs=1e-9)

    def test_dominated_by_norm(self):
        rng = np.random.default_rng(4)
        nu = weak_norm_bound()
        for _ in range(20):
            n = int(rng.integers(1, 30))
            z = rng.normal(size=2 * n + 1) + 1j * rng.normal(size=2 * n + 1)
            assert weak_norm(z) <= nu * np.linalg.norm(z) + 1e-12


class TestInverse:
    def test_zero_maps_to_origin(self):
        assert np.allclose(state_from_coef(0.0, 0.5, default_j()), [0.0, 0.0])

    def test_round_trip_inside_inversion_ball(self):
        mu, j = 0.4, default_j()
        for r in (0.1, 0.8, 0.5 * j / mu):
            for theta in (0.0, 1.0, 2.5, 5.0):
                c = 1j * bessel_j(1, mu * r) * np.exp(-1j * theta)
                assert np.allclose(state_from_coef(c, mu, j), polar(r, theta), atol=1e-10)

    def test_clamped_branch(self):
        mu, j = 0.3, default_j()
        j1 = find_zeros().j1
        big = 2.0 * bessel_j(1, j1)
        x = state_from_coef(big + 0.0j, mu, j)
        assert np.linalg.norm(x) == pytest.approx(j1 / mu, abs=1e-12)

    def test_blend_is_c1_and_monotone(self):
        mu, j = 1.0, default_j()
        j1 = find_zeros().j1
        y0, y1 = bessel_j(1, j), bessel_j(1, j1)
        h = 1e-7
        for y_edge in (y0, y1):
            lo = np.linalg.norm(state_from_coef(y_edge - h, mu, j))
            hi = np.linalg.norm(state_from_coef(y_edge + h, mu, j))
            mid = np.linalg.norm(state_from_coef(y_edge, mu, j))
            left = (mid - lo) / h
            right = (hi - mid) / h
            # a kink would show up as an O(10) slope jump; curvature of the
            # blend makes the one-sided quotients differ only at O(h * g'')
            assert abs(left - right) < 0.05 * (1.0 + max(abs(left), abs(right)))
        ys = np.linspace(1e-6, y1 * 1.05, 400)
        radii = [np.linalg.norm(state_from_coef(y, mu, j)) for y in ys]
        assert all(b >= a - 1e-12 for a, b in zip(radii[:-1], radii[1:]))

    def test_sampled_lipschitz_constant_is_finite(self):
        ell = inverse_lipschitz(0.1, default_j())
        assert np.isfinite(ell) and ell > 0.0

    def test_left_inverse_round_trip_grid(self):
        mu, j, n = 0.25, default_j(), 16
        for r_frac in np.linspace(0.0, 0.9, 7):
            for theta in np.linspace(0.0, 2.0 * math.pi, 9):
                x = polar(r_frac * j / mu, theta)
                err = np.linalg.norm(left_inverse(embed(x, mu, n), mu, j) - x)
                assert err < 1e-9

    def test_huge_coefficient_clamped(self):
        mu, j, n = 0.5, default_j(), 8
        z = np.zeros(2 * n + 1, dtype=complex)
        z[n + 1] = 50.0 - 12.0j
        assert np.linalg.norm(left_inverse(z, mu, j)) == pytest.approx(
            find_zeros().j1 / mu, abs=1e-12)


class TestFeedbackAndParams:
    def params(self, delta=0.01, n=12):
        return SpectralParams(K=np.array([1.0, -2.0]), delta=delta, alpha=1.0,
                              Delta=0.1, mu=0.2, j=default_j(), N=n)

    def test_zero_at_target(self):
        p = self.params()
        assert sample_hold_feedback(embedded_target(p.N), p) == pytest.approx(0.0, abs=1e-15)

    def test_reduces_to_state_feedback_without_perturbation(self):
        p = self.params(delta=0.0)
        x = polar(0.4 * p.j / p.mu, 1.1)
        u = sample_hold_feedback(embed(x, p.mu, p.N), p)
        assert u == pytest.approx(float(p.K @ x), abs=1e-9)

    def test_perturbation_term(self):
        p = self.params(delta=0.5)
        zhat = embedded_target(p.N)
        zhat[p.N + 3] += 0.2  # deviation in a high mode
        dev = zhat - embedded_target(p.N)
        want = p.delta * weak_norm(dev) ** 2  # left-inverse sees no e_1 content
        assert sample_hold_feedback(zhat, p) == pytest.approx(want, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            SpectralParams(K=[1.0, -2.0], delta=0.01, alpha=1.0, Delta=4.0,
                           mu=0.1, j=default_j(), N=8)
        with pytest.raises(ValueError):
            SpectralParams(K=[1.0, -2.0], delta=0.01, alpha=1.0, Delta=0.1,
                           mu=0.1, j=2.5, N=8)
        with pytest.raises(ValueError):
            SpectralParams(K=[1.0], delta=0.01, alpha=1.0, Delta=0.1,
                           mu=0.1, j=default_j(), N=8)


def test_truncation_tail_certificate():
    # certified bound dominates the true tail energy (high-precision oracle)
    for s, n in ((2.0, 24), (1.0, 16), (0.5, 8)):
        true_tail = bessel_tail_energy(s, n)
        assert true_tail < truncation_tail_bound(s, n)
    # and the N=24 default keeps the mu*r <= 2 tail far below 1e-12
    assert truncation_tail_bound(2.0, 24) < 1e-12
