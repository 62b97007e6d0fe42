import math

import numpy as np
import pytest

from unobs_stab.bessel import (
    bessel_j,
    bessel_j_all,
    bessel_j_prime,
    find_zeros,
    inv_j1,
)

from oracles import bessel_j_series, j0_first_zero, j1_zero_of_derivative


def test_values_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_j(-4, 0.0) == 0.0


def test_j1_at_one_matches_series_oracle():
    assert bessel_j(1, 1.0) == pytest.approx(bessel_j_series(1, 1.0), abs=1e-14)
    # frozen from the oracle at 30 digits
    assert bessel_j(1, 1.0) == pytest.approx(0.4400505857449335, abs=1e-13)


def test_series_and_recurrence_ranges_agree_with_oracle():
    for r in np.linspace(0.05, 49.0, 25):
        for k in (0, 1, 2, 5, 11, 23):
            assert bessel_j(k, float(r)) == pytest.approx(
                bessel_j_series(k, float(r)), abs=5e-14), (k, r)


def test_negative_order_symmetry():
    rng = np.random.default_rng(7)
    for _ in range(50):
        k = int(rng.integers(1, 15))
        r = float(rng.uniform(0.0, 30.0))
        assert bessel_j(-k, r) == pytest.approx((-1.0) ** k * bessel_j(k, r), abs=1e-14)


def test_negative_argument_symmetry():
    for k in range(-5, 6):
        assert bessel_j(k, -2.3) == pytest.approx((-1.0) ** k * bessel_j(k, 2.3), abs=1e-14)


def test_domain_error():
    with pytest.raises(ValueError):
        bessel_j(0, 50.0)
    with pytest.raises(ValueError):
        bessel_j(2, -51.0)
    with pytest.raises(ValueError):
        bessel_j(0, float("nan"))


def test_prime_values():
    assert bessel_j_prime(1, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert bessel_j_prime(0, 0.0) == pytest.approx(0.0, abs=1e-15)
    z = find_zeros()
    assert abs(bessel_j_prime(1, z.j1)) < 1e-12


def test_prime_consistent_with_central_difference():
    h = 1e-6
    for k in (0, 1, 3, 8):
        for r in (0.3, 1.7, 4.2, 11.0):
            fd = (bessel_j(k, r + h) - bessel_j(k, r - h)) / (2.0 * h)
            assert bessel_j_prime(k, r) == pytest.approx(fd, abs=1e-8)


def test_zeros_against_series_oracle():
    z = find_zeros()
    assert z.j1 == pytest.approx(j1_zero_of_derivative(), abs=1e-12)
    assert z.j0 == pytest.approx(j0_first_zero(), abs=1e-12)
    assert z.j1 == pytest.approx(1.84118378, abs=1e-8)
    assert z.j0 == pytest.approx(2.40482556, abs=1e-8)
    assert 0.0 < z.j1 < z.j0
    assert abs(bessel_j(0, z.j0)) < 1e-12


def test_normalization_identity():
    # sum over |k| <= 20 of J_k(r)^2 is 1 up to a vanishing tail for r <= 2
    for r in (0.5, 1.0, 2.0):
        total = sum(bessel_j(k, r) ** 2 for k in range(-20, 21))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_magnitude_bound():
    # |J_k(r)| <= (r/2)^k / k! for k >= 0
    for r in np.linspace(0.1, 6.0, 14):
        vals = bessel_j_all(12, float(r))
        for k in range(13):
            assert abs(vals[k]) <= (r / 2.0) ** k / math.factorial(k) + 1e-15


def test_inv_j1_basics():
    z = find_zeros()
    assert inv_j1(0.0) == 0.0
    y = bessel_j(1, 1.0)
    assert inv_j1(y, z.j1) == pytest.approx(1.0, abs=1e-10)


def test_inv_j1_domain_errors():
    z = find_zeros()
    with pytest.raises(ValueError):
        inv_j1(bessel_j(1, z.j1) + 0.1, z.j1)
    with pytest.raises(ValueError):
        inv_j1(-0.05)
    with pytest.raises(ValueError):
        inv_j1(0.1, cap=z.j1 + 0.2)


def test_inv_j1_monotone_and_left_inverse():
    z = find_zeros()
    rs = np.linspace(0.0, z.j1, 80)
    ys = [bessel_j(1, float(r)) for r in rs]
    # J1 strictly increasing on [0, j1]
    assert all(b > a for a, b in zip(ys[:-1], ys[1:]))
    inv = [inv_j1(y) for y in ys]
    assert np.max(np.abs(np.asarray(inv) - rs)) < 1e-10
    assert all(b > a for a, b in zip(inv[:-1], inv[1:]))
