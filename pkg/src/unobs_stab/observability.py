"""Numerical observability checks for both strategies.

Contents: finite-horizon observability Gramians for the truncated spectral
system under constant inputs, the determinant identity for the finite
strategy's certificate matrix, the singular-input obstruction sums, the
control-magnitude bound, and the parameter-budget inequalities used to pick
radii/perturbation/sample-period triples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j, bessel_j_prime, find_zeros
from .finite import observability_certificate
from .linalg import expm, kalman_matrix
from .spectral import generator_matrix, truncation_order, weak_norm_bound


@dataclass(frozen=True)
class GramianReport:
    """Extreme eigenvalues of a finite-horizon observability Gramian."""

    u: float
    T: float
    lambda_min: float
    lambda_max: float
    N: int


def observability_gramian(u: float, T: float, zeta, mu: float, N: int,
                          steps: int = 400) -> GramianReport:
    """Trapezoidal Gramian W = int_0^T U(t)* zeta zeta* U(t) dt for the
    truncated spectral system under the constant input u.

    Each quadrature sample is positive semidefinite, so W is PSD up to
    roundoff.  lambda_min > 0 certifies observability of the truncation;
    lambda_min ~ 0 flags a singular input (u = 0 decouples the measured
    mode from everything else).
    """
    if T <= 0.0:
        raise ValueError("observability_gramian: T must be positive")
    if steps < 100:
        raise ValueError("observability_gramian: need steps >= 100")
    zeta = np.asarray(zeta, dtype=complex)
    if truncation_order(zeta) != N:
        raise ValueError("observability_gramian: zeta length does not match N")
    dt = T / steps
    u_step = expm(generator_matrix(u, mu, N), dt)
    u_step_h = u_step.conj().T
    v = zeta.astype(complex)
    w = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
    for i in range(steps + 1):
        wt = dt if 0 < i < steps else 0.5 * dt
        w += wt * np.outer(v, v.conj())
        if i < steps:
            v = u_step_h @ v
    w = 0.5 * (w + w.conj().T)
    eig = np.linalg.eigvalsh(w)
    return GramianReport(u=u, T=T, lambda_min=float(eig[0]),
                         lambda_max=float(eig[-1]), N=N)


def shifted_bessel_sum(ell: int, r: float, coeffs: dict) -> complex:
    """F_ell(r) = sum_k d_k J_{k+ell}(r) for a finite coefficient map.

    Zeros of these sums are the singular input magnitudes of the spectral
    system; they stay away from (0, j0) for single-mode functionals.
    """
    total = 0.0 + 0.0j
    for k, d in coeffs.items():
        total += d * bessel_j(k + ell, r)
    return total


def empirical_obstruction_radius(coeffs: dict, ell_max: int = 12,
                                 r_max: float | None = None,
                                 num: int = 600, tol: float = 1e-9) -> float:
    """Smallest r > 0 on a grid where some F_ell(r) nearly cancels, i.e.
    |F_ell| < tol * sum_k |d_k J_{k+ell}(r)|.

    Relative normalization matters: high orders underflow any absolute
    threshold at small r without being zeros.  A single-term functional never
    cancels, so the scan returns r_max (defaulting to the first zero of J_0,
    where the single-mode sums genuinely first vanish).  Grid-based, hence
    conservative.
    """
    if r_max is None:
        r_max = find_zeros().j0
    rs = np.linspace(r_max / num, r_max, num)
    for r in rs:
        for ell in range(-ell_max, ell_max + 1):
            scale = sum(abs(d) * abs(bessel_j(k + ell, float(r)))
                        for k, d in coeffs.items())
            if abs(shifted_bessel_sum(ell, float(r), coeffs)) < tol * scale:
                return float(r)
    return float(r_max)


@dataclass(frozen=True)
class DeterminantCheckReport:
    trials: int
    max_rel_err: float
    singular_when_unperturbed: bool


def determinant_identity_check(trials: int, rng_seed: int) -> DeterminantCheckReport:
    """Randomized check of det(certificate) = -delta^2 alpha Delta P(-alpha).

    Draws skew-symmetric invertible A (n in {2, 4}), an observable gain K and
    positive delta, alpha; compares the LU determinant of the certificate
    matrix with the closed form (Delta = observability determinant of
    (KA, A), P = characteristic polynomial of A).  The sign is fixed by the
    row-permutation parity in the cofactor reduction; only |det| > 0 matters
    for invertibility.  Also verifies that delta = 0 makes the certificate
    rank deficient.
    """
    if trials < 1:
        raise ValueError("determinant_identity_check: trials must be >= 1")
    rng = np.random.default_rng(rng_seed)
    max_rel = 0.0
    singular_ok = True
    done = 0
    while done < trials:
        n = int(rng.choice([2, 4]))
        s = rng.normal(size=(n, n))
        a = 0.5 * (s - s.T)
        if abs(np.linalg.det(a)) < 1e-3:
            continue
        k = rng.normal(size=n)
        _, rank = kalman_matrix(k, a, "obs")
        if rank < n:
            continue
        delta = float(rng.uniform(0.05, 1.0))
        alpha = float(rng.uniform(0.1, 3.0))
        q = observability_certificate(k, a, delta, alpha)
        det_direct = np.linalg.det(q)
        obs_tilde, _ = kalman_matrix(k @ a, a, "obs")
        det_obs = np.linalg.det(obs_tilde)
        # P(-alpha) = det(-alpha I - A) for the monic characteristic polynomial
        p_minus_alpha = np.linalg.det(-alpha * np.eye(n) - a)
        det_formula = -delta ** 2 * alpha * det_obs * p_minus_alpha
        rel = abs(det_direct - det_formula) / max(abs(det_formula), 1e-300)
        max_rel = max(max_rel, rel)
        q0 = observability_certificate(k, a, 0.0, alpha)
        if np.linalg.matrix_rank(q0, tol=1e-10) >= n + 2:
            singular_ok = False
        done += 1
    return DeterminantCheckReport(trials=trials, max_rel_err=max_rel,
                                  singular_when_unperturbed=singular_ok)


def max_control_bound(kappa: float, j: float, mu: float,
                      delta: float) -> tuple[float, bool]:
    """u_max = kappa j / mu + 16 nu^2 delta, and whether mu u_max < j0
    (the condition under which every nonzero constant input of magnitude at
    most u_max keeps the spectral system observable)."""
    if kappa < 0.0 or j <= 0.0 or mu <= 0.0 or delta < 0.0:
        raise ValueError("max_control_bound: inputs must be positive")
    nu = weak_norm_bound()
    u_max = kappa * j / mu + 16.0 * nu ** 2 * delta
    return u_max, bool(mu * u_max < find_zeros().j0)


@dataclass(frozen=True)
class BoundParams:
    """Radii and constants entering the parameter-budget inequalities.

    M and ell_pi have no closed form (M is the input-to-state gain of the
    stabilized plant, ell_pi a Lipschitz constant of the inverse map); they
    are supplied as diagnostics, with ell_pi taken over the working disc the
    bound certifies.
    """

    R0: float
    R1: float
    R2: float
    mu: float
    delta: float
    Delta: float
    kappa: float
    nu: float
    M: float
    ell_pi: float
    ell_tau: float


def check_bound_inequalities(p: BoundParams) -> tuple[float, float]:
    """Left-minus-right residuals of the two parameter-budget inequalities;
    both negative means the budget closes.

    (1) R0 + M (2 kappa ell_pi sqrt(2(1-J0(mu R0))) + 16 nu^2 delta
        + kappa Delta (R1 + 3 kappa ell_pi + 16 nu^2 delta)) < R1
    (2) 2 sqrt(2(1-J0(mu R0))) + J1(mu R1) < J1(mu R2)
    """
    if not (0.0 < p.R0 <= p.R1 <= p.R2):
        raise ValueError("check_bound_inequalities: radii must satisfy 0 < R0 <= R1 <= R2")
    eps0 = math.sqrt(max(0.0, 2.0 * (1.0 - bessel_j(0, p.mu * p.R0))))
    pert = 16.0 * p.nu ** 2 * p.delta
    lhs1 = p.R0 + p.M * (2.0 * p.kappa * p.ell_pi * eps0 + pert
                         + p.kappa * p.Delta * (p.R1 + 3.0 * p.kappa * p.ell_pi + pert))
    res1 = lhs1 - p.R1
    res2 = 2.0 * eps0 + bessel_j(1, p.mu * p.R1) - bessel_j(1, p.mu * p.R2)
    return res1, res2


def working_disc_inverse_lipschitz(mu: float, r2: float) -> float:
    """Lipschitz constant of the inverse map over the disc the bounds certify
    (coefficient magnitudes up to J1(mu R2)); closed form from monotonicity:
    max(1/J1'(mu R2), mu R2 / J1(mu R2)) / mu."""
    s = mu * r2
    radial = 1.0 / bessel_j_prime(1, s)
    tangential = s / bessel_j(1, s)
    return max(radial, tangential) / mu


def choose_radii(r0: float, mu: float | None = None, kappa: float = 0.2,
                 big_m: float = 1.0, j: float | None = None,
                 delta_init: float = 0.1, delta_cap_init: float = 0.5,
                 max_halvings: int = 80) -> BoundParams:
    """Pick (mu, delta, Delta) so the budget inequalities close for the radii
    R1 = 2 R0, R2 = (2 sqrt(2) + 3) R0.

    If mu is not given it is halved from j/(2 R2) until inequality (2) holds;
    delta and Delta are then halved (whichever currently contributes more)
    until inequality (1) holds.  Raises if the search exhausts its budget.

    Note: the leading term of inequality (1) tends to 2 sqrt(2) kappa M
    (mu ell_pi) R0 as mu, delta, Delta -> 0, so the search can only succeed
    when kappa * M is small (about <= 0.2 for the defaults); M itself has no
    closed form and is a configured diagnostic.
    """
    if r0 <= 0.0:
        raise ValueError("choose_radii: R0 must be positive")
    zeros = find_zeros()
    if j is None:
        j = 0.9 * zeros.j1
    r1 = 2.0 * r0
    r2 = (2.0 * math.sqrt(2.0) + 3.0) * r0
    nu = weak_norm_bound()

    def params(mu_, d_, dd_):
        return BoundParams(R0=r0, R1=r1, R2=r2, mu=mu_, delta=d_, Delta=dd_,
                           kappa=kappa, nu=nu, M=big_m,
                           ell_pi=working_disc_inverse_lipschitz(mu_, r2),
                           ell_tau=mu_ / math.sqrt(2.0))

    if mu is None:
        mu = 0.5 * j / r2
        for _ in range(max_halvings):
            if check_bound_inequalities(params(mu, 0.0, 0.0))[1] < 0.0:
                break
            mu *= 0.5
        else:
            raise RuntimeError("choose_radii: could not satisfy inequality (2)")
    else:
        if mu * r2 >= j:
            raise ValueError("choose_radii: mu R2 must stay below j")
        if check_bound_inequalities(params(mu, 0.0, 0.0))[1] >= 0.0:
            raise RuntimeError("choose_radii: inequality (2) fails at the given mu")

    delta, cap = delta_init, delta_cap_init
    for _ in range(max_halvings):
        p = params(mu, delta, cap)
        res1, res2 = check_bound_inequalities(p)
        if res1 < 0.0 and res2 < 0.0:
            return p
        pert = 16.0 * nu ** 2 * delta
        delta_part = big_m * pert * (1.0 + kappa * cap)
        cap_part = big_m * kappa * cap * (r1 + 3.0 * kappa * p.ell_pi)
        if delta_part >= cap_part:
            delta *= 0.5
        else:
            cap *= 0.5
    raise RuntimeError("choose_radii: search failed to close inequality (1)")
