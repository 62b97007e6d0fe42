"""Spectral strategy: embed the planar plant into a unitary flow on the circle.

A state x = (r cos t, r sin t) of the rotation plant is represented by the
function s -> exp(i mu (x1 cos s + x2 sin s)) on the circle, truncated to the
Fourier modes |k| <= N.  In that basis the dynamics become a skew-Hermitian
tridiagonal system, the nonlinear output becomes a linear functional, and a
constant-gain Luenberger observer has a dissipative error system.

Conventions used throughout:

* A "coefficient vector" is a complex ndarray of odd length 2N+1 holding the
  inner products with the Fourier modes e_k(s) = exp(i k s), ordered
  k = -N..N, so index i corresponds to order k = i - N.
* The inner product is (1/2pi) * integral of xi * conj(zeta); the modes are
  orthonormal, hence ||z||^2 = sum |z_k|^2.
* The embedded coefficient of order k is i^k J_k(mu r) exp(-i k theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bessel import bessel_j, bessel_j_all, bessel_j_prime, find_zeros, inv_j1

NORM_SQ = "norm_sq"
J0_RADIAL = "j0_radial"
J2_COS2THETA = "j2_cos2theta"
NORM = "norm"
BESSEL_SERIES = "bessel_series"

_KINDS = (NORM_SQ, J0_RADIAL, J2_COS2THETA, NORM, BESSEL_SERIES)


def truncation_order(z) -> int:
    """N for a coefficient vector of length 2N+1."""
    m = len(z)
    if m % 2 == 0:
        raise ValueError("coefficient vectors have odd length 2N+1")
    return (m - 1) // 2


def mode_orders(n: int) -> np.ndarray:
    """The orders k = -N..N as an integer array."""
    return np.arange(-n, n + 1)


def embedded_target(n: int) -> np.ndarray:
    """Embedding of the origin: the constant function, i.e. the k = 0 mode."""
    z = np.zeros(2 * n + 1, dtype=complex)
    z[n] = 1.0
    return z


def embed(x, mu: float, n: int) -> np.ndarray:
    """Coefficient vector of the embedded state, z_k = i^k J_k(mu r) e^{-ik theta}.

    Exactly unit norm before truncation; the truncated norm falls short of 1
    by the (rapidly vanishing) Bessel tail.
    """
    if n < 1:
        raise ValueError("embed: truncation order must be >= 1")
    x = np.asarray(x, dtype=float).reshape(-1)
    r = float(np.hypot(x[0], x[1]))
    theta = math.atan2(x[1], x[0]) if r > 0.0 else 0.0
    j = bessel_j_all(n, mu * r)
    k = np.arange(n + 1)
    zpos = (1j) ** k * j * np.exp(-1j * k * theta)
    z = np.empty(2 * n + 1, dtype=complex)
    z[n:] = zpos
    # z_{-k} = i^k J_k(mu r) e^{+ik theta} = (-1)^k conj(z_k)
    z[:n] = ((-1.0) ** k[1:] * np.conj(zpos[1:]))[::-1]
    return z


def apply_generator(u: float, mu: float, z) -> np.ndarray:
    """Apply the transport-plus-control generator in coefficient space:
    (G(u) z)_k = -i k z_k + (u mu / 2)(z_{k-1} - z_{k+1}),
    with out-of-range neighbors treated as zero."""
    z = np.asarray(z, dtype=complex)
    n = truncation_order(z)
    k = mode_orders(n)
    out = -1j * k * z
    c = 0.5 * u * mu
    if c != 0.0:
        out[1:] += c * z[:-1]
        out[:-1] -= c * z[1:]
    return out


def generator_matrix(u: float, mu: float, n: int) -> np.ndarray:
    """Dense matrix of apply_generator: skew-Hermitian and tridiagonal."""
    k = mode_orders(n)
    g = np.diag(-1j * k.astype(complex))
    c = 0.5 * u * mu
    idx = np.arange(2 * n)
    g[idx + 1, idx] = c
    g[idx, idx + 1] = -c
    return g


def observer_matrix(u: float, mu: float, alpha: float, zeta) -> np.ndarray:
    """Error-system matrix G(u) - alpha * zeta zeta^*.

    The output functional is z -> <z, zeta>, so the rank-one correction is its
    adjoint composed with itself; the Hermitian part of the result is exactly
    -alpha * zeta zeta^*, which makes the error norm non-increasing.
    """
    zeta = np.asarray(zeta, dtype=complex)
    n = truncation_order(zeta)
    return generator_matrix(u, mu, n) - alpha * np.outer(zeta, zeta.conj())


@dataclass(frozen=True)
class OutputSpec:
    """Which nonlinear output the plant measures.

    kind is one of norm_sq, j0_radial, j2_cos2theta, norm, bessel_series;
    mu is the representation frequency; coeffs maps order k to the series
    coefficient c_k (bessel_series only).
    """

    kind: str
    mu: float
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"OutputSpec: unknown kind {self.kind!r}")
        if self.mu <= 0.0:
            raise ValueError("OutputSpec: mu must be positive")
        if self.kind == BESSEL_SERIES:
            if not self.coeffs or not any(abs(c) > 0 for c in self.coeffs.values()):
                raise ValueError("OutputSpec: bessel_series needs a nonzero coefficient")


def output_value(spec: OutputSpec, x):
    """The raw measurement y = h(x)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    r = float(np.hypot(x[0], x[1]))
    if spec.kind == NORM_SQ:
        return 0.5 * r * r
    if spec.kind == NORM:
        return r
    if spec.kind == J0_RADIAL:
        return bessel_j(0, spec.mu * r) - 1.0
    theta = math.atan2(x[1], x[0]) if r > 0.0 else 0.0
    if spec.kind == J2_COS2THETA:
        return bessel_j(2, spec.mu * r) * math.cos(2.0 * theta)
    total = 0.0 + 0.0j
    for k, c in spec.coeffs.items():
        total += c * bessel_j(k, spec.mu * r) * np.exp(-1j * k * theta)
    return total


def linearized_output(spec: OutputSpec, y) -> complex:
    """Transform the measurement into the value of the linear functional,
    i.e. the map sending h(x) to <embed(x), output_vector>."""
    if spec.kind == NORM_SQ:
        if y < 0.0:
            raise ValueError("linearized_output: norm_sq output cannot be negative")
        return complex(bessel_j(0, spec.mu * math.sqrt(2.0 * y)))
    if spec.kind == NORM:
        if y < 0.0:
            raise ValueError("linearized_output: norm output cannot be negative")
        return complex(bessel_j(0, spec.mu * y))
    if spec.kind == J0_RADIAL:
        return complex(y + 1.0)
    return complex(y)


def output_vector(spec: OutputSpec, n: int) -> np.ndarray:
    """Coefficient vector zeta with <embed(x), zeta> = linearized_output(h(x)).

    The radial outputs all reduce to the k = 0 mode; the cos(2 theta) output
    lives on k = +-2 with weight -1/2; a general finite Bessel series with
    coefficients c_k gives zeta_k = i^k conj(c_k).
    """
    if spec.kind in (NORM_SQ, NORM, J0_RADIAL):
        return embedded_target(n)
    zeta = np.zeros(2 * n + 1, dtype=complex)
    if spec.kind == J2_COS2THETA:
        if n < 2:
            raise ValueError("output_vector: j2_cos2theta needs N >= 2")
        zeta[n + 2] = -0.5
        zeta[n - 2] = -0.5
        return zeta
    kmax = max(abs(k) for k in spec.coeffs)
    if n < kmax:
        raise ValueError(f"output_vector: N={n} < largest order {kmax}")
    for k, c in spec.coeffs.items():
        zeta[n + k] = (1j) ** k * np.conj(c)
    return zeta


def weak_norm(z) -> float:
    """sqrt(sum |z_k|^2 / (k^2 + 1)): metrizes weak convergence on bounded sets."""
    z = np.asarray(z, dtype=complex)
    k = mode_orders(truncation_order(z))
    return float(np.sqrt(np.sum(np.abs(z) ** 2 / (k * k + 1.0))))


def weak_norm_bound() -> float:
    """The constant nu with weak_norm <= nu * ||.||: sqrt(sum_k 1/(k^2+1))
    over all integers, i.e. sqrt(pi * coth(pi))."""
    return math.sqrt(math.pi / math.tanh(math.pi))


@lru_cache(maxsize=8)
def _blend_coefficients(j: float):
    """Cubic-Hermite data for the radius map on [J1(j), J1(j1)].

    Endpoint values (j, j1); left slope matches the inverse of J1, right slope
    zero so the map levels off at the cap.  Fritsch-Carlson holds for every
    j in (0, j1), so the blend is monotone.
    """
    zeros = find_zeros()
    y0 = bessel_j(1, j)
    y1 = bessel_j(1, zeros.j1)
    s0 = 1.0 / bessel_j_prime(1, j)
    return y0, y1, j, zeros.j1, s0


def _radius_map(a: float, mu: float, j: float) -> float:
    """Radius assigned to a coefficient magnitude a = |<xi, e_1>|."""
    zeros = find_zeros()
    y0, y1, g0, g1, s0 = _blend_coefficients(j)
    if a <= y0:
        return inv_j1(a, j) / mu
    if a >= y1:
        return zeros.j1 / mu
    w = y1 - y0
    t = (a - y0) / w
    h00 = (1.0 + 2.0 * t) * (1.0 - t) ** 2
    h10 = t * (1.0 - t) ** 2
    h01 = t * t * (3.0 - 2.0 * t)
    h11 = t * t * (t - 1.0)
    return (h00 * g0 + h10 * w * s0 + h01 * g1) / mu


def state_from_coef(c: complex, mu: float, j: float) -> np.ndarray:
    """Invert a single e_1 coefficient back to a plane point.

    For c = <embed(x), e_1> = i J_1(mu r) e^{-i theta} with mu r <= j this
    recovers x exactly; larger magnitudes are radially capped at j1/mu through
    a C^1, globally Lipschitz blend.
    """
    zeros = find_zeros()
    if not 0.0 < j < zeros.j1:
        raise ValueError(f"state_from_coef: need 0 < j < j1, got j={j}")
    c = complex(c)
    a = abs(c)
    if a == 0.0:
        return np.zeros(2)
    w = 1j * np.conj(c) / a
    p = w * _radius_map(a, mu, j)
    return np.array([p.real, p.imag])


def left_inverse(z, mu: float, j: float) -> np.ndarray:
    """State estimate from a coefficient vector: invert its e_1 coefficient."""
    z = np.asarray(z, dtype=complex)
    n = truncation_order(z)
    if n < 1:
        raise ValueError("left_inverse: truncation order must be >= 1")
    return state_from_coef(z[n + 1], mu, j)


def inverse_lipschitz(mu: float, j: float, num: int = 4000) -> float:
    """Sampled Lipschitz constant of the whole inverse map (a diagnostic;
    the radial blend makes the true constant finite but it is not derived
    in closed form)."""
    zeros = find_zeros()
    ymax = bessel_j(1, zeros.j1)
    ys = np.linspace(1e-9, ymax * 1.2, num)
    g = np.array([_radius_map(float(y), 1.0, j) for y in ys])
    radial = np.max(np.abs(np.diff(g)) / np.diff(ys))
    tangential = np.max(g / ys)
    return float(max(radial, tangential) / mu)


@dataclass(frozen=True)
class SpectralParams:
    """Tuning constants for the spectral observer loop.

    K: stabilizing gain row (length 2); delta: weak-norm feedback
    perturbation; alpha: observer gain; Delta: sample-and-hold period
    (must lie in (0, pi)); mu: representation frequency; j: inversion radius
    parameter in (0, j1); N: Fourier truncation order.
    """

    K: np.ndarray
    delta: float
    alpha: float
    Delta: float
    mu: float
    j: float
    N: int

    def __post_init__(self):
        object.__setattr__(self, "K", np.asarray(self.K, dtype=float).reshape(-1))
        if self.K.shape[0] != 2:
            raise ValueError("SpectralParams: K must have length 2")
        if self.delta < 0.0:
            raise ValueError("SpectralParams: delta cannot be negative")
        if self.alpha <= 0.0 or self.mu <= 0.0:
            raise ValueError("SpectralParams: alpha and mu must be positive")
        if not 0.0 < self.Delta < math.pi:
            raise ValueError("SpectralParams: Delta must lie in (0, pi)")
        if not 0.0 < self.j < find_zeros().j1:
            raise ValueError("SpectralParams: j must lie in (0, j1)")
        if self.N < 1:
            raise ValueError("SpectralParams: N must be >= 1")


def default_j() -> float:
    """Default inversion radius parameter: 0.9 * j1."""
    return 0.9 * find_zeros().j1


def sample_hold_feedback(zhat, params: SpectralParams) -> float:
    """Control applied over one hold interval:
    K * left_inverse(zhat) + delta * weak_norm(zhat - embedded_target)^2."""
    zhat = np.asarray(zhat, dtype=complex)
    n = truncation_order(zhat)
    xhat = left_inverse(zhat, params.mu, params.j)
    dev = zhat - embedded_target(n)
    return float(params.K @ xhat + params.delta * weak_norm(dev) ** 2)


def truncation_tail_bound(s: float, n: int) -> float:
    """Upper bound 2 (s/2)^{2N+2} / ((N+1)!)^2 on sum_{|k|>N} J_k(s)^2."""
    if s <= 0.0:
        return 0.0
    return 2.0 * math.exp((2 * n + 2) * math.log(0.5 * s) - 2.0 * math.lgamma(n + 2))
