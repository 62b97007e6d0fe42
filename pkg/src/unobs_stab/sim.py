"""Time integration and closed-loop drivers.

Two loops are provided.  The finite strategy integrates the coupled
plant/observer ODE with classical fixed-step RK4 and a continuous feedback.
The spectral strategy is sampled: the control is held constant on each
interval, so the truncated error system is linear time-invariant there and is
propagated by a matrix exponential (exact up to roundoff), while the plant
state follows the closed-form rotation-with-constant-input solution.  An
independent RK4 path integrates the observer exactly as written, fed by the
transformed measurement, for cross-validation.

Everything is deterministic: fixed steps, no adaptivity, no hidden state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .finite import FinParams, Plant, delta_margin
from .linalg import expm
from .spectral import (
    OutputSpec,
    SpectralParams,
    embed,
    linearized_output,
    observer_matrix,
    output_value,
    output_vector,
    sample_hold_feedback,
    weak_norm,
)
from .bessel import bessel_j

DIVERGENCE_NORM = 1e6
EPS_STEP_TOL = 1e-8


class DivergenceError(RuntimeError):
    """Raised by the generic integrator when the state stops being finite."""

    def __init__(self, t: float, state):
        super().__init__(f"state became non-finite at t={t:.6g}")
        self.t = t
        self.state = np.asarray(state)


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings.

    method: "rk4_coupled" or "exact_linear" (spectral loop only);
    step: integration step; horizon: final time; record_every: stride, in
    steps, between stored samples (per-step dissipativity accounting is done
    online regardless).
    """

    method: str = "rk4_coupled"
    step: float = 1e-3
    horizon: float = 10.0
    record_every: int = 1

    def __post_init__(self):
        if self.method not in ("rk4_coupled", "exact_linear"):
            raise ValueError(f"IntegratorConfig: unknown method {self.method!r}")
        if self.step <= 0.0 or self.horizon <= 0.0:
            raise ValueError("IntegratorConfig: step and horizon must be positive")
        if self.record_every < 1:
            raise ValueError("IntegratorConfig: record_every must be >= 1")


@dataclass
class Trajectory:
    """Recorded closed-loop run.

    times are strictly increasing; x, zhat, u, eps_norm, c_eps_abs (and
    weak_eps for spectral runs) are sampled at those instants.  The
    dissipativity counters come from the online per-step check of the
    estimation-error norm.
    """

    times: np.ndarray
    x: np.ndarray
    zhat: np.ndarray
    u: np.ndarray
    eps_norm: np.ndarray
    c_eps_abs: np.ndarray
    weak_eps: np.ndarray | None = None
    dissipativity_violations: int = 0
    max_eps_increase: float = 0.0
    clamp_count: int = 0
    diverged: bool = False
    diverged_at: float | None = None
    meta: dict = field(default_factory=dict)


def rk4_integrate(rhs, s0, cfg: IntegratorConfig):
    """Classical fixed-step RK4 for ds/dt = rhs(t, s).

    Returns (times, states) with states[i] the state at times[i].  Aborts
    with DivergenceError if the state stops being finite.
    """
    s = np.asarray(s0, dtype=float).copy()
    steps = max(1, int(round(cfg.horizon / cfg.step)))
    h = cfg.horizon / steps  # land exactly on the horizon
    stride = cfg.record_every
    n_rec = steps // stride + 1
    times = np.empty(n_rec)
    states = np.empty((n_rec, s.shape[0]))
    times[0] = 0.0
    states[0] = s
    rec = 1
    for i in range(steps):
        t = i * h
        k1 = rhs(t, s)
        k2 = rhs(t + 0.5 * h, s + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, s + 0.5 * h * k2)
        k4 = rhs(t + h, s + h * k3)
        s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(s)):
            raise DivergenceError((i + 1) * h, s)
        if (i + 1) % stride == 0:
            times[rec] = (i + 1) * h
            states[rec] = s
            rec += 1
    return times[:rec], states[:rec]


def run_finite_batch(plant: Plant, params: FinParams, x0s, zhat0s,
                     cfg: IntegratorConfig) -> list[Trajectory]:
    """Integrate the embedded-observer loop for several initial conditions at
    once (vectorized over runs; identical numerics to run_finite_loop)."""
    if params.rho is not None:
        margin = delta_margin(params.K, params.rho, plant)
        if not params.delta < margin:
            raise ValueError(
                f"run_finite_batch: delta={params.delta} must stay below "
                f"delta_margin={margin} for rho={params.rho}")
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    zhat0s = np.atleast_2d(np.asarray(zhat0s, dtype=float))
    nb, n = x0s.shape
    if zhat0s.shape != (nb, n + 1):
        raise ValueError("run_finite_batch: zhat0s must have shape (runs, n+1)")

    a_t = plant.A.T.copy()
    b = plant.b
    k_gain = params.K
    delta, alpha = params.delta, params.alpha
    steps = max(1, int(round(cfg.horizon / cfg.step)))
    h = cfg.horizon / steps
    stride = cfg.record_every

    def rhs(xs, zb, zl):
        u = zb @ k_gain + delta * zl
        y = 0.5 * np.einsum("ij,ij->i", xs, xs)
        innov = zl - y
        xd = xs @ a_t + u[:, None] * b
        zbd = zb @ a_t + (u * (1.0 - innov))[:, None] * b
        zld = u * (zb @ b) - alpha * innov
        return xd, zbd, zld

    def eps_norms(xs, zb, zl):
        y = 0.5 * np.einsum("ij,ij->i", xs, xs)
        d = zb - xs
        return np.sqrt(np.einsum("ij,ij->i", d, d) + (zl - y) ** 2)

    xs = x0s.copy()
    zb = zhat0s[:, :n].copy()
    zl = zhat0s[:, n].copy()
    active = np.ones(nb)
    diverged_at = np.full(nb, np.nan)
    violations = np.zeros(nb, dtype=int)
    max_inc = np.zeros(nb)
    prev_eps = eps_norms(xs, zb, zl)

    n_rec = steps // stride + 1
    rec_t = np.empty(n_rec)
    rec_x = np.empty((n_rec, nb, n))
    rec_z = np.empty((n_rec, nb, n + 1))
    rec_u = np.empty((n_rec, nb))
    rec_e = np.empty((n_rec, nb))
    rec_c = np.empty((n_rec, nb))

    def record(idx, t):
        rec_t[idx] = t
        rec_x[idx] = xs
        rec_z[idx, :, :n] = zb
        rec_z[idx, :, n] = zl
        rec_u[idx] = zb @ k_gain + delta * zl
        y = 0.5 * np.einsum("ij,ij->i", xs, xs)
        rec_e[idx] = eps_norms(xs, zb, zl)
        rec_c[idx] = np.abs(zl - y)

    record(0, 0.0)
    rec = 1
    h6 = h / 6.0
    for i in range(steps):
        k1 = rhs(xs, zb, zl)
        k2 = rhs(xs + 0.5 * h * k1[0], zb + 0.5 * h * k1[1], zl + 0.5 * h * k1[2])
        k3 = rhs(xs + 0.5 * h * k2[0], zb + 0.5 * h * k2[1], zl + 0.5 * h * k2[2])
        k4 = rhs(xs + h * k3[0], zb + h * k3[1], zl + h * k3[2])
        am = active[:, None]
        xs = xs + am * (h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]))
        zb = zb + am * (h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]))
        zl = zl + active * (h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]))
        cur_eps = eps_norms(xs, zb, zl)
        inc = (cur_eps - prev_eps) * active
        viol = inc > EPS_STEP_TOL
        violations += viol
        max_inc = np.maximum(max_inc, inc)
        prev_eps = cur_eps
        big = (np.einsum("ij,ij->i", xs, xs) > DIVERGENCE_NORM ** 2) \
            | (np.einsum("ij,ij->i", zb, zb) + zl ** 2 > DIVERGENCE_NORM ** 2) \
            | ~np.isfinite(cur_eps)
        newly = big & (active > 0.0)
        if np.any(newly):
            diverged_at[newly] = (i + 1) * h
            active[newly] = 0.0
        if (i + 1) % stride == 0:
            record(rec, (i + 1) * h)
            rec += 1

    out = []
    for run in range(nb):
        out.append(Trajectory(
            times=rec_t[:rec].copy(),
            x=rec_x[:rec, run].copy(),
            zhat=rec_z[:rec, run].copy(),
            u=rec_u[:rec, run].copy(),
            eps_norm=rec_e[:rec, run].copy(),
            c_eps_abs=rec_c[:rec, run].copy(),
            weak_eps=None,
            dissipativity_violations=int(violations[run]),
            max_eps_increase=float(max_inc[run]),
            diverged=bool(active[run] == 0.0),
            diverged_at=None if np.isnan(diverged_at[run]) else float(diverged_at[run]),
            meta={"strategy": "finite", "step": h, "horizon": steps * h},
        ))
    return out


def run_finite_loop(plant: Plant, params: FinParams, x0, zhat0,
                    cfg: IntegratorConfig) -> Trajectory:
    """Single run of the embedded-observer loop with continuous feedback."""
    return run_finite_batch(plant, params, [np.asarray(x0, dtype=float)],
                            [np.asarray(zhat0, dtype=float)], cfg)[0]


def rotation_step(x, u: float, h: float) -> np.ndarray:
    """Exact step of xdot = A x + b u for the quarter-turn plant and constant
    input: x(h) = R(h) x + u (cos h - 1, sin h)."""
    ch, sh = math.cos(h), math.sin(h)
    return np.array([ch * x[0] - sh * x[1] + u * (ch - 1.0),
                     sh * x[0] + ch * x[1] + u * sh])


def _spectral_grid(params: SpectralParams, cfg: IntegratorConfig):
    n_sub = int(round(params.Delta / cfg.step))
    if n_sub < 1 or abs(n_sub * cfg.step - params.Delta) > 1e-9 * max(1.0, params.Delta):
        raise ValueError("run_spectral_loop: step must divide the sample period Delta")
    n_int = int(round(cfg.horizon / params.Delta))
    if n_int < 1:
        raise ValueError("run_spectral_loop: horizon shorter than one sample period")
    return n_sub, n_int


def run_spectral_loop(spec: OutputSpec, params: SpectralParams, x0, xhat0,
                      cfg: IntegratorConfig) -> Trajectory:
    """Sample-and-hold spectral observer loop started from zhat(0) = embed(xhat0).

    method "exact_linear": plant state by the closed-form rotation solution,
    embedded state analytically, estimation error by per-interval matrix
    exponentials of the (frozen-input) error system.  method "rk4_coupled":
    plant and observer integrated together by RK4, the observer fed by the
    transformed measurement.  The control is refreshed at every sample instant
    from the left limit of the observer state and held in between.
    """
    if abs(spec.mu - params.mu) > 1e-15:
        raise ValueError("run_spectral_loop: OutputSpec.mu and SpectralParams.mu differ")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    xhat0 = np.asarray(xhat0, dtype=float).reshape(-1)
    n_sub, n_int = _spectral_grid(params, cfg)
    n = params.N
    mu = params.mu
    zeta = output_vector(spec, n)
    clamp_level = bessel_j(1, params.j)
    h = cfg.step
    stride = cfg.record_every
    total_steps = n_int * n_sub

    n_rec = total_steps // stride + 1
    rec_t = np.empty(n_rec)
    rec_x = np.empty((n_rec, 2))
    rec_zh = np.empty((n_rec, 2 * n + 1), dtype=complex)
    rec_u = np.empty(n_rec)
    rec_e = np.empty(n_rec)
    rec_c = np.empty(n_rec)
    rec_w = np.empty(n_rec)

    x = x0.copy()
    if cfg.method == "exact_linear":
        z = embed(x, mu, n)
        eps = embed(xhat0, mu, n) - z
        zhat = z + eps
    else:
        zhat = embed(xhat0, mu, n)
        eps = zhat - embed(x, mu, n)

    clamp_count = 0
    violations = 0
    max_inc = 0.0
    diverged = False
    diverged_at = None
    prev_eps = float(np.linalg.norm(eps))

    def record(idx, t, u):
        rec_t[idx] = t
        rec_x[idx] = x
        rec_zh[idx] = zhat
        rec_u[idx] = u
        rec_e[idx] = np.linalg.norm(eps)
        rec_c[idx] = abs(np.vdot(zeta, eps))
        rec_w[idx] = weak_norm(eps)

    def refresh_control():
        # left limit of the observer state fixes the next hold value
        nonlocal u, clamp_count
        u = sample_hold_feedback(zhat, params)
        if abs(zhat[n + 1]) > clamp_level:
            clamp_count += 1

    u = 0.0
    refresh_control()
    record(0, 0.0, u)
    rec = 1
    step_idx = 0

    if cfg.method == "rk4_coupled":
        a_rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        b_rot = np.array([0.0, 1.0])
        alpha = params.alpha

        def rhs(xs, eta, u_now):
            y = output_value(spec, xs)
            fy = linearized_output(spec, y)
            xd = a_rot @ xs + b_rot * u_now
            etad = spectral.apply_generator(u_now, mu, eta) \
                - alpha * (np.vdot(zeta, eta) - fy) * zeta
            return xd, etad

    for _ in range(n_int):
        if cfg.method == "exact_linear":
            prop = expm(observer_matrix(u, mu, params.alpha, zeta), h)
        for sub in range(n_sub):
            if cfg.method == "exact_linear":
                x = rotation_step(x, u, h)
                eps = prop @ eps
                zhat = embed(x, mu, n) + eps
            else:
                k1 = rhs(x, zhat, u)
                k2 = rhs(x + 0.5 * h * k1[0], zhat + 0.5 * h * k1[1], u)
                k3 = rhs(x + 0.5 * h * k2[0], zhat + 0.5 * h * k2[1], u)
                k4 = rhs(x + h * k3[0], zhat + h * k3[1], u)
                x = x + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
                zhat = zhat + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
                eps = zhat - embed(x, mu, n)
            step_idx += 1
            cur = float(np.linalg.norm(eps))
            if cur > prev_eps + EPS_STEP_TOL:
                violations += 1
            max_inc = max(max_inc, cur - prev_eps)
            prev_eps = cur
            if np.dot(x, x) > DIVERGENCE_NORM ** 2 or not np.all(np.isfinite(zhat)):
                diverged, diverged_at = True, step_idx * h
            elif sub == n_sub - 1:
                refresh_control()  # before the boundary record: u is
                # right-continuous, each sample carries the value just applied
            if step_idx % stride == 0:
                record(rec, step_idx * h, u)
                rec += 1
            if diverged:
                break
        if diverged:
            break

    return Trajectory(
        times=rec_t[:rec].copy(),
        x=rec_x[:rec].copy(),
        zhat=rec_zh[:rec].copy(),
        u=rec_u[:rec].copy(),
        eps_norm=rec_e[:rec].copy(),
        c_eps_abs=rec_c[:rec].copy(),
        weak_eps=rec_w[:rec].copy(),
        dissipativity_violations=violations,
        max_eps_increase=max_inc,
        clamp_count=clamp_count,
        diverged=diverged,
        diverged_at=diverged_at,
        meta={"strategy": "spectral", "method": cfg.method, "step": h,
              "Delta": params.Delta, "horizon": n_int * params.Delta,
              "output_kind": spec.kind},
    )


def propagate_coefficients(u: float, mu: float, z0, T: float, steps: int):
    """Evolve a coefficient vector under the constant-input generator alone
    (no observer): z(t+h) = expm(G(u) h) z(t).  Returns (times, norms)."""
    z = np.asarray(z0, dtype=complex).copy()
    n = spectral.truncation_order(z)
    h = T / steps
    prop = expm(spectral.generator_matrix(u, mu, n), h)
    times = np.linspace(0.0, T, steps + 1)
    norms = np.empty(steps + 1)
    norms[0] = np.linalg.norm(z)
    for i in range(steps):
        z = prop @ z
        norms[i + 1] = np.linalg.norm(z)
    return times, norms


def convergence_metrics(traj: Trajectory) -> dict:
    """Summary statistics of a run: trailing-window peak of |x|, final error
    norms, dissipativity violation count, clamp count."""
    if traj.times.shape[0] == 0:
        raise ValueError("convergence_metrics: empty trajectory")
    t_end = traj.times[-1]
    t_start = traj.times[0]
    window = traj.times >= t_end - 0.1 * (t_end - t_start)
    xnorm = np.sqrt(np.einsum("ij,ij->i", traj.x, traj.x))
    return {
        "trailing_max_x": float(np.max(xnorm[window])),
        "final_eps_norm": float(traj.eps_norm[-1]),
        "initial_eps_norm": float(traj.eps_norm[0]),
        "final_c_eps_abs": float(traj.c_eps_abs[-1]),
        "final_weak_eps": float(traj.weak_eps[-1]) if traj.weak_eps is not None else float("nan"),
        "dissipativity_violations": int(traj.dissipativity_violations),
        "max_eps_increase": float(traj.max_eps_increase),
        "clamp_count": int(traj.clamp_count),
        "diverged": bool(traj.diverged),
    }
