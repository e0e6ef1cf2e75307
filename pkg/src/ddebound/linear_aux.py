"""Linear scalar comparison systems: Cauchy function, superposition, bounds.

A `LinearScalarDDE` is ``u' = P(t)u + sum_i g_i(t) u(t - h_i(t)) + F0*s(t)``
with nonnegative delayed coefficients ``g_i`` and forcing shape ``s``.  It is
what the nonlinear scalar comparison system linearizes to near the origin;
the linearization radius travels with the system so that responses leaving
it can be flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dde_core import (DelaySpec, HistoryFunction, ToleranceSettings, Trajectory,
                       integrate, sup_norm_on_interval)
from .majorant import LinearizedCoefficients
from .reduction import CoefficientPair
from .timefn import ConstantFn, TimeFunction, as_time_function

__all__ = [
    "LinearScalarDDE",
    "LinearResponse",
    "IssReport",
    "build_linear_auxiliary",
    "build_constant_linear_auxiliary",
    "integrate_linear",
    "cauchy_function",
    "particular_response",
    "superposition_check",
    "iss_bound_series",
]


@dataclass(frozen=True)
class LinearScalarDDE:
    """Linear scalar delay equation with nonnegative delayed coefficients."""

    rate: TimeFunction                       # P(t)
    delayed_coeffs: tuple[TimeFunction, ...]
    delays: DelaySpec
    forcing_shape: TimeFunction              # multiplies the amplitude below
    forcing_amplitude: float
    history: HistoryFunction
    t0: float = 0.0
    zeta_tilde: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "rate", as_time_function(self.rate))
        object.__setattr__(self, "forcing_shape", as_time_function(self.forcing_shape))
        object.__setattr__(self, "delayed_coeffs",
                           tuple(as_time_function(g) for g in self.delayed_coeffs))
        if len(self.delayed_coeffs) != self.delays.count:
            raise ValueError("one delayed coefficient per delay is required")
        if self.history.dim != 1:
            raise ValueError("linear scalar systems take one-dimensional histories")

    def with_history(self, history: HistoryFunction) -> "LinearScalarDDE":
        return replace(self, history=history)

    def with_amplitude(self, amplitude: float) -> "LinearScalarDDE":
        return replace(self, forcing_amplitude=amplitude)

    # -- integration protocol -------------------------------------------
    def delay_spec(self) -> DelaySpec:
        return self.delays

    def initial_state(self) -> np.ndarray:
        return self.history(self.t0)

    def history_eval(self, t: float) -> np.ndarray:
        return self.history(t)

    def coefficient_horizon(self) -> float:
        return math.inf

    def rhs(self, t, y, delayed):
        value = self.rate(t) * y[0]
        for g, z in zip(self.delayed_coeffs, delayed):
            value += g(t) * z[0]
        if self.forcing_amplitude != 0.0:
            value += self.forcing_amplitude * self.forcing_shape(t)
        return np.array([value])

    def validate_for_integration(self, horizon: float) -> None:
        if not self.history.covers(self.t0 - self.delays.h_bar, self.t0):
            raise ValueError(f"history must cover [{self.t0 - self.delays.h_bar}, {self.t0}]")
        for g in self.delayed_coeffs:
            for t in np.linspace(self.t0, horizon, 64):
                if g(float(t)) < -1e-12:
                    raise ValueError(
                        f"delayed coefficient is negative at t={float(t)!r}")


def build_linear_auxiliary(coeffs: CoefficientPair, lc: LinearizedCoefficients,
                           delays: DelaySpec, forcing_norm, forcing_amplitude: float,
                           history: HistoryFunction, t0: float = 0.0) -> LinearScalarDDE:
    """Linear comparison system from reduction coefficients and a linearized
    majorant: rate ``p + c*mu_1``, delayed coefficients ``c*mu_{i+1}``,
    forcing shape ``c(t)*|e(t)|``."""
    if lc.arg_count != delays.count + 1:
        raise ValueError("linearized coefficient count does not match the delays")
    p, c = coeffs.p, coeffs.c
    mu = lc.mu
    shape_fn = as_time_function(forcing_norm)

    if all(isinstance(f, ConstantFn) for f in (p, c, mu[0])):
        rate = ConstantFn(p.value + c.value * abs(mu[0].value))
    else:
        rate = lambda t: p(t) + c(t) * abs(mu[0](t))
    delayed = []
    for m in mu[1:]:
        if isinstance(c, ConstantFn) and isinstance(m, ConstantFn):
            delayed.append(ConstantFn(c.value * abs(m.value)))
        else:
            delayed.append(lambda t, g=m: c(t) * abs(g(t)))
    if isinstance(c, ConstantFn) and c.value == 1.0:
        shape = shape_fn
    else:
        shape = lambda t: c(t) * shape_fn(t)
    return LinearScalarDDE(rate, tuple(delayed), delays, shape, forcing_amplitude,
                           history, t0, zeta_tilde=lc.zeta_tilde)


def build_constant_linear_auxiliary(p_hat: float, c_hat: float,
                                    mu_hats: Sequence[float], delays: DelaySpec,
                                    forcing_amplitude: float,
                                    history: HistoryFunction,
                                    t0: float = 0.0,
                                    zeta_tilde: float | None = None,
                                    forcing_shape_sup: float = 1.0) -> LinearScalarDDE:
    """Constant-coefficient variant: rate ``p_hat + c_hat*mu_hat_1``, delayed
    coefficients ``c_hat*mu_hat_{i+1}``, and the forcing shape frozen at
    ``forcing_shape_sup`` (the supremum of ``c(t)|e(t)|``, 1 when c is 1)."""
    if len(mu_hats) != delays.count + 1:
        raise ValueError("expected one coefficient per delay plus the undelayed one")
    rate = ConstantFn(p_hat + c_hat * abs(mu_hats[0]))
    delayed = tuple(ConstantFn(c_hat * abs(m)) for m in mu_hats[1:])
    return LinearScalarDDE(rate, delayed, delays, ConstantFn(forcing_shape_sup),
                           forcing_amplitude, history, t0, zeta_tilde=zeta_tilde)


@dataclass(frozen=True)
class LinearResponse:
    """Trajectory of a linearized system plus linearization-domain status."""

    trajectory: Trajectory
    sup_value: float
    zeta_tilde: float | None

    @property
    def exceeded_linearization(self) -> bool:
        return self.zeta_tilde is not None and self.sup_value > self.zeta_tilde


def integrate_linear(sys: LinearScalarDDE, horizon: float,
                     tol: ToleranceSettings | None = None) -> LinearResponse:
    traj = integrate(sys, horizon, tol)
    sup = sup_norm_on_interval(traj, traj.t_start, traj.t_end)
    return LinearResponse(traj, sup, sys.zeta_tilde)


class _ZeroHistory(HistoryFunction):
    def __init__(self):
        super().__init__(lambda t: np.zeros(1), 1, label="zero")


class _CauchyProblem:
    """Homogeneous problem started at ``s`` with value 1 and zero pre-history.

    The jump at ``s`` is realized exactly: lookups strictly before ``s``
    return 0, lookups at or after ``s`` use the dense solution, so nothing
    interpolates across the discontinuity.
    """

    def __init__(self, sys: LinearScalarDDE, s: float):
        self.sys = sys
        self.t0 = s
        self.history = _ZeroHistory()

    def delay_spec(self) -> DelaySpec:
        return self.sys.delays

    def initial_state(self) -> np.ndarray:
        return np.array([1.0])

    def history_eval(self, t: float) -> np.ndarray:
        return np.zeros(1)

    def coefficient_horizon(self) -> float:
        return math.inf

    def rhs(self, t, y, delayed):
        value = self.sys.rate(t) * y[0]
        for g, z in zip(self.sys.delayed_coeffs, delayed):
            value += g(t) * z[0]
        return np.array([value])

    def validate_for_integration(self, horizon: float) -> None:
        pass


def cauchy_function(sys: LinearScalarDDE, s: float, horizon: float,
                    tol: ToleranceSettings | None = None) -> Trajectory:
    """Response on ``[s, horizon]`` to a unit value at ``s`` with zero
    pre-history; the forcing of ``sys`` is ignored."""
    if s < sys.t0:
        raise ValueError(f"s={s!r} precedes the system start time {sys.t0!r}")
    if horizon <= s:
        raise ValueError(f"horizon {horizon!r} must exceed s={s!r}")
    return integrate(_CauchyProblem(sys, s), horizon, tol)


def particular_response(sys: LinearScalarDDE, horizon: float,
                        tol: ToleranceSettings | None = None) -> Trajectory:
    """Forced response with zero history and unit forcing amplitude."""
    normalized = replace(sys, history=_ZeroHistory(), forcing_amplitude=1.0)
    return integrate(normalized, horizon, tol)


def superposition_check(sys: LinearScalarDDE, history: HistoryFunction,
                        forcing_amplitude: float, horizon: float,
                        tol: ToleranceSettings | None = None,
                        grid_points: int = 1001) -> float:
    """Max residual of ``u(phi, F0) = u_h(phi) + F0 * u_nh`` on a grid."""
    full = integrate(replace(sys, history=history,
                             forcing_amplitude=forcing_amplitude), horizon, tol)
    homogeneous = integrate(replace(sys, history=history, forcing_amplitude=0.0),
                            horizon, tol)
    particular = particular_response(sys, horizon, tol)
    grid = np.linspace(sys.t0, horizon, grid_points)
    residual = 0.0
    for t in grid:
        t = float(t)
        combined = homogeneous.eval(t)[0] + forcing_amplitude * particular.eval(t)[0]
        residual = max(residual, abs(full.eval(t)[0] - combined))
    return residual


@dataclass(frozen=True)
class IssReport:
    """Pointwise check of ``|x(t)| <= u_h(t) + F0 * u_nh(t)``."""

    grid: np.ndarray
    vector_norms: np.ndarray
    bound_values: np.ndarray
    holds: bool
    max_violation: float
    first_violation_time: float | None


def iss_bound_series(vector_traj: Trajectory, u_h: Trajectory, u_nh: Trajectory,
                     forcing_amplitude: float, grid: np.ndarray,
                     tol: float = 1e-6) -> IssReport:
    """Evaluate the input-to-state style bound on ``grid``.

    Histories must be matched (the scalar history of ``u_h`` equal to the
    norm of the vector history); violations of the bound itself are reported,
    not raised, since they are the expected failure mode outside the
    linearization's validity.
    """
    grid = np.asarray(grid, dtype=float)
    for traj in (u_h, u_nh):
        if grid[0] < traj.t_start - 1e-9 or grid[-1] > traj.t_end + 1e-9:
            raise ValueError("time grid leaves a trajectory domain")
    if grid[0] < vector_traj.t_start - 1e-9 or grid[-1] > vector_traj.t_end + 1e-9:
        raise ValueError("time grid leaves the vector trajectory domain")
    if vector_traj.history is not None and u_h.history is not None:
        span = min(vector_traj.history_span, u_h.history_span)
        for t in np.linspace(vector_traj.t_start - span, vector_traj.t_start, 33):
            a = float(np.linalg.norm(vector_traj.history(float(t))))
            b = float(u_h.history(float(t))[0])
            if abs(a - b) > 1e-9 * max(1.0, abs(a)):
                raise ValueError(
                    f"histories are not matched at t={float(t)!r}: |phi|={a!r} vs {b!r}")
    norms = vector_traj.norm_grid(grid)
    bounds = np.array([u_h.eval(float(t))[0] + forcing_amplitude * u_nh.eval(float(t))[0]
                       for t in grid])
    gaps = norms - bounds
    max_violation = float(np.max(gaps))
    holds = max_violation <= tol
    first = None
    if not holds:
        first = float(grid[int(np.argmax(gaps > tol))])
    return IssReport(grid, norms, bounds, holds, max_violation, first)
