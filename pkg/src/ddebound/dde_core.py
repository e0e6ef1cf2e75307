"""Method-of-steps integration of delay differential systems.

The integrator is an explicit embedded Runge-Kutta 2(3) pair
(Bogacki-Shampine coefficients) with cubic Hermite dense output.  Step sizes
are capped by the minimal delay and additionally broken at ``t0 + k*h_under``
so that delayed lookups only ever touch history or already-accepted segments;
no explicit discontinuity tracking is performed beyond that.

Systems are duck-typed: anything exposing ``t0``, ``initial_state()``,
``history_eval(t)``, ``delay_spec()``, ``rhs(t, y, delayed)`` and
``validate_for_integration(horizon)`` can be integrated (see
`GenericDelaySystem` for a minimal adapter).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .majorant import PolynomialMajorant
from .timefn import TimeFunction, as_time_function
from .vectorfield import NonlinearTerm

__all__ = [
    "ToleranceSettings",
    "IntegrationError",
    "DelaySpec",
    "HistoryFunction",
    "VectorDelaySystem",
    "ScalarDelaySystem",
    "Perturbation",
    "GenericDelaySystem",
    "Trajectory",
    "BlowupReport",
    "integrate",
    "eval_trajectory",
    "sup_norm_on_interval",
    "detect_blowup",
]

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9
# PI controller exponents for a 3rd-order error estimate
_PI_ALPHA = 0.7 / 3.0
_PI_BETA = 0.4 / 3.0
_EPS = float(np.finfo(float).eps)
_MAX_STEPS = 10_000_000


def _step_floor(t: float) -> float:
    # near the float-representability limit of t; blow-ups must be able to
    # take extremely small steps before the cap is reached
    return 16.0 * _EPS * max(abs(t), 1e-3)


class IntegrationError(RuntimeError):
    """Hard integration failure (step underflow, malformed delay, ...)."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class ToleranceSettings:
    """Solver tolerances and guards."""

    rtol: float = 1e-6
    atol: float = 1e-9
    cap: float = 1e6
    max_step: float | None = None
    first_step: float | None = None

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if self.cap <= 0:
            raise ValueError("blow-up cap must be positive")


@dataclass(frozen=True)
class DelaySpec:
    """Delay functions with certified positive lower / finite upper bounds.

    ``h_bar`` / ``h_under`` are the max-sup / min-inf of the delays; for
    time-varying delays they are estimated by sampling (`from_functions`,
    `validate_on`), for constant delays they are exact.
    """

    delays: tuple[TimeFunction, ...]
    h_bar: float
    h_under: float

    @property
    def count(self) -> int:
        return len(self.delays)

    @classmethod
    def none(cls) -> "DelaySpec":
        return cls((), 0.0, math.inf)

    @classmethod
    def constant(cls, values: Sequence[float]) -> "DelaySpec":
        vals = [float(v) for v in values]
        if not vals:
            return cls.none()
        if min(vals) <= 0:
            raise ValueError("delays must be positive")
        return cls(tuple(as_time_function(v) for v in vals), max(vals), min(vals))

    @classmethod
    def from_functions(cls, fns: Sequence, t0: float, horizon: float,
                       samples: int = 512) -> "DelaySpec":
        delay_fns = tuple(as_time_function(f) for f in fns)
        if not delay_fns:
            return cls.none()
        grid = np.linspace(t0, horizon, samples)
        h_bar = -math.inf
        h_under = math.inf
        for fn in delay_fns:
            values = [fn(float(t)) for t in grid]
            h_bar = max(h_bar, max(values))
            h_under = min(h_under, min(values))
        if h_under <= 0:
            raise ValueError(f"minimal sampled delay {h_under!r} is not positive")
        if not math.isfinite(h_bar):
            raise ValueError("delays must be bounded")
        return cls(delay_fns, h_bar, h_under)

    def validate_on(self, t0: float, horizon: float, samples: int = 512) -> None:
        """Re-check ``0 < h_under <= h_i(t) <= h_bar`` by sampling."""
        if not self.delays:
            return
        if self.h_under <= 0 or not math.isfinite(self.h_bar):
            raise ValueError("delay bounds must satisfy 0 < h_under <= h_bar < inf")
        grid = np.linspace(t0, horizon, samples)
        for k, fn in enumerate(self.delays):
            for t in grid:
                h = fn(float(t))
                if not (self.h_under - 1e-12 <= h <= self.h_bar + 1e-12):
                    raise ValueError(
                        f"delay {k + 1} value {h!r} at t={float(t)!r} leaves "
                        f"[{self.h_under}, {self.h_bar}]")

    def merged_with(self, other: "DelaySpec") -> "DelaySpec":
        if not other.delays:
            return self
        if not self.delays:
            return other
        return DelaySpec(self.delays + other.delays,
                         max(self.h_bar, other.h_bar),
                         min(self.h_under, other.h_under))


class HistoryFunction:
    """Prescribed solution values on the interval before the start time.

    Three forms are supported: a constant vector, one callable (or
    expression) per coordinate, and a sampled grid with linear
    interpolation.  Evaluation outside the declared domain is an error.
    """

    def __init__(self, fn: Callable[[float], np.ndarray], dim: int,
                 t_min: float = -math.inf, t_max: float = math.inf,
                 label: str = "callable"):
        self._fn = fn
        self.dim = dim
        self.t_min = t_min
        self.t_max = t_max
        self.label = label

    @classmethod
    def constant(cls, values) -> "HistoryFunction":
        vec = np.atleast_1d(np.asarray(values, dtype=float))
        return cls(lambda t: vec, vec.size, label="constant")

    @classmethod
    def from_expressions(cls, parts: Sequence) -> "HistoryFunction":
        fns = [as_time_function(p) for p in parts]

        def evaluate(t: float) -> np.ndarray:
            return np.array([f(t) for f in fns])

        return cls(evaluate, len(fns), label="expressions")

    @classmethod
    def from_samples(cls, times: Sequence[float], values) -> "HistoryFunction":
        ts = np.asarray(times, dtype=float)
        ys = np.atleast_2d(np.asarray(values, dtype=float))
        if ys.shape[0] != ts.size:
            ys = ys.T
        if ts.size < 2 or ys.shape[0] != ts.size:
            raise ValueError("sampled history needs >= 2 samples matching the time grid")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("sample times must be strictly increasing")

        def evaluate(t: float) -> np.ndarray:
            return np.array([np.interp(t, ts, ys[:, j]) for j in range(ys.shape[1])])

        return cls(evaluate, ys.shape[1], t_min=float(ts[0]), t_max=float(ts[-1]),
                   label="samples")

    def __call__(self, t: float) -> np.ndarray:
        if t < self.t_min - 1e-12 or t > self.t_max + 1e-12:
            raise IntegrationError(
                f"history evaluated at t={t!r} outside its domain "
                f"[{self.t_min}, {self.t_max}]", time=t)
        return np.asarray(self._fn(t), dtype=float)

    def covers(self, t_lo: float, t_hi: float) -> bool:
        return self.t_min <= t_lo + 1e-12 and self.t_max >= t_hi - 1e-12

    def norm(self) -> "HistoryFunction":
        """Scalar history ``t -> |phi(t)|`` (same arithmetic as the checks)."""
        base = self

        def evaluate(t: float) -> np.ndarray:
            return np.array([float(np.linalg.norm(base(t)))])

        return HistoryFunction(evaluate, 1, self.t_min, self.t_max, label="norm")

    def sup_norm(self, t_lo: float, t_hi: float, samples: int = 256) -> float:
        grid = np.linspace(t_lo, t_hi, samples)
        return max(float(np.linalg.norm(self(float(t)))) for t in grid)

    def min_value(self, t_lo: float, t_hi: float, samples: int = 256) -> float:
        grid = np.linspace(t_lo, t_hi, samples)
        return min(float(np.min(self(float(t)))) for t in grid)


@dataclass(frozen=True)
class VectorDelaySystem:
    """Vector delay system ``x' = A(t)x + f(t, x, x(t-h_1), ...) + F0*e(t)``."""

    dim: int
    A: Callable[[float], np.ndarray] | None
    f: NonlinearTerm | None
    forcing_amplitude: float
    forcing_shape: Callable[[float], np.ndarray] | None
    delays: DelaySpec
    history: HistoryFunction
    t0: float = 0.0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.forcing_amplitude < 0:
            raise ValueError("forcing amplitude must be nonnegative")
        if self.forcing_amplitude > 0 and self.forcing_shape is None:
            raise ValueError("forcing shape required when the forcing amplitude is positive")
        if self.history.dim != self.dim:
            raise ValueError(
                f"history dimension {self.history.dim} != system dimension {self.dim}")

    # -- integration protocol -------------------------------------------
    def delay_spec(self) -> DelaySpec:
        return self.delays

    def initial_state(self) -> np.ndarray:
        return self.history(self.t0)

    def history_eval(self, t: float) -> np.ndarray:
        return self.history(t)

    def coefficient_horizon(self) -> float:
        return math.inf

    def rhs(self, t: float, y: np.ndarray, delayed: Sequence[np.ndarray]) -> np.ndarray:
        if self.A is not None:
            out = self.A(t) @ y
        else:
            out = np.zeros(self.dim)
        if self.f is not None:
            out = out + self.f(t, y, delayed)
        if self.forcing_amplitude > 0.0:
            out = out + self.forcing_amplitude * np.asarray(self.forcing_shape(t), dtype=float)
        return out

    def validate_for_integration(self, horizon: float) -> None:
        if not self.history.covers(self.t0 - self.delays.h_bar, self.t0):
            raise ValueError(
                f"history must cover [{self.t0 - self.delays.h_bar}, {self.t0}]")
        # homogeneous part must vanish at the origin
        if self.f is not None:
            zero = np.zeros(self.dim)
            zeros = [zero] * self.delays.count
            for t in np.linspace(self.t0, horizon, 16):
                residue = float(np.linalg.norm(self.f(float(t), zero, zeros)))
                if residue > 1e-10:
                    raise ValueError(
                        f"nonlinear term does not vanish at the origin (|f|={residue!r} "
                        f"at t={float(t)!r})")
        if self.forcing_amplitude > 0.0:
            span = max(horizon - self.t0, 20.0)
            grid = np.linspace(self.t0, self.t0 + span, 2048)
            sup = max(float(np.linalg.norm(np.asarray(self.forcing_shape(float(t)))))
                      for t in grid)
            if not 0.95 <= sup <= 1.05:
                raise ValueError(
                    f"forcing shape must have unit sup norm; sampled sup is {sup!r}")


@dataclass(frozen=True)
class Perturbation:
    """Extra nonnegative right-side term with its own (perturbed) delays."""

    majorant: PolynomialMajorant
    delays: DelaySpec

    def __post_init__(self):
        if self.majorant.arg_count != self.delays.count + 1:
            raise ValueError("perturbation majorant argument count does not match its delays")


@dataclass(frozen=True)
class ScalarDelaySystem:
    """Scalar comparison system ``y' = p(t)y + c(t)(L(t, y, y(t-h_i)) + g(t))``.

    ``g`` is the nonnegative forcing magnitude.  An optional `Perturbation`
    adds ``c(t) * L_R(t, y, y(t-h_i*))`` with its own delays.  Histories must
    be nonnegative and ``c(t) >= 1``.
    """

    p: TimeFunction
    c: TimeFunction
    majorant: PolynomialMajorant
    forcing: TimeFunction
    delays: DelaySpec
    history: HistoryFunction
    t0: float = 0.0
    perturbation: Perturbation | None = None
    coeff_horizon: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "p", as_time_function(self.p))
        object.__setattr__(self, "c", as_time_function(self.c))
        object.__setattr__(self, "forcing", as_time_function(self.forcing))
        if self.history.dim != 1:
            raise ValueError("scalar system history must be one-dimensional")
        if self.majorant.arg_count != self.delays.count + 1:
            raise ValueError(
                f"majorant expects {self.majorant.arg_count} arguments but the system "
                f"has {self.delays.count} delays")

    def with_history(self, history: HistoryFunction) -> "ScalarDelaySystem":
        return replace(self, history=history)

    def with_constant_history(self, value: float) -> "ScalarDelaySystem":
        return replace(self, history=HistoryFunction.constant([value]))

    def homogeneous(self) -> "ScalarDelaySystem":
        return replace(self, forcing=as_time_function(0.0))

    # -- integration protocol -------------------------------------------
    def delay_spec(self) -> DelaySpec:
        if self.perturbation is None:
            return self.delays
        return self.delays.merged_with(self.perturbation.delays)

    def initial_state(self) -> np.ndarray:
        return self.history(self.t0)

    def history_eval(self, t: float) -> np.ndarray:
        return self.history(t)

    def coefficient_horizon(self) -> float:
        return self.coeff_horizon

    def rhs(self, t: float, y: np.ndarray, delayed: Sequence[np.ndarray]) -> np.ndarray:
        state = y[0]
        m = self.delays.count
        zeta = [state] + [z[0] for z in delayed[:m]]
        value = self.majorant.evaluate_clamped(t, zeta) + abs(self.forcing(t))
        if self.perturbation is not None:
            zeta_r = [state] + [z[0] for z in delayed[m:]]
            value += self.perturbation.majorant.evaluate_clamped(t, zeta_r)
        return np.array([self.p(t) * state + self.c(t) * value])

    def validate_for_integration(self, horizon: float) -> None:
        spec = self.delay_spec()
        if not self.history.covers(self.t0 - spec.h_bar, self.t0):
            raise ValueError(f"history must cover [{self.t0 - spec.h_bar}, {self.t0}]")
        if horizon > self.coeff_horizon + 1e-9:
            raise ValueError(
                f"coefficients are only valid up to t={self.coeff_horizon}, "
                f"requested horizon {horizon}")
        if self.history.min_value(self.t0 - spec.h_bar, self.t0) < -1e-12:
            raise ValueError("scalar history must be nonnegative")
        for t in np.linspace(self.t0, horizon, 64):
            if self.c(float(t)) < 1.0 - 1e-9:
                raise ValueError(f"condition-number coefficient c({float(t)!r}) < 1")


@dataclass(frozen=True)
class GenericDelaySystem:
    """Escape hatch for custom right sides ``y' = rhs(t, y, [y(t-h_i)])``."""

    dim: int
    rhs_fn: Callable[[float, np.ndarray, Sequence[np.ndarray]], np.ndarray]
    delays: DelaySpec
    history: HistoryFunction
    t0: float = 0.0

    def delay_spec(self) -> DelaySpec:
        return self.delays

    def initial_state(self) -> np.ndarray:
        return self.history(self.t0)

    def history_eval(self, t: float) -> np.ndarray:
        return self.history(t)

    def coefficient_horizon(self) -> float:
        return math.inf

    def rhs(self, t, y, delayed):
        return np.asarray(self.rhs_fn(t, y, delayed), dtype=float)

    def validate_for_integration(self, horizon: float) -> None:
        if not self.history.covers(self.t0 - self.delays.h_bar, self.t0):
            raise ValueError(f"history must cover [{self.t0 - self.delays.h_bar}, {self.t0}]")


class Trajectory:
    """Dense piecewise-cubic solution with derivative data at the nodes.

    Evaluation uses cubic Hermite interpolation on each step; node values are
    reproduced exactly.  ``t_end`` may precede the last node when integration
    was truncated by blow-up detection.
    """

    def __init__(self, ts: np.ndarray, ys: np.ndarray, fs: np.ndarray,
                 t_end: float, blew_up: bool = False, blow_time: float | None = None,
                 history: HistoryFunction | None = None, history_span: float = 0.0):
        self.ts = ts
        self.ys = ys
        self.fs = fs
        self.t_end = float(t_end)
        self.blew_up = blew_up
        self.blow_time = blow_time
        self.history = history
        self.history_span = history_span
        self._node_list = ts.tolist()

    @property
    def t_start(self) -> float:
        return float(self.ts[0])

    @property
    def dim(self) -> int:
        return self.ys.shape[1]

    @property
    def termination(self) -> str:
        return "blew_up" if self.blew_up else "completed"

    def eval(self, t: float) -> np.ndarray:
        if t < self.t_start - 1e-12 or t > self.t_end + 1e-12:
            raise ValueError(
                f"t={t!r} outside the trajectory domain [{self.t_start}, {self.t_end}]")
        t = min(max(t, self.t_start), self.t_end)
        idx = bisect_right(self._node_list, t) - 1
        if idx >= len(self._node_list) - 1:
            idx = len(self._node_list) - 2
        if idx < 0:
            return self.ys[0].copy()
        t0, t1 = self._node_list[idx], self._node_list[idx + 1]
        if t == t0:
            return self.ys[idx].copy()
        if t == t1:
            return self.ys[idx + 1].copy()
        return _hermite(t, t0, t1, self.ys[idx], self.ys[idx + 1],
                        self.fs[idx], self.fs[idx + 1])

    __call__ = eval

    def norm_at(self, t: float) -> float:
        return float(np.linalg.norm(self.eval(t)))

    def eval_grid(self, grid: np.ndarray) -> np.ndarray:
        return np.array([self.eval(float(t)) for t in grid])

    def norm_grid(self, grid: np.ndarray) -> np.ndarray:
        return np.array([self.norm_at(float(t)) for t in grid])


def _hermite(t, t0, t1, y0, y1, f0, f1):
    h = t1 - t0
    theta = (t - t0) / h
    th2 = theta * theta
    th3 = th2 * theta
    h00 = 2.0 * th3 - 3.0 * th2 + 1.0
    h10 = th3 - 2.0 * th2 + theta
    h01 = -2.0 * th3 + 3.0 * th2
    h11 = th3 - th2
    return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1


def _initial_step(eval_rhs, t0, y0, f0, rtol, atol, max_step):
    """Automatic first-step selection (standard two-probe heuristic)."""
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + h0 * f0
    f1 = eval_rhs(t0 + h0, y1)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 3.0)
    return min(100.0 * h0, h1, max_step)


def integrate(system, horizon: float, tol: ToleranceSettings | None = None) -> Trajectory:
    """Integrate a delay system from its start time to ``horizon``.

    Delayed arguments are resolved from the history function (at or before
    the start time) or from already-accepted dense segments; the step cap
    ``h_under`` guarantees no delayed lookup ever lands in the current step.
    Integration stops early, with the first crossing time recorded, when the
    state norm reaches ``tol.cap``.
    """
    tol = tol or ToleranceSettings()
    t0 = float(system.t0)
    if horizon <= t0:
        raise ValueError(f"horizon {horizon!r} must exceed the start time {t0!r}")
    system.validate_for_integration(horizon)
    spec = system.delay_spec()
    spec.validate_on(t0, horizon)
    delay_fns = spec.delays
    has_delays = bool(delay_fns)
    h_bar = spec.h_bar if has_delays else 0.0
    h_under = spec.h_under if has_delays else math.inf

    max_step = min(h_under, horizon - t0)
    if tol.max_step is not None:
        max_step = min(max_step, tol.max_step)

    y0 = np.atleast_1d(np.asarray(system.initial_state(), dtype=float))
    dim = y0.size

    nodes_t: list[float] = [t0]
    nodes_y: list[np.ndarray] = [y0]
    nodes_f: list[np.ndarray] = []

    lower_guard = t0 - h_bar - 1e-9 * max(1.0, abs(t0) + h_bar)

    def past(tq: float) -> np.ndarray:
        if tq < t0:
            if tq < lower_guard:
                raise IntegrationError(
                    f"delayed argument t={tq!r} falls below the history interval "
                    f"start {t0 - h_bar!r} (malformed delay)", time=tq)
            return np.atleast_1d(np.asarray(system.history_eval(tq), dtype=float))
        idx = bisect_right(nodes_t, tq) - 1
        if idx >= len(nodes_t) - 1:
            return nodes_y[-1]
        ta, tb = nodes_t[idx], nodes_t[idx + 1]
        if tq == ta:
            return nodes_y[idx]
        return _hermite(tq, ta, tb, nodes_y[idx], nodes_y[idx + 1],
                        nodes_f[idx], nodes_f[idx + 1])

    def eval_rhs(t: float, y: np.ndarray) -> np.ndarray:
        if has_delays:
            delayed = [past(t - fn(t)) for fn in delay_fns]
        else:
            delayed = ()
        return np.atleast_1d(np.asarray(system.rhs(t, y, delayed), dtype=float))

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        f0 = eval_rhs(t0, y0)
        if not np.all(np.isfinite(f0)):
            raise IntegrationError("right side is not finite at the start time", time=t0)
        nodes_f.append(f0)

        if tol.first_step is not None:
            h = min(tol.first_step, max_step)
        else:
            h = _initial_step(eval_rhs, t0, y0, f0, tol.rtol, tol.atol, max_step)

        t = t0
        y = y0
        k1 = f0
        err_prev: float | None = None
        blew_up = False
        blow_time: float | None = None
        wall_index = 1

        steps = 0
        while t < horizon - 1e-13 * max(1.0, abs(horizon)):
            steps += 1
            if steps > _MAX_STEPS:
                raise IntegrationError(f"step budget exhausted at t={t!r}", time=t)
            h_eff = min(h, max_step, horizon - t)
            if has_delays:
                wall = t0 + wall_index * h_under
                while wall <= t + 1e-12 * max(1.0, abs(t)):
                    wall_index += 1
                    wall = t0 + wall_index * h_under
                if t + h_eff >= wall - 1e-12 * max(1.0, abs(wall)):
                    h_eff = wall - t
            if h_eff < _step_floor(t):
                norm_y = float(np.linalg.norm(y))
                if norm_y >= 0.01 * tol.cap:
                    blew_up, blow_time = True, t
                    break
                raise IntegrationError(f"step size underflow at t={t!r}", time=t)

            t_new = t + h_eff
            try:
                k2 = eval_rhs(t + 0.5 * h_eff, y + (0.5 * h_eff) * k1)
                k3 = eval_rhs(t + 0.75 * h_eff, y + (0.75 * h_eff) * k2)
                y_new = y + h_eff * ((2.0 / 9.0) * k1 + (1.0 / 3.0) * k2 + (4.0 / 9.0) * k3)
                k4 = eval_rhs(t_new, y_new)
            except (OverflowError, ValueError, ZeroDivisionError, FloatingPointError):
                h = 0.25 * h_eff
                err_prev = None
                continue
            err_vec = h_eff * ((-5.0 / 72.0) * k1 + (1.0 / 12.0) * k2
                               + (1.0 / 9.0) * k3 + (-1.0 / 8.0) * k4)
            if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(k4))
                    and np.all(np.isfinite(err_vec))):
                h = 0.25 * h_eff
                err_prev = None
                continue
            scale = tol.atol + tol.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

            if err_norm <= 1.0:
                nodes_t.append(t_new)
                nodes_y.append(y_new)
                nodes_f.append(k4)
                if float(np.linalg.norm(y_new)) >= tol.cap:
                    blew_up = True
                    blow_time = _locate_cap_crossing(
                        t, t_new, y, y_new, k1, k4, tol.cap)
                    t = t_new
                    break
                t = t_new
                y = y_new
                k1 = k4
                if err_norm == 0.0:
                    factor = _MAX_FACTOR
                elif err_prev is None:
                    factor = _SAFETY * err_norm ** (-1.0 / 3.0)
                else:
                    factor = _SAFETY * err_norm ** (-_PI_ALPHA) * err_prev ** _PI_BETA
                h = h_eff * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                err_prev = err_norm
            else:
                h = h_eff * max(_MIN_FACTOR, _SAFETY * err_norm ** (-1.0 / 3.0))
                err_prev = None

    ts = np.array(nodes_t)
    ys = np.array(nodes_y)
    fs = np.array(nodes_f)
    t_end = blow_time if blew_up else ts[-1]
    return Trajectory(ts, ys, fs, t_end, blew_up, blow_time,
                      history=getattr(system, "history", None),
                      history_span=h_bar)


def _locate_cap_crossing(t0, t1, y0, y1, f0, f1, cap) -> float:
    """First time in [t0, t1] where the dense-output norm reaches ``cap``."""

    def norm_at(t):
        return float(np.linalg.norm(_hermite(t, t0, t1, y0, y1, f0, f1)))

    grid = np.linspace(t0, t1, 33)
    lo = t0
    hi = t1
    for tg in grid[1:]:
        if norm_at(float(tg)) >= cap:
            hi = float(tg)
            break
        lo = float(tg)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if norm_at(mid) >= cap:
            hi = mid
        else:
            lo = mid
    return hi


def eval_trajectory(traj: Trajectory, t: float) -> np.ndarray:
    """Interpolated state at ``t``; exact at step endpoints."""
    return traj.eval(t)


def sup_norm_on_interval(traj: Trajectory, a: float, b: float,
                         grid_points: int = 512) -> float:
    """Max of the state norm on ``[a, b]``, refined near the maximizer."""
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    if b < a:
        raise ValueError(f"empty interval [{a}, {b}]")
    if a < traj.t_start - 1e-12 or b > traj.t_end + 1e-12:
        raise ValueError("interval leaves the trajectory domain")
    a = max(a, traj.t_start)
    b = min(b, traj.t_end)
    if a == b:
        return traj.norm_at(a)
    grid = np.linspace(a, b, grid_points)
    values = traj.norm_grid(grid)
    best_idx = int(np.argmax(values))
    best = float(values[best_idx])
    lo = grid[max(best_idx - 1, 0)]
    hi = grid[min(best_idx + 1, grid_points - 1)]
    for _ in range(3):
        sub = np.linspace(lo, hi, 33)
        sub_vals = traj.norm_grid(sub)
        k = int(np.argmax(sub_vals))
        best = max(best, float(sub_vals[k]))
        lo = sub[max(k - 1, 0)]
        hi = sub[min(k + 1, 32)]
    return best


@dataclass(frozen=True)
class BlowupReport:
    blew_up: bool
    time: float | None = None


def detect_blowup(traj: Trajectory, cap: float) -> BlowupReport:
    """First time the dense trajectory norm reaches ``cap``, if any."""
    if cap <= 0:
        raise ValueError("cap must be positive")
    n = len(traj.ts)
    for idx in range(n - 1):
        t0, t1 = float(traj.ts[idx]), float(traj.ts[idx + 1])
        t1 = min(t1, traj.t_end)
        if t1 <= t0:
            break
        for t in np.linspace(t0, t1, 7):
            if traj.norm_at(float(t)) >= cap:
                lo, hi = t0, float(t)
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if traj.norm_at(mid) >= cap:
                        hi = mid
                    else:
                        lo = mid
                return BlowupReport(True, hi)
    if traj.norm_at(traj.t_end) >= cap:
        return BlowupReport(True, traj.t_end)
    return BlowupReport(False, None)
