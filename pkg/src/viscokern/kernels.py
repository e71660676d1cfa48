"""Relaxation moduli G(t) and their integrated form K(xi) = int_0^xi G.

The materials of interest have a memory kernel G that is positive,
nonincreasing and convex, but possibly only continuous: the derivative may
jump (wedge and tabulated variants).  Four kernel families are provided:

* :class:`WedgeKernel` -- linear drop from ``g0`` to ``g_inf`` over
  ``[0, ramp]``, constant afterwards; the derivative jumps at ``ramp``.
* :class:`PronyKernel` -- exponential series ``g_inf + sum g_i exp(-t/tau_i)``,
  smooth.
* :class:`TabulatedKernel` -- measured samples with linear interpolation,
  i.e. a general piecewise-linear (wedge-like) kernel.
* :class:`ExpressionKernel` -- formula in ``t`` via :mod:`.expressions`.

Kernels are immutable after construction and safe to share across threads;
the only mutable state is the integrated-kernel quadrature cache, which is
lock protected.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import expressions

#: audit-grid defaults for admissibility checking
DEFAULT_AUDIT_POINTS = 512
DEFAULT_AUDIT_TOL = 1e-9

#: quadrature tolerances for the integrated kernel
QUAD_TOL_CLOSED_CHECK = 1e-10  # cross-checks against closed forms
QUAD_TOL_EXPRESSION = 1e-8     # adaptive quadrature of formula kernels


class KernelRangeError(ValueError):
    """Query outside the interval on which the kernel is defined."""


class DerivativeUndefinedError(ValueError):
    """dG/dt requested exactly at a kink with no one-sided policy, or a
    higher derivative that the kernel variant cannot provide."""


class QuadratureToleranceError(ArithmeticError):
    """Adaptive quadrature could not reach the requested tolerance."""


def _as_array(t) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


class RelaxationKernel:
    """Base class; concrete variants implement ``g`` and ``gdot``."""

    #: times where dG/dt may jump (empty for smooth kernels)
    kink_times: tuple[float, ...] = ()

    #: finest feature width of G, or None; quadratures over G cap their
    #: panel width by this (mollified kernels vary on the scale epsilon)
    smoothness_scale: float | None = None

    def g(self, t):
        """G(t); accepts a scalar or an ndarray of times >= 0."""
        raise NotImplementedError

    def gdot(self, t, kink_policy: str | None = "left"):
        """dG/dt at t >= 0 (right derivative at 0).

        At a kink the declared policy decides: ``"left"`` returns the
        left-hand limit, ``None`` raises :class:`DerivativeUndefinedError`.
        """
        raise NotImplementedError

    def gddot(self, t):
        """d2G/dt2 where the variant supports it (Prony, mollified)."""
        raise DerivativeUndefinedError(
            f"{type(self).__name__} does not provide a second derivative"
        )

    def gdot_limits(self, t: float) -> tuple[float, float]:
        """One-sided (left, right) limits of dG/dt at *t*; equal except at
        a kink.  Consumed by quadratures that split panels at kinks."""
        v = float(self.gdot(t, kink_policy="left"))
        return v, v

    def _k_closed(self, xi: np.ndarray):
        """Closed-form K(xi) as an ndarray, or None if unavailable."""
        return None

    @property
    def has_closed_k(self) -> bool:
        try:
            return self._k_closed(np.zeros(1)) is not None
        except KernelRangeError:
            return True  # closed form exists, the probe point just isn't covered

    def integrated(self) -> "IntegratedKernel":
        return IntegratedKernel(self)

    def describe(self) -> str:
        return type(self).__name__

    @staticmethod
    def _check_nonneg_time(t: np.ndarray) -> None:
        if np.any(t < 0.0):
            raise KernelRangeError("relaxation kernels are defined for t >= 0")


@dataclass(frozen=True)
class WedgeKernel(RelaxationKernel):
    """G drops linearly from ``g0`` at t=0 to ``g_inf`` at t=ramp, then stays
    constant; dG/dt jumps from ``(g_inf - g0)/ramp`` to 0 at ``ramp``."""

    g0: float
    g_inf: float
    ramp: float

    def __post_init__(self):
        if self.g0 <= 0.0 or self.g_inf <= 0.0:
            raise ValueError("wedge moduli g0 and g_inf must be positive")
        if self.ramp <= 0.0:
            raise ValueError("wedge ramp time must be positive")
        object.__setattr__(self, "kink_times", (float(self.ramp),))

    @property
    def slope(self) -> float:
        return (self.g_inf - self.g0) / self.ramp

    def g(self, t):
        arr, scalar = _as_array(t)
        self._check_nonneg_time(arr)
        return _ret(np.where(arr < self.ramp, self.g0 + self.slope * arr, self.g_inf), scalar)

    def gdot(self, t, kink_policy: str | None = "left"):
        arr, scalar = _as_array(t)
        self._check_nonneg_time(arr)
        if kink_policy is None and np.any(arr == self.ramp):
            raise DerivativeUndefinedError(
                f"dG/dt is undefined at the kink t = {self.ramp}; "
                "pass kink_policy='left' for the left-hand limit"
            )
        return _ret(np.where(arr <= self.ramp, self.slope, 0.0), scalar)

    def gdot_limits(self, t: float) -> tuple[float, float]:
        """One-sided (left, right) limits of dG/dt at *t*."""
        if t == self.ramp:
            return self.slope, 0.0
        v = self.gdot(t)
        return v, v

    def _k_closed(self, xi: np.ndarray):
        k_at_ramp = self.ramp * (self.g0 + self.g_inf) / 2.0
        return np.where(
            xi < self.ramp,
            self.g0 * xi + 0.5 * self.slope * xi**2,
            k_at_ramp + self.g_inf * (xi - self.ramp),
        )

    def describe(self) -> str:
        return f"wedge(g0={self.g0}, g_inf={self.g_inf}, ramp={self.ramp})"


@dataclass(frozen=True)
class PronyKernel(RelaxationKernel):
    """Exponential relaxation series ``g_inf + sum g_i exp(-t/tau_i)``."""

    g_inf: float
    terms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(g), float(tau)) for g, tau in self.terms))
        if self.g_inf < 0.0:
            raise ValueError("long-time modulus g_inf must be nonnegative")
        for g, tau in self.terms:
            if g <= 0.0 or tau <= 0.0:
                raise ValueError("Prony weights and relaxation times must be positive")

    def g(self, t):
        arr, scalar = _as_array(t)
        self._check_nonneg_time(arr)
        out = np.full_like(arr, self.g_inf, dtype=float)
        for g, tau in self.terms:
            out = out + g * np.exp(-arr / tau)
        return _ret(out, scalar)

    def gdot(self, t, kink_policy: str | None = "left"):
        arr, scalar = _as_array(t)
        self._check_nonneg_time(arr)
        out = np.zeros_like(arr, dtype=float)
        for g, tau in self.terms:
            out = out - (g / tau) * np.exp(-arr / tau)
        return _ret(out, scalar)

    def gddot(self, t):
        arr, scalar = _as_array(t)
        self._check_nonneg_time(arr)
        out = np.zeros_like(arr, dtype=float)
        for g, tau in self.terms:
            out = out + (g / tau**2) * np.exp(-arr / tau)
        return _ret(out, scalar)

    def _k_closed(self, xi: np.ndarray):
        out = self.g_inf * xi
        for g, tau in self.terms:
            out = out + g * tau * (1.0 - np.exp(-xi / tau))
        return out

    def describe(self) -> str:
        body = " + ".join(f"{g}*exp(-t/{tau})" for g, tau in self.terms)
        return f"prony({self.g_inf}{' + ' + body if body else ''})"


class TabulatedKernel(RelaxationKernel):
    """Piecewise-linear kernel through measured (t, G) samples.

    Queries outside ``[t_min, t_max]`` raise :class:`KernelRangeError`;
    derivatives are one-/two-sided finite differences whose step is half
    the adjacent segment length (exact for a piecewise-linear function).
    """

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or len(times) < 2:
            raise ValueError("need two 1-D arrays of equal length >= 2")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("sample times must be strictly increasing")
        if times[0] < 0.0:
            raise KernelRangeError("sample times must be >= 0")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        self.times = times.copy()
        self.values = values.copy()
        self.times.setflags(write=False)
        self.values.setflags(write=False)
        self.kink_times = tuple(float(t) for t in times[1:-1])
        # exact cumulative integral at the nodes (trapezoid is exact here)
        cum = np.zeros(len(times))
        cum[1:] = np.cumsum(np.diff(times) * (values[1:] + values[:-1]) / 2.0)
        self._cum = cum

    def _check_range(self, arr: np.ndarray) -> None:
        lo, hi = self.times[0], self.times[-1]
        if np.any(arr < lo) or np.any(arr > hi):
            bad = arr[(arr < lo) | (arr > hi)]
            raise KernelRangeError(
                f"t = {float(np.ravel(bad)[0])} outside the tabulated interval "
                f"[{lo}, {hi}]"
            )

    def g(self, t):
        arr, scalar = _as_array(t)
        self._check_nonneg_time(arr)
        self._check_range(arr)
        return _ret(np.interp(arr, self.times, self.values), scalar)

    def gdot(self, t, kink_policy: str | None = "left"):
        arr, scalar = _as_array(t)
        self._check_nonneg_time(arr)
        self._check_range(arr)
        out = np.empty_like(arr, dtype=float)
        for idx, ti in np.ndenumerate(arr):
            out[idx] = self._gdot_scalar(float(ti), kink_policy)
        return _ret(out, scalar)

    def _gdot_scalar(self, t: float, kink_policy: str | None) -> float:
        lo, hi = self.times[0], self.times[-1]
        if t in self.kink_times:
            if kink_policy is None:
                raise DerivativeUndefinedError(
                    f"dG/dt is undefined at the sample node t = {t}; "
                    "pass kink_policy='left' for the left-hand limit"
                )
            i = int(np.searchsorted(self.times, t))
            step = 0.5 * (self.times[i] - self.times[i - 1])
            return (self.g(t) - self.g(t - step)) / step
        if t == hi:
            step = 0.5 * (self.times[-1] - self.times[-2])
            return (self.g(t) - self.g(t - step)) / step
        if t == lo:
            step = 0.5 * (self.times[1] - self.times[0])
            return (self.g(t + step) - self.g(t)) / step
        i = int(np.searchsorted(self.times, t))
        step = 0.5 * min(t - self.times[i - 1], self.times[i] - t)
        return (self.g(t + step) - self.g(t - step)) / (2.0 * step)

    def gdot_limits(self, t: float) -> tuple[float, float]:
        if t in self.kink_times:
            i = int(np.searchsorted(self.times, t))
            step_l = 0.5 * (self.times[i] - self.times[i - 1])
            step_r = 0.5 * (self.times[i + 1] - self.times[i])
            left = (self.g(t) - self.g(t - step_l)) / step_l
            right = (self.g(t + step_r) - self.g(t)) / step_r
            return float(left), float(right)
        v = float(self.gdot(t, kink_policy="left"))
        return v, v

    def _k_closed(self, xi: np.ndarray):
        self._check_range(xi)
        if self.times[0] > 0.0:
            raise KernelRangeError(
                "integrated kernel needs samples from t = 0; table starts at "
                f"{self.times[0]}"
            )
        idx = np.clip(np.searchsorted(self.times, xi, side="right") - 1, 0, len(self.times) - 2)
        t_lo = self.times[idx]
        g_lo = self.values[idx]
        g_xi = np.interp(xi, self.times, self.values)
        return self._cum[idx] + (xi - t_lo) * (g_lo + g_xi) / 2.0

    def describe(self) -> str:
        return f"tabulated({len(self.times)} samples on [{self.times[0]}, {self.times[-1]}])"


class ExpressionKernel(RelaxationKernel):
    """Kernel defined by a formula in ``t``, e.g. ``"1 + exp(-2*t)"``."""

    #: relative step for finite-difference derivatives
    FD_STEP = 1e-6

    def __init__(self, source: str):
        self.source = source
        self.expr = expressions.parse(source)
        extra = expressions.variables(self.expr) - {"t"}
        if extra:
            raise ValueError(f"kernel expression may only use t, found {sorted(extra)}")

    def g(self, t):
        arr, scalar = _as_array(t)
        self._check_nonneg_time(arr)
        out = np.empty_like(arr, dtype=float)
        for idx, ti in np.ndenumerate(arr):
            out[idx] = expressions.evaluate(self.expr, t=float(ti))
        return _ret(out, scalar)

    def gdot(self, t, kink_policy: str | None = "left"):
        arr, scalar = _as_array(t)
        self._check_nonneg_time(arr)
        out = np.empty_like(arr, dtype=float)
        for idx, ti in np.ndenumerate(arr):
            ti = float(ti)
            step = self.FD_STEP * (1.0 + abs(ti))
            if ti < step:  # stay inside the domain near t = 0
                out[idx] = (self.g(ti + step) - self.g(ti)) / step
            else:
                out[idx] = (self.g(ti + step) - self.g(ti - step)) / (2.0 * step)
        return _ret(out, scalar)

    def describe(self) -> str:
        return f"expression({self.source!r})"


class IntegratedKernel:
    """K(xi) = int_0^xi G(tau) dtau, the quantity the weak form consumes.

    Wedge, Prony and tabulated kernels evaluate through exact closed
    forms; other variants fall back to adaptive quadrature with a
    lock-protected cache, or to cumulative fixed-order panels on sorted
    grids (:meth:`cumulative`).
    """

    def __init__(self, source: RelaxationKernel, quad_tol: float | None = None):
        self.source = source
        if quad_tol is None:
            quad_tol = (
                QUAD_TOL_CLOSED_CHECK if source.has_closed_k else QUAD_TOL_EXPRESSION
            )
        self.quad_tol = quad_tol
        self._cache: dict[float, float] = {}
        self._lock = threading.Lock()

    def value(self, xi) -> float:
        """K at a single abscissa xi >= 0."""
        xi = float(xi)
        if xi < 0.0:
            raise KernelRangeError("K(xi) is defined for xi >= 0")
        closed = self.source._k_closed(np.asarray([xi]))
        if closed is not None:
            return float(closed[0])
        with self._lock:
            if xi in self._cache:
                return self._cache[xi]
        val = self._quad(xi)
        with self._lock:
            self._cache[xi] = val
        return val

    def _quad(self, xi: float) -> float:
        if xi == 0.0:
            return 0.0
        pts = [c for c in self.source.kink_times if 0.0 < c < xi] or None
        val, err = integrate.quad(
            lambda s: float(self.source.g(s)),
            0.0,
            xi,
            points=pts,
            limit=200,
            epsabs=self.quad_tol / 10.0,
            epsrel=self.quad_tol / 10.0,
        )
        if err > self.quad_tol * max(1.0, abs(val)):
            raise QuadratureToleranceError(
                f"K({xi}) quadrature error estimate {err:.2e} exceeds "
                f"tolerance {self.quad_tol:.2e}"
            )
        return val

    def cumulative(self, times) -> np.ndarray:
        """K at every point of an ascending grid (typically the solver's
        uniform lag grid), via closed form or panel-wise 16-point Gauss
        with panels split at kink times."""
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or len(times) == 0:
            raise ValueError("need a 1-D, nonempty grid")
        if np.any(np.diff(times) < 0.0) or times[0] < 0.0:
            raise ValueError("grid must be ascending and nonnegative")
        closed = self.source._k_closed(times)
        if closed is not None:
            return closed

        edges = np.union1d(times, [0.0])
        interior_kinks = [c for c in self.source.kink_times if 0.0 < c < edges[-1]]
        if interior_kinks:
            edges = np.union1d(edges, interior_kinks)
        cap = self.source.smoothness_scale
        if cap is not None and np.max(np.diff(edges)) > 0.5 * cap:
            refined = [np.asarray([edges[0]])]
            for lo, hi in zip(edges[:-1], edges[1:]):
                pieces = max(int(np.ceil((hi - lo) / (0.5 * cap))), 1)
                refined.append(np.linspace(lo, hi, pieces + 1)[1:])
            edges = np.concatenate(refined)
        nodes16, weights16 = np.polynomial.legendre.leggauss(16)
        lo, hi = edges[:-1], edges[1:]
        mid = 0.5 * (lo + hi)[:, None]
        half = 0.5 * (hi - lo)[:, None]
        vals = self.source.g(mid + half * nodes16[None, :])
        panel = (half[:, 0]) * (vals @ weights16)
        cum = np.concatenate(([0.0], np.cumsum(panel)))
        return cum[np.searchsorted(edges, times)]


@dataclass(frozen=True)
class AdmissibilityViolation:
    condition: str  # "positivity" | "monotonicity" | "convexity"
    t: float        # first offending audit time
    detail: str


@dataclass(frozen=True)
class AdmissibilityReport:
    kernel: str
    horizon: float
    n_audit: int
    tol: float
    violations: tuple[AdmissibilityViolation, ...] = field(default_factory=tuple)

    @property
    def admissible(self) -> bool:
        return not self.violations


def check_admissibility(
    kernel: RelaxationKernel,
    horizon: float,
    n_audit: int = DEFAULT_AUDIT_POINTS,
    tol: float = DEFAULT_AUDIT_TOL,
) -> AdmissibilityReport:
    """Audit positivity, monotone decrease and convexity of G on a dense
    uniform grid over [0, horizon].

    This is a necessary-condition check: the material model demands the
    properties on all of (0, inf), which a finite audit cannot certify.
    Violations are reported (with the first offending time each), not
    raised.
    """
    if horizon <= 0.0:
        raise ValueError("audit horizon must be positive")
    if n_audit < 3:
        raise ValueError("need at least 3 audit points")
    ts = np.linspace(0.0, horizon, n_audit)
    vals = kernel.g(ts)
    h = ts[1] - ts[0]
    violations = []

    nonpos = np.nonzero(vals <= 0.0)[0]
    if len(nonpos):
        i = int(nonpos[0])
        violations.append(
            AdmissibilityViolation("positivity", float(ts[i]), f"G = {vals[i]:.6g} <= 0")
        )

    increases = np.nonzero(np.diff(vals) > tol)[0]
    if len(increases):
        i = int(increases[0])
        violations.append(
            AdmissibilityViolation(
                "monotonicity",
                float(ts[i + 1]),
                f"G rises by {vals[i + 1] - vals[i]:.6g} over one audit step",
            )
        )

    second = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / (2.0 * h * h)
    concave = np.nonzero(second < -tol)[0]
    if len(concave):
        i = int(concave[0])
        violations.append(
            AdmissibilityViolation(
                "convexity",
                float(ts[i + 1]),
                f"second divided difference {second[i]:.6g} < -{tol:.1e}",
            )
        )

    return AdmissibilityReport(
        kernel=kernel.describe(),
        horizon=float(horizon),
        n_audit=int(n_audit),
        tol=float(tol),
        violations=tuple(violations),
    )


def catalog() -> dict[str, RelaxationKernel]:
    """Reference kernels, one per variant, all admissible on [0, 4]."""
    return {
        "wedge": WedgeKernel(2.0, 1.0, 1.0),
        "prony": PronyKernel(1.0, ((1.0, 0.5),)),
        "tabulated": TabulatedKernel(
            [0.0, 0.5, 1.0, 2.0, 4.0], [2.0, 1.5, 1.2, 1.05, 1.0]
        ),
        "expression": ExpressionKernel("1 + exp(-2*t)"),
    }
