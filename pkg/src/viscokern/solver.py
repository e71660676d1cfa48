"""Time marching for the 1-D viscoelastic displacement problem.

Two schemes advance the displacement u(x, t) with homogeneous Dirichlet
boundaries, initial data u0, u1 and forcing f:

* ``integral`` -- marches the integrated-kernel form

      u(t) = int_0^t K(t - tau) u_xx(tau) dtau + u1*t + u0
             + int_0^t dtau int_0^tau f,

  with product-trapezoid quadrature for the memory term.  Because
  K(0) = 0 the newest history node carries zero weight, so every step is
  explicit.  Only K (never dG/dt) is consulted: the scheme is valid for
  merely continuous kernels and needs no special casing at kinks.

* ``differential`` -- explicit central differences in time for

      u_tt = G(0) u_xx + int_0^t Gdot(t - tau) u_xx(tau) dtau + f,

  valid when dG/dt exists a.e.; requires the CFL bound
  dt <= 0.9 h / sqrt(G(0)).  The history quadrature splits the trapezoid
  panel that straddles a kink of dG/dt, using one-sided kernel limits and
  a linearly interpolated history value, which restores second order.

Both schemes are linear in the data, store the full history (the memory
term needs it anyway) and save snapshots at a configurable stride.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import expressions
from .grids import Field, Grid, laplacian_values
from .kernels import (
    DerivativeUndefinedError,
    IntegratedKernel,
    RelaxationKernel,
)

CFL_SAFETY = 0.9

SCHEMES = ("integral", "differential")


class ConfigurationError(ValueError):
    """Problem specification that cannot be solved as stated."""


class UnsupportedKernelError(ValueError):
    """Kernel lacks the derivatives the differential scheme needs."""


class SolverDivergenceError(ArithmeticError):
    """Non-finite values appeared during time stepping."""


def _parse_data(source: str, allowed: set[str], what: str):
    expr = expressions.parse(source)
    extra = expressions.variables(expr) - allowed
    if extra:
        raise ConfigurationError(
            f"{what} may only use {sorted(allowed) or 'constants'}, "
            f"found {sorted(extra)}"
        )
    return expr


def _sample_x(expr, x: np.ndarray) -> np.ndarray:
    return np.asarray([expressions.evaluate(expr, x=xi) for xi in x], dtype=float)


def _sample_xt(expr, x: np.ndarray, t: float) -> np.ndarray:
    return np.asarray([expressions.evaluate(expr, x=xi, t=t) for xi in x], dtype=float)


@dataclass
class ProblemSpec:
    """Everything a solve needs: domain, horizon, data, kernel, scheme.

    ``u0`` and ``u1`` are expression strings in ``x``; ``f`` in ``x`` and
    ``t``.  For the differential scheme the CFL condition is verified here,
    before any stepping.  ``save_stride`` keeps every k-th step in the
    returned solution (it must divide ``n_steps``).
    """

    grid: Grid
    horizon: float
    n_steps: int
    kernel: RelaxationKernel
    u0: str = "0"
    u1: str = "0"
    f: str = "0"
    scheme: str = "integral"
    save_stride: int = 1

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ConfigurationError("horizon must be positive")
        if self.n_steps < 2:
            raise ConfigurationError("need at least 2 time steps")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(
                f"unknown scheme {self.scheme!r}; choose one of {SCHEMES}"
            )
        if self.save_stride < 1 or self.n_steps % self.save_stride:
            raise ConfigurationError("save_stride must divide n_steps")
        self.u0_expr = _parse_data(self.u0, {"x"}, "u0")
        self.u1_expr = _parse_data(self.u1, {"x"}, "u1")
        self.f_expr = _parse_data(self.f, {"x", "t"}, "f")
        if self.scheme == "differential":
            limit = cfl_limit(self.kernel, self.grid)
            if self.dt > limit:
                raise ConfigurationError(
                    f"CFL violation: dt = {self.dt:.6g} exceeds "
                    f"{CFL_SAFETY} * h / sqrt(G(0)) = {limit:.6g}"
                )

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps


def cfl_limit(kernel: RelaxationKernel, grid: Grid) -> float:
    """Largest stable dt for the explicit differential scheme."""
    return CFL_SAFETY * grid.h / float(np.sqrt(kernel.g(0.0)))


@dataclass
class SolutionField:
    """Saved trajectory of a solve: u (and, for the differential scheme,
    u_t) on the interior nodes at the saved times.  Boundary values are
    structurally zero and not stored."""

    spec: ProblemSpec
    times: np.ndarray
    u: np.ndarray                      # (n_saved, n_interior)
    v: np.ndarray | None = None        # velocities, differential scheme
    meta: dict = dc_field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.spec.grid

    def field(self, k: int) -> Field:
        return Field(self.grid, self.u[k].copy())


def solve(spec: ProblemSpec) -> SolutionField:
    """Dispatch on ``spec.scheme``."""
    if spec.scheme == "differential":
        return solve_differential(spec)
    return solve_integral(spec)


# ---------------------------------------------------------------------------
# forcing helpers
# ---------------------------------------------------------------------------

def _forcing_rows(spec: ProblemSpec, tgrid: np.ndarray) -> np.ndarray | None:
    """f sampled as (step, node), or None when f is the literal 0."""
    if expressions.is_zero(spec.f_expr):
        return None
    x = spec.grid.x
    return np.asarray([_sample_xt(spec.f_expr, x, float(t)) for t in tgrid])


def _double_time_integral(fvals: np.ndarray | None, dt: float, shape) -> np.ndarray | None:
    """int_0^{t_n} dtau int_0^tau f, per node, by iterated trapezoid."""
    if fvals is None:
        return None
    first = np.zeros(shape)
    first[1:] = np.cumsum(0.5 * dt * (fvals[1:] + fvals[:-1]), axis=0)
    second = np.zeros(shape)
    second[1:] = np.cumsum(0.5 * dt * (first[1:] + first[:-1]), axis=0)
    return second


def _check_finite(values: np.ndarray, step: int, t: float, scheme: str) -> None:
    if not np.all(np.isfinite(values)):
        raise SolverDivergenceError(
            f"{scheme} scheme produced non-finite values at step {step} "
            f"(t = {t:.6g}); max |u| at previous step may have overflowed"
        )


# ---------------------------------------------------------------------------
# memory-term quadrature (shared by the solvers and exposed for testing)
# ---------------------------------------------------------------------------

def _k_history_sum(lap_hist: np.ndarray, n: int, dt: float, kvals: np.ndarray) -> np.ndarray:
    """Product-trapezoid sum_{m=0}^{n-1} w_m K(t_n - t_m) lap_u^m.

    The m = n node is omitted: its trapezoid weight multiplies K(0) = 0.
    """
    w = dt * kvals[n:0:-1].copy()
    w[0] *= 0.5
    return w @ lap_hist[:n]


def _gdot_history_sum(
    lap_hist: np.ndarray,
    kernel: RelaxationKernel,
    n: int,
    dt: float,
    gd: np.ndarray,
) -> np.ndarray:
    """Trapezoid for int_0^{t_n} Gdot(t_n - tau) lap_u(tau) dtau over the
    nodes m = 0..n, with panels straddling a kink of Gdot split there."""
    w = dt * gd[n::-1].copy()
    w[0] *= 0.5
    w[-1] *= 0.5
    q = w @ lap_hist[: n + 1]
    tn = n * dt
    for c in kernel.kink_times:
        tau_star = tn - c
        if tau_star <= 0.0 or tau_star >= tn:
            continue
        g_minus, g_plus = kernel.gdot_limits(c)
        p = tau_star / dt
        pf = int(np.floor(p))
        frac = p - pf
        if min(frac, 1.0 - frac) < 1e-9:
            # the kink sits on a step node j: the panel on each side must
            # use the matching one-sided limit instead of the stored value
            j = pf if frac < 0.5 else pf + 1
            if 0 < j < n:
                q = q + 0.5 * dt * (g_plus - gd[n - j]) * lap_hist[j]
                q = q + 0.5 * dt * (g_minus - gd[n - j]) * lap_hist[j]
            continue
        # kink strictly inside panel [t_p, t_{p+1}]: replace that panel's
        # trapezoid by two sub-panels split at tau_star, with the history
        # interpolated linearly there
        v_lo, v_hi = lap_hist[pf], lap_hist[pf + 1]
        v_star = (1.0 - frac) * v_lo + frac * v_hi
        base = 0.5 * dt * (gd[n - pf] * v_lo + gd[n - pf - 1] * v_hi)
        d_lo = frac * dt
        d_hi = (1.0 - frac) * dt
        exact = 0.5 * d_lo * (gd[n - pf] * v_lo + g_plus * v_star) + 0.5 * d_hi * (
            g_minus * v_star + gd[n - pf - 1] * v_hi
        )
        q = q + (exact - base)
    return q


MEMORY_MODES = ("K-form", "Gdot-form")


def memory_term(
    history,
    kernel: RelaxationKernel,
    t_n: float,
    dt: float,
    mode: str = "K-form",
    grid: Grid | None = None,
) -> Field:
    """Assembled memory convolution at time ``t_n``, exposed for testing.

    ``history`` is the list of displacement Fields at t_m = m*dt.  In
    K-form it holds u^0 .. u^{n-1} with t_n = n*dt (the newest node has
    zero weight through K(0) = 0); in Gdot-form it holds u^0 .. u^n with
    t_n = (len-1)*dt.  An empty history yields the zero field on *grid*.
    """
    if mode not in MEMORY_MODES:
        raise ValueError(f"mode must be one of {MEMORY_MODES}")
    history = list(history)
    if not history:
        if grid is None:
            raise ValueError("empty history needs an explicit grid")
        return Field.zeros(grid)
    grid = history[0].grid
    if any(f.grid != grid for f in history):
        raise ConfigurationError("history fields live on different grids")
    n_expected = len(history) if mode == "K-form" else len(history) - 1
    if abs(t_n - n_expected * dt) > 1e-9 * max(dt, 1.0):
        raise ConfigurationError(
            f"inconsistent history: {len(history)} entries with dt = {dt} "
            f"do not reach t_n = {t_n} in {mode}"
        )
    lap_hist = np.asarray([laplacian_values(f.values, grid.h) for f in history])
    if mode == "K-form":
        n = len(history)
        kvals = IntegratedKernel(kernel).cumulative(dt * np.arange(n + 1))
        return Field(grid, _k_history_sum(lap_hist, n, dt, kvals))
    n = len(history) - 1
    if n == 0:
        return Field.zeros(grid)
    gd = kernel.gdot(dt * np.arange(n + 1), kink_policy="left")
    return Field(grid, _gdot_history_sum(lap_hist, kernel, n, dt, gd))


# ---------------------------------------------------------------------------
# the two schemes
# ---------------------------------------------------------------------------

def solve_integral(spec: ProblemSpec) -> SolutionField:
    """March the integrated-kernel form; explicit, no CFL restriction.

    Aborts with :class:`SolverDivergenceError` if non-finite values
    appear (the scheme is computable for any dt, not unconditionally
    accurate)."""
    started = time.perf_counter()
    grid, dt = spec.grid, spec.dt
    nx, n_steps = grid.n_interior, spec.n_steps
    tgrid = dt * np.arange(n_steps + 1)

    kvals = IntegratedKernel(spec.kernel).cumulative(tgrid)
    u0v = _sample_x(spec.u0_expr, grid.x)
    u1v = _sample_x(spec.u1_expr, grid.x)
    forcing = _double_time_integral(
        _forcing_rows(spec, tgrid), dt, (n_steps + 1, nx)
    )

    u = np.zeros((n_steps + 1, nx))
    lap_hist = np.zeros((n_steps + 1, nx))
    u[0] = u0v
    lap_hist[0] = laplacian_values(u0v, grid.h)
    # a blown-up run is reported through the explicit finite check, so the
    # transient overflow warnings on the way there are just noise
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_steps + 1):
            un = _k_history_sum(lap_hist, n, dt, kvals) + u1v * tgrid[n] + u0v
            if forcing is not None:
                un = un + forcing[n]
            _check_finite(un, n, tgrid[n], "integral")
            u[n] = un
            lap_hist[n] = laplacian_values(un, grid.h)

    s = spec.save_stride
    return SolutionField(
        spec=spec,
        times=tgrid[::s].copy(),
        u=u[::s].copy(),
        v=None,
        meta={
            "scheme": "integral",
            "dt": dt,
            "h": grid.h,
            "kernel": spec.kernel.describe(),
            "memory_quadrature": "product trapezoid on K",
            "kernel_quadrature": (
                "closed form" if spec.kernel.has_closed_k
                else "composite 16-point Gauss panels"
            ),
            "elapsed_s": time.perf_counter() - started,
        },
    )


def solve_differential(spec: ProblemSpec) -> SolutionField:
    """March the second-order-in-time explicit scheme; needs dG/dt and the
    CFL bound dt <= 0.9 h / sqrt(G(0))."""
    started = time.perf_counter()
    grid, dt = spec.grid, spec.dt
    nx, n_steps = grid.n_interior, spec.n_steps
    limit = cfl_limit(spec.kernel, grid)
    if dt > limit:
        raise ConfigurationError(
            f"CFL violation: dt = {dt:.6g} exceeds {CFL_SAFETY} * h / sqrt(G(0)) "
            f"= {limit:.6g}"
        )
    tgrid = dt * np.arange(n_steps + 1)
    g_zero = float(spec.kernel.g(0.0))
    try:
        gd = np.atleast_1d(spec.kernel.gdot(tgrid, kink_policy="left"))
    except DerivativeUndefinedError as exc:
        raise UnsupportedKernelError(
            f"differential scheme needs dG/dt a.e.; {spec.kernel.describe()} "
            f"cannot provide it: {exc}"
        ) from exc

    u0v = _sample_x(spec.u0_expr, grid.x)
    u1v = _sample_x(spec.u1_expr, grid.x)
    fvals = _forcing_rows(spec, tgrid)

    def f_at(n: int) -> float | np.ndarray:
        return 0.0 if fvals is None else fvals[n]

    u = np.zeros((n_steps + 1, nx))
    lap_hist = np.zeros((n_steps + 1, nx))
    u[0] = u0v
    lap_hist[0] = laplacian_values(u0v, grid.h)
    # Taylor startup, second-order consistent
    u[1] = u0v + dt * u1v + 0.5 * dt * dt * (g_zero * lap_hist[0] + f_at(0))
    lap_hist[1] = laplacian_values(u[1], grid.h)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_steps):
            q = _gdot_history_sum(lap_hist, spec.kernel, n, dt, gd)
            un1 = 2.0 * u[n] - u[n - 1] + dt * dt * (g_zero * lap_hist[n] + q + f_at(n))
            _check_finite(un1, n + 1, tgrid[n + 1], "differential")
            u[n + 1] = un1
            lap_hist[n + 1] = laplacian_values(un1, grid.h)

    # velocities: exact initial data, central differences inside, one-sided
    # at the final step
    v = np.empty_like(u)
    v[0] = u1v
    v[1:-1] = (u[2:] - u[:-2]) / (2.0 * dt)
    v[-1] = (u[-1] - u[-2]) / dt

    s = spec.save_stride
    return SolutionField(
        spec=spec,
        times=tgrid[::s].copy(),
        u=u[::s].copy(),
        v=v[::s].copy(),
        meta={
            "scheme": "differential",
            "dt": dt,
            "h": grid.h,
            "kernel": spec.kernel.describe(),
            "memory_quadrature": "trapezoid on Gdot with kink-split panels",
            "cfl_limit": limit,
            "elapsed_s": time.perf_counter() - started,
        },
    )


# ---------------------------------------------------------------------------
# space-time norms and manufactured reference problems
# ---------------------------------------------------------------------------

def _l2_space_time(grid: Grid, times: np.ndarray, values: np.ndarray) -> float:
    """L2 norm over (a, b) x (t_0, t_end): trapezoid in both directions,
    with the zero boundary columns implied."""
    space = grid.h * np.sum(values * values, axis=1)
    if len(times) == 1:
        return float(np.sqrt(space[0]))
    dts = np.diff(times)
    w = np.zeros(len(times))
    w[:-1] += 0.5 * dts
    w[1:] += 0.5 * dts
    return float(np.sqrt(w @ space))


def l2_norm(sol: SolutionField) -> float:
    return _l2_space_time(sol.grid, sol.times, sol.u)


def l2_distance(sol_a: SolutionField, sol_b: SolutionField) -> float:
    """Space-time L2 distance of two solves on identical grid and times."""
    if sol_a.grid != sol_b.grid:
        raise ConfigurationError("solutions live on different grids")
    if sol_a.u.shape != sol_b.u.shape or np.max(np.abs(sol_a.times - sol_b.times)) > 1e-12:
        raise ConfigurationError("solutions saved at different times")
    return _l2_space_time(sol_a.grid, sol_a.times, sol_a.u - sol_b.u)


def l2_error_vs(sol: SolutionField, exact) -> float:
    """Space-time L2 distance to ``exact(x_array, t) -> array``."""
    diff = np.asarray([sol.u[k] - exact(sol.grid.x, float(t)) for k, t in enumerate(sol.times)])
    return _l2_space_time(sol.grid, sol.times, diff)


@dataclass(frozen=True)
class ManufacturedProblem:
    """Closed-form reference problem: data strings plus the exact field."""

    u0: str
    u1: str
    f: str
    kernel: RelaxationKernel
    exact: object  # callable (x_array, t) -> array

    def spec(self, grid: Grid, horizon: float, n_steps: int, scheme: str,
             save_stride: int = 1) -> ProblemSpec:
        return ProblemSpec(
            grid=grid,
            horizon=horizon,
            n_steps=n_steps,
            kernel=self.kernel,
            u0=self.u0,
            u1=self.u1,
            f=self.f,
            scheme=scheme,
            save_stride=save_stride,
        )


def manufactured_prony(kernel, a: float = 0.0, b: float = 1.0) -> ManufacturedProblem:
    """Standing-mode exact solution u*(x, t) = sin(mu (x-a)) cos(t) for an
    exponential-series kernel, with the forcing that makes u* solve the
    viscoelastic equation.

    The memory convolution of cos(t) against each exponential mode has the
    closed form ((1/tau) cos t + sin t - (1/tau) e^{-t/tau}) * tau^2/(1+tau^2)
    scaled per term, so f reduces to a finite combination of cos, sin and
    decaying exponentials.  Both schemes can be checked against ``exact``.
    """
    from .kernels import PronyKernel

    if not isinstance(kernel, PronyKernel):
        raise ConfigurationError("manufactured problem needs a Prony kernel")
    length = b - a
    mu = np.pi / length
    g_zero = float(kernel.g(0.0))
    a_cos = -1.0 + mu * mu * g_zero
    b_sin = 0.0
    exp_terms: list[tuple[float, float]] = []  # (coefficient, rate)
    for g_i, tau_i in kernel.terms:
        k_i = 1.0 / tau_i
        a_cos -= mu * mu * g_i * k_i * k_i / (k_i * k_i + 1.0)
        b_sin -= mu * mu * g_i * k_i / (k_i * k_i + 1.0)
        exp_terms.append((mu * mu * g_i * k_i * k_i / (k_i * k_i + 1.0), k_i))

    shape = f"sin(({mu!r})*(x-({a!r})))"
    parts = [f"({a_cos!r})*cos(t)", f"({b_sin!r})*sin(t)"]
    parts += [f"({c!r})*exp(-({k!r})*t)" for c, k in exp_terms]
    f_src = f"{shape}*({' + '.join(parts)})"

    def exact(x: np.ndarray, t: float) -> np.ndarray:
        return np.sin(mu * (x - a)) * np.cos(t)

    return ManufacturedProblem(u0=shape, u1="0", f=f_src, kernel=kernel, exact=exact)
