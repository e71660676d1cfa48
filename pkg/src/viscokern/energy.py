"""Energy functional, dissipation checks and the eigenmode decay diagnostic.

For a solution u of the viscoelastic problem the tracked energy is

    E(t) = 1/2 int G(t) |u_x|^2 dx  +  1/2 int |u_t|^2 dx
           - 1/2 int_0^t ds Gdot(s) int |u_x(t) - u_x(t-s)|^2 dx.

All three pieces are nonnegative for an admissible kernel (Gdot <= 0),
and with f = 0 the total is nonincreasing; in general it stays below
alpha * e^T * C with alpha = max{1/G(T+1), 1} and a data constant

    C = 1/2 G(0) ||u0'||^2 + 1/2 ||u1||^2 + 1/2 ||f||^2_{L2(D)}.

The history double integral is the quantity separating viscoelastic from
elastic behaviour, so it is computed explicitly even though the a-priori
bound discards it.  Spatial integrals use the trapezoid rule with
one-sided u_x stencils at the boundary nodes; the time quadratures run
over the saved snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expressions
from .grids import dirichlet_eigenpairs
from .solver import ConfigurationError, SolutionField

#: default relative tolerance for the monotonicity verdict (quadrature noise)
DEFAULT_ENERGY_TOL = 1e-3


def _uniform_spacing(times: np.ndarray) -> float:
    if len(times) < 2:
        raise ConfigurationError("need at least two saved snapshots")
    diffs = np.diff(times)
    ds = float(diffs[0])
    if np.max(np.abs(diffs - ds)) > 1e-12 * max(ds, 1.0):
        raise ConfigurationError("saved snapshots are not uniformly spaced")
    return ds


def _full_rows(values: np.ndarray) -> np.ndarray:
    """Append the zero boundary columns to interior snapshot rows."""
    n_t = values.shape[0]
    return np.hstack([np.zeros((n_t, 1)), values, np.zeros((n_t, 1))])


def _ux_rows(h: float, values: np.ndarray) -> np.ndarray:
    """u_x on the full grid: central inside, one-sided at the boundaries."""
    full = _full_rows(values)
    d = np.empty_like(full)
    d[:, 1:-1] = (full[:, 2:] - full[:, :-2]) / (2.0 * h)
    d[:, 0] = (full[:, 1] - full[:, 0]) / h
    d[:, -1] = (full[:, -1] - full[:, -2]) / h
    return d


def _trap_x(h: float, rows: np.ndarray) -> np.ndarray:
    """Trapezoid over the full grid, along the last axis."""
    w = np.full(rows.shape[-1], h)
    w[0] *= 0.5
    w[-1] *= 0.5
    return rows @ w


def reconstruct_velocities(sol: SolutionField) -> np.ndarray:
    """Central-difference velocities from saved snapshots (one-sided at the
    first and last steps: accuracy O(ds^2) inside, O(ds) at the ends)."""
    ds = _uniform_spacing(sol.times)
    v = np.empty_like(sol.u)
    v[0] = (sol.u[1] - sol.u[0]) / ds
    if len(sol.times) > 2:
        v[1:-1] = (sol.u[2:] - sol.u[:-2]) / (2.0 * ds)
    v[-1] = (sol.u[-1] - sol.u[-2]) / ds
    return v


@dataclass
class EnergyReport:
    times: np.ndarray
    elastic: np.ndarray    # 1/2 int G(t) |u_x|^2
    kinetic: np.ndarray    # 1/2 int |u_t|^2
    history: np.ndarray    # -1/2 int_0^t Gdot(s) |u_x(t)-u_x(t-s)|^2 dx ds
    total: np.ndarray
    alpha: float           # max{1/G(T+1), 1}
    constant: float        # data constant C
    bound: float           # alpha * e^T * C

    @property
    def initial(self) -> float:
        return float(self.total[0])


def energy_series(sol: SolutionField, kernel=None) -> EnergyReport:
    """Per-snapshot energy terms plus the a-priori bound.

    Velocities are taken from the solution when the differential scheme
    stored them, otherwise reconstructed by central differences.  The
    history integral runs over the saved snapshots, so a coarse save
    stride coarsens it too; fewer than three snapshots are rejected.
    """
    kernel = kernel if kernel is not None else sol.spec.kernel
    if len(sol.times) < 3:
        raise ConfigurationError(
            "energy series needs at least 3 saved snapshots; "
            "reduce save_stride"
        )
    ds = _uniform_spacing(sol.times)
    grid = sol.grid
    h = grid.h
    n_saved = len(sol.times)

    v = sol.v if sol.v is not None else reconstruct_velocities(sol)
    uxs = _ux_rows(h, sol.u)
    g_at = np.atleast_1d(kernel.g(sol.times))
    gdot_at = np.atleast_1d(kernel.gdot(sol.times, kink_policy="left"))

    elastic = 0.5 * g_at * _trap_x(h, uxs * uxs)
    kinetic = 0.5 * _trap_x(h, _full_rows(v) ** 2)

    history = np.zeros(n_saved)
    for n in range(1, n_saved):
        # D(t_n, s_k) = int |u_x(t_n) - u_x(t_n - s_k)|^2 dx, k = 0..n
        diffs = uxs[n][None, :] - uxs[n::-1]
        d_vals = _trap_x(h, diffs * diffs)
        w = np.full(n + 1, ds)
        w[0] *= 0.5
        w[-1] *= 0.5
        history[n] = -0.5 * float(w @ (gdot_at[: n + 1] * d_vals))

    horizon = sol.spec.horizon
    alpha = max(1.0 / float(kernel.g(horizon + 1.0)), 1.0)
    constant = float(
        0.5 * float(kernel.g(0.0)) * _trap_x(h, uxs[0] ** 2)
        + 0.5 * _trap_x(h, _full_rows(v[:1])[0] ** 2)
    )
    if not expressions.is_zero(sol.spec.f_expr):
        x_full = np.concatenate(([grid.a], grid.x, [grid.b]))
        f_rows = np.asarray(
            [
                [expressions.evaluate(sol.spec.f_expr, x=float(xi), t=float(t)) for xi in x_full]
                for t in sol.times
            ]
        )
        space = _trap_x(h, f_rows * f_rows)
        wt = np.zeros(n_saved)
        wt[:-1] += 0.5 * ds
        wt[1:] += 0.5 * ds
        constant += 0.5 * float(wt @ space)

    total = elastic + kinetic + history
    return EnergyReport(
        times=sol.times.copy(),
        elastic=elastic,
        kinetic=kinetic,
        history=history,
        total=total,
        alpha=alpha,
        constant=constant,
        bound=float(alpha * np.exp(horizon) * constant),
    )


@dataclass
class DissipationVerdict:
    monotone: bool | None   # None when f != 0 (check not applicable)
    bounded: bool
    max_increase: float     # largest E(t_{k+1}) - E(t_k)
    max_total: float
    bound: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.bounded and self.monotone is not False


def dissipation_check(
    report: EnergyReport,
    f_is_zero: bool,
    tol: float = DEFAULT_ENERGY_TOL,
) -> DissipationVerdict:
    """Monotone decrease (source-free case only) and the a-priori bound.

    Monotonicity allows an increase of tol * E(0) per step to absorb
    quadrature noise; the bound check allows an absolute slack of tol.
    With a nonzero source the monotonicity verdict is "not applicable"
    (None) and only the bound is evaluated.
    """
    increments = np.diff(report.total)
    max_increase = float(increments.max()) if len(increments) else 0.0
    monotone: bool | None
    if f_is_zero:
        monotone = bool(np.all(increments <= tol * max(report.initial, 0.0)))
    else:
        monotone = None
    max_total = float(report.total.max())
    bounded = bool(max_total <= report.bound + tol)
    return DissipationVerdict(
        monotone=monotone,
        bounded=bounded,
        max_increase=max_increase,
        max_total=max_total,
        bound=report.bound,
        tol=tol,
    )


def identity_residual(sol: SolutionField, kernel=None) -> np.ndarray:
    """Residual of the energy rate identity at the interior saved steps:

        dE/dt = int f u_t + 1/2 Gdot(t) int |u_x|^2
                - 1/2 int_0^t Gddot(s) int |u_x(t) - u_x(t-s)|^2 dx ds.

    Needs a kernel with a genuine second derivative (exponential series or
    mollified); for a raw wedge the curvature is a point mass at the kink
    and the identity is not evaluated.  Purely diagnostic: the residual
    carries the O(ds) differencing error of the outer derivative.
    """
    kernel = kernel if kernel is not None else sol.spec.kernel
    report = energy_series(sol, kernel)
    ds = _uniform_spacing(sol.times)
    grid = sol.grid
    h = grid.h
    gddot_at = np.atleast_1d(kernel.gddot(sol.times))  # may raise
    gdot_at = np.atleast_1d(kernel.gdot(sol.times, kink_policy="left"))
    v = sol.v if sol.v is not None else reconstruct_velocities(sol)
    uxs = _ux_rows(h, sol.u)

    f_zero = expressions.is_zero(sol.spec.f_expr)
    x_full = np.concatenate(([grid.a], grid.x, [grid.b]))
    # stop one step short of the end: the final velocity is one-sided and
    # would leak an O(1) artefact into the centred rate at the last step
    residuals = np.empty(len(sol.times) - 3)
    for n in range(1, len(sol.times) - 2):
        rate = (report.total[n + 1] - report.total[n - 1]) / (2.0 * ds)
        rhs = 0.5 * gdot_at[n] * float(_trap_x(h, uxs[n][None, :] ** 2)[0])
        if not f_zero:
            f_row = np.asarray(
                [expressions.evaluate(sol.spec.f_expr, x=float(xi), t=float(sol.times[n]))
                 for xi in x_full]
            )
            rhs += float(_trap_x(h, (f_row * _full_rows(v[n : n + 1])[0])[None, :])[0])
        diffs = uxs[n][None, :] - uxs[n::-1]
        d_vals = _trap_x(h, diffs * diffs)
        w = np.full(n + 1, ds)
        w[0] *= 0.5
        w[-1] *= 0.5
        rhs -= 0.5 * float(w @ (gddot_at[: n + 1] * d_vals))
        residuals[n - 1] = rate - rhs
    return residuals


@dataclass
class ModeDecayReport:
    """|(w(t), w_i)| for the difference w of two solves, per Dirichlet mode."""

    times: np.ndarray
    magnitudes: np.ndarray  # (n_modes, n_times)

    @property
    def sup_per_mode(self) -> np.ndarray:
        return self.magnitudes.max(axis=1)


def _values_on(sol: SolutionField, x_target: np.ndarray, t: float) -> np.ndarray:
    """Snapshot of *sol* at time t on the target interior nodes, linear in
    both time (between saved steps) and space (through the boundary zeros)."""
    times = sol.times
    idx = int(np.searchsorted(times, t))
    idx = min(max(idx, 0), len(times) - 1)
    if idx > 0 and abs(times[idx] - t) > 1e-12 and times[idx] > t:
        lo = idx - 1
        theta = (t - times[lo]) / (times[idx] - times[lo])
        row = (1.0 - theta) * sol.u[lo] + theta * sol.u[idx]
    else:
        row = sol.u[idx]
    g = sol.grid
    x_full = np.concatenate(([g.a], g.x, [g.b]))
    return np.interp(x_target, x_full, np.concatenate(([0.0], row, [0.0])))


def mode_decay_diagnostic(
    sol_a: SolutionField,
    sol_b: SolutionField,
    n_modes: int,
) -> ModeDecayReport:
    """Projection magnitudes of w = u_a - u_b onto the first Dirichlet
    eigenmodes, over the coarser solution's saved times.

    The two solves must share the domain (scheme and resolution may
    differ; the finer solution is interpolated to the coarser grid).  As
    both resolutions are refined every mode series shrinks toward zero,
    mirroring the argument that forces the projections of a difference of
    two solutions to vanish identically.
    """
    ga, gb = sol_a.grid, sol_b.grid
    if (ga.a, ga.b) != (gb.a, gb.b):
        raise ConfigurationError("solutions live on incompatible domains")
    coarse, fine = (sol_a, sol_b) if ga.n_interior <= gb.n_interior else (sol_b, sol_a)
    times = coarse.times if len(coarse.times) <= len(fine.times) else fine.times
    grid = coarse.grid
    pairs = dirichlet_eigenpairs(grid, n_modes)  # validates n_modes
    modes = np.asarray([w.values for _, w in pairs])
    mags = np.empty((n_modes, len(times)))
    for k, t in enumerate(times):
        wa = _values_on(sol_a, grid.x, float(t))
        wb = _values_on(sol_b, grid.x, float(t))
        mags[:, k] = np.abs(grid.h * (modes @ (wa - wb)))
    return ModeDecayReport(times=np.asarray(times, dtype=float).copy(), magnitudes=mags)
