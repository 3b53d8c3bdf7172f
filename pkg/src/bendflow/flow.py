"""Minimizing-movements time stepper for the obstacle-constrained flow.

One step from f solves

    minimize  Phi(u) = E_h(u) + ||u - f||_{L2}^2 / (2 tau)
    over      u >= psi nodewise,  u(0) = u(1) = 0,

and certifies the discrete variational inequality through a KKT report:
stationarity on inactive nodes, nonnegative multiplier on active nodes.
Iterating the step yields a trajectory whose energies are nonincreasing and
which satisfies, step by step,

    ||u_{k+1} - u_k||^2 / (2 tau)  <=  E_h(u_k) - E_h(u_{k+1}),

the inequality all a-priori bounds of the scheme rest on.

Inner solver: projected Newton on the box constraint. The search direction
solves the exact banded Hessian of Phi (with Levenberg damping if it is not
positive definite) restricted to the estimated inactive set; steps are
accepted by Armijo backtracking on Phi along the projected arc, with a
residual-decrease acceptance once Phi differences fall below floating-point
resolution. Every linear solve is mirror-averaged and every stencil is
palindromic, so the whole step commutes with grid reversal exactly in
floating point; symmetric data therefore stays symmetric to the bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solveh_banded

from .discretization import (
    GridFunction,
    Obstacle,
    UniformGrid,
    _HESS_BW,
    _derivative_tables,
    _energy_gradient_raw,
    _energy_hessian_bands,
    _energy_raw,
    trapezoid_weights,
)
from .errors import DomainError, StepConvergenceError
from .specialfn import g, g_inv

_BW = _HESS_BW


@dataclass(frozen=True)
class FlowConfig:
    """Time step, horizon and inner-solver knobs."""

    tau: float
    t_end: float
    inner_tol: float = 1e-8
    inner_max_iter: int = 80
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    coincidence_tol: float | None = None  # None: 10 * inner_tol * sqrt(h)

    def __post_init__(self):
        if not (self.tau > 0):
            raise DomainError("tau must be positive")
        if not (self.t_end >= self.tau):
            raise DomainError("t_end must be at least one step")
        if not (self.inner_tol > 0):
            raise DomainError("inner_tol must be positive")
        if not (0 < self.armijo_c < 1):
            raise DomainError("armijo_c must lie in (0,1)")
        if not (0 < self.backtrack < 1):
            raise DomainError("backtrack must lie in (0,1)")

    def coincidence_tolerance(self, grid: UniformGrid) -> float:
        if self.coincidence_tol is not None:
            return self.coincidence_tol
        return 10.0 * self.inner_tol * math.sqrt(grid.h)


@dataclass(frozen=True)
class KKTReport:
    """Certificate of the discrete variational inequality for one step.

    r = (u - f)/tau + grad E_h(u) is the nodal residual. Nodes with gap
    below `active_tol` (chosen to dominate the solver slack) are classified
    active; a valid step has |r| <= tol on inactive nodes and r >= -tol on
    active ones, with tol = inner_tol * scale and scale the natural size
    1 + ||grad E_h||_inf + ||udot||_inf.
    """

    stationarity_residual: float
    multiplier_min: float
    active_set: np.ndarray
    scale: float
    natural_residual: float
    active_tol: float
    inner_iterations: int

    def satisfies(self, inner_tol: float) -> bool:
        tol = inner_tol * self.scale
        return self.stationarity_residual <= tol and self.multiplier_min >= -tol


@dataclass
class Trajectory:
    """Flow iterates with per-step diagnostics."""

    grid: UniformGrid
    obstacle: Obstacle
    tau: float
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterates: list[GridFunction] = field(default_factory=list)
    energies: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    coincidence_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    inner_iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    symmetry_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    kkt_reports: list[KKTReport] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.iterates) - 1

    @property
    def t_end(self) -> float:
        return float(self.times[-1])


# ---------------------------------------------------------------------------
# inner solver
# ---------------------------------------------------------------------------

def _mirror_bands(ab: np.ndarray) -> np.ndarray:
    """Band array of the reversal-conjugated matrix R M R."""
    out = np.empty_like(ab)
    for k in range(-_BW, _BW + 1):
        out[_BW + k, :] = ab[_BW - k, ::-1]
    return out


def _solve_banded_mirror(ab: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve averaged with its mirrored twin.

    For any symmetric banded system the average of M^{-1} b and the
    reversal of (RMR)^{-1} (Rb) equals M^{-1} b exactly in real arithmetic;
    computing both and averaging makes the floating-point result commute
    with reversal. Raises np.linalg.LinAlgError if M is not positive
    definite.
    """
    d1 = solveh_banded(ab[:_BW + 1, :], b, lower=False)
    d2 = solveh_banded(_mirror_bands(ab)[:_BW + 1, :], b[::-1], lower=False)[::-1]
    return 0.5 * (d1 + d2)


def _interior_bands(ab_full: np.ndarray, n: int) -> np.ndarray:
    """Restrict full-node bands to the interior block, dropping couplings to
    the fixed endpoint nodes."""
    ab = ab_full[:, 1:n].copy()
    ni = n - 1
    for k in range(-_BW, _BW + 1):
        cols = np.arange(ni)
        rows = cols + k
        bad = (rows < 0) | (rows >= ni)
        ab[_BW + k, cols[bad]] = 0.0
    return ab


def _pin_active(ab: np.ndarray, rhs: np.ndarray, act: np.ndarray,
                gap: np.ndarray) -> None:
    """Replace rows/columns of active indices by the identity; the Newton
    step then moves them exactly onto the bound."""
    ni = ab.shape[1]
    idx = np.nonzero(act)[0]
    if not idx.size:
        return
    for k in range(-_BW, _BW + 1):
        if k == 0:
            continue
        cols = np.arange(max(0, -k), min(ni, ni - k))
        rows = cols + k
        mask = act[cols] | act[rows]
        ab[_BW + k, cols[mask]] = 0.0
    ab[_BW, idx] = 1.0
    rhs[idx] = -gap[idx]


def _residual_floor(v: np.ndarray, h: float, tau: float) -> float:
    """Smallest meaningful stationarity residual at this state.

    Nodal values carry relative rounding eps, so the best representable
    point near the true minimizer has a residual of about
    ||hessian|| * eps * ||v||; certifying below that is noise. The row-sum
    bound 32/h^4 covers the leading fourth-order block, the u''-dependent
    term the first-order coupling, and 1/tau the proximal part.
    """
    _, upp = _derivative_tables(v, h)
    row_bound = 32.0 / h**4 + 20.0 * float(np.max(upp**2)) / h**2 + 1.0 / tau
    amp = max(float(np.max(np.abs(v))), h * h)
    return np.finfo(float).eps * row_bound * amp


def _kkt_arrays(v, f, psi, h, tau, floor_over_tol: float = 0.0):
    ge = _energy_gradient_raw(v, h)
    udot = (v - f) / tau
    r = ge + udot
    r[0] = r[-1] = 0.0
    scale = (1.0 + float(np.max(np.abs(ge))) + float(np.max(np.abs(udot)))
             + floor_over_tol)
    pi = v - np.maximum(psi, v - r)
    pi[0] = pi[-1] = 0.0
    return r, pi, scale


def _mm_step_raw(f: np.ndarray, psi: np.ndarray, h: float, cfg: FlowConfig):
    """Solve one proximal step; returns (v, r, pi, scale, iterations).

    Drives the natural-map residual pi = v - Pi_box(v - r) below a quarter
    of inner_tol * scale; anything <= inner_tol * scale at exit still counts
    as converged, the headroom is for the certificate.
    """
    n = len(f) - 1
    tau = cfg.tau
    w = np.full(n + 1, h)
    w[0] = w[-1] = h / 2.0

    def phi_val(u):
        return _energy_raw(u, h) + 0.5 / tau * float(np.sum(w * (u - f) ** 2))

    v = np.maximum(f, psi)
    v[0] = v[-1] = 0.0
    pv = phi_val(v)
    fot = _residual_floor(v, h, tau) / cfg.inner_tol
    r, pi, scale = _kkt_arrays(v, f, psi, h, tau, fot)
    nit = 0
    for _ in range(cfg.inner_max_iter):
        pimax = float(np.max(np.abs(pi)))
        if pimax <= 0.25 * cfg.inner_tol * scale:
            break
        nit += 1

        ab_full = _energy_hessian_bands(v, h)
        ab_full[_BW, :] += w / tau
        ab = _interior_bands(ab_full, n)
        gap = (v - psi)[1:n]
        act = (gap <= min(1e-9, pimax)) & (r[1:n] > 0)
        rhs = -(w[1:n] * r[1:n])
        _pin_active(ab, rhs, act, gap)

        d = None
        lam = 0.0
        lam0 = 1e-12 * float(np.max(ab[_BW, :]))
        for _ in range(40):
            try:
                abl = ab if lam == 0.0 else _damped(ab, lam)
                di = _solve_banded_mirror(abl, rhs)
                cand = np.zeros(n + 1)
                cand[1:n] = di
                if float(np.sum(w * r * cand)) < 0.0 or not cand.any():
                    d = cand
                    break
            except np.linalg.LinAlgError:
                pass
            lam = lam0 if lam == 0.0 else lam * 10.0
        if d is None or not d.any():
            break

        moved = False
        alpha = 1.0
        for _ in range(40):
            vt = np.maximum(psi, v + alpha * d)
            vt[0] = vt[-1] = 0.0
            pt = phi_val(vt)
            dec = float(np.sum(w * r * (vt - v)))
            if pt <= pv + cfg.armijo_c * dec and pt < pv:
                v, pv = vt, pt
                r, pi, scale = _kkt_arrays(v, f, psi, h, tau, fot)
                moved = True
                break
            alpha *= cfg.backtrack
        if not moved:
            # Phi differences are below roundoff here; ask for strict
            # progress of the residual instead, never letting Phi rise
            # beyond evaluation noise.
            alpha = 1.0
            for _ in range(40):
                vt = np.maximum(psi, v + alpha * d)
                vt[0] = vt[-1] = 0.0
                pt = phi_val(vt)
                rt, pit, st = _kkt_arrays(vt, f, psi, h, tau, fot)
                if (pt <= pv + 1e-13 * max(1.0, abs(pv))
                        and float(np.max(np.abs(pit))) <= 0.9 * pimax):
                    v, pv = vt, min(pt, pv)
                    r, pi, scale = rt, pit, st
                    moved = True
                    break
                alpha *= cfg.backtrack
        if not moved:
            break
    return v, r, pi, scale, nit


def _damped(ab: np.ndarray, lam: float) -> np.ndarray:
    out = ab.copy()
    out[_BW, :] += lam
    return out


def _build_report(v, f, psi, h, tau, cfg: FlowConfig, r, pi, scale, nit) -> KKTReport:
    active_tol = 10.0 * cfg.inner_tol * scale
    gap = v - psi
    act = gap <= active_tol
    act[0] = act[-1] = False
    inact = ~act
    inact[0] = inact[-1] = False
    stat = float(np.max(np.abs(r[inact]))) if inact.any() else 0.0
    mult = float(np.min(r[act])) if act.any() else math.inf
    return KKTReport(
        stationarity_residual=stat,
        multiplier_min=mult,
        active_set=np.nonzero(act)[0],
        scale=scale,
        natural_residual=float(np.max(np.abs(pi))),
        active_tol=active_tol,
        inner_iterations=nit,
    )


def mm_step(f: GridFunction, obstacle: Obstacle, cfg: FlowConfig):
    """One minimizing-movement step from f. Returns (iterate, KKTReport).

    Guarantees Phi(u) <= Phi(f), hence E_h(u) <= E_h(f) and
    ||u - f||^2/(2 tau) <= E_h(f) - E_h(u), and that u >= psi exactly.
    Raises StepConvergenceError (with the partial iterate attached) if the
    residual is still above inner_tol * scale after inner_max_iter.
    """
    if f.grid != obstacle.grid:
        raise DomainError("iterate and obstacle on different grids")
    psi = obstacle.samples.values
    fv = f.values
    if fv[0] != 0.0 or fv[-1] != 0.0:
        raise DomainError("iterate must vanish at the endpoints")
    if np.any(fv < psi):
        raise DomainError("iterate must lie above the obstacle nodewise")
    h = f.grid.h
    v, r, pi, scale, nit = _mm_step_raw(fv, psi, h, cfg)
    if float(np.max(np.abs(pi))) > cfg.inner_tol * scale:
        raise StepConvergenceError(
            f"inner solver stopped at residual {float(np.max(np.abs(pi))):.3e} "
            f"(tolerance {cfg.inner_tol * scale:.3e})",
            partial=v,
        )
    report = _build_report(v, fv, psi, h, cfg.tau, cfg, r, pi, scale, nit)
    return GridFunction(f.grid, v), report


def run_flow(u0: GridFunction, obstacle: Obstacle, cfg: FlowConfig,
             stop_when_stall_rate: float | None = None) -> Trajectory:
    """Iterate mm_step until t_end (or until the energy decrease per unit
    time falls below `stop_when_stall_rate`). Records all diagnostics.
    """
    from .specialfn import c0  # local import keeps module load light

    grid = u0.grid
    if grid != obstacle.grid:
        raise DomainError("initial datum and obstacle on different grids")
    psi = obstacle.samples.values
    if np.any(u0.values < psi):
        raise DomainError("initial datum must lie above the obstacle")
    if u0.values[0] != 0.0 or u0.values[-1] != 0.0:
        raise DomainError("initial datum must vanish at the endpoints")

    traj = Trajectory(grid=grid, obstacle=obstacle, tau=cfg.tau)
    e0 = _energy_raw(u0.values, grid.h)
    threshold = c0() ** 2 / 4.0
    if e0 >= threshold:
        traj.warnings.append(
            f"initial energy {e0:.6g} is not below the well-posedness "
            f"threshold c0^2/4 = {threshold:.6g}; run is outside the proven regime"
        )
    elif e0 > g(2.0) ** 2:
        traj.warnings.append(
            f"initial energy {e0:.6g} exceeds G(2)^2 = {g(2.0) ** 2:.6g}; the "
            "limit is the unique symmetric critical point but is not proven "
            "to be a minimizer at this energy"
        )
    if not obstacle.assumption1_ok:
        traj.warnings.append(
            "obstacle violates the sign assumption (negative ends, positive "
            "maximum); constrained-run interpretation is off"
        )
    if cfg.tau > 10.0 * grid.h**2:
        traj.warnings.append(
            f"tau={cfg.tau:.3g} exceeds 10 h^2 = {10 * grid.h**2:.3g}; the scheme "
            "stays energy-stable but variational-inequality residuals blur"
        )

    ctol = cfg.coincidence_tolerance(grid)
    n_steps = int(round(cfg.t_end / cfg.tau))
    times = [0.0]
    iterates = [u0]
    energies = [e0]
    step_norms = []
    counts = [int(np.sum((u0.values - psi) <= ctol))]
    inner = []
    sym = [symmetry_residual(u0)]
    w = trapezoid_weights(grid)

    u = u0
    slow_streak = 0
    for k in range(n_steps):
        try:
            un, report = mm_step(u, obstacle, cfg)
        except StepConvergenceError as err:
            err.step_index = k
            raise
        dn = float(np.sqrt(np.sum(w * (un.values - u.values) ** 2)))
        times.append((k + 1) * cfg.tau)
        iterates.append(un)
        energies.append(_energy_raw(un.values, grid.h))
        step_norms.append(dn)
        counts.append(int(np.sum((un.values - psi) <= ctol)))
        inner.append(report.inner_iterations)
        sym.append(symmetry_residual(un))
        traj.kkt_reports.append(report)
        u = un
        if stop_when_stall_rate is not None:
            rate = (energies[-2] - energies[-1]) / cfg.tau
            # a transient plateau is not a stall; ask for a streak
            slow_streak = slow_streak + 1 if rate < stop_when_stall_rate else 0
            if slow_streak >= 3:
                break

    traj.times = np.array(times)
    traj.iterates = iterates
    traj.energies = np.array(energies)
    traj.step_norms = np.array(step_norms)
    traj.coincidence_counts = np.array(counts, dtype=int)
    traj.inner_iterations = np.array(inner, dtype=int)
    traj.symmetry_residuals = np.array(sym)
    return traj


# ---------------------------------------------------------------------------
# interpolations and diagnostics
# ---------------------------------------------------------------------------

def interpolate_constant(traj: Trajectory, t: float) -> GridFunction:
    """Piecewise-constant interpolant: u_{(k+1)tau} on (k tau, (k+1) tau],
    u_0 at t = 0."""
    if not (0.0 <= t <= traj.t_end):
        raise DomainError(f"t={t} outside [0, {traj.t_end}]")
    if t == 0.0:
        return traj.iterates[0]
    k = math.ceil(t / traj.tau - 1e-12)
    k = min(max(k, 1), traj.n_steps)
    return traj.iterates[k]


def interpolate_linear(traj: Trajectory, t: float) -> GridFunction:
    """Piecewise-linear interpolant between consecutive iterates."""
    if not (0.0 <= t <= traj.t_end):
        raise DomainError(f"t={t} outside [0, {traj.t_end}]")
    k = min(int(t / traj.tau), traj.n_steps - 1)
    lam = (t - k * traj.tau) / traj.tau
    a = traj.iterates[k].values
    b = traj.iterates[k + 1].values
    return GridFunction(traj.grid, (1.0 - lam) * a + lam * b)


@dataclass(frozen=True)
class DissipationReport:
    lhs: float              # E(u_K) + sum ||du||^2 / (2 tau)
    rhs: float              # E(u_0) + n_steps * slack
    slack_per_step: float
    dissipated_sum: float   # sum ||du||^2 / tau, bounded by 2 E(u_0)
    udot_bound: float       # 2 E(u_0)
    holds: bool
    udot_bound_holds: bool


def dissipation_report(traj: Trajectory, slack_per_step: float | None = None
                       ) -> DissipationReport:
    """Check E(u_K) + sum_k ||u_{k+1}-u_k||^2/(2 tau) <= E(u_0) + K * slack
    and the square-sum bound sum ||du||^2 / tau <= 2 E(u_0)."""
    if traj.n_steps < 1:
        raise DomainError("trajectory has no steps")
    if slack_per_step is None:
        slack_per_step = 1e-12 * max(1.0, traj.energies[0])
    sumsq = float(np.sum(traj.step_norms**2))
    lhs = float(traj.energies[-1]) + sumsq / (2.0 * traj.tau)
    rhs = float(traj.energies[0]) + traj.n_steps * slack_per_step
    dsum = sumsq / traj.tau
    bound = 2.0 * float(traj.energies[0])
    return DissipationReport(
        lhs=lhs, rhs=rhs, slack_per_step=slack_per_step,
        dissipated_sum=dsum, udot_bound=bound,
        holds=lhs <= rhs, udot_bound_holds=dsum <= bound + traj.n_steps * slack_per_step,
    )


@dataclass(frozen=True)
class HolderReport:
    constant: float
    max_violation: float
    pairs_checked: int
    holds: bool


def holder_check(traj: Trajectory, pairs=None, rng=None, n_pairs: int = 100
                 ) -> HolderReport:
    """Verify ||u(t) - u(s)|| <= D sqrt(|t-s|) on the linear interpolant,
    with D = sqrt(sum ||du||^2 / tau) computed from the run itself."""
    if traj.n_steps < 1:
        raise DomainError("trajectory has no steps")
    d = math.sqrt(float(np.sum(traj.step_norms**2)) / traj.tau)
    if pairs is None:
        rng = rng or np.random.default_rng(0)
        pairs = rng.uniform(0.0, traj.t_end, size=(n_pairs, 2))
    w = trapezoid_weights(traj.grid)
    worst = -math.inf
    for s, t in pairs:
        us = interpolate_linear(traj, float(s)).values
        ut = interpolate_linear(traj, float(t)).values
        dist = math.sqrt(float(np.sum(w * (ut - us) ** 2)))
        bound = d * math.sqrt(abs(t - s))
        worst = max(worst, dist - bound)
    tol = 1e-12 * max(1.0, d)
    return HolderReport(constant=d, max_violation=worst,
                        pairs_checked=len(pairs), holds=worst <= tol)


def coincidence_set(u: GridFunction, obstacle: Obstacle, tol: float) -> np.ndarray:
    """Indices where u - psi <= tol."""
    if u.grid != obstacle.grid:
        raise DomainError("operands on different grids")
    return np.nonzero(u.values - obstacle.samples.values <= tol)[0]


def touch_window(e0: float, inf_energy: float) -> float:
    """Length L0 such that on every time window of length L0 the flow must
    touch the obstacle, valid for initial energies below G(sqrt(2/3))^2:

        L0 = Ginv(sqrt(E0))^2 / (2 infE) * 1 / (5/(1 + Ginv(sqrt(E0))^2) - 3).
    """
    if not (inf_energy > 0.0):
        raise DomainError("inf_energy must be positive")
    limit = g(math.sqrt(2.0 / 3.0)) ** 2
    if not (0.0 <= e0 < limit):
        raise DomainError(
            f"touch window needs initial energy below G(sqrt(2/3))^2 = "
            f"{limit:.12g}, got {e0:.12g} (denominator would not be positive)"
        )
    s = g_inv(math.sqrt(e0))
    denom = 5.0 / (1.0 + s * s) - 3.0
    return s * s / (2.0 * inf_energy) / denom


def navier_diagnostic(u: GridFunction) -> tuple[float, float]:
    """|u''| at both ends from one-sided second-order stencils.

    Converged flow iterates approach the natural conditions u''(0) = u''(1)
    = 0, so these decay with h; generic functions give O(1) values.
    """
    from .discretization import end_second_diffs
    return end_second_diffs(u)


def symmetry_residual(u: GridFunction) -> float:
    """max_i |u_i - u_{n-i}|; zero iff the nodal data is reversal-symmetric."""
    v = u.values
    return float(np.max(np.abs(v - v[::-1])))
