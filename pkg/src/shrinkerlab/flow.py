"""Radial heat-flow evolution in similarity variables.

With ``tau = ln(T/(T-t))`` and ``y = x/sqrt(T-t)`` the corotational flow
becomes

    psi_tau = Delta psi - Lambda psi + f(psi),   Lambda g = (y . grad g + g)/2,
    f(psi)  = (n-3) (2 alpha psi^3 - 3 beta |y|^2 psi^5),

whose steady state is the shrinker ``phi``.  The production path evolves the
perturbation ``varphi = psi - phi``:

    varphi_tau = (Delta - Lambda + V) varphi + N(varphi).

The linear part is implicit (sparse LU, factored once per configuration) and
the nonlinearity explicit.  The blowup time ``T`` enters only through the
initial data and is selected by bisection so that the component along the
gauge mode ``G`` stays at zero.
"""

from __future__ import annotations

import csv
import functools
import io
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import sparse, special
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import splu

from .geometry import TargetGeometry, potential_V
from .norms import AnalyticForm, RadialField, RadialGrid, h_inner, h_norm, sphere_area
from .quadrature import integrate
from .shrinker import ShrinkerProfile
from .spectral import gauge_mode

log = logging.getLogger(__name__)

SCHEMES = ("be", "cn")
DRIFTS = ("upwind2", "upwind1", "centered")
MODES = ("perturbation", "full")


class RangeGuardViolation(RuntimeError):
    """``|r psi|`` left the range where the closed-form nonlinearity holds."""

    def __init__(self, r, value, limit):
        super().__init__(f"|r psi| = {value:.6g} exceeds {limit:.6g} at r = {r:.6g}")
        self.r, self.value, self.limit = r, value, limit


class ShootingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Discretization and run parameters.

    ``range_guard`` defaults to ``u_core + 0.04`` of the geometry in use.
    ``growth_guard`` aborts a nonlinear run once ``sup |varphi|`` exceeds that
    fraction of ``phi(0)``, which keeps detuned runs from wandering far from
    the shrinker.
    """

    n: int = 6
    R_max: float = 25.0
    N: int = 2000
    dt: float = 0.01
    tau_end: float = 8.0
    scheme: str = "cn"
    T_bracket: tuple = (0.9, 1.1)
    range_guard: Optional[float] = None
    growth_guard: float = 0.5
    drift: str = "upwind2"
    mode: str = "perturbation"
    with_potential: bool = True
    with_nonlinearity: bool = True
    tau_out: float = 0.05
    tau_probe: float = 6.0
    tol_rel: float = 1e-8
    max_bisect: int = 40
    fit_window: tuple = (2.0, 8.0)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.R_max < 20:
            raise ValueError("R_max must be at least 20")
        if self.N < 10:
            raise ValueError("N too small")
        lo, hi = self.T_bracket
        if not (0.5 <= lo < hi <= 1.5):
            raise ValueError("T_bracket must satisfy 1/2 <= lo < hi <= 3/2")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.drift not in DRIFTS:
            raise ValueError(f"drift must be one of {DRIFTS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        object.__setattr__(self, "T_bracket", (float(lo), float(hi)))
        object.__setattr__(self, "fit_window", tuple(float(x) for x in self.fit_window))

    def guard(self, geom):
        return geom.u_core + 0.04 if self.range_guard is None else self.range_guard

    def grid(self):
        return RadialGrid.uniform(self.n, self.R_max, self.N)

    def to_dict(self):
        d = asdict(self)
        d["T_bracket"] = list(self.T_bracket)
        d["fit_window"] = list(self.fit_window)
        return d


# ---------------------------------------------------------------------------
# discrete operators


def linear_operator(config: SimConfig, geom: TargetGeometry, shr: ShrinkerProfile, with_potential=None):
    """Sparse matrix of ``Delta - Lambda (+ V)`` on the nodes ``i*h``.

    Row 0 uses the even extension, where ``Delta u(0) = n u''(0)``.  The
    value at ``R_max`` is pinned to zero.
    """
    if with_potential is None:
        with_potential = config.with_potential and config.mode == "perturbation"
    n, N = config.n, config.N
    h = config.R_max / N
    r = h * np.arange(N)
    rows, cols, vals = [], [], []

    def put(i, j, v):
        if 0 <= j < N:
            rows.append(i)
            cols.append(j)
            vals.append(v)

    i = np.arange(1, N)
    ri = r[1:]
    # Laplacian
    put(0, 0, -2.0 * n / h**2)
    put(0, 1, 2.0 * n / h**2)
    for ii, rr in zip(i, ri):
        put(ii, ii - 1, 1 / h**2 - (n - 1) / (2 * rr * h))
        put(ii, ii, -2 / h**2)
        put(ii, ii + 1, 1 / h**2 + (n - 1) / (2 * rr * h))
    # drift -r u'/2, transport outward
    for ii, rr in zip(i, ri):
        c = -0.5 * rr
        if config.drift == "centered":
            put(ii, ii + 1, c / (2 * h))
            put(ii, ii - 1, -c / (2 * h))
        elif config.drift == "upwind1":
            put(ii, ii, c / h)
            put(ii, ii - 1, -c / h)
        else:
            put(ii, ii, 3 * c / (2 * h))
            put(ii, ii - 1, -4 * c / (2 * h))
            # node -1 mirrors node 1
            put(ii, ii - 2 if ii >= 2 else 1, c / (2 * h))
    diag = np.full(N, -0.5)
    if with_potential:
        diag = diag + potential_V(geom, shr, r)
    M = sparse.coo_matrix((vals, (rows, cols)), shape=(N, N)).tocsr()
    return (M + sparse.diags(diag)).tocsc()


def _nonlinear_perturbation(v, r, p, n, al, be):
    r2 = r * r
    return -(n - 3) * (
        (-6 * al * p + 30 * be * r2 * p**3) * v**2
        + (-2 * al + 30 * be * r2 * p**2) * v**3
        + 15 * be * r2 * p * v**4
        + 3 * be * r2 * v**5
    )


def _nonlinear_full(psi, r, n, al, be):
    return (n - 3) * (2 * al * psi**3 - 3 * be * r * r * psi**5)


def check_range(values, r, p, mode, limit):
    psi = values + p if mode == "perturbation" else values
    u = np.abs(r * psi)
    k = int(np.argmax(u))
    if u[k] > limit:
        raise RangeGuardViolation(float(r[k]), float(u[k]), limit)
    return float(u[k])


def rhs_nonlinear(field, geom: TargetGeometry, shr: ShrinkerProfile, mode="perturbation", guard=None):
    """Explicit part of the right-hand side.

    ``full``: ``(n-3) r^-3 (r psi - F(r psi))``.  ``perturbation``: the
    remainder ``f(phi + varphi) - f(phi) - f'(phi) varphi``, expanded so that
    no difference of nearly equal terms is formed.  Both use the polynomial
    form of ``F``, valid while ``|r psi|`` stays inside the closed-form range.
    """
    r = field.grid.nodes
    p = shr.phi(r)
    limit = geom.blend.u0 if guard is None else guard
    check_range(field.values, r, p, mode, limit)
    n, al, be = field.grid.n, geom.alpha, geom.beta
    if mode == "perturbation":
        out = _nonlinear_perturbation(field.values, r, p, n, al, be)
    elif mode == "full":
        out = _nonlinear_full(field.values, r, n, al, be)
    else:
        raise ValueError(f"mode must be one of {MODES}")
    return RadialField(field.grid, out)


# ---------------------------------------------------------------------------
# states and stepping


@dataclass(frozen=True, eq=False)
class Diagnostics:
    tau: float
    c1: float
    h_norm_stable: float
    sup_norm: float
    range_max: float


@dataclass(frozen=True, eq=False)
class SimState:
    tau: float
    values: np.ndarray
    prev_nonlinear: Optional[np.ndarray] = None


class Stepper:
    """IMEX integrator bound to one configuration."""

    def __init__(self, config: SimConfig, geom: TargetGeometry, shr: ShrinkerProfile):
        self.config, self.geom, self.shr = config, geom, shr
        self.grid = config.grid()
        r = self.grid.nodes
        self.r = r
        self.phi = shr.phi(r)
        self.limit = config.guard(geom)
        M = linear_operator(config, geom, shr)
        eye = sparse.identity(config.N, format="csc")
        dt = config.dt
        if config.scheme == "be":
            self._lu = splu((eye - dt * M).tocsc())
            self._explicit = None
        else:
            self._lu = splu((eye - 0.5 * dt * M).tocsc())
            self._explicit = (eye + 0.5 * dt * M).tocsr()
        self.forcing = None
        if config.mode == "full":
            # subtract the discrete residual of phi so it is an exact fixed point
            res = M @ self.phi
            if config.with_nonlinearity:
                res = res + _nonlinear_full(self.phi, r, config.n, geom.alpha, geom.beta)
            self.forcing = -res
        self.G = gauge_mode(shr, self.grid)

    def nonlinear(self, values):
        cfg, g = self.config, self.geom
        if cfg.with_nonlinearity:
            if cfg.mode == "perturbation":
                out = _nonlinear_perturbation(values, self.r, self.phi, cfg.n, g.alpha, g.beta)
            else:
                out = _nonlinear_full(values, self.r, cfg.n, g.alpha, g.beta)
        else:
            out = np.zeros_like(values)
        if self.forcing is not None:
            out = out + self.forcing
        return out

    def range_max(self, values):
        return check_range(values, self.r, self.phi, self.config.mode, math.inf)

    def step(self, state: SimState) -> SimState:
        cfg = self.config
        u = state.values
        if cfg.with_nonlinearity or self.forcing is not None:
            check_range(u, self.r, self.phi, cfg.mode, self.limit)
            nl = self.nonlinear(u)
        else:
            nl = None
        dt = cfg.dt
        if cfg.scheme == "be":
            rhs = u + dt * nl if nl is not None else u
        else:
            rhs = self._explicit @ u
            if nl is not None:
                prev = state.prev_nonlinear if state.prev_nonlinear is not None else nl
                rhs = rhs + dt * (1.5 * nl - 0.5 * prev)
        new = self._lu.solve(rhs)
        if not np.all(np.isfinite(new)):
            raise FloatingPointError(f"non-finite values at tau={state.tau + dt:.6g}")
        return SimState(state.tau + dt, new, nl)

    def perturbation(self, values):
        return values - self.phi if self.config.mode == "full" else values

    def diagnostics(self, state: SimState) -> Diagnostics:
        v = RadialField(self.grid, self.perturbation(state.values))
        c1 = h_inner(v, self.G)
        stable = v.values - c1 * self.G.values
        return Diagnostics(
            tau=state.tau,
            c1=c1,
            h_norm_stable=h_norm(RadialField(self.grid, stable)),
            sup_norm=float(np.max(np.abs(v.values))),
            range_max=self.range_max(state.values),
        )


@functools.lru_cache(maxsize=8)
def get_stepper(config: SimConfig, geom: TargetGeometry, shr: ShrinkerProfile) -> Stepper:
    return Stepper(config, geom, shr)


def step(state: SimState, config: SimConfig, geom: TargetGeometry, shr: ShrinkerProfile) -> SimState:
    """Advance ``state`` by one time step of ``config.dt``."""
    return get_stepper(config, geom, shr).step(state)


def apply_linear_operator(config, geom, shr, field: RadialField) -> RadialField:
    """Discrete ``(Delta - Lambda + V) field`` on the simulation grid."""
    M = linear_operator(config, geom, shr, with_potential=True)
    return RadialField(field.grid, M @ field.values)


# ---------------------------------------------------------------------------
# data


def gaussian_bump(eps, width=1.0):
    """``eps * exp(-r^2 / width^2)`` as a closed-form field description."""
    c = width * width / 4.0
    from .norms import gaussian_form

    return gaussian_form(c, eps)


def _evaluate(varphi0, r):
    if varphi0 is None:
        return np.zeros_like(r)
    if isinstance(varphi0, (int, float)) and varphi0 == 0:
        return np.zeros_like(r)
    if isinstance(varphi0, RadialField):
        if varphi0.form is not None:
            return varphi0.form(r)
        return _spline_eval(varphi0, r)
    return np.asarray(varphi0(r), dtype=float)


def _spline_eval(f, r):
    spl = CubicSpline(f.grid.nodes, f.values, bc_type=((1, 0.0), "not-a-knot"), extrapolate=False)
    out = spl(r)
    return np.where(np.isnan(out), 0.0, out)


def initial_data_map(varphi0, T: float, shr: ShrinkerProfile, grid: RadialGrid) -> RadialField:
    """Similarity-frame perturbation for physical data ``phi + varphi0``.

    ``U(varphi0, T) = sqrt(T) phi(sqrt(T) r) + sqrt(T) varphi0(sqrt(T) r) - phi(r)``.
    ``varphi0`` may be ``None``, a callable, an analytic form or a field.
    """
    if not (0.5 <= T <= 1.5):
        raise ValueError("T must lie in [1/2, 3/2]")
    r = grid.nodes
    s = math.sqrt(T)
    vals = s * shr.phi(s * r) - shr.phi(r) + s * _evaluate(varphi0, s * r)
    return RadialField(grid, vals)


def project_out_gauge(f: RadialField, G: RadialField) -> RadialField:
    """Remove the component along the unit vector ``G``."""
    return RadialField(f.grid, f.values - h_inner(f, G) * G.values)


# ---------------------------------------------------------------------------
# evolution


@dataclass(eq=False)
class Trajectory:
    config: SimConfig
    T: float
    records: list
    final: SimState
    aborted: str = ""
    abort_tau: float = math.nan
    abort_detail: str = ""
    snapshots: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([getattr(d, name) for d in self.records])

    @property
    def tau(self):
        return self.column("tau")

    def at(self, tau):
        """Diagnostics record closest to ``tau``."""
        t = self.tau
        return self.records[int(np.argmin(np.abs(t - tau)))]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "c1", "h_norm_stable", "sup_norm", "range_max"])
        for d in self.records:
            w.writerow([f"{d.tau:.10g}", f"{d.c1:.12e}", f"{d.h_norm_stable:.12e}", f"{d.sup_norm:.12e}",
                        f"{d.range_max:.12e}"])
        return buf.getvalue()


def evolve(config: SimConfig, geom: TargetGeometry, shr: ShrinkerProfile, varphi0, T: float,
           tau_end: Optional[float] = None, initial: Optional[RadialField] = None, snapshots=()) -> Trajectory:
    """Run from ``U(varphi0, T)`` to ``tau_end`` recording diagnostics.

    Parameters
    ----------
    initial : RadialField, optional
        Use these perturbation values instead of ``U(varphi0, T)``.
    snapshots : iterable of float
        Times at which full state vectors are kept, snapped to the step grid.

    A run stops early, with ``aborted`` set, when the range guard or the
    growth guard trips; the records up to that point are kept.
    """
    stp = get_stepper(config, geom, shr)
    tau_end = config.tau_end if tau_end is None else tau_end
    v0 = initial if initial is not None else initial_data_map(varphi0, T, shr, stp.grid)
    vals = v0.values + (stp.phi if config.mode == "full" else 0.0)
    state = SimState(0.0, vals)
    nsteps = int(round(tau_end / config.dt))
    every = max(1, int(round(config.tau_out / config.dt)))
    snap_steps = {int(round(t / config.dt)): t for t in snapshots}
    # linear runs have no closed-form range to leave, so only nonlinear ones are capped
    growth_cap = config.growth_guard * float(shr.phi(0.0)) if config.with_nonlinearity else math.inf
    records = [stp.diagnostics(state)]
    snaps = {}
    if 0 in snap_steps:
        snaps[0] = state.values.copy()
    traj = Trajectory(config, T, records, state, snapshots=snaps)
    for k in range(1, nsteps + 1):
        try:
            state = stp.step(state)
        except RangeGuardViolation as exc:
            traj.aborted, traj.abort_tau, traj.abort_detail = "range_guard", state.tau, str(exc)
            break
        if k in snap_steps:
            snaps[k] = state.values.copy()
        if k % every == 0 or k == nsteps:
            d = stp.diagnostics(state)
            records.append(d)
            if d.sup_norm > growth_cap:
                traj.aborted, traj.abort_tau = "growth_guard", state.tau
                traj.abort_detail = f"sup |varphi| = {d.sup_norm:.4g} > {growth_cap:.4g}"
                break
    traj.final = state
    return traj


def fit_decay_rate(trajectory, window, key="h_norm_stable"):
    """Least-squares slope of ``log |key|`` against tau over ``window``.

    ``trajectory`` is a :class:`Trajectory` or a pair ``(tau, values)``.
    """
    if isinstance(trajectory, Trajectory):
        tau, vals = trajectory.tau, np.abs(trajectory.column(key))
    else:
        tau, vals = (np.asarray(x, dtype=float) for x in trajectory)
    lo, hi = window
    sel = (tau >= lo - 1e-12) & (tau <= hi + 1e-12)
    if sel.sum() < 10:
        raise ValueError(f"need at least 10 samples in window {window}, have {int(sel.sum())}")
    y = vals[sel]
    if np.any(y <= 0):
        raise ValueError("non-positive values in fit window")
    slope, _ = np.polyfit(tau[sel], np.log(y), 1)
    return float(slope)


def fit_growth_exponent(trajectory: Trajectory, window=None):
    """Slope of ``log |c1|``; by default over every recorded sample after tau = 0."""
    tau = trajectory.tau
    if window is None:
        window = (tau[1] if tau.size > 1 else 0.0, tau[-1])
    return fit_decay_rate(trajectory, window, key="c1")


# ---------------------------------------------------------------------------
# blowup-time shooting


@dataclass
class ShootReport:
    T_star: float
    converged: bool
    iterations: int
    history: list
    tol: float
    c1_probe: float
    sign_monotone: bool
    omega_fit: float
    c1_end: float
    sup_initial: float
    sup_end: float
    decay: Optional[Trajectory] = None

    def to_dict(self):
        return {
            "T_star": self.T_star,
            "converged": self.converged,
            "iterations": self.iterations,
            "history": [list(h) for h in self.history],
            "tol": self.tol,
            "c1_probe": self.c1_probe,
            "sign_monotone": self.sign_monotone,
            "omega_fit": self.omega_fit,
            "c1_end": self.c1_end,
            "sup_initial": self.sup_initial,
            "sup_end": self.sup_end,
        }


def probe_gauge_coefficient(config, geom, shr, varphi0, T):
    """``c1`` at ``tau_probe`` (or at the abort time of a guarded run)."""
    traj = evolve(config, geom, shr, varphi0, T, tau_end=config.tau_probe)
    return traj.records[-1].c1


def _sign(x):
    return (x > 0) - (x < 0)


def shoot_blowup_time(config: SimConfig, geom: TargetGeometry, shr: ShrinkerProfile, varphi0,
                      decay_run=True) -> ShootReport:
    """Bisect on ``T`` until the late-time gauge coefficient vanishes.

    Raises
    ------
    ShootingError
        When ``c1(tau_probe)`` has the same sign at both ends of the bracket.
    """
    stp = get_stepper(config, geom, shr)
    tol = config.tol_rel * h_norm(RadialField(stp.grid, stp.phi))
    lo, hi = config.T_bracket
    history = []
    T_star, c_star, converged = None, None, False

    def probe(T):
        c = probe_gauge_coefficient(config, geom, shr, varphi0, T)
        history.append((T, c, lo, hi))
        return c

    it = 0
    mid = 0.5 * (lo + hi)
    c_mid = probe(mid)
    it += 1
    if abs(c_mid) <= tol:
        T_star, c_star, converged = mid, c_mid, True
    else:
        c_lo, c_hi = probe(lo), probe(hi)
        if _sign(c_lo) == _sign(c_hi):
            raise ShootingError(f"c1 has sign {_sign(c_lo):+d} at T={lo} and {_sign(c_hi):+d} at T={hi}")
        if _sign(c_mid) == _sign(c_lo):
            lo = mid
        else:
            hi = mid
        T_star, c_star = mid, c_mid
        while it < config.max_bisect:
            mid = 0.5 * (lo + hi)
            if not (lo < mid < hi):
                break
            c_mid = probe(mid)
            it += 1
            if abs(c_mid) < abs(c_star):
                T_star, c_star = mid, c_mid
            if abs(c_mid) <= tol:
                converged = True
                break
            if _sign(c_mid) == _sign(c_lo):
                lo = mid
            else:
                hi = mid

    pts = sorted((h[0], h[1]) for h in history)
    signs = [_sign(c) for _, c in pts if c != 0]
    monotone = all(a == b for a, b in zip(signs, signs[1:])) or sum(
        1 for a, b in zip(signs, signs[1:]) if a != b) == 1
    if not monotone:
        log.warning("sign of c1 is not monotone in T across the bracket history")

    report = ShootReport(T_star=T_star, converged=converged, iterations=it, history=history, tol=tol,
                         c1_probe=c_star, sign_monotone=monotone, omega_fit=math.nan, c1_end=math.nan,
                         sup_initial=math.nan, sup_end=math.nan)
    if decay_run:
        traj = evolve(config, geom, shr, varphi0, T_star)
        report.decay = traj
        report.c1_end = abs(traj.records[-1].c1)
        report.sup_initial = traj.records[0].sup_norm
        report.sup_end = traj.records[-1].sup_norm
        lo_w, hi_w = config.fit_window
        hi_w = min(hi_w, traj.tau[-1])
        try:
            report.omega_fit = fit_decay_rate(traj, (lo_w, hi_w))
        except ValueError:
            report.omega_fit = math.nan
    return report


# ---------------------------------------------------------------------------
# free semigroup


def heat_kernel_radial(n, r, s, kappa):
    """Angular average of the heat kernel ``H_kappa(x - y)`` for ``|x|=r, |y|=s``."""
    nu = 0.5 * n - 1.0
    z = np.asarray(r * s / (2.0 * kappa), dtype=float)
    small = z < 1e-6
    lam0 = 1.0 / (2.0**nu * math.gamma(nu + 1.0))
    zz = np.where(small, 1.0, z)
    scaled = np.where(small, lam0 * (1 + z * z / (4 * (nu + 1))) * np.exp(-z), special.ive(nu, zz) / zz**nu)
    pref = (4 * math.pi * kappa) ** (-n / 2) * (2 * math.pi) ** (n / 2)
    return pref * np.exp(-((r - s) ** 2) / (4.0 * kappa)) * scaled


def free_semigroup_exact(f, tau: float, grid: Optional[RadialGrid] = None, n: Optional[int] = None,
                         epsrel=1e-12) -> RadialField:
    """``e^(-tau/2) (H_kappa * f)(e^(-tau/2) x)`` with ``kappa = 1 - e^(-tau)``.

    The radial convolution is computed by adaptive quadrature of the reduced
    kernel at every output node.  ``f`` is a field with a closed form, an
    :class:`AnalyticForm` or a callable; by default the output lives on the
    field's grid.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if isinstance(f, RadialField):
        grid = grid or f.grid
        func = f.form if f.form is not None else (lambda r: _spline_eval(f, r))
    else:
        func = f
        if grid is None:
            raise ValueError("grid required when f is not a field")
    n = grid.n if n is None else n
    kappa = -math.expm1(-tau)
    L = 17.0 * math.sqrt(kappa)
    shrink = math.exp(-tau / 2)
    out = np.empty(grid.size)
    for i, r in enumerate(grid.nodes):
        x = shrink * r
        lo = max(0.0, x - L)
        res = integrate(lambda s: heat_kernel_radial(n, x, s, kappa) * func(s) * s ** (n - 1),
                        lo, x + L, epsabs=1e-300, epsrel=epsrel, breakpoints=[x], limit=400)
        out[i] = shrink * res.value
    return RadialField(grid, out)


def gaussian_free_evolution(c, amplitude, tau, n):
    """Closed form of the free flow applied to ``amplitude * exp(-r^2/(4c))``."""
    kappa = -math.expm1(-tau)
    fac = amplitude * math.exp(-tau / 2) * (c / (c + kappa)) ** (n / 2)
    e = math.exp(-tau)
    return AnalyticForm(f"free_gaussian(c={c},tau={tau})", lambda r: fac * np.exp(-e * r * r / (4 * (c + kappa))))


# ---------------------------------------------------------------------------
# physical-frame spot check


def physical_frame_check(config, geom, shr, varphi0, T, tau_a, tau_b, R_phys=3.0, h_phys=0.01):
    """Compare the similarity-frame run with an explicit physical-frame segment.

    The similarity solution at ``tau_a`` is mapped to ``v(t_a, r) =
    (T - t_a)^(-1/2) psi(tau_a, r / sqrt(T - t_a))`` and advanced to ``t_b``
    by forward Euler on ``v_t = Delta v + f(v)``, with the outer boundary
    value taken from the similarity solution.  Returns the relative sup
    discrepancy on ``[0, R_phys/2]`` and the two times.
    """
    dt = config.dt
    tau_a = round(tau_a / dt) * dt
    tau_b = round(tau_b / dt) * dt
    traj = evolve(config, geom, shr, varphi0, T, tau_end=tau_b, snapshots=(tau_a, tau_b))
    stp = get_stepper(config, geom, shr)
    ka, kb = int(round(tau_a / dt)), int(round(tau_b / dt))
    y = stp.grid.nodes

    def psi_of(k):
        vals = traj.snapshots[k]
        return vals + stp.phi if config.mode == "perturbation" else vals

    def physical(k, tau, r):
        lam = T * math.exp(-tau)
        spl = CubicSpline(y, psi_of(k), bc_type=((1, 0.0), "not-a-knot"))
        return spl(r / math.sqrt(lam)) / math.sqrt(lam)

    t_a, t_b = T * (1 - math.exp(-tau_a)), T * (1 - math.exp(-tau_b))
    n, al, be = config.n, geom.alpha, geom.beta
    M = int(round(R_phys / h_phys))
    r = h_phys * np.arange(M + 1)
    v = physical(ka, tau_a, r)
    vb_target = physical(kb, tau_b, r)
    v_edge_a, v_edge_b = v[-1], vb_target[-1]
    k_sub = max(1, int(math.ceil((t_b - t_a) / (0.4 * h_phys**2 / n))))
    dtp = (t_b - t_a) / k_sub
    rin = r[1:-1]
    for j in range(k_sub):
        lap = np.empty_like(v)
        lap[0] = 2 * n * (v[1] - v[0]) / h_phys**2
        lap[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h_phys**2 + (n - 1) / rin * (v[2:] - v[:-2]) / (2 * h_phys)
        react = (n - 3) * (2 * al * v**3 - 3 * be * r * r * v**5)
        v = v + dtp * (lap + react)
        w = (j + 1) / k_sub
        v[-1] = (1 - w) * v_edge_a + w * v_edge_b
    inner = r <= 0.5 * R_phys
    err = float(np.max(np.abs(v[inner] - vb_target[inner])) / np.max(np.abs(vb_target[inner])))
    return {"t_a": t_a, "t_b": t_b, "rel_sup_error": err}
