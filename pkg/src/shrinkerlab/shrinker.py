"""Explicit shrinker profile, its ODE residual, and a generic profile shooter.

In the variable ``phi = theta / rho`` the corotational self-similar profile
equation reads

    phi'' + ((d+1)/rho - rho/2) phi' - phi/2 - (d-1) rho^-3 (F(rho phi) - rho phi) = 0.

For the constructed targets ``phi(rho) = a / sqrt(rho^2 + b)`` solves it exactly.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import TargetGeometry

# series start for the shooter: the (d+1)/rho term is singular at 0
RHO_START = 1e-4
# switch to the cancellation-free residual below this radius
RHO_SMALL = 1e-3


class HypothesisViolation(RuntimeError):
    """The supplied target does not satisfy g' > 0 on the range visited."""


@dataclass(frozen=True)
class ShrinkerProfile:
    """Closed-form profile ``phi(rho) = a (rho^2 + b)^(-1/2)``."""

    a: float
    b: float
    d: int
    near_singular: bool = False

    @property
    def n(self):
        return self.d + 2

    def phi(self, rho, order=0):
        rho = np.asarray(rho, dtype=float)
        s = rho * rho + self.b
        if order == 0:
            val = self.a / np.sqrt(s)
        elif order == 1:
            val = -self.a * rho * s**-1.5
        elif order == 2:
            val = self.a * (2 * rho * rho - self.b) * s**-2.5
        else:
            raise ValueError("order must be 0, 1 or 2")
        return float(val) if val.ndim == 0 else val

    def phi_prime_over_rho(self, rho):
        rho = np.asarray(rho, dtype=float)
        return -self.a * (rho * rho + self.b) ** -1.5

    def theta(self, rho):
        """``rho phi(rho)``, increasing from 0 to ``a``."""
        rho = np.asarray(rho, dtype=float)
        return rho * self.phi(rho)

    def to_dict(self):
        return {"a": self.a, "b": self.b, "d": self.d}


def make_shrinker(geom: TargetGeometry) -> ShrinkerProfile:
    """Profile constants for ``geom``: ``a = 1 + gamma`` and the matching ``b``."""
    gam, d = geom.gamma, geom.d
    a = 1.0 + gam
    b = 2 * gam * (2 + gam) * ((d - 1) * a * a - 3) / (a * a)
    if b <= 0:
        raise ValueError(f"non-positive b={b} for d={d}, gamma={gam}")
    return ShrinkerProfile(a=a, b=b, d=d, near_singular=bool(b < 1e-6))


def ode_residual(geom: TargetGeometry, shr: ShrinkerProfile, rho, profile=None):
    """Residual of the profile ODE at ``rho > 0``.

    Parameters
    ----------
    profile : tuple of callables, optional
        ``(phi, phi', phi'')`` to test instead of the closed form.

    Notes
    -----
    For ``rho < 1e-3`` and the closed form, ``phi'/rho`` is evaluated
    analytically and the nonlinearity through its cubic-quintic polynomial, so
    nothing is divided by a small number.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("ode_residual needs rho > 0")
    d = geom.d
    if profile is None:
        p, dp, ddp = shr.phi(rho), shr.phi(rho, 1), shr.phi(rho, 2)
        dp_over_rho = np.where(rho < RHO_SMALL, shr.phi_prime_over_rho(rho), dp / rho)
    else:
        p, dp, ddp = (np.asarray(f(rho), dtype=float) for f in profile)
        dp_over_rho = dp / rho
    u = rho * p
    core = np.abs(u) <= geom.blend.u0
    poly = -2 * geom.alpha * p**3 + 3 * geom.beta * rho**2 * p**5
    if np.all(core):
        nonlin = poly
    else:
        nonlin = np.where(core, poly, geom.F_minus_identity(u) / rho**3)
    res = ddp + (d + 1) * dp_over_rho - 0.5 * rho * dp - 0.5 * p - (d - 1) * nonlin
    return float(res) if res.ndim == 0 else res


# ---------------------------------------------------------------------------
# generic shooter


@dataclass
class OdeTrajectory:
    """Sampled profile ``theta = rho phi`` with both Lyapunov weights.

    ``lyapunov`` uses ``rho^(d-1)``, the weight for which
    ``(rho^(d-1) e^(-rho^2/4) theta')' = (d-1) rho^(d-3) e^(-rho^2/4) F(theta)``
    holds; ``lyapunov_ambient`` uses the ``rho^(d+1)`` weight of the
    (d+2)-dimensional radial form.
    """

    d: int
    phi0: float
    rho: np.ndarray
    phi: np.ndarray
    theta: np.ndarray
    theta_prime: np.ndarray
    lyapunov: np.ndarray
    lyapunov_ambient: np.ndarray
    blowup: bool = False
    rho_last: float = math.nan
    message: str = ""

    def theta_at(self, r):
        if r < self.rho[0] or r > self.rho[-1]:
            return math.nan
        return float(np.interp(r, self.rho, self.theta))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rho", "phi", "theta", "theta_prime", "lyapunov"])
        for row in zip(self.rho, self.phi, self.theta, self.theta_prime, self.lyapunov):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _cubic_coefficient(target):
    # F(u) = u + kappa u^3 + O(u^5)
    return float(target.F(0.0, 3)) / 6.0


def shoot_profile_ode(
    target,
    d: int,
    phi0: float,
    rho_max: float,
    steps: int = 2001,
    rtol: float = 1e-12,
    atol: float = 0.0,
    theta_cap: float = 50.0,
) -> OdeTrajectory:
    """Integrate the profile ODE outward from a regular origin.

    Parameters
    ----------
    target
        Any object exposing ``F(u, order)`` and ``F_minus_identity(u)``
        (a :class:`TargetGeometry`, ``SinhTarget`` or ``FlatTarget``).
    phi0 : float
        ``phi(0) > 0``; ``phi'(0) = 0`` is imposed by the series start.
    steps : int
        Number of output nodes on ``[1e-4, rho_max]``.
    theta_cap : float
        Integration stops, and ``blowup`` is set, once ``|theta|`` exceeds this.
    """
    if phi0 <= 0 or rho_max <= RHO_START:
        raise ValueError("need phi0 > 0 and rho_max > 1e-4")
    kappa = _cubic_coefficient(target)
    c2 = (0.5 * phi0 + (d - 1) * kappa * phi0**3) / (2.0 * (d + 2))
    r0 = RHO_START
    y0 = [phi0 + c2 * r0 * r0, 2 * c2 * r0]

    def rhs(r, y):
        p, dp = y
        nonlin = target.F_minus_identity(r * p) / r**3
        return [dp, -((d + 1) / r - 0.5 * r) * dp + 0.5 * p + (d - 1) * nonlin]

    def escape(r, y):
        return theta_cap - abs(r * y[0])

    escape.terminal = True
    nodes = np.linspace(r0, rho_max, steps)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sol = solve_ivp(rhs, (r0, rho_max), y0, method="DOP853", t_eval=nodes,
                        events=escape, rtol=rtol, atol=atol)
    rho = sol.t
    p, dp = sol.y
    blowup = sol.status == 1 or sol.status == -1
    if blowup:
        last = float(sol.t_events[0][0]) if sol.status == 1 else float(sol.t[-1]) if sol.t.size else r0
        msg = f"theta left [-{theta_cap}, {theta_cap}] near rho={last:.6g}" if sol.status == 1 else sol.message
    else:
        last, msg = float(rho[-1]), ""
    theta = rho * p
    theta_prime = p + rho * dp
    gauss = np.exp(-rho * rho / 4)
    return OdeTrajectory(
        d=d,
        phi0=phi0,
        rho=rho,
        phi=p,
        theta=theta,
        theta_prime=theta_prime,
        lyapunov=rho ** (d - 1) * gauss * theta_prime,
        lyapunov_ambient=rho ** (d + 1) * gauss * theta_prime,
        blowup=bool(blowup),
        rho_last=last,
        message=msg,
    )


@dataclass
class WitnessReport:
    """Numerical certificates of the comparison argument on one trajectory."""

    theta_positive: bool
    lyapunov_nondecreasing: bool
    theta_unbounded: bool
    max_lyapunov_drop: float
    growth_ratio: float
    blowup: bool
    rho_last: float
    flat: bool
    trajectory: OdeTrajectory = field(repr=False)

    @property
    def passed(self):
        return self.theta_positive and self.lyapunov_nondecreasing and self.theta_unbounded

    def to_dict(self):
        return {
            "theta_positive": self.theta_positive,
            "lyapunov_nondecreasing": self.lyapunov_nondecreasing,
            "theta_unbounded": self.theta_unbounded,
            "max_lyapunov_drop": self.max_lyapunov_drop,
            "growth_ratio": self.growth_ratio,
            "blowup": self.blowup,
            "rho_last": self.rho_last,
            "flat": self.flat,
            "passed": self.passed,
        }


def nonexistence_witness(target, d, phi0, rho_max, bound_factor=5.0, drop_tol=1e-12, **kw):
    """Shoot from ``phi0`` and certify the three ingredients of non-existence.

    The certificates are: ``theta > 0``, the ``rho^(d-1)`` Lyapunov quantity
    never decreases (relative drop at most ``drop_tol``), and ``theta`` escapes,
    meaning either the integrator hits its cap or
    ``theta(rho_max) > bound_factor * theta(2)``.

    Raises
    ------
    HypothesisViolation
        If ``g' <= 0`` somewhere on ``[0, max theta]``.
    """
    traj = shoot_profile_ode(target, d, phi0, rho_max, **kw)
    top = float(np.max(np.abs(traj.theta)))
    probe = np.linspace(0.0, top, 4001)
    slope = np.asarray(target.g(probe, 1), dtype=float)
    if np.any(slope <= 0):
        u_bad = float(probe[np.argmax(slope <= 0)])
        raise HypothesisViolation(f"g' <= 0 at u={u_bad:.6g}; the target is not admissible here")

    scale = float(np.max(np.abs(traj.lyapunov))) or 1.0
    drop = float(max(0.0, -np.min(np.diff(traj.lyapunov)) / scale)) if traj.rho.size > 1 else 0.0
    t2 = traj.theta_at(2.0)
    t_end = float(traj.theta[-1])
    ratio = t_end / t2 if (not traj.blowup and t2 > 0) else math.nan
    unbounded = traj.blowup or (ratio > bound_factor)
    return WitnessReport(
        theta_positive=bool(np.all(traj.theta > 0)),
        lyapunov_nondecreasing=bool(drop <= drop_tol),
        theta_unbounded=bool(unbounded),
        max_lyapunov_drop=drop,
        growth_ratio=float(ratio),
        blowup=traj.blowup,
        rho_last=traj.rho_last,
        flat=getattr(target, "name", "") == "flat",
        trajectory=traj,
    )
