"""Warped-product target data.

The target is ``(0, a_star) x_g S^{d-1}`` with metric ``du^2 + g(u)^2 dOmega^2``.
Near the vertex the warping function is the closed form

    g(u) = u * sqrt(1 - alpha u^2 + beta u^4),

which makes ``phi(rho) = a / sqrt(rho^2 + b)`` an exact shrinker.  Beyond
``u_core = 1 + gamma`` the closed form is blended into a sine arch that closes
the manifold at ``a_star`` with ``g'(a_star) = -1``; g is then continued oddly
and ``2 a_star``-periodically.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import sympy as sp

GAMMA_MAX = math.sqrt(2.0) - 1.0

# t-values closer than this to 0 or 1 give exp(-1/t) below double precision
_STEP_EPS = 1e-3


class GeometryError(ValueError):
    """Invalid target-geometry parameters."""


@dataclass(frozen=True)
class BlendSpec:
    """Extension window and arch parameters.

    On ``[u0, u1]`` the closed form is blended into
    ``height * sin((a_star - u) / height)``, an arch peaking at ``u_peak`` with
    ``g(a_star) = 0`` and ``g'(a_star) = -1``.
    """

    u0: float
    u1: float
    u_peak: float
    height: float
    a_star: float


# ---------------------------------------------------------------------------
# symbolic derivative tables (built once, lambdified for numpy)


@functools.lru_cache(maxsize=None)
def _closed_form_derivatives():
    u, al, be = sp.symbols("u alpha beta", real=True)
    expr = u * sp.sqrt(1 - al * u**2 + be * u**4)
    out = []
    for k in range(5):
        out.append(sp.lambdify((u, al, be), expr, "numpy"))
        expr = sp.diff(expr, u)
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _step_derivatives():
    t = sp.symbols("t", real=True)
    h0 = sp.exp(-1 / t)
    h1 = sp.exp(-1 / (1 - t))
    expr = h0 / (h0 + h1)
    out = []
    for k in range(5):
        out.append(sp.lambdify(t, expr, "numpy"))
        expr = sp.diff(expr, t)
    return tuple(out)


def smooth_step(t, order=0):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, and its derivatives."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    if order == 0:
        out[t >= 1.0 - _STEP_EPS] = 1.0
    inner = (t > _STEP_EPS) & (t < 1.0 - _STEP_EPS)
    if np.any(inner):
        out[inner] = _step_derivatives()[order](t[inner])
    return out


# ---------------------------------------------------------------------------


def compactness_lhs(d, gamma):
    return (d - 1) * (1 + gamma) ** 4 - 2 * d * (1 + gamma) ** 2 + 3


def check_compactness_condition(d: int, gamma: float) -> bool:
    """True iff ``(d-1)(1+gamma)^4 - 2d(1+gamma)^2 + 3 < 0``.

    This is the condition under which the closed-form g stays positive on
    ``(0, 1 + gamma]``.
    """
    if d < 2 or gamma <= -1:
        raise GeometryError("need d >= 2 and gamma > -1")
    return bool(compactness_lhs(d, gamma) < 0)


def alpha_beta(d, gamma):
    q = (d - 1) * (1 + gamma) ** 4
    return 3.0 / (2.0 * q) + 0.5, 1.0 / q


def first_zero_closed_form(alpha, beta):
    """Least positive zero of the closed-form g, or inf if there is none."""
    disc = alpha * alpha - 4.0 * beta
    if disc < 0:
        return math.inf
    return math.sqrt((alpha - math.sqrt(disc)) / (2.0 * beta))


@dataclass(frozen=True)
class TargetGeometry:
    """Warping function g of the constructed target and ``F = g g'``.

    Instances are immutable and all evaluation methods are pure and accept
    scalars or numpy arrays.
    """

    d: int
    gamma: float
    alpha: float
    beta: float
    u_core: float
    blend: BlendSpec

    @property
    def n(self):
        """Ambient dimension of the radial heat equation, d + 2."""
        return self.d + 2

    @property
    def a_star(self):
        return self.blend.a_star

    @property
    def period(self):
        return 2.0 * self.blend.a_star

    # -- closed-form pieces ------------------------------------------------

    def _g_closed(self, v, order):
        return _closed_form_derivatives()[order](v, self.alpha, self.beta)

    def _F_poly(self, v, order):
        al, be = self.alpha, self.beta
        if order == 0:
            return v - 2 * al * v**3 + 3 * be * v**5
        if order == 1:
            return 1 - 6 * al * v**2 + 15 * be * v**4
        if order == 2:
            return -12 * al * v + 60 * be * v**3
        if order == 3:
            return -12 * al + 180 * be * v**2
        raise ValueError("order must be 0..3")

    def _arch(self, v, order):
        m, a = self.blend.height, self.blend.a_star
        x = (a - v) / m
        # d/du of sin((a-u)/m) cycles through -cos, -sin, cos, sin with factor 1/m
        vals = (np.sin(x), -np.cos(x), -np.sin(x), np.cos(x), np.sin(x))
        return m ** (1 - order) * vals[order]

    def _g_half(self, v, order):
        """g^(order) on [0, a_star]."""
        b = self.blend
        out = np.empty_like(v)
        core = v <= b.u0
        arch = v >= b.u1
        mid = ~(core | arch)
        if np.any(core):
            out[core] = self._g_closed(v[core], order)
        if np.any(arch):
            out[arch] = self._arch(v[arch], order)
        if np.any(mid):
            vm = v[mid]
            w = b.u1 - b.u0
            t = (vm - b.u0) / w
            acc = np.zeros_like(vm)
            for j in range(order + 1):
                c = math.comb(order, j)
                chi_j = smooth_step(t, j) / w**j
                one_minus = (1.0 - chi_j) if j == 0 else -chi_j
                acc += c * (one_minus * self._g_closed(vm, order - j) + chi_j * self._arch(vm, order - j))
            out[mid] = acc
        return out

    def _reduce(self, u):
        u = np.asarray(u, dtype=float)
        p = self.period
        r = u - p * np.round(u / p)
        sign = np.where(r < 0, -1.0, 1.0)
        return np.abs(r), sign

    # -- public evaluation -------------------------------------------------

    def g(self, u, order=0):
        """``g^(order)(u)`` for order 0..4; total on the real line."""
        if order not in range(5):
            raise ValueError("order must be 0..4")
        v, sign = self._reduce(u)
        scalar = v.ndim == 0
        v = np.atleast_1d(v)
        val = self._g_half(v, order) * np.atleast_1d(sign) ** (order + 1)
        return float(val[0]) if scalar else val

    def F(self, u, order=0):
        """``F = g g'`` and its derivatives up to order 3."""
        if order not in range(4):
            raise ValueError("order must be 0..3")
        v, sign = self._reduce(u)
        scalar = v.ndim == 0
        v = np.atleast_1d(v)
        out = np.empty_like(v)
        core = v <= self.blend.u0
        if np.any(core):
            # g g' = (g^2)'/2 is a polynomial while the closed form holds
            out[core] = self._F_poly(v[core], order)
        rest = ~core
        if np.any(rest):
            vr = v[rest]
            gd = [self._g_half(vr, k) for k in range(order + 2)]
            out[rest] = sum(math.comb(order, j) * gd[j] * gd[order - j + 1] for j in range(order + 1))
        out = out * np.atleast_1d(sign) ** (order + 1)
        return float(out[0]) if scalar else out

    def F_minus_identity(self, u):
        """``F(u) - u`` without cancellation for small u."""
        u = np.asarray(u, dtype=float)
        v = np.abs(u)
        small = v <= self.blend.u0
        out = np.where(small, -2 * self.alpha * u**3 + 3 * self.beta * u**5, 0.0)
        if np.any(~small):
            out = np.where(small, out, self.F(u) - u)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        return {
            "d": self.d,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "beta": self.beta,
            "u_core": self.u_core,
            "blend_window": [self.blend.u0, self.blend.u1],
            "a_star": self.blend.a_star,
        }


def default_blend_window(alpha, beta, u_core):
    u0, u1 = u_core + 0.05, u_core + 0.30
    u_zero = first_zero_closed_form(alpha, beta)
    if u1 >= 0.95 * u_zero:
        # the closed form dies shortly after u_core; blend inside the gap
        w = u_zero - u_core
        u0, u1 = u_core + 0.1 * w, u_core + 0.8 * w
    return u0, u1


def make_geometry(d: int, gamma: float, blend_window=None) -> TargetGeometry:
    """Construct the target geometry for dimension ``d`` and shape ``gamma``.

    Parameters
    ----------
    d : int
        Domain dimension, at least 4.
    gamma : float
        Shape parameter in ``(0, sqrt(2) - 1)``.
    blend_window : pair of float, optional
        Interval ``[u0, u1]`` on which the closed form is blended into the
        closing arch.  Must lie strictly beyond ``u_core = 1 + gamma`` and
        inside the positivity range of the closed form.
    """
    if int(d) != d or d < 4:
        raise GeometryError(f"d must be an integer >= 4, got {d}")
    if not (0.0 < gamma < GAMMA_MAX):
        raise GeometryError(f"gamma must lie in (0, sqrt(2)-1), got {gamma}")
    d = int(d)
    alpha, beta = alpha_beta(d, gamma)
    u_core = 1.0 + gamma
    if blend_window is None:
        u0, u1 = default_blend_window(alpha, beta, u_core)
    else:
        u0, u1 = map(float, blend_window)
    if u0 <= u_core:
        raise GeometryError(f"blend window {u0, u1} overlaps [0, u_core={u_core}]")
    if u1 <= u0:
        raise GeometryError("blend window must satisfy u0 < u1")
    if u1 >= first_zero_closed_form(alpha, beta):
        raise GeometryError("blend window reaches the first zero of the closed-form g")

    # arch peaks at the equator r_g = 1 with the closed-form height g(1)
    u_peak = 1.0
    height = math.sqrt(1.0 - alpha + beta)
    a_star = u_peak + 0.5 * math.pi * height
    if u1 >= a_star:
        raise GeometryError("blend window extends past the closing point a_star")
    blend = BlendSpec(u0=u0, u1=u1, u_peak=u_peak, height=height, a_star=a_star)
    return TargetGeometry(d=d, gamma=float(gamma), alpha=alpha, beta=beta, u_core=u_core, blend=blend)


def potential_V(geom: TargetGeometry, shr, rho):
    """Linearization potential ``3(n-3)(2 alpha phi^2 - 5 beta rho^2 phi^4)``."""
    rho = np.asarray(rho, dtype=float)
    p = shr.phi(rho)
    val = 3 * (geom.n - 3) * (2 * geom.alpha * p**2 - 5 * geom.beta * rho**2 * p**4)
    return float(val) if val.ndim == 0 else val


# ---------------------------------------------------------------------------
# model targets used by the non-existence shooter


@dataclass(frozen=True)
class SinhTarget:
    """``g = sinh``: a geodesically convex (hyperbolic-space) target."""

    name: str = "sinh"

    def g(self, u, order=0):
        u = np.asarray(u, dtype=float)
        return np.sinh(u) if order % 2 == 0 else np.cosh(u)

    def F(self, u, order=0):
        # sinh cosh = sinh(2u)/2
        u = np.asarray(u, dtype=float)
        f = np.sinh(2 * u) if order % 2 == 0 else np.cosh(2 * u)
        return 2.0 ** (order - 1) * f

    def F_minus_identity(self, u):
        u = np.asarray(u, dtype=float)
        z = 2 * u
        series = z**3 / 6 * (1 + z**2 / 20 * (1 + z**2 / 42 * (1 + z**2 / 72)))
        return np.where(np.abs(z) < 0.1, series / 2, (np.sinh(z) - z) / 2)


@dataclass(frozen=True)
class FlatTarget:
    """``g(u) = u``: Euclidean target, F is the identity."""

    name: str = "flat"

    def g(self, u, order=0):
        u = np.asarray(u, dtype=float)
        return {0: u, 1: np.ones_like(u)}.get(order, np.zeros_like(u))

    def F(self, u, order=0):
        return self.g(u, order)

    def F_minus_identity(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))
