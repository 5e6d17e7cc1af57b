"""Radial grids, fields and the norms used as diagnostics.

Conventions
-----------
Radial functions live in ``R^n``.  The Fourier transform is the unitary one,
which on radial functions reduces to

    (F f)(xi) = int_0^inf f(r) r^(n-1) Lam(xi r) dr,   Lam(z) = J_nu(z) / z^nu,

with ``nu = n/2 - 1``.  It is its own inverse, and ``exp(-r^2/2)`` is fixed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from .quadrature import integrate


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def bessel_kernel(n, z):
    """``J_nu(z) / z^nu`` with the removable singularity at 0 filled in."""
    nu = 0.5 * n - 1.0
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    lam0 = 1.0 / (2.0**nu * math.gamma(nu + 1.0))
    zs = z[small]
    out[small] = lam0 * (1.0 - zs * zs / (4.0 * (nu + 1.0)))
    zb = z[~small]
    out[~small] = special.jv(nu, zb) / zb**nu
    return out


# ---------------------------------------------------------------------------
# analytic descriptors


@dataclass(frozen=True)
class AnalyticForm:
    """Closed form of a radial field, optionally with its Fourier transform."""

    name: str
    func: Callable
    transform: Optional[Callable] = None  # (xi, n) -> values

    def __call__(self, r):
        return self.func(np.asarray(r, dtype=float))


def gaussian_form(c=1.0, amplitude=1.0):
    """``amplitude * exp(-r^2 / (4c))``."""

    def transform(xi, n):
        return amplitude * (2 * c) ** (n / 2) * np.exp(-c * np.asarray(xi) ** 2)

    return AnalyticForm(f"gaussian(c={c!r},A={amplitude!r})",
                        lambda r: amplitude * np.exp(-r * r / (4 * c)), transform)


def inverse_multiquadric_form(b, power, amplitude=1.0):
    """``amplitude * (r^2 + b)^(-power)``; transform known for 0 < power."""

    def transform(xi, n):
        xi = np.asarray(xi, dtype=float)
        order = n / 2 - power
        sb = math.sqrt(b)
        out = np.empty_like(xi)
        small = xi < 1e-8
        # limit xi -> 0 is finite only when power > n/2
        if np.any(small):
            out[small] = (
                math.gamma(power - n / 2) / (2 ** (n / 2) * math.gamma(power)) * b ** (n / 2 - power)
                if power > n / 2 else math.inf
            )
        x = xi[~small]
        out[~small] = 2 ** (1 - power) / math.gamma(power) * (x / sb) ** (power - n / 2) * special.kv(order, sb * x)
        return amplitude * out

    return AnalyticForm(f"imq(b={b!r},p={power!r},A={amplitude!r})",
                        lambda r: amplitude * (r * r + b) ** (-power), transform)


# ---------------------------------------------------------------------------
# grids and fields


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes on ``[0, R_max]`` with weights for ``int f(r) r^(n-1) dr``."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "custom"

    @property
    def R_max(self):
        return float(self.nodes[-1])

    @property
    def size(self):
        return self.nodes.size

    @classmethod
    def uniform(cls, n, R_max, N):
        """Nodes ``i*h``, ``i = 0..N-1``, ``h = R_max/N``; trapezoid weights.

        The node at ``R_max`` itself is omitted because fields on this grid
        vanish there (homogeneous Dirichlet).
        """
        h = R_max / N
        r = h * np.arange(N)
        w = np.full(N, h)
        w[0] = 0.5 * h
        return cls(n=n, nodes=r, weights=w * r ** (n - 1), kind="uniform")

    @classmethod
    def gauss_legendre(cls, n, R_max, panels=200, order=16):
        """Composite Gauss-Legendre rule on equal panels of ``[0, R_max]``."""
        x, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(0.0, R_max, panels + 1)
        half = 0.5 * np.diff(edges)
        mids = 0.5 * (edges[1:] + edges[:-1])
        r = (mids[:, None] + half[:, None] * x[None, :]).ravel()
        ww = (half[:, None] * w[None, :]).ravel()
        return cls(n=n, nodes=r, weights=ww * r ** (n - 1), kind="gauss_legendre")

    def integrate(self, values):
        """``int_0^R values(r) r^(n-1) dr`` by the grid rule."""
        return float(np.dot(self.weights, values))

    def same_as(self, other):
        return self is other or (
            self.n == other.n and self.nodes.shape == other.nodes.shape and np.array_equal(self.nodes, other.nodes)
        )


@dataclass(frozen=True, eq=False)
class RadialField:
    """Samples of a radial function on a :class:`RadialGrid`."""

    grid: RadialGrid
    values: np.ndarray
    form: Optional[AnalyticForm] = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise ValueError("field length does not match its grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_form(cls, grid, form):
        return cls(grid, form(grid.nodes), form)

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, np.asarray(func(grid.nodes), dtype=float))

    def with_values(self, values):
        return RadialField(self.grid, values)

    def __call__(self, r):
        """Evaluate off-grid: the analytic form if known, else interpolation."""
        r = np.asarray(r, dtype=float)
        if self.form is not None:
            return self.form(r)
        return np.interp(r, self.grid.nodes, self.values, right=0.0)

    def __add__(self, other):
        _check_grids(self, other)
        return RadialField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_grids(self, other)
        return RadialField(self.grid, self.values - other.values)

    def scale(self, c):
        return RadialField(self.grid, c * self.values)


class GridMismatch(ValueError):
    pass


def _check_grids(f, g):
    if not f.grid.same_as(g.grid):
        raise GridMismatch("fields live on different grids")


# ---------------------------------------------------------------------------
# Gaussian-weighted space


def _tail_integral(f, g, R, n):
    # both closed forms known: integrate the weighted product past the grid
    res = integrate(lambda r: f.form(r) * g.form(r) * np.exp(-r * r / 4) * r ** (n - 1), R, R + 40.0,
                    epsabs=1e-300, epsrel=1e-10)
    return res.value


def h_inner(f: RadialField, g: RadialField) -> float:
    """Inner product with Gaussian weight ``exp(-|x|^2/4)`` over R^n."""
    _check_grids(f, g)
    grid = f.grid
    n = grid.n
    val = grid.integrate(f.values * g.values * np.exp(-grid.nodes**2 / 4))
    if f.form is not None and g.form is not None and grid.kind != "uniform":
        val += _tail_integral(f, g, grid.R_max, n)
    return sphere_area(n) * val


def h_norm(f: RadialField) -> float:
    return math.sqrt(max(h_inner(f, f), 0.0))


def sup_norm(f: RadialField) -> float:
    return float(np.max(np.abs(f.values))) if f.values.size else 0.0


def l2_norm(f: RadialField) -> float:
    """Unweighted L^2(R^n) norm by the grid rule."""
    return math.sqrt(sphere_area(f.grid.n) * f.grid.integrate(f.values**2))


# ---------------------------------------------------------------------------
# Fourier side


def hankel_transform(f: RadialField, xi_grid: RadialGrid, tail_tol=1e-6) -> RadialField:
    """Radial profile of the n-dimensional Fourier transform of ``f``.

    If ``f`` carries a closed form with a known transform, only the deviation
    of the samples from that form is transformed by quadrature.  Otherwise the
    field is extended by zero beyond its grid and a warning is issued when the
    neglected tail looks larger than ``tail_tol`` (relative).
    """
    grid = f.grid
    n = grid.n
    if xi_grid.n != n:
        raise GridMismatch("xi grid has a different dimension")
    r, w = grid.nodes, grid.weights
    xi = xi_grid.nodes
    vals = f.values
    base = np.zeros_like(xi)
    if f.form is not None and f.form.transform is not None:
        base = f.form.transform(xi, n)
        vals = vals - f.form(r)
    else:
        edge = np.abs(vals[-max(3, r.size // 50):]).max()
        scale = np.abs(vals).max() or 1.0
        est = edge * grid.R_max**n / n / (abs(grid.integrate(np.abs(vals))) or 1.0)
        if edge / scale > tail_tol and est > tail_tol:
            warnings.warn(f"truncated Hankel transform: field is {edge / scale:.2e} of its max at R_max",
                          RuntimeWarning, stacklevel=2)
    out = _kernel_matrix(grid, xi_grid) @ (w * vals)
    return RadialField(xi_grid, base + out)


_KERNEL_CACHE = {}
_KERNEL_CACHE_SIZE = 4


def _kernel_matrix(grid, xi_grid):
    # keyed by identity; the cached entry keeps both grids alive so ids stay unique
    key = (id(grid), id(xi_grid))
    hit = _KERNEL_CACHE.get(key)
    if hit is not None:
        return hit[2]
    K = bessel_kernel(grid.n, np.outer(xi_grid.nodes, grid.nodes))
    if len(_KERNEL_CACHE) >= _KERNEL_CACHE_SIZE:
        _KERNEL_CACHE.pop(next(iter(_KERNEL_CACHE)))
    _KERNEL_CACHE[key] = (grid, xi_grid, K)
    return K


def default_xi_grid(n, xi_max=16.0, panels=160, order=16):
    return RadialGrid.gauss_legendre(n, xi_max, panels, order)


def sobolev_norm(f: RadialField, s: float, xi_grid: Optional[RadialGrid] = None) -> float:
    """Homogeneous Sobolev norm ``(int |xi|^(2s) |F f|^2 dxi)^(1/2)`` over R^n.

    Notes
    -----
    The xi-integral is truncated at the end of ``xi_grid``; pick it wide enough
    for the decay of the transform.  A non-integrable weight at the origin
    (``2s + n <= 0``) is rejected.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    n = f.grid.n
    if xi_grid is None:
        xi_grid = default_xi_grid(n)
    if 2 * s + n <= 0:
        raise ValueError("weight |xi|^(2s) not integrable at the origin")
    return _sobolev_from_transform(hankel_transform(f, xi_grid), s)


def _sobolev_from_transform(Ff, s):
    xi_grid = Ff.grid
    n = xi_grid.n
    xi = xi_grid.nodes
    val = xi_grid.integrate(xi ** (2 * s) * Ff.values**2)
    edge = abs(xi[-1] ** (2 * s) * Ff.values[-1] ** 2 * xi[-1] ** n)
    if val > 0 and edge > 1e-8 * val:
        warnings.warn("Sobolev integrand not negligible at the end of the xi grid", RuntimeWarning, stacklevel=2)
    return math.sqrt(sphere_area(n) * max(val, 0.0))


class SobolevWindowError(ValueError):
    pass


def xsk_window(n):
    """Admissible ``s`` range ``(n/2 - 1, n/2 - 1 + 1/(2(n-2))]``."""
    lo = n / 2 - 1
    return lo, lo + 1.0 / (2 * (n - 2))


def xsk_norm(f: RadialField, s: float, k: int, xi_grid: Optional[RadialGrid] = None) -> float:
    """``sqrt(|f|_{H^s}^2 + |f|_{H^k}^2)`` for the admissible pair ``(s, k)``."""
    n = f.grid.n
    lo, hi = xsk_window(n)
    if not (lo < s <= hi):
        raise SobolevWindowError(f"s={s} outside the admissible window n/2-1 < s <= n/2-1+1/(2(n-2)) = ({lo}, {hi}]")
    if int(k) != k or k <= n:
        raise SobolevWindowError(f"k={k} must be an integer with k > n={n}")
    Ff = hankel_transform(f, xi_grid if xi_grid is not None else default_xi_grid(n))
    return math.hypot(_sobolev_from_transform(Ff, s), _sobolev_from_transform(Ff, k))


def embedding_constant(n, s, k):
    """Explicit ``C`` with ``sup |f| <= C |f|_{X_s^k}`` for ``2s < n < 2k``.

    Splits the Fourier inversion integral at ``|xi| = 1`` and applies
    Cauchy-Schwarz on each piece.
    """
    if not (2 * s < n < 2 * k):
        raise ValueError("need 2s < n < 2k")
    area = sphere_area(n)
    return (2 * math.pi) ** (-n / 2) * math.sqrt(area / (n - 2 * s) + area / (2 * k - n))
