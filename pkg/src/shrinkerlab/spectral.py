"""Half-line Schroedinger forms of the linearized operator and their spectra.

After conjugation by ``rho^((n-1)/2) e^(-rho^2/8)`` the radial part of
``-(Delta - Lambda)`` becomes ``-d^2/drho^2 + q`` on ``L^2(0, inf)``, and the
linearization around the shrinker becomes ``-d^2/drho^2 + q - V``.  Removing
the known eigenvalue ``-1`` by a first-order factorization gives the operator
with potential ``(n^2 - 1)/(4 rho^2) + Q``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import sympy as sp
from scipy import linalg
from scipy.optimize import brentq

from .geometry import TargetGeometry, potential_V
from .norms import RadialField, RadialGrid, h_norm, inverse_multiquadric_form
from .quadrature import integrate
from .shrinker import ShrinkerProfile

THEOREM_DIMENSIONS = (6, 7, 8, 9)
THEOREM_GAMMA = 0.25


class SpectralError(RuntimeError):
    pass


def _positive(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("rho must be > 0")
    return rho


def _out(val):
    return float(val) if np.ndim(val) == 0 else val


def q_free(n: int, rho):
    """Potential of the conjugated free operator."""
    rho = _positive(rho)
    return _out(rho**2 / 16 + (n - 3) * (n - 1) / (4 * rho**2) - (n - 2) / 4)


def _check_dim(n, geom):
    if n != geom.n:
        raise ValueError(f"n={n} does not match geometry dimension d+2={geom.n}")


def potential_Q(n: int, geom: TargetGeometry, shr: ShrinkerProfile, rho):
    """Regular part ``Q`` of the factorized potential."""
    _check_dim(n, geom)
    rho = _positive(rho)
    a, b, al, be = shr.a, shr.b, geom.alpha, geom.beta
    s = rho**2 + b
    val = (
        rho**2 / 16 - n / 4 + 1
        + 3 * b * (5 * a**4 * be * (n - 3) - 6) / s**2
        + 3 * (2 - b - (n - 3) * (5 * a**4 * be - 2 * a**2 * al + 2)) / s
    )
    return _out(val)


def susy_potential(n, geom, shr, rho):
    """Full potential ``(n^2-1)/(4 rho^2) + Q`` of the factorized operator."""
    rho = _positive(rho)
    return _out((n * n - 1) / (4 * rho**2) + potential_Q(n, geom, shr, rho))


@functools.lru_cache(maxsize=None)
def _symbolic_susy(n, b):
    # independent route: w = (log ground state)' for A + 1, partner potential w^2 - w' - 1
    r = sp.symbols("r", positive=True)
    ground = sp.exp(-r**2 / 8) * r ** sp.Rational(n - 1, 2) * (r**2 + sp.nsimplify(b)) ** sp.Rational(-3, 2)
    w = sp.simplify(sp.diff(sp.log(ground), r))
    partner = sp.lambdify(r, w**2 - sp.diff(w, r) - 1, "numpy")
    original = sp.lambdify(r, w**2 + sp.diff(w, r), "numpy")
    return partner, original


def symbolic_susy_potentials(n, shr):
    """(partner potential, potential of ``A + 1``) from the ground state, symbolically."""
    return _symbolic_susy(n, shr.b)


def find_Q_zero(n, geom, shr, rho_max=50.0, samples=10_000):
    """The unique positive zero of ``Q``.

    Raises
    ------
    SpectralError
        If the sign scan on ``(0, rho_max]`` finds no or several sign changes.
    """
    r = np.linspace(rho_max / samples, rho_max, samples)
    q = potential_Q(n, geom, shr, r)
    flips = np.nonzero(np.signbit(q[:-1]) != np.signbit(q[1:]))[0]
    if flips.size != 1:
        raise SpectralError(f"expected one sign change of Q on (0, {rho_max}], found {flips.size}")
    i = int(flips[0])
    root = brentq(lambda x: potential_Q(n, geom, shr, x), r[i], r[i + 1], xtol=1e-15, rtol=1e-15)
    return root


def ggmt_constant(n, p):
    """``(p-1)^(p-1) Gamma(2p) / (n^(2p-1) p^p Gamma(p)^2)``."""
    lg = (p - 1) * math.log(p - 1) if p > 1 else 0.0
    return math.exp(lg + math.lgamma(2 * p) - (2 * p - 1) * math.log(n) - p * math.log(p) - 2 * math.lgamma(p))


@dataclass(frozen=True)
class GgmtResult:
    n: int
    p: float
    c_np: float
    rho_star: float
    integral: float
    bound: float
    error: float
    inside_theorem: bool

    def to_dict(self):
        return {
            "n": self.n,
            "p": self.p,
            "c": self.c_np,
            "rho_star": self.rho_star,
            "integral": self.integral,
            "bound": self.bound,
            "err": self.error,
            "inside_theorem": self.inside_theorem,
        }


def ggmt_bound(n: int, p: float, gamma: float = THEOREM_GAMMA, epsrel=1e-10, upper=None) -> GgmtResult:
    """GGMT integral ``c(n,p) int_0^inf rho^(2p-1) |min(Q, 0)|^p drho``.

    Parameters
    ----------
    upper : float, optional
        Right end of the integration range; defaults to the zero of ``Q``,
        beyond which the integrand vanishes identically.
    """
    from .geometry import make_geometry
    from .shrinker import make_shrinker

    if p <= 1:
        raise ValueError("p must be > 1")
    geom = make_geometry(n - 2, gamma)
    shr = make_shrinker(geom)
    rho_star = find_Q_zero(n, geom, shr)
    hi = rho_star if upper is None else float(upper)

    def integrand(r):
        qm = np.minimum(potential_Q(n, geom, shr, r), 0.0)
        return r ** (2 * p - 1) * np.abs(qm) ** p

    pts = [rho_star] if hi > rho_star else []
    res = integrate(integrand, 0.0, hi, epsabs=1e-14, epsrel=epsrel, breakpoints=pts, strict=True)
    c = ggmt_constant(n, p)
    inside = n in THEOREM_DIMENSIONS and gamma == THEOREM_GAMMA
    return GgmtResult(n=n, p=float(p), c_np=c, rho_star=rho_star, integral=res.value,
                      bound=c * res.value, error=c * res.error, inside_theorem=inside)


# ---------------------------------------------------------------------------
# discretization


@dataclass(frozen=True)
class SchrodingerProblem:
    """``-u'' + potential(rho) u`` on the half-line, Dirichlet at both ends."""

    n: int
    potential: Callable
    label: str = ""


def free_problem(n):
    return SchrodingerProblem(n, lambda r: q_free(n, r), "free")


def linearized_problem(geom, shr):
    n = geom.n
    return SchrodingerProblem(n, lambda r: q_free(n, r) - potential_V(geom, shr, r), "linearized")


def factorized_problem(geom, shr):
    n = geom.n
    return SchrodingerProblem(n, lambda r: susy_potential(n, geom, shr, r), "factorized")


@dataclass(frozen=True)
class HalfLineGrid:
    """Interior nodes ``i*h``, ``i = 1..N``, with ``h = R_max/(N+1)``."""

    N: int
    R_max: float

    @property
    def h(self):
        return self.R_max / (self.N + 1)

    @property
    def nodes(self):
        return self.h * np.arange(1, self.N + 1)


@dataclass(frozen=True)
class OperatorMatrix:
    diag: np.ndarray
    offdiag: np.ndarray
    grid: HalfLineGrid
    label: str = ""

    @property
    def N(self):
        return self.diag.size

    def dense(self):
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def assemble_schrodinger_matrix(problem: SchrodingerProblem, grid: HalfLineGrid) -> OperatorMatrix:
    """Three-point ``-u''`` plus the potential on the diagonal."""
    if grid.N < 100:
        raise ValueError("need at least 100 interior nodes")
    h = grid.h
    pot = np.asarray(problem.potential(grid.nodes), dtype=float)
    if not np.all(np.isfinite(pot)):
        raise ValueError("potential is not finite at every node")
    diag = 2.0 / h**2 + pot
    off = np.full(grid.N - 1, -1.0 / h**2)
    return OperatorMatrix(diag, off, grid, problem.label)


def eigen_spectrum(matrix: OperatorMatrix, k: int):
    """The ``k`` smallest eigenpairs, ascending, eigenvectors l2-normalized.

    Uses LAPACK bisection on the Sturm sequence followed by inverse iteration.
    """
    k = min(int(k), matrix.N)
    try:
        vals, vecs = linalg.eigh_tridiagonal(matrix.diag, matrix.offdiag, select="i",
                                             select_range=(0, k - 1), lapack_driver="stebz")
    except linalg.LinAlgError as exc:
        raise SpectralError(f"inverse iteration failed: {exc}") from exc
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    return [(float(vals[j]), vecs[:, j]) for j in range(k)]


def spectrum_of_A(geom, shr, grid, k, with_potential=True):
    problem = linearized_problem(geom, shr) if with_potential else free_problem(geom.n)
    return [v for v, _ in eigen_spectrum(assemble_schrodinger_matrix(problem, grid), k)]


def spectrum_of_L(geom, shr, grid, k, with_potential=True):
    """Top ``k`` eigenvalues of the linearization, descending.

    They are the negatives of the lowest eigenvalues of its Schroedinger form.
    """
    return [-v for v in spectrum_of_A(geom, shr, grid, k, with_potential)]


def spectral_gap(eigs_L):
    """Distance from 0 to the stable spectrum, ignoring the eigenvalue near 1."""
    stable = [v for v in eigs_L if v < 0.5]
    return -max(stable)


# ---------------------------------------------------------------------------


def gauge_profile(shr, r):
    return (np.asarray(r, dtype=float) ** 2 + shr.b) ** -1.5


def gauge_mode(shr: ShrinkerProfile, grid: RadialGrid) -> RadialField:
    """Unit vector in the Gaussian-weighted space along ``(r^2 + b)^(-3/2)``."""
    raw = RadialField(grid, gauge_profile(shr, grid.nodes), inverse_multiquadric_form(shr.b, 1.5))
    c = 1.0 / h_norm(raw)
    return RadialField(grid, c * raw.values, inverse_multiquadric_form(shr.b, 1.5, c))
