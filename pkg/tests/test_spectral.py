import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sci_integrate
from scipy import linalg

from shrinkerlab.flow import SimConfig, apply_linear_operator
from shrinkerlab.geometry import make_geometry
from shrinkerlab.norms import RadialField, h_inner, h_norm
from shrinkerlab.shrinker import make_shrinker
from shrinkerlab.spectral import (
    HalfLineGrid, SchrodingerProblem, SpectralError, assemble_schrodinger_matrix, eigen_spectrum,
    find_Q_zero, gauge_mode, gauge_profile, ggmt_bound, ggmt_constant, potential_Q, q_free,
    spectral_gap, spectrum_of_A, spectrum_of_L, susy_potential, symbolic_susy_potentials,
    factorized_problem,
)


def setup(n, gamma=0.25):
    g = make_geometry(n - 2, gamma)
    return g, make_shrinker(g)


def test_q_free_examples():
    assert q_free(6, 2.0) == pytest.approx(0.1875, abs=1e-15)
    assert q_free(3, 1.0) == pytest.approx(-0.1875, abs=1e-15)
    with pytest.raises(ValueError):
        q_free(6, 0.0)


def test_Q_asymptotics():
    g, s = setup(6)
    assert potential_Q(6, g, s, 200.0) / (200.0**2 / 16) == pytest.approx(1.0, rel=1e-3)
    q0 = potential_Q(6, g, s, 1e-6)
    assert q0 < 0


def test_Q_dimension_mismatch():
    g, s = setup(6)
    with pytest.raises(ValueError):
        potential_Q(7, g, s, 1.0)


@pytest.mark.parametrize("n", [6, 7, 8, 9])
def test_Q_single_sign_change(n):
    g, s = setup(n)
    rho_star = find_Q_zero(n, g, s)
    assert abs(potential_Q(n, g, s, rho_star)) < 1e-12
    r = np.linspace(1e-3, 50, 20001)
    q = potential_Q(n, g, s, r)
    assert np.all(q[r < rho_star * 0.999] < 0) and np.all(q[r > rho_star * 1.001] > 0)


def test_Q_zero_below_bound_n6():
    g, s = setup(6)
    assert find_Q_zero(6, g, s) <= 21 / 5


def test_find_Q_zero_reports_missing_root():
    g, s = setup(6)
    with pytest.raises(SpectralError):
        find_Q_zero(6, g, s, rho_max=0.5, samples=100)


@pytest.mark.parametrize("n", [6, 7, 9])
def test_factorization_closed_form_matches_symbolic(n):
    g, s = setup(n)
    partner, original = symbolic_susy_potentials(n, s)
    r = np.linspace(0.1, 30, 3000)
    assert np.max(np.abs(partner(r) - susy_potential(n, g, s, r))) <= 1e-9
    # the ground state potential is the linearized one, shifted by the eigenvalue -1
    from shrinkerlab.geometry import potential_V

    assert np.max(np.abs(original(r) - 1 - (q_free(n, r) - potential_V(g, s, r)))) <= 1e-9


def test_ggmt_constant_exact():
    assert ggmt_constant(6, 2) == pytest.approx(1 / 144, rel=1e-14)


@pytest.mark.parametrize("n,p", [(6, 2), (7, 2), (8, 4), (9, 4)])
def test_ggmt_matches_scipy_quad(n, p):
    res = ggmt_bound(n, p)
    g, s = setup(n)
    ref, _ = sci_integrate.quad(lambda r: r ** (2 * p - 1) * abs(min(potential_Q(n, g, s, r), 0.0)) ** p,
                                0, res.rho_star, epsabs=1e-14, epsrel=1e-12, limit=500)
    assert res.integral == pytest.approx(ref, rel=1e-9)
    assert res.bound < 1 and res.inside_theorem
    assert res.error < 1e-9


def test_ggmt_truncation_invariance():
    a = ggmt_bound(6, 2)
    b = ggmt_bound(6, 2, upper=2 * a.rho_star)
    assert b.bound == pytest.approx(a.bound, rel=1e-10)


def test_ggmt_rejects_small_p():
    with pytest.raises(ValueError):
        ggmt_bound(6, 1.0)


def test_ggmt_flags_outside_theorem():
    assert not ggmt_bound(6, 2, gamma=0.3).inside_theorem
    assert not ggmt_bound(10, 2).inside_theorem


# ---------------------------------------------------------------------------
# eigensolver


def test_eigensolver_diagonal():
    grid = HalfLineGrid(100, 1.0)
    d = np.arange(1.0, 101.0)
    from shrinkerlab.spectral import OperatorMatrix

    M = OperatorMatrix(d, np.zeros(99), grid)
    vals = [v for v, _ in eigen_spectrum(M, 3)]
    assert vals == pytest.approx([1, 2, 3], abs=1e-12)


def test_dirichlet_laplacian_on_interval():
    grid = HalfLineGrid(1000, math.pi)
    M = assemble_schrodinger_matrix(SchrodingerProblem(1, lambda r: 0 * r), grid)
    vals = [v for v, _ in eigen_spectrum(M, 4)]
    assert vals == pytest.approx([1, 4, 9, 16], rel=1e-4)
    j = np.arange(1, 5)
    assert vals == pytest.approx(4 / grid.h**2 * np.sin(j * grid.h / 2) ** 2, rel=1e-10)


def test_zero_potential_scaling():
    R = 7.0
    grid = HalfLineGrid(1000, R)
    M = assemble_schrodinger_matrix(SchrodingerProblem(1, lambda r: 0 * r), grid)
    assert eigen_spectrum(M, 1)[0][0] == pytest.approx(math.pi**2 / R**2, rel=1e-5)


def test_matches_dense_eigh():
    g, s = setup(6)
    M = assemble_schrodinger_matrix(factorized_problem(g, s), HalfLineGrid(300, 20.0))
    ref = linalg.eigh(M.dense(), eigvals_only=True)[:5]
    assert [v for v, _ in eigen_spectrum(M, 5)] == pytest.approx(ref, abs=1e-9)


def test_eigenvectors_normalized():
    g, s = setup(6)
    M = assemble_schrodinger_matrix(factorized_problem(g, s), HalfLineGrid(300, 20.0))
    for _, v in eigen_spectrum(M, 3):
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_harmonic_half_line():
    # -u'' + rho^2/16 u with u(0) = 0 keeps the odd oscillator states: j + 3/4
    grid = HalfLineGrid(3000, 30.0)
    M = assemble_schrodinger_matrix(SchrodingerProblem(1, lambda r: r * r / 16), grid)
    vals = [v for v, _ in eigen_spectrum(M, 4)]
    assert vals == pytest.approx([0.75, 1.75, 2.75, 3.75], abs=1e-3)


def test_rejects_coarse_grid():
    with pytest.raises(ValueError):
        assemble_schrodinger_matrix(SchrodingerProblem(1, lambda r: 0 * r), HalfLineGrid(50, 1.0))


def test_rejects_singular_potential():
    with pytest.raises(ValueError), np.errstate(divide="ignore"):
        assemble_schrodinger_matrix(SchrodingerProblem(1, lambda r: 1 / (r - r[3])), HalfLineGrid(200, 1.0))


# ---------------------------------------------------------------------------
# spectra of the flow operators

GRID = HalfLineGrid(2000, 25.0)


def test_free_spectrum_positive():
    g, s = setup(6)
    vals = spectrum_of_A(g, s, GRID, 3, with_potential=False)
    assert vals == pytest.approx([0.5, 1.5, 2.5], abs=1e-3)
    assert spectrum_of_L(g, s, GRID, 3, with_potential=False) == pytest.approx([-0.5, -1.5, -2.5], abs=1e-3)


@pytest.mark.parametrize("n", [6, 7, 8, 9])
def test_linearized_structure(n):
    g, s = setup(n)
    eigs = spectrum_of_L(g, s, GRID, 4)
    assert eigs[0] == pytest.approx(1.0, abs=1e-3)
    assert all(v < 0 for v in eigs[1:])
    assert spectral_gap(eigs) > 0


def test_isospectral_factorization():
    g, s = setup(6)
    eigs_L = spectrum_of_L(g, s, GRID, 4)
    M = assemble_schrodinger_matrix(factorized_problem(g, s), GRID)
    fact = [v for v, _ in eigen_spectrum(M, 3)]
    assert np.all(np.array(fact) > 0)
    assert np.max(np.abs(np.array(fact) + np.array(eigs_L[1:]))) <= 1e-2


def test_gap_grid_convergence():
    g, s = setup(6)
    a = spectral_gap(spectrum_of_L(g, s, HalfLineGrid(2000, 25.0), 3))
    b = spectral_gap(spectrum_of_L(g, s, HalfLineGrid(4000, 35.0), 3))
    assert abs(a - b) <= 1e-3


# ---------------------------------------------------------------------------
# gauge mode


def test_gauge_mode_unit_and_monotone(geom4, shr4):
    G = gauge_mode(shr4, SimConfig().grid())
    assert h_norm(G) == pytest.approx(1.0, abs=1e-12)
    assert np.all(G.values > 0) and np.all(np.diff(G.values) < 0)


def test_gauge_mode_rayleigh_quotient(geom4, shr4):
    cfg = SimConfig(N=2000, R_max=25.0)
    G = gauge_mode(shr4, cfg.grid())
    LG = apply_linear_operator(cfg, geom4, shr4, G)
    assert h_inner(LG, G) == pytest.approx(1.0, abs=5e-3)


@given(st.floats(0.05, 20.0))
def test_gauge_profile_positive_decreasing(r):
    g, s = setup(6)
    assert gauge_profile(s, r) > gauge_profile(s, r + 0.1) > 0
