"""One verdict line per acceptance criterion, each at its stated tolerance.

The verdicts are collected by the ``report`` fixture and repeated in the
terminal summary under "acceptance criteria".
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from shrinkerlab.cli import EXIT_OK, run
from shrinkerlab.flow import (
    SimConfig, evolve, fit_decay_rate, fit_growth_exponent, gaussian_bump, gaussian_free_evolution,
    shoot_blowup_time,
)
from shrinkerlab.geometry import SinhTarget, make_geometry
from shrinkerlab.norms import RadialField, RadialGrid, default_xi_grid, h_inner, sobolev_norm, sphere_area
from shrinkerlab.shrinker import make_shrinker, nonexistence_witness, ode_residual
from shrinkerlab.spectral import HalfLineGrid, ggmt_bound, spectral_gap, spectrum_of_L

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = Path(__file__).resolve().parent / "golden"

PRODUCTION = SimConfig(n=6, R_max=25.0, N=2000, dt=0.01, tau_end=8.0, T_bracket=(0.9, 1.1), max_bisect=40)


@pytest.fixture(scope="module")
def shot(geom4, shr4):
    t0 = time.perf_counter()
    rep = shoot_blowup_time(PRODUCTION, geom4, shr4, gaussian_bump(1e-3))
    return rep, time.perf_counter() - t0


def test_criterion_1_ggmt(report):
    parts, ok = [], True
    for (n, p), limit in (((6, 2), 0.8), ((7, 2), 1.0), ((8, 4), 1.0), ((9, 4), 1.0)):
        t0 = time.perf_counter()
        res = ggmt_bound(n, p)
        dt = time.perf_counter() - t0
        rel = res.error / res.bound
        ok &= res.bound < limit and rel <= 1e-8 and dt < 1.0
        parts.append(f"B({n},{p})={res.bound:.5f}<{limit} rel_err={rel:.1e} {dt * 1e3:.1f}ms")
    report("1 GGMT bounds", ok, "; ".join(parts))


def test_criterion_2_shrinker_identity(report):
    t0 = time.perf_counter()
    rho = np.geomspace(1e-3, 50.0, 2000)
    worst = 0.0
    for d in (4, 5, 6, 7):
        for gamma in (0.05, 0.25, 0.40):
            g = make_geometry(d, gamma)
            worst = max(worst, float(np.max(np.abs(ode_residual(g, make_shrinker(g), rho)))))
    dt = time.perf_counter() - t0
    report("2 shrinker identity", worst <= 1e-9 and dt < 1.0, f"max|residual|={worst:.2e} over 12 pairs in {dt:.2f}s")


def test_criterion_3_gauge_eigenpair(report, geom4, shr4):
    eigs = spectrum_of_L(geom4, shr4, HalfLineGrid(2000, 25.0), 6)
    fine = spectrum_of_L(geom4, shr4, HalfLineGrid(4000, 35.0), 6)
    top = min(eigs, key=lambda v: abs(v - 1))
    others = [v for v in eigs if v is not top]
    gap, gap_fine = spectral_gap(eigs), spectral_gap(fine)
    ok = abs(top - 1) <= 5e-3 and all(v < 0 for v in others) and abs(gap - gap_fine) <= 1e-3
    report("3 gauge eigenpair", ok,
           f"lambda_1={top:.6f}, max other={max(others):.5f}, gap {gap:.6f} -> {gap_fine:.6f}")


def test_criterion_4_free_oracle(report, geom4, shr4):
    t0 = time.perf_counter()
    cfg = SimConfig(n=6, R_max=25.0, N=4000, dt=1e-3, with_potential=False, with_nonlinearity=False)
    grid = cfg.grid()
    f0 = RadialField(grid, np.exp(-grid.nodes**2 / 2))
    traj = evolve(cfg, geom4, shr4, None, 1.0, tau_end=1.0, initial=f0)
    exact = gaussian_free_evolution(0.5, 1.0, 1.0, 6)(grid.nodes)
    err = float(np.max(np.abs(traj.final.values - exact)) / np.max(np.abs(exact)))
    dt = time.perf_counter() - t0
    report("4 free-semigroup oracle", err <= 1e-3 and dt < 30, f"rel sup err={err:.2e} in {dt:.1f}s")


def test_criterion_5_stable_blowup(report, shot):
    rep, dt = shot
    ratio = rep.sup_end / rep.sup_initial
    ok = (rep.converged and rep.iterations <= 40 and rep.omega_fit <= -0.1 and ratio <= 1e-2
          and dt < 600)
    report("5 stable blowup", ok,
           f"T*={rep.T_star:.8f} after {rep.iterations} probes, slope={rep.omega_fit:.4f}, "
           f"sup ratio={ratio:.5f}, {dt:.1f}s")


def test_criterion_6_gauge_instability(report, geom4, shr4, shot):
    rep, _ = shot
    parts, ok = [], True
    for T in (rep.T_star - 0.2, rep.T_star + 0.2):
        traj = evolve(PRODUCTION, geom4, shr4, gaussian_bump(1e-3), T)
        k = fit_growth_exponent(traj)
        ok &= abs(k - 1.0) <= 0.05
        stop = traj.aborted or "none"
        parts.append(f"T={T:.4f} exponent={k:.4f} over [0.05, {traj.tau[-1]:.2f}] (guard: {stop})")
    report("6 gauge instability", ok, "; ".join(parts))


def test_criterion_7_nonexistence(report):
    t0 = time.perf_counter()
    w = nonexistence_witness(SinhTarget(), 4, 1e-45, 20.0)
    dt = time.perf_counter() - t0
    ok = w.lyapunov_nondecreasing and w.max_lyapunov_drop <= 1e-12 and w.growth_ratio > 5 and dt < 1.0
    report("7 nonexistence witness", ok,
           f"max Lyapunov drop={w.max_lyapunov_drop:.1e}, theta(20)/theta(2)={w.growth_ratio:.3e}, {dt:.2f}s")


def test_criterion_8_norm_oracles(report):
    n = 6
    grid = RadialGrid.gauss_legendre(n, 30.0, 300, 16)
    xi = default_xi_grid(n)
    f = RadialField(grid, np.exp(-grid.nodes**2 / 2))
    worst_s = 0.0
    for s in (0.0, 2.0625, 7.0):
        exact = math.sqrt(sphere_area(n) * math.gamma(s + n / 2) / 2)
        worst_s = max(worst_s, abs(sobolev_norm(f, s, xi) / exact - 1))
    worst_h = 0.0
    for j in (0, 1, 2):
        g = RadialField(grid, grid.nodes ** (2 * j) * np.exp(-grid.nodes**2 / 2))
        # int r^{2j} e^{-5 r^2/4} r^{n-1} dr = Gamma(j + n/2) / (2 (5/4)^{j + n/2})
        exact = sphere_area(n) * math.gamma(j + n / 2) / (2 * 1.25 ** (j + n / 2))
        worst_h = max(worst_h, abs(h_inner(g, f) / exact - 1))
    report("8 norm oracles", worst_s <= 1e-4 and worst_h <= 1e-10,
           f"Sobolev rel err={worst_s:.1e}, weighted moments rel err={worst_h:.1e}")


def test_criterion_9_determinism(report, tmp_path):
    parts, ok = [], True
    for cmd in ("ggmt", "verify-shrinker", "shoot"):
        runs = []
        for k in range(2):
            out = tmp_path / cmd / str(k)
            code = run([cmd, "--config", str(ROOT / "configs" / f"{cmd}.conf"), "--out", str(out)])
            ok &= code == EXIT_OK
            runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        golden = {p.name: p.read_bytes() for p in sorted((GOLDEN / cmd).iterdir())}
        same = runs[0] == runs[1] == golden
        ok &= same
        parts.append(f"{cmd}: {'identical' if same else 'differs'}")
    report("9 determinism", ok, ", ".join(parts))


@pytest.mark.parametrize("detune", [-0.01, 0.01])
def test_small_detuning_grows_at_rate_one(geom4, shr4, shot, detune):
    # while the perturbation stays in the linear regime the gauge coefficient grows like e^tau
    rep, _ = shot
    traj = evolve(PRODUCTION, geom4, shr4, gaussian_bump(1e-3), rep.T_star + detune)
    sup = traj.column("sup_norm")
    linear = sup <= 0.05 * float(shr4.phi(0.0))
    tau_lin = traj.tau[np.argmin(linear)] if not linear.all() else traj.tau[-1]
    assert fit_growth_exponent(traj, (0.05, tau_lin)) == pytest.approx(1.0, abs=0.02)
