"""Acceptance criteria, one test each, at the agreed tolerances and runtimes.

Each test prints a single ``PASS``/``FAIL`` line (also collected into the
terminal summary) before asserting.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from gravcat.classical_probe import estimate_statistics, f0, force_correlation, mean_force, simulate_telegraph
from gravcat.feasibility import (
    PROPOSALS,
    build_report,
    distinguishability_note,
    evaluate_proposal,
    f0_density_form,
    projections,
)
from gravcat.quantities import HBAR, parse_quantity
from gravcat.quantum_probe import (
    basis_state,
    classical_center,
    coherent_state,
    coupling_g,
    default_n_max,
    distinguishability,
    energy,
    evolve_series,
    expectation,
    jc_hamiltonian,
)
from gravcat.trap_design import MATERIALS, TrapConfig, sphere_mass


def report(number, title, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title} ({detail}; {elapsed:.2f} s of {budget:g} s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_small_cat_force():
    t0 = time.perf_counter()
    value = f0(parse_quantity("0.38 ng").magnitude, parse_quantity("4.0 ng").magnitude,
               parse_quantity("1 pm").magnitude, parse_quantity("3 um").magnitude)
    elapsed = time.perf_counter() - t0
    ok = round(value, 31) == pytest.approx(1.9e-30) and abs(value / 2e-30 - 1) <= 0.10
    report(1, "small-cat force", ok, f"f0 = {value:.3g} N vs 2e-30 N", elapsed, 1.0)


def test_criterion_2_tantalum_force():
    t0 = time.perf_counter()
    rho = parse_quantity("16.7 g/cm^3").magnitude
    M = sphere_mass(5e-6, rho)
    value = f0(M, 4.0e-12, 10e-12, 5e-6 + 1e-6)
    elapsed = time.perf_counter() - t0
    ok = abs(M / 8.74e-12 - 1) < 0.01 and abs(value / 0.6e-28 - 1) <= 0.10
    report(2, "tantalum force", ok, f"M = {M:.3g} kg, f0 = {value:.3g} N vs 6e-29 N", elapsed, 1.0)


def test_criterion_3_trap_chain():
    t0 = time.perf_counter()
    cfg = TrapConfig(MATERIALS["Pb"], R=2e-6, I=10.0, l=25e-6, chi=8.7)
    w, R_max, L = cfg.omega_t, cfg.R_max, cfg.L
    elapsed = time.perf_counter() - t0
    ok = (abs(w / (2 * math.pi * 28e3) - 1) <= 0.10 and abs(R_max / 3.7e-6 - 1) <= 0.10
          and 1 / 3 <= L / 1e-12 <= 3)
    report(3, "trap chain", ok,
           f"omega_t = 2pi x {w / 2 / math.pi / 1e3:.1f} kHz, R_max = {R_max * 1e6:.2f} um, "
           f"L = {L:.3g} m with configured chi = 8.7", elapsed, 1.0)


def test_criterion_4_proposal_table():
    t0 = time.perf_counter()
    entries = [evaluate_proposal(PROPOSALS[k]) for k in PROPOSALS]
    rep = build_report(entries)
    elapsed = time.perf_counter() - t0
    quoted = {"P1": (17, 17), "P2": (18, 18), "P3": (12, 12), "P4": (13, 13), "P5a": (10, 11), "P6": (13, 13)}
    gaps = {e.key: e.gap_orders for e in entries}
    in_band = {k: lo - 1 <= gaps[k] <= hi + 1 for k, (lo, hi) in quoted.items()}
    trampoline = next(e for e in entries if e.key == "P5b")
    flagged = any(n.startswith("P5b") and "2e-25" in n for n in rep.notes)
    ok = all(in_band.values()) and round(trampoline.f_grav, 31) == pytest.approx(1.9e-30) and flagged
    detail = ", ".join(f"{k} {gaps[k]:.1f}" for k in quoted) + f"; trampoline {trampoline.f_grav:.2g} N, note {flagged}"
    report(4, "proposal table", ok, detail, elapsed, 1.0)


def test_criterion_5_telegraph_oracle():
    t0 = time.perf_counter()
    ens = simulate_telegraph(1.0, 1.0, 0.1, 5.0, 100_000, seed=0)
    again = simulate_telegraph(1.0, 1.0, 0.1, 5.0, 100_000, seed=0)
    stats = estimate_statistics(ens)
    elapsed = time.perf_counter() - t0
    z_mean = np.zeros_like(stats.mean)
    diff = stats.mean - mean_force(stats.times, 1.0, 1.0)
    nz = stats.mean_stderr > 0
    z_mean[nz] = diff[nz] / stats.mean_stderr[nz]
    mean_ok = np.all(np.abs(diff[~nz]) < 1e-15) and np.all(np.abs(z_mean) <= 3)
    diff_c = stats.autocorr - force_correlation(0.0, stats.lags, 1.0, 1.0)
    nz = stats.autocorr_stderr > 0
    z_corr = np.zeros_like(diff_c)
    z_corr[nz] = diff_c[nz] / stats.autocorr_stderr[nz]
    corr_ok = np.all(np.abs(diff_c[~nz]) < 1e-15) and np.all(np.abs(z_corr) <= 3)
    same = np.array_equal(ens.trajectories, again.trajectories)
    report(5, "telegraph oracle", mean_ok and corr_ok and same,
           f"max |z| mean {np.abs(z_mean).max():.2f}, autocorrelation {np.abs(z_corr).max():.2f}, "
           f"{stats.times.size} grid points, deterministic {same}", elapsed, 60.0)


def test_criterion_6_quantum_properties():
    t0 = time.perf_counter()
    m, w = 100e-12, 1e3  # kg, rad/s
    f = math.sqrt(2 * m * HBAR * w) * w  # g = -omega
    g = coupling_g(f, m, w)
    nu = 0.3 * w
    times = np.linspace(0, 100 / w, 401)
    n = default_n_max(g, w)

    # (a) norm and energy over 100/omega, from the displaced ground state of the + branch
    H = jc_hamiltonian(nu, w, g, n)
    psi0 = coherent_state("+", -g / w, n)
    e0 = energy(psi0, H)
    states = evolve_series(psi0, H, times)
    norm_drift = max(s.norm_drift for s in states)
    e_drift = max(abs(energy(s, H) - e0) for s in states) / abs(e0)

    # (b) uncoupled qubit precession
    H0 = jc_hamiltonian(nu, w, 0.0, 16)
    s3 = np.array([expectation(s, "sigma3") for s in evolve_series(basis_state("+", 0, 16), H0, times)])
    free_err = np.abs(s3 - np.cos(2 * nu * times)).max()

    # (c) frozen tunnelling: sigma3 conserved, position follows x0 (1 - cos omega t)
    Hf = jc_hamiltonian(0.0, w, g, n)
    frozen = evolve_series(basis_state("+", 0, n), Hf, times)
    s3f = np.array([expectation(s, "sigma3") for s in frozen])
    x = np.array([expectation(s, "position", m=m, omega=w) for s in frozen])
    x0 = classical_center(f, m, w)
    x_err = np.abs(x - x0 * (1 - np.cos(w * times))).max() / (2 * x0)

    # (d) doubling the truncation
    def observables(n_max):
        ss = evolve_series(basis_state("+", 0, n_max), jc_hamiltonian(nu, w, g, n_max), times)
        return np.array([[expectation(s, "sigma3"), expectation(s, "number"),
                          expectation(s, "position", m=m, omega=w) / x0] for s in ss])

    trunc = np.abs(observables(n) - observables(2 * n)).max()
    elapsed = time.perf_counter() - t0
    ok = (norm_drift <= 1e-10 and e_drift <= 1e-8 and free_err <= 1e-6
          and np.abs(s3f - 1).max() <= 1e-10 and x_err <= 1e-6 and trunc < 1e-6)
    report(6, "quantum probe properties", ok,
           f"norm {norm_drift:.1e}, energy {e_drift:.1e}, precession {free_err:.1e}, "
           f"sigma3 {np.abs(s3f - 1).max():.1e}, position {x_err:.1e}, truncation {trunc:.1e}", elapsed, 120.0)


def test_criterion_7_density_form_identity():
    rng = np.random.default_rng(0)
    n = 10_000
    rho = 10 ** rng.uniform(3, 4.5, n)
    m = 10 ** rng.uniform(-22, -9, n)
    L = 10 ** rng.uniform(-13, -6, n)
    a = 10 ** rng.uniform(-7, -2, n)
    R = 10 ** rng.uniform(-7, -3, n)
    t0 = time.perf_counter()
    lhs = np.array([f0_density_form(*p) for p in zip(rho, m, L, a, R)])
    rhs = np.array([f0(sphere_mass(r, d), mm, ll, r + aa) for d, mm, ll, aa, r in zip(rho, m, L, a, R)])
    elapsed = time.perf_counter() - t0
    ulps = np.abs(lhs - rhs) / np.spacing(rhs)
    rel = np.abs(lhs / rhs - 1).max()
    report(7, "density-form identity", ulps.max() <= 4,
           f"max {ulps.max():.0f} ulp, {np.mean(ulps > 4):.2%} of points above 4 ulp, "
           f"max relative {rel:.1e}", elapsed, 1.0)


def test_criterion_8_projections():
    t0 = time.perf_counter()
    p = projections(L_cat=100e-9)
    elapsed = time.perf_counter() - t0
    base, imp = p["baseline"].f0, p["improved"].f0
    ok = abs(math.log10(base) + 25) <= 1 and abs(math.log10(imp) + 23) <= 1
    report(8, "large-cat projections", ok,
           f"baseline {base:.2g} N, improved {imp:.2g} N ({p['improved'].material}, "
           f"R = {p['improved'].R * 1e6:.2g} um, L = {p['improved'].L:.2g} m)", elapsed, 10.0)


def test_criterion_9_distinguishability_properties():
    t0 = time.perf_counter()
    f, m, w = 1e-21, 100e-12, 2 * math.pi * 1e5
    base = distinguishability(f, m, w)
    quad = distinguishability(3 * f, m, w) / base
    cube = distinguishability(f, m, 2 * w) / base
    # dimensionless: invariant under a change of unit system (SI vs cgs-like rescaling)
    dim = (parse_quantity(f"{f} N") ** 2 / (parse_quantity(f"{m} kg") * parse_quantity("1.054571817e-34 J*s")
                                            * parse_quantity(f"{w} 1/s") ** 3))
    note = distinguishability_note(f, m, w)
    rep = build_report([evaluate_proposal(PROPOSALS["P5b"])], extra_notes=[note])
    elapsed = time.perf_counter() - t0
    ok = (quad == pytest.approx(9.0, rel=1e-13) and cube == pytest.approx(1 / 8, rel=1e-13)
          and dim.dim.dimensionless and dim.magnitude == pytest.approx(base, rel=1e-12)
          and any("1e-53" in n for n in rep.notes))
    report(9, "distinguishability substitute", ok,
           f"value {base:.2g}, f0 x3 -> x{quad:.3g}, omega x2 -> x{cube:.4g}, dimensionless {dim.dim.dimensionless}, "
           "discrepancy note present", elapsed, 1.0)
