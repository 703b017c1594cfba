import math

import numpy as np
import pytest

from gravcat.quantities import HBAR, MU0
from gravcat.trap_design import (
    MATERIALS,
    Material,
    TrapConfig,
    cat_separation,
    current_for_frequency,
    load_materials,
    max_radius,
    sphere_mass,
    trap_frequency,
    validate_trap,
    zero_point_motion,
)

PB = MATERIALS["Pb"]
TA = MATERIALS["Ta"]
KHZ = 2 * math.pi * 1e3


def reference():
    return TrapConfig(PB, R=2e-6, I=10.0, l=25e-6, chi=8.7)


def test_materials_catalog():
    assert PB.rho == pytest.approx(11360.0)
    assert PB.B_crit == pytest.approx(0.08)
    assert PB.lam == pytest.approx(30.5e-9)
    assert PB.xi == pytest.approx(96e-9)
    assert TA.rho == pytest.approx(16700.0)


def test_materials_file_round_trip(tmp_path):
    path = tmp_path / "mats.kv"
    path.write_text("Nb.rho = 8.57 g/cm^3\nNb.B_crit = 0.2 T\nNb.lambda = 39 nm\nNb.xi = 38 nm\n")
    mats = load_materials(path)
    assert mats["Nb"] == Material("Nb", 8570.0, 0.2, 39e-9, 38e-9)


def test_materials_file_errors(tmp_path):
    path = tmp_path / "bad.kv"
    path.write_text("Nb.rho = 8.57 g/cm^3\nNb.B_crit = 0.2 m\n")
    with pytest.raises(Exception):
        load_materials(path)
    path.write_text("Nb.rho = 8.57 g/cm^3\n")
    with pytest.raises(ValueError, match="lacks"):
        load_materials(path)


def test_trap_frequency_reference():
    w = trap_frequency(10.0, 25e-6, PB.rho)
    assert w == pytest.approx(1.683e5, rel=1e-3)
    assert w == pytest.approx(28 * KHZ, rel=0.05)


def test_trap_frequency_scaling():
    w = trap_frequency(10.0, 25e-6, PB.rho)
    assert trap_frequency(20.0, 25e-6, PB.rho) == pytest.approx(2 * w, rel=1e-15)
    assert trap_frequency(10.0, 50e-6, PB.rho) == pytest.approx(w / 4, rel=1e-15)


def test_current_inverts_frequency():
    I = current_for_frequency(28 * KHZ, 25e-6, PB.rho)
    assert trap_frequency(I, 25e-6, PB.rho) == pytest.approx(28 * KHZ, rel=1e-14)


def test_max_radius():
    assert max_radius(PB.B_crit, PB.rho, 28 * KHZ) == pytest.approx(3.8e-6, rel=0.01)
    assert max_radius(PB.B_crit, PB.rho, 13 * KHZ) == pytest.approx(8e-6, rel=0.05)
    # the 8 um ceiling corresponds to roughly 13.3 kHz
    assert PB.B_crit / (8e-6 * math.sqrt(MU0 * PB.rho)) / KHZ == pytest.approx(13.3, abs=0.05)


def test_sphere_mass():
    assert sphere_mass(2e-6, PB.rho) == pytest.approx(0.38e-12, rel=0.01)
    assert sphere_mass(5e-6, TA.rho) == pytest.approx(8.74e-12, rel=1e-3)
    assert sphere_mass(4e-6, PB.rho) == pytest.approx(8 * sphere_mass(2e-6, PB.rho), rel=1e-15)


def test_zero_point_motion():
    x = zero_point_motion(0.38e-12, 1.68e5)
    assert x == pytest.approx(2.9e-14, rel=0.02)
    assert x == pytest.approx(math.sqrt(HBAR / (2 * 0.38e-12 * 1.68e5)), rel=1e-15)
    assert zero_point_motion(4 * 0.38e-12, 1.68e5) == pytest.approx(x / 2, rel=1e-15)


def test_cat_separation():
    assert cat_separation(8.7, 2.9e-14) == pytest.approx(1.0e-12, rel=0.01)
    assert cat_separation(0.0, 2.9e-14) == 0.0
    with pytest.raises(ValueError):
        cat_separation(-1.0, 1e-14)


@pytest.mark.parametrize(
    "fn, args, i, slope",
    [
        (trap_frequency, [10.0, 25e-6, 11360.0], 0, 1.0),
        (trap_frequency, [10.0, 25e-6, 11360.0], 1, -2.0),
        (trap_frequency, [10.0, 25e-6, 11360.0], 2, -0.5),
        (max_radius, [0.08, 11360.0, 1.7e5], 0, 1.0),
        (max_radius, [0.08, 11360.0, 1.7e5], 1, -0.5),
        (max_radius, [0.08, 11360.0, 1.7e5], 2, -1.0),
        (sphere_mass, [2e-6, 11360.0], 0, 3.0),
        (zero_point_motion, [3.8e-13, 1.7e5], 0, -0.5),
        (zero_point_motion, [3.8e-13, 1.7e5], 1, -0.5),
    ],
)
def test_log_log_slopes(fn, args, i, slope):
    scales = np.logspace(-1, 1, 7)
    values = []
    for s in scales:
        a = list(args)
        a[i] *= s
        values.append(fn(*a))
    assert np.polyfit(np.log(scales), np.log(values), 1)[0] == pytest.approx(slope, abs=1e-12)


def test_reference_chain_reproduces_printed_values():
    cfg = reference()
    assert cfg.omega_t == pytest.approx(28 * KHZ, rel=0.1)
    assert cfg.omega_perp == pytest.approx(cfg.omega_t / 2)
    assert cfg.R_max == pytest.approx(3.7e-6, rel=0.1)
    assert cfg.M == pytest.approx(0.38e-12, rel=0.1)
    assert cfg.L == pytest.approx(1e-12, rel=0.1)


def test_reference_config_passes_every_check():
    checks = validate_trap(reference())
    assert len(checks) == 4
    assert all(c.passed for c in checks)
    assert all(c.margin > 0 for c in checks)


def test_oversized_sphere_fails_radius_bound():
    cfg = TrapConfig.at_frequency(PB, 4e-6, 28 * KHZ)
    checks = {c.check: c for c in validate_trap(cfg)}
    assert not checks["R < R_max"].passed
    assert checks["R < R_max"].margin < 0
    assert sum(not c.passed for c in checks.values()) == 1


def test_small_sphere_fails_both_length_scale_checks():
    # 200 nm is below 10 lambda (305 nm) as well as 10 xi (960 nm)
    cfg = TrapConfig.at_frequency(PB, 200e-9, 28 * KHZ)
    checks = {c.check: c for c in validate_trap(cfg)}
    lam, xi = checks["R >= 10 lambda"], checks["R >= 10 xi"]
    assert not lam.passed and not xi.passed
    assert lam.margin == pytest.approx(200 / 305 - 1)
    assert xi.margin == pytest.approx(200 / 960 - 1)
    assert checks["R < R_max"].passed


def test_slow_trap_fails_cooling_floor():
    cfg = TrapConfig.at_frequency(PB, 2e-6, 5 * KHZ)
    checks = {c.check: c for c in validate_trap(cfg)}
    assert not checks["omega_t >= cooling floor"].passed
    assert checks["omega_t >= cooling floor"].margin == pytest.approx(-0.5)
