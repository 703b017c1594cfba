"""
Constraint chain for a superconducting microsphere in a magnetic quadrupole trap.

    coil current I, coil scale l, density rho
        -> trap frequency      omega_t = sqrt(mu0 / rho) I / l^2
        -> radius bound        R_max   = B_crit / (omega_t sqrt(mu0 rho))
        -> sphere mass         M       = 4/3 pi R^3 rho
        -> zero-point motion   x_zp    = sqrt(hbar / (2 M omega_t))
        -> cat separation      L       = 4 chi x_zp

The transverse frequency is half the axial one for a quadrupole field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .kvfile import parse_kv
from .quantities import DENSITY, FIELD, HBAR, LENGTH, MU0, parse_quantity

__all__ = [
    "Material",
    "TrapConfig",
    "CheckResult",
    "load_materials",
    "MATERIALS",
    "trap_frequency",
    "max_radius",
    "sphere_mass",
    "zero_point_motion",
    "cat_separation",
    "current_for_frequency",
    "validate_trap",
    "DEFAULT_COOLING_FLOOR",
    "DEFAULT_SIZE_FACTOR",
]

DEFAULT_COOLING_FLOOR = 2 * math.pi * 10e3  # rad/s
DEFAULT_SIZE_FACTOR = 10.0  # "much larger than" lambda and xi


@dataclass(frozen=True)
class Material:
    name: str
    rho: float
    B_crit: float
    lam: float
    xi: float

    def __post_init__(self):
        for field in ("rho", "B_crit", "lam", "xi"):
            if not getattr(self, field) > 0:
                raise ValueError(f"{self.name}: {field} must be positive")


_MATERIAL_FIELDS = {"rho": ("rho", DENSITY), "B_crit": ("B_crit", FIELD), "lambda": ("lam", LENGTH), "xi": ("xi", LENGTH)}


def load_materials(path=None) -> dict[str, Material]:
    """Read a materials catalog; defaults to the bundled ``materials.kv``."""
    if path is None:
        text = resources.files("gravcat.data").joinpath("materials.kv").read_text(encoding="utf-8")
        source = "materials.kv"
    else:
        text = Path(path).read_text(encoding="utf-8")
        source = str(path)
    fields: dict[str, dict[str, float]] = {}
    for key, entry in parse_kv(text, source).items():
        name, _, field = key.partition(".")
        if field not in _MATERIAL_FIELDS:
            raise ValueError(f"{source}:{entry.lineno}: unknown material field {key!r}")
        attr, dim = _MATERIAL_FIELDS[field]
        fields.setdefault(name, {})[attr] = parse_quantity(entry.value).require(dim, key)
    out = {}
    for name, vals in fields.items():
        missing = {a for a, _ in _MATERIAL_FIELDS.values()} - vals.keys()
        if missing:
            raise ValueError(f"{source}: material {name!r} lacks {sorted(missing)}")
        out[name] = Material(name=name, **vals)
    return out


MATERIALS = load_materials()


def trap_frequency(I: float, l: float, rho: float) -> float:
    return math.sqrt(MU0 / rho) * I / l**2


def current_for_frequency(omega_t: float, l: float, rho: float) -> float:
    """Coil current that produces ``omega_t`` at coil scale ``l``."""
    return omega_t * l**2 / math.sqrt(MU0 / rho)


def max_radius(B_crit: float, rho: float, omega_t: float) -> float:
    return B_crit / (omega_t * math.sqrt(MU0 * rho))


def sphere_mass(R: float, rho: float) -> float:
    return 4.0 / 3.0 * math.pi * R**3 * rho


def zero_point_motion(M: float, omega_t: float) -> float:
    return math.sqrt(HBAR / (2 * M * omega_t))


def cat_separation(chi: float, x_zp: float) -> float:
    if chi < 0:
        raise ValueError("chi must be non-negative")
    return 4 * chi * x_zp


@dataclass(frozen=True)
class TrapConfig:
    material: Material
    R: float
    I: float
    l: float
    chi: float = 0.0

    @classmethod
    def at_frequency(cls, material: Material, R: float, omega_t: float, l: float = 25e-6, chi: float = 0.0):
        return cls(material, R, current_for_frequency(omega_t, l, material.rho), l, chi)

    @property
    def omega_t(self) -> float:
        return trap_frequency(self.I, self.l, self.material.rho)

    @property
    def omega_perp(self) -> float:
        return self.omega_t / 2

    @property
    def R_max(self) -> float:
        return max_radius(self.material.B_crit, self.material.rho, self.omega_t)

    @property
    def M(self) -> float:
        return sphere_mass(self.R, self.material.rho)

    @property
    def x_zp(self) -> float:
        return zero_point_motion(self.M, self.omega_t)

    @property
    def L(self) -> float:
        return cat_separation(self.chi, self.x_zp)


@dataclass(frozen=True)
class CheckResult:
    check: str
    passed: bool
    margin: float  # fractional headroom; negative when violated


def validate_trap(
    config: TrapConfig,
    cooling_floor: float = DEFAULT_COOLING_FLOOR,
    size_factor: float = DEFAULT_SIZE_FACTOR,
) -> list[CheckResult]:
    """Evaluate the trap constraints; failures are reported, never raised."""
    mat = config.material
    R = config.R
    checks = [
        ("R < R_max", config.R_max / R - 1.0, lambda m: m > 0),
        (f"R >= {size_factor:g} lambda", R / (size_factor * mat.lam) - 1.0, lambda m: m >= 0),
        (f"R >= {size_factor:g} xi", R / (size_factor * mat.xi) - 1.0, lambda m: m >= 0),
        ("omega_t >= cooling floor", config.omega_t / cooling_floor - 1.0, lambda m: m >= 0),
    ]
    return [CheckResult(name, bool(ok(margin)), margin) for name, margin, ok in checks]
