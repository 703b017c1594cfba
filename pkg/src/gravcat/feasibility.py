"""
Feasibility of detecting the differential force of a microsphere cat.

Covers the density form of the force amplitude, the Casimir proximity guard,
the catalog of candidate force probes with their sensitivity gaps, a grid
search over the design levers (material, radius, surface gap, separation) and
the assembled report.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .classical_probe import f0 as f0_point
from .kvfile import parse_kv
from .quantities import (
    ACCELERATION,
    DENSITY,
    FORCE,
    LENGTH,
    MASS,
    TEMPERATURE,
    G,
    Quantity,
    format_quantity,
    parse_quantity,
)
from .quantum_probe import distinguishability
from .trap_design import (
    DEFAULT_COOLING_FLOOR,
    DEFAULT_SIZE_FACTOR,
    MATERIALS,
    TrapConfig,
    max_radius,
    sphere_mass,
    validate_trap,
)

__all__ = [
    "ProbeProposal",
    "CatSource",
    "FeasibilityEntry",
    "DesignBounds",
    "DesignResult",
    "CasimirCheck",
    "FeasibilityReport",
    "NoFeasiblePoint",
    "load_proposals",
    "PROPOSALS",
    "REFERENCE_CAT",
    "f0_density_form",
    "casimir_guard",
    "sensitivity_gap",
    "evaluate_proposal",
    "optimize_f0",
    "build_report",
    "projections",
    "distinguishability_note",
]

CASIMIR_THRESHOLD = 1e-6  # m
GEOMETRIES = ("point", "membrane", "sphere", "torsion")


class NoFeasiblePoint(RuntimeError):
    pass


@dataclass(frozen=True)
class ProbeProposal:
    key: str
    description: str
    m: float
    sensitivity: float  # N
    geometry: str
    citation: str = ""
    temperature: float | None = None
    accel_sensitivity: float | None = None  # m/s^2, torsion balances
    reported_gap: tuple[float, float] | None = None
    reported_force: float | None = None
    reported_accel: float | None = None
    body_density: float | None = None
    body_radius_quoted: float | None = None
    D_quoted: float | None = None

    def __post_init__(self):
        if not (self.m > 0 and self.sensitivity > 0):
            raise ValueError(f"{self.key}: mass and sensitivity must be positive")
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"{self.key}: geometry must be one of {GEOMETRIES}")


_PROPOSAL_QUANTITIES = {
    "m": MASS,
    "temperature": TEMPERATURE,
    "reported_force": FORCE,
    "reported_accel": ACCELERATION,
    "body_density": DENSITY,
    "body_radius_quoted": LENGTH,
    "D_quoted": LENGTH,
}
_PROPOSAL_TEXT = {"description", "geometry", "citation"}


def _parse_gap(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition("-")
    return float(lo), float(hi or lo)


def load_proposals(path=None) -> dict[str, ProbeProposal]:
    """Read a probe catalog; defaults to the bundled ``proposals.kv``."""
    if path is None:
        text = resources.files("gravcat.data").joinpath("proposals.kv").read_text(encoding="utf-8")
        source = "proposals.kv"
    else:
        text = Path(path).read_text(encoding="utf-8")
        source = str(path)
    raw: dict[str, dict] = {}
    for key, entry in parse_kv(text, source).items():
        name, _, fld = key.partition(".")
        rec = raw.setdefault(name, {"key": name})
        if fld in _PROPOSAL_TEXT:
            rec[fld] = entry.value
        elif fld in _PROPOSAL_QUANTITIES:
            rec[fld] = parse_quantity(entry.value).require(_PROPOSAL_QUANTITIES[fld], key)
        elif fld == "sensitivity":
            q = parse_quantity(entry.value)
            rec["_sensitivity"] = q
        elif fld == "reported_gap":
            rec[fld] = _parse_gap(entry.value)
        else:
            raise ValueError(f"{source}:{entry.lineno}: unknown proposal field {key!r}")
    out = {}
    for name, rec in raw.items():
        q = rec.pop("_sensitivity", None)
        if q is None or "m" not in rec:
            raise ValueError(f"{source}: proposal {name!r} needs m and sensitivity")
        if q.dim == ACCELERATION:
            rec["accel_sensitivity"] = q.magnitude
            rec["sensitivity"] = q.magnitude * rec["m"]
        else:
            rec["sensitivity"] = q.require(FORCE, f"{name}.sensitivity")
        rec.setdefault("description", name)
        rec.setdefault("geometry", "point")
        out[name] = ProbeProposal(**rec)
    return out


PROPOSALS = load_proposals()


@dataclass(frozen=True)
class CatSource:
    """The source microsphere: mass, separation of the two branches, radius."""

    M: float
    L: float
    R: float


# microsphere of the reference trap: Pb, R = 2 um, L = 1 pm
REFERENCE_CAT = CatSource(M=sphere_mass(2e-6, MATERIALS["Pb"].rho), L=1e-12, R=2e-6)


def f0_density_form(rho_m: float, m: float, L: float, a: float, R: float) -> float:
    """Force amplitude written through the sphere density and surface gap.

    Substituting M = 4/3 pi R^3 rho_m and D = R + a into G M m L / (2 D^3)
    gives a prefactor of exactly 2 pi / 3 (about 2.09).
    """
    # R^3 / (R + a)^3 rather than (1 + a/R)^-3: the gap enters through the same
    # rounded sum R + a as the point form, which keeps the two within a few ulp
    return (2.0 * math.pi / 3.0) * G * rho_m * m * L * R**3 / (R + a) ** 3


@dataclass(frozen=True)
class CasimirCheck:
    status: str  # "ok" or "warning"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def casimir_guard(a: float, threshold: float = CASIMIR_THRESHOLD) -> CasimirCheck:
    if not a > 0:
        raise ValueError("surface gap must be positive")
    if a < threshold:
        return CasimirCheck(
            "warning",
            f"surface gap {a:.3g} m is below {threshold:.3g} m: Casimir forces at the pN scale "
            "were measured by Mohideen and Roy for sphere-plate separations of 0.1-0.9 um "
            "and may dominate the gravitational signal",
        )
    return CasimirCheck("ok")


def sensitivity_gap(f_grav: float, sensitivity: float) -> float:
    """Orders of magnitude between the probe sensitivity and the signal."""
    if not (f_grav > 0 and sensitivity > 0):
        raise ValueError("forces must be positive")
    return math.log10(sensitivity / f_grav)


@dataclass
class FeasibilityEntry:
    key: str
    f_grav: float
    gap_orders: float
    D: float
    constraint_flags: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    acceleration: float | None = None
    alternatives: dict[str, dict[str, float]] = field(default_factory=dict)
    reported_gap: tuple[float, float] | None = None


def _body_radius(m: float, rho: float) -> float:
    return (3 * m / (4 * math.pi * rho)) ** (1 / 3)


def _discrepancy(computed: float, reported: float | None, what: str) -> str | None:
    if reported is None:
        return None
    orders = math.log10(computed / reported)
    if abs(orders) <= 1:
        return None
    return (
        f"reported {what} {reported:.1g} differs from computed {computed:.2g} "
        f"by {orders:+.1f} orders of magnitude"
    )


def evaluate_proposal(p: ProbeProposal, cat: CatSource = REFERENCE_CAT, a: float = 1e-6) -> FeasibilityEntry:
    """Point-mass force on the probe and its gap to the probe's sensitivity.

    Membranes and spheres are treated as points a distance ``a`` outside the
    microsphere surface. Torsion-balance bodies are spheres whose radius
    follows from their mass and density; the catalog's quoted radius and
    distance are evaluated alongside.
    """
    flags: list[str] = []
    notes: list[str] = []
    alternatives: dict[str, dict[str, float]] = {}
    guard = casimir_guard(a)
    if not guard.ok:
        flags.append("casimir: " + guard.message)

    if p.geometry == "torsion":
        if p.body_density is None:
            raise ValueError(f"{p.key}: torsion geometry needs body_density")
        R_body = _body_radius(p.m, p.body_density)
        D = R_body + cat.R + a
        notes.append(f"test body radius from mass and density: {R_body:.3g} m")
        if p.body_radius_quoted is not None:
            D_q = p.body_radius_quoted + cat.R + a
            f_q = f0_point(cat.M, p.m, cat.L, D_q)
            alternatives["quoted_radius"] = {"D_m": D_q, "force_N": f_q, "acceleration_m_s2": f_q / p.m}
            if abs(math.log(p.body_radius_quoted / R_body)) > math.log(1.5):
                flags.append(
                    f"quoted body radius {p.body_radius_quoted:.3g} m is inconsistent with "
                    f"m = {p.m:.3g} kg at rho = {p.body_density:.3g} kg/m^3 (implies {R_body:.3g} m)"
                )
        if p.D_quoted is not None:
            f_d = f0_point(cat.M, p.m, cat.L, p.D_quoted)
            alternatives["quoted_distance"] = {"D_m": p.D_quoted, "force_N": f_d, "acceleration_m_s2": f_d / p.m}
    else:
        D = cat.R + a

    f = f0_point(cat.M, p.m, cat.L, D)
    entry = FeasibilityEntry(
        key=p.key,
        f_grav=f,
        gap_orders=sensitivity_gap(f, p.sensitivity),
        D=D,
        constraint_flags=flags,
        notes=notes,
        alternatives=alternatives,
        reported_gap=p.reported_gap,
    )
    if p.geometry == "torsion":
        entry.acceleration = f / p.m
    # torsion figures in the catalog were quoted at the catalog distance
    ref = alternatives.get("quoted_distance", {"force_N": f, "acceleration_m_s2": f / p.m})
    for msg in (
        _discrepancy(ref["force_N"], p.reported_force, "force"),
        _discrepancy(ref["acceleration_m_s2"], p.reported_accel, "acceleration"),
    ):
        if msg:
            entry.constraint_flags.append(msg)
    return entry


@dataclass(frozen=True)
class DesignBounds:
    """Search box for the optimizer. Each range is (low, high); equal ends pin an axis."""

    materials: tuple[str, ...] = ("Pb", "Ta")
    R: tuple[float, float] = (1e-6, 10e-6)
    a: tuple[float, float] = (1e-6, 10e-6)
    L: tuple[float, float] = (1e-12, 1e-12)
    m: float = 4.0e-12
    points: int = 50
    cooling_floor: float = DEFAULT_COOLING_FLOOR
    omega_t: float | None = None  # trap frequency; None runs at the cooling floor
    size_factor: float = DEFAULT_SIZE_FACTOR
    casimir_threshold: float = CASIMIR_THRESHOLD

    def __post_init__(self):
        if not self.materials:
            raise ValueError("at least one material is required")
        for name in ("R", "a", "L"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ValueError(f"{name} range must satisfy 0 < low <= high")
        if self.points < 1:
            raise ValueError("points must be at least 1")


@dataclass
class DesignResult:
    material: str
    R: float
    a: float
    L: float
    m: float
    omega_t: float
    f0: float
    checks: list
    casimir: CasimirCheck
    n_feasible: int


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    if lo == hi or n == 1:
        return np.array([hi])
    return np.geomspace(lo, hi, n)


def optimize_f0(bounds: DesignBounds, materials=None) -> DesignResult:
    """Exhaustive log-grid search maximizing the force amplitude.

    A point is feasible when the trap constraints hold at the design trap
    frequency and the surface gap clears the Casimir threshold. Ties go to the
    lexicographically first grid index (material order, then R, a, L).
    """
    catalog = materials if materials is not None else MATERIALS
    Rs = _axis(*bounds.R, bounds.points)
    As = _axis(*bounds.a, bounds.points)
    Ls = _axis(*bounds.L, bounds.points)
    omega_t = bounds.omega_t if bounds.omega_t is not None else bounds.cooling_floor
    best = None
    n_feasible = 0
    for name in bounds.materials:
        mat = catalog[name]
        R_max = max_radius(mat.B_crit, mat.rho, omega_t)
        R_ok = (Rs < R_max) & (Rs >= bounds.size_factor * mat.lam) & (Rs >= bounds.size_factor * mat.xi)
        a_ok = As >= bounds.casimir_threshold
        if omega_t < bounds.cooling_floor * (1 - 1e-12):
            R_ok[:] = False
        f = np.array([f0_density_form(mat.rho, bounds.m, 1.0, a, R) for R in Rs for a in As]).reshape(Rs.size, As.size)
        f = f[:, :, None] * Ls[None, None, :]
        mask = R_ok[:, None, None] & a_ok[None, :, None] & np.ones(Ls.size, bool)[None, None, :]
        n_feasible += int(mask.sum())
        if not mask.any():
            continue
        f_masked = np.where(mask, f, -np.inf)
        idx = np.unravel_index(int(np.argmax(f_masked)), f_masked.shape)
        val = float(f_masked[idx])
        if best is None or val > best[0]:
            best = (val, name, Rs[idx[0]], As[idx[1]], Ls[idx[2]])
    if best is None:
        raise NoFeasiblePoint("every grid point violates a trap or Casimir constraint")
    val, name, R, a, L = best
    mat = catalog[name]
    cfg = TrapConfig.at_frequency(mat, R, omega_t)
    return DesignResult(
        material=name,
        R=float(R),
        a=float(a),
        L=float(L),
        m=bounds.m,
        omega_t=omega_t,
        f0=val,
        checks=validate_trap(cfg, bounds.cooling_floor, bounds.size_factor),
        casimir=casimir_guard(a, bounds.casimir_threshold),
        n_feasible=n_feasible,
    )


def projections(L_cat: float = 100e-9, L_improvement: float = 10.0, m: float = 4.0e-12, points: int = 50) -> dict:
    """Forces for a larger cat, before and after the enhancement levers.

    ``baseline`` keeps the reference microsphere (Pb, R = 2 um, a = 1 um) and
    only sets L = ``L_cat``. ``improved`` lets the optimizer pick material and
    radius up to 5 um with the separation grown by ``L_improvement``.
    """
    baseline = optimize_f0(DesignBounds(materials=("Pb",), R=(2e-6, 2e-6), a=(1e-6, 1e-6),
                                        L=(L_cat, L_cat), m=m, points=1))
    improved = optimize_f0(DesignBounds(materials=("Pb", "Ta"), R=(1e-6, 5e-6), a=(1e-6, 1e-6),
                                        L=(L_cat, L_cat * L_improvement), m=m, points=points))
    return {"L_cat": L_cat, "baseline": baseline, "improved": improved}


@dataclass
class FeasibilityReport:
    entries: list[FeasibilityEntry]
    design: DesignResult | None = None
    projections: dict | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "proposals": {
                e.key: {
                    "force_N": e.f_grav,
                    "gap_orders": e.gap_orders,
                    "flags": list(e.constraint_flags),
                    "D_m": e.D,
                    **({"acceleration_m_s2": e.acceleration} if e.acceleration is not None else {}),
                    **({"alternatives": e.alternatives} if e.alternatives else {}),
                    **({"reported_gap": list(e.reported_gap)} if e.reported_gap else {}),
                }
                for e in self.entries
            },
            "notes": list(self.notes),
        }
        if self.design is not None:
            out["design"] = _design_dict(self.design)
        if self.projections is not None:
            out["projections"] = {
                "L_cat_m": self.projections["L_cat"],
                "baseline": _design_dict(self.projections["baseline"]),
                "improved": _design_dict(self.projections["improved"]),
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self) -> str:
        q = lambda v, u, d=2: format_quantity(Quantity(v, FORCE if u.endswith("N") else LENGTH), u, d)  # noqa: E731
        rows = [("probe", "force", "gap", "quoted gap", "flags")]
        for e in self.entries:
            quoted = ""
            if e.reported_gap:
                lo, hi = e.reported_gap
                quoted = f"{lo:g}" if lo == hi else f"{lo:g}-{hi:g}"
            rows.append((e.key, q(e.f_grav, "N"), f"{e.gap_orders:.1f} orders",
                         f"{quoted} orders" if quoted else "", str(len(e.constraint_flags))))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        if self.design is not None:
            d = self.design
            lines += ["", "optimum design:", _design_line(d)]
        if self.projections is not None:
            p = self.projections
            lines += ["", f"projections for L = {q(p['L_cat'], 'nm', 3)}:",
                      "  baseline: " + _design_line(p["baseline"]),
                      "  improved: " + _design_line(p["improved"])]
        flagged = [(e.key, f) for e in self.entries for f in e.constraint_flags]
        if flagged:
            lines += ["", "flags:"] + [f"  {k}: {f}" for k, f in flagged]
        if self.notes:
            lines += ["", "notes:"] + [f"  - {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _design_dict(d: DesignResult) -> dict:
    return {
        "material": d.material,
        "R_m": d.R,
        "a_m": d.a,
        "L_m": d.L,
        "m_kg": d.m,
        "omega_t_rad_s": d.omega_t,
        "force_N": d.f0,
        "checks": [asdict(c) for c in d.checks],
        "casimir": d.casimir.status,
    }


def _design_line(d: DesignResult) -> str:
    fmt = format_quantity
    return (f"{d.material}, R = {fmt(Quantity(d.R, LENGTH), 'um', 3)}, a = {fmt(Quantity(d.a, LENGTH), 'um', 3)}, "
            f"L = {fmt(Quantity(d.L, LENGTH), 'pm', 3)}, f0 = {fmt(Quantity(d.f0, FORCE), 'N', 2)}")


STANDING_NOTES = (
    "Gravitational self-energy of the probe may be comparable to the interaction energy; it is not modeled.",
)


def build_report(entries, design: DesignResult | None = None, projections: dict | None = None,
                 extra_notes=()) -> FeasibilityReport:
    """Collect proposal entries, an optional optimum and projections into one report."""
    entries = list(entries)
    if not entries:
        raise ValueError("a report needs at least one entry")
    notes = list(STANDING_NOTES)
    for e in entries:
        for f in e.constraint_flags:
            if f.startswith("reported force"):
                notes.append(f"{e.key}: {f}; the computed value is used")
    notes.extend(extra_notes)
    return FeasibilityReport(entries=entries, design=design, projections=projections, notes=notes)


def distinguishability_note(f0: float = 1e-21, m: float = 100e-12, omega: float = 2 * math.pi * 1e5) -> str:
    """Report line on the oscillator-probe criterion for an explicit parameter set."""
    d = distinguishability(f0, m, omega)
    return (f"quantum probe criterion f0^2/(m hbar omega^3) = {d:.2g} for f0 = {f0:.2g} N, m = {m:.3g} kg, "
            f"omega = {omega:.3g} rad/s; the quoted order 1e-53 cannot be reproduced because the "
            "oscillator frequency behind it is not given")
