"""
Unit-safe physical quantities.

Every magnitude is stored on the strict SI scale (kg, m, s, A, K, mol, cd)
together with an integer exponent vector over the seven base dimensions.
Prefixes are resolved when a string is parsed, so nothing downstream ever
sees "ng" or "zN".

The unit grammar is documented in UNITS.md at the repository root.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import Decimal
from types import MappingProxyType

__all__ = [
    "Dimension",
    "Quantity",
    "UnitError",
    "UnknownUnit",
    "MalformedNumber",
    "DimensionMismatch",
    "CONSTANTS",
    "G",
    "MU0",
    "HBAR",
    "AMU",
    "parse_quantity",
    "parse_unit",
    "format_quantity",
    "DIMENSIONLESS",
    "MASS",
    "LENGTH",
    "TIME",
    "CURRENT",
    "TEMPERATURE",
    "FORCE",
    "RATE",
    "DENSITY",
    "FIELD",
    "ACCELERATION",
]

_BASE_NAMES = ("kg", "m", "s", "A", "K", "mol", "cd")


class UnitError(ValueError):
    """Base class for unit parsing and dimension errors."""


class UnknownUnit(UnitError):
    def __init__(self, symbol: str, offset: int):
        super().__init__(f"unknown unit {symbol!r} at byte offset {offset}")
        self.symbol = symbol
        self.offset = offset


class MalformedNumber(UnitError):
    def __init__(self, text: str, offset: int):
        super().__init__(f"malformed number in {text!r} at byte offset {offset}")
        self.text = text
        self.offset = offset


class DimensionMismatch(UnitError):
    pass


@dataclass(frozen=True)
class Dimension:
    """Exponents of (mass, length, time, current, temperature, amount, luminosity)."""

    exponents: tuple[int, ...] = (0, 0, 0, 0, 0, 0, 0)

    def __post_init__(self):
        if len(self.exponents) != 7:
            raise ValueError("a dimension has exactly 7 base exponents")
        object.__setattr__(self, "exponents", tuple(int(e) for e in self.exponents))

    @classmethod
    def of(cls, M=0, L=0, T=0, I=0, Th=0, N=0, J=0) -> "Dimension":
        return cls((M, L, T, I, Th, N, J))

    def __mul__(self, other: "Dimension") -> "Dimension":
        return Dimension(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def __truediv__(self, other: "Dimension") -> "Dimension":
        return Dimension(tuple(a - b for a, b in zip(self.exponents, other.exponents)))

    def __pow__(self, n: int) -> "Dimension":
        return Dimension(tuple(a * n for a in self.exponents))

    @property
    def dimensionless(self) -> bool:
        return not any(self.exponents)

    def __str__(self) -> str:
        parts = []
        for name, e in zip(_BASE_NAMES, self.exponents):
            if e == 1:
                parts.append(name)
            elif e:
                parts.append(f"{name}^{e}")
        return "*".join(parts) or "1"


DIMENSIONLESS = Dimension()
MASS = Dimension.of(M=1)
LENGTH = Dimension.of(L=1)
TIME = Dimension.of(T=1)
CURRENT = Dimension.of(I=1)
TEMPERATURE = Dimension.of(Th=1)
RATE = Dimension.of(T=-1)
FORCE = Dimension.of(M=1, L=1, T=-2)
ACCELERATION = Dimension.of(L=1, T=-2)
DENSITY = Dimension.of(M=1, L=-3)
FIELD = Dimension.of(M=1, T=-2, I=-1)
ENERGY = Dimension.of(M=1, L=2, T=-2)


@dataclass(frozen=True)
class Quantity:
    """A finite SI magnitude carrying its dimension."""

    magnitude: float
    dim: Dimension = DIMENSIONLESS

    def __post_init__(self):
        mag = float(self.magnitude)
        if not math.isfinite(mag):
            raise ValueError(f"quantity magnitude must be finite, got {mag}")
        object.__setattr__(self, "magnitude", mag)

    def _check_same(self, other: "Quantity", op: str) -> None:
        if not isinstance(other, Quantity):
            other = Quantity(other)
        if other.dim != self.dim:
            raise DimensionMismatch(f"cannot {op} [{self.dim}] and [{other.dim}]")

    def __add__(self, other):
        self._check_same(other, "add")
        return Quantity(self.magnitude + other.magnitude, self.dim)

    def __sub__(self, other):
        self._check_same(other, "subtract")
        return Quantity(self.magnitude - other.magnitude, self.dim)

    def __neg__(self):
        return Quantity(-self.magnitude, self.dim)

    def __mul__(self, other):
        if isinstance(other, Quantity):
            return Quantity(self.magnitude * other.magnitude, self.dim * other.dim)
        return Quantity(self.magnitude * other, self.dim)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Quantity):
            return Quantity(self.magnitude / other.magnitude, self.dim / other.dim)
        return Quantity(self.magnitude / other, self.dim)

    def __rtruediv__(self, other):
        return Quantity(other / self.magnitude, DIMENSIONLESS / self.dim)

    def __pow__(self, n: int):
        if int(n) != n:
            raise DimensionMismatch("only integer powers are supported")
        return Quantity(self.magnitude ** n, self.dim ** int(n))

    def __lt__(self, other):
        self._check_same(other, "compare")
        return self.magnitude < other.magnitude

    def __le__(self, other):
        self._check_same(other, "compare")
        return self.magnitude <= other.magnitude

    def __float__(self) -> float:
        if not self.dim.dimensionless:
            raise DimensionMismatch(f"cannot convert [{self.dim}] to a bare float")
        return self.magnitude

    def to(self, unit: str) -> float:
        """Magnitude expressed in ``unit``."""
        scale, dim = parse_unit(unit)
        if dim != self.dim:
            raise DimensionMismatch(f"[{self.dim}] cannot be expressed in {unit!r} [{dim}]")
        return self.magnitude / scale

    def require(self, dim: Dimension, what: str = "quantity") -> float:
        """Return the SI magnitude, raising if the dimension is not ``dim``."""
        if self.dim != dim:
            raise DimensionMismatch(f"{what} must have dimension [{dim}], got [{self.dim}]")
        return self.magnitude

    def __str__(self) -> str:
        return f"{self.magnitude!r} {self.dim}"


# --- constants -------------------------------------------------------------

G = 6.67430e-11  # m^3 kg^-1 s^-2
MU0 = 4e-7 * math.pi  # T m / A
HBAR = 1.054571817e-34  # J s
AMU = 1.66053906660e-27  # kg

CONSTANTS = MappingProxyType({
    "G": Quantity(G, Dimension.of(M=-1, L=3, T=-2)),
    "mu0": Quantity(MU0, Dimension.of(M=1, L=1, T=-2, I=-2)),
    "hbar": Quantity(HBAR, Dimension.of(M=1, L=2, T=-1)),
    "amu": Quantity(AMU, MASS),
})


# --- unit table ------------------------------------------------------------

# prefix -> power of ten
_PREFIXES = {
    "y": -24, "z": -21, "a": -18, "f": -15, "p": -12, "n": -9,
    "u": -6, "µ": -6, "μ": -6, "m": -3, "c": -2, "d": -1,
    "da": 1, "h": 2, "k": 3, "M": 6, "G": 9, "T": 12, "P": 15,
    "E": 18, "Z": 21, "Y": 24,
}

# symbol -> (scale to SI, dimension, accepts prefix)
_UNITS: dict[str, tuple[float, Dimension, bool]] = {
    "m": (1.0, LENGTH, True),
    "g": (1e-3, MASS, True),
    "s": (1.0, TIME, True),
    "A": (1.0, CURRENT, True),
    "K": (1.0, TEMPERATURE, True),
    "mol": (1.0, Dimension.of(N=1), True),
    "cd": (1.0, Dimension.of(J=1), True),
    "N": (1.0, FORCE, True),
    "J": (1.0, ENERGY, True),
    "W": (1.0, Dimension.of(M=1, L=2, T=-3), True),
    "Pa": (1.0, Dimension.of(M=1, L=-1, T=-2), True),
    "Hz": (1.0, RATE, True),
    "T": (1.0, FIELD, True),
    "C": (1.0, Dimension.of(T=1, I=1), True),
    "V": (1.0, Dimension.of(M=1, L=2, T=-3, I=-1), True),
    "H": (1.0, Dimension.of(M=1, L=2, T=-2, I=-2), True),
    "rad": (1.0, DIMENSIONLESS, True),
    "eV": (1.602176634e-19, ENERGY, True),
    "amu": (AMU, MASS, False),
    "Da": (AMU, MASS, False),
    "1": (1.0, DIMENSIONLESS, False),
}

_NUMBER = re.compile(
    r"\s*(?P<mant>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)(?:\^(?P<pow>[+-]?\d+))?"
)
_DANGLING = re.compile(r"[.^\d]|[eE][+-]?(?:\d|$)")
_TOKEN = re.compile(r"(?P<sym>[A-Za-zµμ]+|1)(?:\^(?P<exp>[+-]?\d+))?")


def _lookup(symbol: str, offset: int) -> tuple[float, int, Dimension]:
    if symbol in _UNITS:
        scale, dim, _ = _UNITS[symbol]
        return (*_split_scale(scale), dim)
    # longest prefix first so "da" wins over "d"
    for plen in (2, 1):
        prefix, rest = symbol[:plen], symbol[plen:]
        if prefix in _PREFIXES and rest in _UNITS and _UNITS[rest][2]:
            scale, dim, _ = _UNITS[rest]
            mant, exp = _split_scale(scale)
            return mant, exp + _PREFIXES[prefix], dim
    raise UnknownUnit(symbol, offset)


def _split_scale(scale: float) -> tuple[float, int]:
    # exact powers of ten are tracked as integer exponents to avoid
    # accumulating rounding in compound prefixes (ng = 1e-9 * 1e-3)
    exp = round(math.log10(scale))
    if float(f"1e{exp}") == scale:
        return 1.0, exp
    return scale, 0


def _parse_unit_parts(unit: str, base_offset: int = 0) -> tuple[float, int, Dimension]:
    text = unit.strip()
    lead = len(unit) - len(unit.lstrip())
    mant, exp10, dim = 1.0, 0, DIMENSIONLESS
    if not text:
        return mant, exp10, dim
    pos = 0
    sign = 1
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            raise UnknownUnit(text[pos:], base_offset + lead + pos)
        s, e10, d = _lookup(m["sym"], base_offset + lead + pos)
        e = sign * (int(m["exp"]) if m["exp"] else 1)
        mant *= s ** e
        exp10 += e10 * e
        dim = dim * d ** e
        pos = m.end()
        if pos == len(text):
            break
        op = text[pos]
        if op == "*":
            sign = 1
        elif op == "/":
            sign = -1
        else:
            raise UnknownUnit(text[pos:], base_offset + lead + pos)
        pos += 1
    return mant, exp10, dim


def parse_unit(unit: str) -> tuple[float, Dimension]:
    """Parse a unit expression into ``(scale_to_SI, dimension)``.

    An empty expression is dimensionless. A power binds to the prefixed
    symbol, so ``cm^3`` is (0.01 m)^3.
    """
    try:
        mant, exp10, dim = _parse_unit_parts(unit)
    except UnknownUnit as exc:
        raise UnknownUnit(exc.symbol, _utf8_offset(unit, exc.offset)) from None
    return mant * float(f"1e{exp10}"), dim


def _utf8_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


def parse_quantity(text: str) -> Quantity:
    """Parse ``"<number> <unit-expr>"`` into a canonical SI quantity.

    >>> parse_quantity("4.0 ng").magnitude
    4e-12
    """
    m = _NUMBER.match(text)
    if m is None:
        lead = len(text) - len(text.lstrip())
        raise MalformedNumber(text, _utf8_offset(text, lead))
    if _DANGLING.match(text[m.end():]):
        raise MalformedNumber(text, _utf8_offset(text, m.end()))
    try:
        scale, exp10, dim = _parse_unit_parts(text[m.end():])
    except UnknownUnit as exc:
        raise UnknownUnit(exc.symbol, _utf8_offset(text, m.end() + exc.offset)) from None
    if m["pow"]:
        value = float(m["mant"]) ** int(m["pow"]) * float(f"1e{exp10}")
    else:
        # decimal shift keeps "4.0 ng" at exactly 4e-12
        value = float(Decimal(m["mant"]).scaleb(exp10))
    return Quantity(value * scale, dim)


def format_quantity(q: Quantity, unit: str, sig_digits: int) -> str:
    """Render ``q`` in ``unit`` with ``sig_digits`` significant digits.

    Uses ``%g`` layout (positional for moderate exponents, scientific
    otherwise) with the exponent's padding stripped. Zero prints as ``0e0``.
    """
    if sig_digits < 1:
        raise ValueError("sig_digits must be >= 1")
    value = q.to(unit)
    if value == 0:
        body = "0e0"
    else:
        body = f"{value:.{sig_digits}g}"
        if "e" in body:
            mant, exp = body.split("e")
            body = f"{mant}e{int(exp)}"
    return f"{body} {unit}".rstrip()
