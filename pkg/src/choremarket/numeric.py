"""Scalar plumbing shared by every module.

Two numeric modes are supported:

* exact mode, where every quantity is a :class:`fractions.Fraction` and all
  comparisons are exact;
* approximate mode, where quantities are Python floats and comparisons use an
  absolute tolerance ``tol``.

Infinite disutilities are represented by the singleton :data:`INF`.  It
deliberately defines no arithmetic, so any accidental ``INF + x`` raises
``TypeError`` instead of silently producing a number.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Union

DEFAULT_TOL = 1e-9


class _Infinite:
    """Symbolic infinity. Only comparisons and identity are meaningful."""

    __slots__ = ()
    _instance: "_Infinite | None" = None

    def __new__(cls) -> "_Infinite":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (_Infinite, ())

    def __eq__(self, other: object) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("choremarket.INF")

    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return other is self

    def __gt__(self, other: object) -> bool:
        return other is not self

    def __ge__(self, other: object) -> bool:
        return True


INF = _Infinite()

Scalar = Union[Fraction, float]
Entry = Union[Fraction, float, _Infinite]


def is_inf(v: Any) -> bool:
    return v is INF


@dataclass(frozen=True)
class Numeric:
    """Arithmetic policy for one solve.

    ``exact=True`` means Fractions and exact comparisons; otherwise floats with
    absolute tolerance ``tol`` (relative tolerance is used where noted).
    """

    exact: bool = True
    tol: float = DEFAULT_TOL

    def coerce(self, v: Any) -> Scalar:
        if self.exact:
            if isinstance(v, float):
                # floats are read through their decimal repr: 0.1 -> 1/10
                return Fraction(repr(v))
            return Fraction(v)
        return float(v)

    def zero(self) -> Scalar:
        return Fraction(0) if self.exact else 0.0

    def one(self) -> Scalar:
        return Fraction(1) if self.exact else 1.0

    def eq(self, a: Scalar, b: Scalar) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tol

    def lt(self, a: Scalar, b: Scalar) -> bool:
        if self.exact:
            return a < b
        return a < b - self.tol

    def le(self, a: Scalar, b: Scalar) -> bool:
        if self.exact:
            return a <= b
        return a <= b + self.tol

    def positive(self, a: Scalar) -> bool:
        return a > 0 if self.exact else a > self.tol

    def rel_le(self, a: Scalar, b: Scalar) -> bool:
        """``a <= b`` with relative slack ``(1 + tol)`` in approximate mode."""
        if self.exact:
            return a <= b
        return a <= b * (1.0 + self.tol)

    def rel_eq(self, a: Scalar, b: Scalar) -> bool:
        if self.exact:
            return a == b
        scale = max(abs(a), abs(b))
        return abs(a - b) <= self.tol * scale


EXACT = Numeric(exact=True)
APPROX = Numeric(exact=False)


def to_json_scalar(v: Entry) -> Any:
    """Serialize a scalar: ``"inf"``, ``{"num", "den"}`` or a plain float."""
    if v is INF:
        return "inf"
    if isinstance(v, Fraction):
        return {"num": v.numerator, "den": v.denominator}
    if isinstance(v, int):
        return {"num": v, "den": 1}
    return float(v)


def from_json_scalar(raw: Any, allow_inf: bool = True) -> Entry:
    """Parse a JSON scalar into Fraction, float or :data:`INF`.

    Integers and ``{"num", "den"}`` objects become Fractions; JSON floats stay
    floats so the caller can decide the numeric mode.
    """
    if isinstance(raw, str):
        if raw.strip().lower() in ("inf", "infinity", "∞"):
            if not allow_inf:
                raise ValueError("infinite value not allowed here")
            return INF
        try:
            return Fraction(raw)
        except ValueError as exc:
            raise ValueError(f"cannot parse scalar {raw!r}") from exc
    if isinstance(raw, bool):
        raise ValueError(f"boolean is not a scalar: {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        return raw
    if isinstance(raw, dict) and set(raw) == {"num", "den"}:
        num, den = raw["num"], raw["den"]
        if not isinstance(num, int) or not isinstance(den, int) or isinstance(num, bool):
            raise ValueError(f"rational parts must be integers: {raw!r}")
        if den == 0:
            raise ValueError("zero denominator")
        return Fraction(num, den)
    raise ValueError(f"cannot parse scalar {raw!r}")


def fmt(v: Entry) -> str:
    """Short human-readable rendering used in messages and tables."""
    if v is INF:
        return "inf"
    if isinstance(v, Fraction):
        return str(v)
    return f"{v:.6g}"
