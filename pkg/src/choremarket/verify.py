"""Independent certification of (approximate) competitive equilibria.

Nothing here trusts solver internals: MPB values are recomputed from the raw
disutilities and the supplied prices.

A candidate ``(p, x)`` is an ``eps``-equilibrium when

1. every chore is fully allocated (one unit in the CEEI model, the total
   endowment in the exchange model);
2. every agent only works on chores of minimum pain per buck;
3. every agent earns between ``1 - eps`` and ``1 + eps`` times her
   requirement (one unit after scaling prices to sum to ``n`` in the CEEI
   model, the value of her endowment in the exchange model).

>>> from fractions import Fraction as F
>>> from choremarket.instance import make_instance
>>> inst = make_instance([[1, 1, 2], [2, 2, 1]])
>>> p = [F(4, 5), F(4, 5), F(2, 5)]
>>> x = [[1, F(1, 4), 0], [0, F(3, 4), 1]]
>>> verify_ce(inst, p, x, 0).passed
True
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .instance import Instance
from .numeric import APPROX, EXACT, Numeric, Scalar, fmt, is_inf


class VerificationError(ValueError):
    pass


@dataclass(frozen=True)
class NashWelfare:
    value: Scalar
    log_value: float
    zero_agents: tuple[int, ...] = ()


def earnings(x: Sequence[Sequence[Scalar]], p: Sequence[Scalar]) -> list[Scalar]:
    """Money earned by each agent, ``sum_j x_ij p_j``."""
    out = []
    for row in x:
        acc = 0
        for xij, pj in zip(row, p):
            acc = acc + xij * pj
        out.append(acc)
    return out


def nash_welfare(d, x) -> NashWelfare:
    """Product of agent disutilities, plus its natural log.

    Raises :class:`VerificationError` when some agent consumes a chore she
    cannot do.
    """
    value = 1
    logv = 0.0
    zeros = []
    for i, (row, xrow) in enumerate(zip(d, x)):
        di = 0
        for j, (dij, xij) in enumerate(zip(row, xrow)):
            if is_inf(dij):
                if xij != 0:
                    raise VerificationError(f"agent {i + 1} consumes chore {j + 1} with infinite disutility")
                continue
            di = di + dij * xij
        value = value * di
        if di > 0:
            logv += math.log(di) if not isinstance(di, Fraction) else _log_fraction(di)
        else:
            zeros.append(i)
            logv = -math.inf
    return NashWelfare(value, logv, tuple(zeros))


def _log_fraction(v: Fraction) -> float:
    return math.log(v.numerator) - math.log(v.denominator)


@dataclass
class CeReport:
    complete_allocation_ok: bool
    max_chore_deficit: Scalar
    worst_chore: Optional[int]
    mpb_ok: bool
    worst_mpb_pair: Optional[tuple[int, int]]
    mpb_slack: Scalar  # worst (d_ij/p_j) / MPB_i over consumed pairs, 1 when perfect
    earning_ok: bool
    earning_ratios: list[Optional[Scalar]]
    epsilon_achieved: Scalar
    epsilon: Scalar
    nash_welfare: Optional[Scalar]
    log_nash_welfare: Optional[float]
    exact: bool
    disutility_identity_ok: Optional[bool] = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.complete_allocation_ok and self.mpb_ok and self.earning_ok

    def to_json(self) -> dict:
        def ser(v):
            if v is None:
                return None
            if isinstance(v, Fraction):
                return {"num": v.numerator, "den": v.denominator}
            return float(v) if not isinstance(v, (bool, int)) else v

        return {
            "passed": self.passed,
            "exact": self.exact,
            "complete_allocation_ok": self.complete_allocation_ok,
            "max_chore_deficit": ser(self.max_chore_deficit),
            "worst_chore": self.worst_chore,
            "mpb_ok": self.mpb_ok,
            "worst_mpb_pair": list(self.worst_mpb_pair) if self.worst_mpb_pair else None,
            "mpb_slack": ser(self.mpb_slack),
            "earning_ok": self.earning_ok,
            "earning_ratios": [ser(v) for v in self.earning_ratios],
            "epsilon": ser(self.epsilon),
            "epsilon_achieved": ser(self.epsilon_achieved),
            "nash_welfare": ser(self.nash_welfare),
            "log_nash_welfare": self.log_nash_welfare,
            "disutility_identity_ok": self.disutility_identity_ok,
            "notes": list(self.notes),
        }

    def table(self) -> str:
        def mark(ok):
            return "ok  " if ok else "FAIL"

        rows = [
            f"{mark(self.complete_allocation_ok)} complete allocation   max deficit {fmt(self.max_chore_deficit)}"
            + (f" (chore {self.worst_chore + 1})" if self.worst_chore is not None else ""),
            f"{mark(self.mpb_ok)} MPB consumption       worst ratio/MPB {fmt(self.mpb_slack)}"
            + (
                f" (agent {self.worst_mpb_pair[0] + 1}, chore {self.worst_mpb_pair[1] + 1})"
                if self.worst_mpb_pair
                else ""
            ),
            f"{mark(self.earning_ok)} earnings within eps   achieved {fmt(self.epsilon_achieved)} vs eps {fmt(self.epsilon)}",
        ]
        if self.nash_welfare is not None:
            rows.append(f"     nash welfare          {fmt(self.nash_welfare)} (log {self.log_nash_welfare:.6g})")
        rows.extend(f"     note: {s}" for s in self.notes)
        rows.append("PASS" if self.passed else "FAIL")
        return "\n".join(rows)


def _is_exact_input(inst: Instance, p, x) -> bool:
    if not inst.exact:
        return False
    vals = list(p) + [v for row in x for v in row]
    return all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in vals)


def verify_ce(
    inst: Instance,
    p: Sequence[Scalar],
    x: Sequence[Sequence[Scalar]],
    eps: Scalar = 0,
    tol: float = APPROX.tol,
) -> CeReport:
    """Check the three equilibrium conditions; every verdict is a report field."""
    n, m = inst.n, inst.m
    if len(p) != m or len(x) != n or any(len(row) != m for row in x):
        raise VerificationError("dimension mismatch between instance, prices and allocation")
    exact = _is_exact_input(inst, p, x)
    num: Numeric = EXACT if exact else Numeric(exact=False, tol=tol)
    p = [num.coerce(v) for v in p]
    x = [[num.coerce(v) for v in row] for row in x]
    eps = num.coerce(eps)
    notes: list[str] = []
    if any(not pj > 0 for pj in p):
        raise VerificationError("prices must be positive")
    if inst.model == "ceei":
        total = sum(p, num.zero())
        scale = (Fraction(n) if exact else float(n)) / total
        p = [v * scale for v in p]

    # (1) complete allocation
    supply = [num.coerce(v) for v in inst.supply()]
    worst_def, worst_chore = num.zero(), None
    for j in range(m):
        dev = abs(sum((x[i][j] for i in range(n)), num.zero()) - supply[j])
        if dev > worst_def:
            worst_def, worst_chore = dev, j
    alloc_ok = worst_def == 0 if exact else worst_def <= tol * max(1.0, max(supply))

    # (2) MPB consumption, recomputed from scratch
    mpb_ok, worst_pair, worst_ratio = True, None, num.one()
    mpb_vals = []
    for i in range(n):
        ratios = [inst.d[i][j] / p[j] for j in range(m) if not is_inf(inst.d[i][j])]
        best = min(ratios) if ratios else None
        mpb_vals.append(best)
        for j in range(m):
            if not num.positive(x[i][j]):
                if x[i][j] < 0 and not num.eq(x[i][j], 0):
                    mpb_ok = False
                    notes.append(f"negative allocation at agent {i + 1}, chore {j + 1}")
                continue
            if is_inf(inst.d[i][j]):
                mpb_ok = False
                worst_pair = (i, j)
                notes.append(f"agent {i + 1} consumes chore {j + 1} with infinite disutility")
                continue
            r = (inst.d[i][j] / p[j]) / best
            if r > worst_ratio:
                worst_ratio, worst_pair = r, (i, j)
            if not num.rel_le(inst.d[i][j] / p[j], best):
                mpb_ok = False
    if mpb_ok:
        worst_pair = None if worst_ratio == 1 else worst_pair

    # (3) earnings
    e = earnings(x, p)
    req = [num.coerce(v) for v in inst.requirements(p)]
    ratios: list[Optional[Scalar]] = []
    achieved = num.zero()
    earn_ok = True
    for i in range(n):
        if req[i] == 0 or (not exact and abs(req[i]) <= tol):
            ratios.append(None)
            if not num.eq(e[i], 0):
                earn_ok = False
                notes.append(f"agent {i + 1} has no requirement but earns {fmt(e[i])}")
            continue
        r = e[i] / req[i]
        ratios.append(r)
        dev = abs(r - 1)
        achieved = max(achieved, dev)
        if exact:
            earn_ok &= dev <= eps
        else:
            earn_ok &= dev <= eps + tol

    nw = log_nw = None
    identity_ok = None
    try:
        welfare = nash_welfare(inst.d, x)
        nw, log_nw = welfare.value, welfare.log_value
        if welfare.zero_agents:
            notes.append("zero-disutility agents: " + ", ".join(f"a{i + 1}" for i in welfare.zero_agents))
    except VerificationError as exc:
        notes.append(str(exc))
    if mpb_ok and exact and nw is not None:
        identity_ok = True
        for i in range(n):
            di = sum((inst.d[i][j] * x[i][j] for j in range(m) if not is_inf(inst.d[i][j])), num.zero())
            if mpb_vals[i] is not None and di != mpb_vals[i] * e[i]:
                identity_ok = False

    return CeReport(
        complete_allocation_ok=alloc_ok,
        max_chore_deficit=worst_def,
        worst_chore=worst_chore,
        mpb_ok=mpb_ok,
        worst_mpb_pair=worst_pair,
        mpb_slack=worst_ratio,
        earning_ok=earn_ok,
        earning_ratios=ratios,
        epsilon_achieved=achieved,
        epsilon=eps,
        nash_welfare=nw,
        log_nash_welfare=log_nw,
        exact=exact,
        disutility_identity_ok=identity_ok,
        notes=notes,
    )
