"""Integral EF1 + PO allocations of chores with two disutility values.

Every disutility is 1 or ``beta``.  The solver keeps an integral competitive
equilibrium ``(x, p)``: each agent only owns chores of minimum pain per buck
at ``p``, which certifies fractional Pareto optimality.  Starting from the
trivial equilibrium (each chore to a cheapest agent, priced at its minimum
disutility) it repairs price-envy until the allocation is pEF1, which implies
EF1:

1. if some least earner ``l`` has an MPB chore owned by an agent ``h`` with
   ``p(x_h) - p_c > p(x_l)``, move the highest-priced such chore to ``l``;
2. otherwise, let ``S`` be the agents from which chores can flow to the least
   earners along MPB edges.  Every chore ``S`` finds MPB is owned inside
   ``S``, so scaling those prices down keeps the equilibrium valid; do so by
   the largest factor that creates a new MPB edge out of ``S``;
3. when ``S`` already contains everybody no price change is possible.  Then
   move a chore one hop along an MPB path towards the least earners: from an
   agent ``h`` with ``p(x_h) - p_c > p(x_l)`` to its predecessor on a
   shortest path, preferring moves that also raise ``prod_i p(x_i)``.

Every transfer satisfies ``p_c < p(x_source) - p(x_l)`` for the least earning
``l``.  Moves of kind 1 strictly raise ``prod_i D_i(x_i)`` and price changes
leave it unchanged; kind-3 moves may lower it, and every such decrease is
counted in :attr:`BivaluedResult.potential_decreases`.

>>> from choremarket.instance import make_instance
>>> res = solve_bivalued(make_instance([[1, 2, 2], [2, 1, 1]]))
>>> res.owner, [str(v) for v in res.prices]
([0, 1, 1], ['1', '1', '1'])
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .instance import Instance, StructuralError
from .mpb import agent_mpb
from .numeric import Entry, Scalar, is_inf

logger = logging.getLogger(__name__)


class BivaluedError(RuntimeError):
    """Loop budget exhausted; carries the full trace."""

    def __init__(self, message: str, trace: list):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class IntegralAllocation:
    owner: tuple[int, ...]
    n: int

    def bundles(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for j, i in enumerate(self.owner):
            out[i].append(j)
        return out

    def to_json(self) -> dict:
        return {"owner": list(self.owner)}


@dataclass(frozen=True)
class Step:
    kind: str  # "transfer" | "path-transfer" | "price"
    chore: Optional[int] = None
    source: Optional[int] = None
    receiver: Optional[int] = None
    price: Optional[Fraction] = None
    source_earning: Optional[Fraction] = None
    receiver_earning: Optional[Fraction] = None
    least_earning: Optional[Fraction] = None
    factor: Optional[Fraction] = None
    S: tuple[int, ...] = ()
    potential: Optional[Fraction] = None

    def to_json(self) -> dict:
        def ser(v):
            return None if v is None else {"num": v.numerator, "den": v.denominator}

        return {
            "kind": self.kind,
            "chore": self.chore,
            "source": self.source,
            "receiver": self.receiver,
            "price": ser(self.price),
            "source_earning": ser(self.source_earning),
            "receiver_earning": ser(self.receiver_earning),
            "least_earning": ser(self.least_earning),
            "factor": ser(self.factor),
            "S": list(self.S),
            "potential": ser(self.potential),
        }


@dataclass
class BivaluedResult:
    owner: list[int]
    prices: list[Fraction]
    steps: list[Step] = field(default_factory=list)
    initial_potential: Optional[Fraction] = None
    potential_decreases: int = 0
    n: int = 0

    @property
    def allocation(self) -> IntegralAllocation:
        return IntegralAllocation(tuple(self.owner), self.n)

    @property
    def transfers(self) -> list[Step]:
        return [s for s in self.steps if s.kind != "price"]

    @property
    def price_updates(self) -> int:
        return sum(1 for s in self.steps if s.kind == "price")

    def to_json(self) -> dict:
        return {
            "owner": list(self.owner),
            "prices": [{"num": v.numerator, "den": v.denominator} for v in self.prices],
            "transfers": len(self.transfers),
            "price_updates": self.price_updates,
            "potential_decreases": self.potential_decreases,
        }


# --------------------------------------------------------------------------
# checkers


def _owner_list(x, m: Optional[int] = None) -> list[int]:
    if isinstance(x, IntegralAllocation):
        return list(x.owner)
    if isinstance(x, dict):
        return list(x["owner"])
    return list(x)


def disutility(d, owner: Sequence[int], i: int):
    return sum((d[i][j] for j, o in enumerate(owner) if o == i), 0)


def check_ef1(d: Sequence[Sequence[Entry]], x) -> tuple[bool, Optional[tuple[int, int]]]:
    """EF1 for chores; returns (verdict, first envious ordered pair or None)."""
    owner = _owner_list(x)
    n = len(d)
    for i in range(n):
        mine = [j for j, o in enumerate(owner) if o == i]
        if not mine:
            continue
        if any(is_inf(d[i][j]) for j in mine):
            return False, (i, i)
        own = sum(d[i][j] for j in mine) - max(d[i][j] for j in mine)
        for i2 in range(n):
            if i2 == i:
                continue
            other = [d[i][j] for j, o in enumerate(owner) if o == i2]
            if any(is_inf(v) for v in other):
                continue  # infinitely bad bundle is never envied
            if own > sum(other, 0):
                return False, (i, i2)
    return True, None


def _earnings(p: Sequence[Scalar], owner: Sequence[int], n: int) -> tuple[list, list]:
    earn = [0] * n
    top = [0] * n
    for j, i in enumerate(owner):
        earn[i] = earn[i] + p[j]
        if p[j] > top[i]:
            top[i] = p[j]
    return earn, top


def pef1_pair(p: Sequence[Scalar], x, n: Optional[int] = None) -> tuple[bool, int, int]:
    """(verdict, big earner b, least earner l), ties by smallest index."""
    owner = _owner_list(x)
    if n is None:
        n = max(owner) + 1 if owner else 1
    earn, top = _earnings(p, owner, n)
    rem = [earn[i] - top[i] for i in range(n)]
    b = min(range(n), key=lambda i: (-rem[i], i))
    l = min(range(n), key=lambda i: (earn[i], i))
    return rem[b] <= earn[l], b, l


def check_pef1(p: Sequence[Scalar], x, n: Optional[int] = None) -> bool:
    """Price-EF1: the big earner minus her priciest chore earns at most the least earner."""
    return pef1_pair(p, x, n)[0]


def check_po_certificate(d, p, x) -> tuple[bool, Optional[tuple[int, int]]]:
    """Every owned chore is MPB for its owner at ``p``; returns a witness pair on failure."""
    owner = _owner_list(x)
    n = len(d)
    for i in range(n):
        best, _ = agent_mpb(d[i], p)
        for j, o in enumerate(owner):
            if o == i and (is_inf(d[i][j]) or d[i][j] / p[j] != best):
                return False, (i, j)
    return True, None


# --------------------------------------------------------------------------
# solver


def loop_budget(n: int, m: int, beta: Fraction) -> int:
    return int(16 * (n * m) ** 2 / (beta - 1) ** 2) + 64


def potential_key(d, owner: Sequence[int], n: int) -> tuple[int, Fraction]:
    """Product of disutilities, made strict when some agents own nothing.

    Compared lexicographically: fewer idle agents first, then the product of
    the positive disutilities.  Equals the plain product order when nobody
    is idle.
    """
    idle, prod = 0, Fraction(1)
    for i in range(n):
        v = disutility(d, owner, i)
        if v == 0:
            idle += 1
        else:
            prod *= v
    return (-idle, prod)


def _product(d, owner, n) -> Fraction:
    out = Fraction(1)
    for i in range(n):
        out *= disutility(d, owner, i)
    return out


def solve_bivalued(inst: Instance, max_steps: Optional[int] = None) -> BivaluedResult:
    """EF1 + PO integral allocation with a competitive price certificate."""
    if not inst.exact:
        raise StructuralError("bivalued solver needs exact rational input")
    if not inst.bivalued:
        raise StructuralError("instance is not bivalued: entries must lie in {1, beta}")
    d, n, m = inst.d, inst.n, inst.m
    beta = inst.beta if inst.beta is not None else Fraction(2)
    if max_steps is None:
        max_steps = loop_budget(n, m, beta)

    p = [min(d[i][j] for i in range(n)) for j in range(m)]
    owner = [min(range(n), key=lambda i: (d[i][j], i)) for j in range(m)]
    res = BivaluedResult(owner=owner, prices=p, n=n)
    pot = potential_key(d, owner, n)
    res.initial_potential = _product(d, owner, n)

    while True:
        ok, _, _ = pef1_pair(p, owner, n)
        if ok:
            break
        if len(res.steps) >= max_steps:
            raise BivaluedError(f"loop budget {max_steps} exhausted", res.steps)
        earn, _ = _earnings(p, owner, n)
        lo = min(earn)
        roots = [i for i in range(n) if earn[i] == lo]
        mpb = [agent_mpb(d[i], p) for i in range(n)]

        # 1. direct transfer into a least earner
        best = None
        for l in roots:
            for c in mpb[l][1]:
                h = owner[c]
                if h != l and p[c] < earn[h] - lo:
                    key = (-p[c], l, c)
                    if best is None or key < best[0]:
                        best = (key, h, l, c)
        if best is not None:
            _, h, l, c = best
            pot = _move(res, d, p, owner, earn, lo, h, l, c, "transfer", pot)
            continue

        # MPB closure of the least earners, breadth first
        parent: dict[int, Optional[tuple[int, int]]] = {r: None for r in roots}
        queue = deque(roots)
        while queue:
            g = queue.popleft()
            for c in mpb[g][1]:
                h = owner[c]
                if h not in parent:
                    parent[h] = (g, c)
                    queue.append(h)
        S = set(parent)
        gamma_s = {j for i in S for j in mpb[i][1]}
        ratios = [mpb[i][0] * p[j] / d[i][j] for i in sorted(S) for j in range(m) if j not in gamma_s]

        # 2. price update on the closure
        if ratios:
            factor = max(ratios)
            for j in gamma_s:
                p[j] = p[j] * factor
            res.steps.append(Step("price", factor=factor, S=tuple(sorted(S)), potential=_product(d, owner, n)))
            continue

        # 3. one hop along a shortest MPB path towards the least earners
        cands = []
        for h, link in parent.items():
            if link is None:
                continue
            g, c = link
            if earn[h] - p[c] > lo:
                cands.append((not (earn[h] - p[c] > earn[g]), -p[c], c, h, g))
        if not cands:
            raise BivaluedError("no transfer or price update available", res.steps)
        _, _, c, h, g = min(cands)
        pot = _move(res, d, p, owner, earn, lo, h, g, c, "path-transfer", pot)

    res.prices = p
    res.owner = owner
    return res


def _move(res, d, p, owner, earn, lo, h, g, c, kind, pot):
    if not p[c] < earn[h] - lo:
        raise AssertionError("transfer without strict price-envy gap")
    owner[c] = g
    new = potential_key(d, owner, len(earn))
    if kind == "transfer" and not new > pot:
        raise AssertionError("direct transfer did not raise the potential")
    if new < pot:
        res.potential_decreases += 1
    res.steps.append(
        Step(
            kind, chore=c, source=h, receiver=g, price=p[c], source_earning=earn[h],
            receiver_earning=earn[g], least_earning=lo, potential=_product(d, owner, len(earn)),
        )
    )
    return new
