"""Competitive equilibrium with equal incomes for divisible chores.

The engine alternates two steps on a low-earning agent set ``S``:

* price update: scale down the prices of the chores ``gamma(S)`` that ``S``
  finds MPB until a first new MPB edge from ``S`` to an outside chore
  appears;
* allocation update: either rebalance the whole market (when the chores
  reached through new edges are worth more than half the earning gap) or hand
  those chores directly to agents of ``S``.

Two entry points are provided.  :func:`solve_exact_rounded` runs to exactly
equal earnings on instances whose disutilities are integer powers of
``1 + alpha``.  :func:`solve_fptas` stops when ``max e / min e < 1 + eps`` and
picks ``S`` after each rebalance by cutting the sorted earnings at their
largest multiplicative gap.

The product of agent disutilities ``prod_i D_i(x_i)`` serves as a potential:
it is unchanged by price updates and never decreases otherwise.  Every step
is recorded in :attr:`CeeiResult.trace`.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .flow import balance_allocation
from .instance import Instance, StructuralError, decompose_ceei, is_rounded, power_exponent
from .mpb import mpb_structure
from .numeric import EXACT, Entry, Numeric, Scalar, is_inf

logger = logging.getLogger(__name__)

PRICE_FLOOR_EXPONENT = -64


class SolverError(RuntimeError):
    """Invariant violation or exhausted iteration budget inside a solve."""


@dataclass
class TraceRecord:
    iter: int
    kind: str  # "price" | "alloc-balance" | "alloc-transfer"
    gamma: Optional[Scalar]
    S: tuple[int, ...]
    potential: Scalar
    component: int = 0

    def to_json(self) -> dict:
        if isinstance(self.potential, Fraction):
            num, den = self.potential.numerator, self.potential.denominator
        else:
            num, den = self.potential, 1
        g = self.gamma
        if isinstance(g, Fraction):
            g = {"num": g.numerator, "den": g.denominator}
        return {
            "iter": self.iter,
            "kind": self.kind,
            "gamma": g,
            "S": list(self.S),
            "potential_num": num,
            "potential_den": den,
            "component": self.component,
        }


@dataclass
class SolverState:
    d: tuple[tuple[Entry, ...], ...]
    num: Numeric
    p: list[Scalar]
    x: list[list[Scalar]]
    e: list[Scalar]
    S: frozenset[int]
    gamma_S: frozenset[int] = frozenset()
    fptas: bool = False
    eps: Optional[float] = None
    strict_min: bool = False
    iterations: int = 0
    balance_calls: int = 0
    price_updates: int = 0
    transfers: int = 0
    potentials: list[Scalar] = field(default_factory=list)
    trace: list[TraceRecord] = field(default_factory=list)
    initial_potential: Optional[Scalar] = None
    component: int = 0
    on_record: Optional[Callable[[TraceRecord], None]] = None

    @property
    def n(self) -> int:
        return len(self.d)

    @property
    def m(self) -> int:
        return len(self.p)

    def potential(self) -> Scalar:
        return nash_product(self.d, self.x, self.num)

    def record(self, kind: str, gamma: Optional[Scalar]) -> None:
        pot = self.potential()
        self.potentials.append(pot)
        rec = TraceRecord(self.iterations, kind, gamma, tuple(sorted(self.S)), pot, self.component)
        self.trace.append(rec)
        if self.on_record is not None:
            self.on_record(rec)

    def terminated(self) -> bool:
        if self.fptas:
            lo, hi = min(self.e), max(self.e)
            return hi < lo * (1 + self.eps)
        return all(v == self.e[0] for v in self.e) if self.num.exact else max(self.e) - min(self.e) <= self.num.tol

    def check_invariants(self, alpha: Optional[Fraction] = None) -> None:
        """Re-verify the solver-state invariants from scratch."""
        num = self.num
        for j in range(self.m):
            col = sum((self.x[i][j] for i in range(self.n)), num.zero())
            if not num.eq(col, num.one()):
                raise SolverError(f"chore {j} allocated {col} != 1")
        mpb = mpb_structure(self.d, self.p, num)
        for i in range(self.n):
            adj = set(mpb.adj[i])
            for j in range(self.m):
                if num.positive(self.x[i][j]) and j not in adj:
                    raise SolverError(f"agent {i} holds non-MPB chore {j}")
            if not num.eq(self.e[i], sum((self.x[i][j] * self.p[j] for j in range(self.m)), num.zero())):
                raise SolverError(f"earning of agent {i} out of sync")
        out = [self.e[i] for i in range(self.n) if i not in self.S]
        if out and not self.terminated() and not max(self.e[i] for i in self.S) < min(out):
            raise SolverError("low set S overlaps the earnings of the other agents")
        if alpha is not None and num.exact:
            q = 1 + alpha
            for j, pj in enumerate(self.p):
                if power_exponent(pj, q) is None:
                    raise SolverError(f"price of chore {j} left the (1+alpha) lattice")


@dataclass
class CeeiResult:
    prices: list[Scalar]
    allocation: list[list[Scalar]]
    earnings: list[Scalar]
    epsilon_achieved: Scalar
    iterations: int
    balance_calls: int
    price_updates: int
    transfers: int
    mode: str  # "exact" | "fptas"
    trace: list[TraceRecord] = field(default_factory=list)
    initial_potentials: list[Scalar] = field(default_factory=list)
    components: int = 1

    def to_json(self) -> dict:
        from .numeric import to_json_scalar

        def ser(v):
            return to_json_scalar(v) if isinstance(v, Fraction) else float(v)

        return {
            "mode": self.mode,
            "prices": [ser(v) for v in self.prices],
            "allocation": [[ser(v) for v in row] for row in self.allocation],
            "earnings": [ser(v) for v in self.earnings],
            "epsilon_achieved": ser(self.epsilon_achieved),
            "iterations": self.iterations,
            "balance_calls": self.balance_calls,
            "price_updates": self.price_updates,
            "transfers": self.transfers,
            "components": self.components,
        }

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(r.to_json()) + "\n" for r in self.trace)


# --------------------------------------------------------------------------
# building blocks


def nash_product(d, x, num: Numeric = EXACT) -> Scalar:
    """prod_i sum_j d_ij x_ij over the finite entries."""
    out = num.one()
    for row, xrow in zip(d, x):
        di = num.zero()
        for dij, xij in zip(row, xrow):
            if not is_inf(dij):
                di += dij * xij
        out *= di
    return out


def init_prices(d: Sequence[Sequence[Entry]]) -> list[Scalar]:
    """Column minima over finite entries; every agent then has MPB value 1."""
    m = len(d[0])
    return [min(row[j] for row in d if not is_inf(row[j])) for j in range(m)]


def gap_split(e: Sequence[Scalar]) -> frozenset[int]:
    """Agents below the largest multiplicative gap of the sorted earnings."""
    order = sorted(range(len(e)), key=lambda i: (e[i], i))
    if len(order) == 1:
        return frozenset(order)
    best_k, best = 1, None
    for k in range(1, len(order)):
        lo, hi = e[order[k - 1]], e[order[k]]
        ratio = math.inf if lo <= 0 else hi / lo
        if best is None or ratio > best:
            best_k, best = k, ratio
    return frozenset(order[:best_k])


def _rebalance(st: SolverState) -> None:
    bal = balance_allocation(st.d, st.p, st.num)
    st.x = [list(r) for r in bal.x]
    st.e = list(bal.earnings)
    st.S = gap_split(st.e) if st.fptas else bal.S
    st.balance_calls += 1


def price_update(st: SolverState) -> SolverState:
    """Scale down gamma(S) until an outside chore becomes MPB for S (in place)."""
    mpb = mpb_structure(st.d, st.p, st.num)
    gs = frozenset(mpb.gamma(st.S))
    ratios = []
    for i in sorted(st.S):
        for j in range(st.m):
            if j not in gs and not is_inf(st.d[i][j]):
                ratios.append(mpb.mpb[i] * st.p[j] / st.d[i][j])
    if not ratios:
        raise SolverError("price update impossible: S has no finite chore outside gamma(S)")
    gamma = min(ratios) if st.strict_min else max(ratios)
    if not gamma < 1:
        raise SolverError(f"price factor {gamma} is not below 1")
    for j in gs:
        st.p[j] = st.p[j] * gamma
    for i in st.S:
        st.e[i] = st.e[i] * gamma
    st.gamma_S = gs
    st.price_updates += 1
    if st.fptas and not st.num.exact:
        _price_floor(st)
    if st.strict_min:
        # literal "min" can overshoot; surface it instead of continuing
        after = mpb_structure(st.d, st.p, st.num)
        for i in st.S:
            for j in range(st.m):
                if st.num.positive(st.x[i][j]) and j not in after.adj[i]:
                    raise SolverError(f"min price factor broke MPB support of agent {i} on chore {j}")
    st.record("price", gamma)
    return st


def _price_floor(st: SolverState) -> None:
    d_min = min(v for row in st.d for v in row if not is_inf(v))
    top = max(st.p)
    floor = top * float(d_min) * 2.0**PRICE_FLOOR_EXPONENT
    if min(st.p) < floor:
        raise SolverError(f"price underflow: min price {min(st.p)} below floor {floor}")
    total = sum(st.p)
    if total < 1e-100:
        # uniform rescaling keeps MPB edges and the earning order
        s = st.n / total
        st.p = [v * s for v in st.p]
        st.e = [v * s for v in st.e]


def allocation_update(st: SolverState) -> SolverState:
    """Rebalance, or move the newly reachable chores into S (in place)."""
    mpb = mpb_structure(st.d, st.p, st.num)
    new_edges = [(i, j) for i in sorted(st.S) for j in mpb.adj[i] if j not in st.gamma_S]
    J = sorted({j for _, j in new_edges})
    if not J:
        raise SolverError("price update produced no new MPB edge")
    e_max = max(st.e[i] for i in st.S)
    outside = [st.e[i] for i in range(st.n) if i not in st.S]
    e_min = min(outside) if outside else e_max
    value = sum((st.p[j] for j in J), st.num.zero())
    if value > (e_min - e_max) / 2:
        _rebalance(st)
        st.record("alloc-balance", None)
        return st
    zero = st.num.zero()
    for j in J:
        cands = [i for i, jj in new_edges if jj == j]
        i_star = min(cands, key=lambda i: (st.e[i], i))
        for h in range(st.n):
            if h != i_star and st.x[h][j] != zero:
                st.e[h] -= st.x[h][j] * st.p[j]
                st.x[h][j] = zero
        st.e[i_star] += (st.num.one() - st.x[i_star][j]) * st.p[j]
        st.x[i_star][j] = st.num.one()
        st.transfers += 1
    st.record("alloc-transfer", None)
    return st


def normalize_prices(result: CeeiResult) -> CeeiResult:
    """Scale prices (and earnings) so that they sum to the number of agents."""
    n = len(result.earnings)
    total = sum(result.prices)
    s = n / total
    if isinstance(total, Fraction):
        s = Fraction(n) / total
    return replace(
        result,
        prices=[v * s for v in result.prices],
        earnings=[v * s for v in result.earnings],
        epsilon_achieved=max(abs(v * s - 1) for v in result.earnings),
    )


# --------------------------------------------------------------------------
# drivers


def default_budget(n: int, m: int, rate: float, d_max: float) -> int:
    """Generous iteration cap, far above the proven growth rate."""
    return int(64 * n * m / rate**2 * math.log(max(n * d_max, 2.0))) + 10_000


def run_component(
    inst: Instance,
    fptas: bool = False,
    eps: Optional[float] = None,
    alpha: Optional[Fraction] = None,
    strict_min: bool = False,
    max_iterations: Optional[int] = None,
    check: bool = False,
    component: int = 0,
    on_record: Optional[Callable[[TraceRecord], None]] = None,
) -> SolverState:
    """Run the engine on one biclique component and return the final state."""
    num = inst.num
    p = [num.coerce(v) for v in init_prices(inst.d)]
    st = SolverState(
        d=inst.d, num=num, p=p, x=[], e=[], S=frozenset(), fptas=fptas, eps=eps,
        strict_min=strict_min, component=component, on_record=on_record,
    )
    _rebalance(st)
    st.initial_potential = st.potential()
    if check:
        st.check_invariants(alpha)
    if max_iterations is None:
        rate = float(alpha) if alpha is not None else (eps if eps else 0.01)
        max_iterations = default_budget(st.n, st.m, rate, float(inst.d_max))
    while not st.terminated():
        if st.iterations >= max_iterations:
            raise SolverError(f"iteration budget {max_iterations} exhausted")
        st.iterations += 1
        price_update(st)
        allocation_update(st)
        if check:
            st.check_invariants(alpha)
    logger.debug(
        "component %d done: %d iterations, %d balance calls", component, st.iterations, st.balance_calls
    )
    return st


def _assemble(inst: Instance, parts, mode: str, **_) -> CeeiResult:
    num = inst.num
    p = [num.zero()] * inst.m
    x = [[num.zero()] * inst.m for _ in range(inst.n)]
    e = [num.zero()] * inst.n
    trace: list[TraceRecord] = []
    stats = dict(iterations=0, balance_calls=0, price_updates=0, transfers=0)
    init_pots = []
    for sub, st in parts:
        agents, chores = sub.origin
        total = sum(st.p, num.zero())
        s = (Fraction(len(agents)) if num.exact else float(len(agents))) / total
        for jj, j in enumerate(chores):
            p[j] = st.p[jj] * s
        for ii, i in enumerate(agents):
            e[i] = st.e[ii] * s
            for jj, j in enumerate(chores):
                x[i][j] = st.x[ii][jj]
        trace.extend(st.trace)
        init_pots.append(st.initial_potential)
        for k in stats:
            stats[k] += getattr(st, k)
    eps_ach = max(abs(v - 1) for v in e)
    return CeeiResult(
        prices=p, allocation=x, earnings=e, epsilon_achieved=eps_ach, mode=mode,
        trace=trace, initial_potentials=init_pots, components=len(parts), **stats,
    )


def solve_exact_rounded(
    inst: Instance,
    alpha=None,
    strict_min: bool = False,
    max_iterations: Optional[int] = None,
    check: bool = False,
    on_record: Optional[Callable[[TraceRecord], None]] = None,
) -> CeeiResult:
    """Exact CEEI for (1 + alpha)-rounded disutilities.

    ``alpha`` defaults to the one recorded on the instance.  Raises
    :class:`StructuralError` for non-rounded input or a non-biclique
    component.
    """
    if inst.model != "ceei":
        raise StructuralError("only ceei instances can be solved")
    if not inst.exact:
        raise StructuralError("exact solve needs an exact (rational) instance")
    alpha = inst.alpha if alpha is None else Fraction(alpha)
    if alpha is None:
        raise StructuralError("alpha is required for the exact solver")
    if alpha <= 0:
        raise StructuralError("alpha must be positive")
    if not is_rounded(inst.finite_values(), alpha):
        raise StructuralError(f"disutilities not (1+alpha)-rounded for alpha={alpha}")
    parts = []
    for k, sub in enumerate(decompose_ceei(inst)):
        st = run_component(
            sub, alpha=alpha, strict_min=strict_min, max_iterations=max_iterations,
            check=check, component=k, on_record=on_record,
        )
        parts.append((sub, st))
    return _assemble(inst, parts, "exact")


def solve_fptas(
    inst: Instance,
    eps: float,
    max_iterations: Optional[int] = None,
    check: bool = False,
    on_record: Optional[Callable[[TraceRecord], None]] = None,
) -> CeeiResult:
    """Approximate CEEI: normalized earnings within [1/(1+eps), 1+eps].

    Runs in the instance's numeric mode (floats for approximate instances,
    Fractions for exact ones).
    """
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if inst.model != "ceei":
        raise StructuralError("only ceei instances can be solved")
    parts = []
    for k, sub in enumerate(decompose_ceei(inst)):
        st = run_component(
            sub, fptas=True, eps=eps, max_iterations=max_iterations, check=check,
            component=k, on_record=on_record,
        )
        parts.append((sub, st))
    return _assemble(inst, parts, "fptas")


def iteration_bounds(n: int, m: int, alpha: float, d_max: float) -> tuple[float, float]:
    """(balance-call scale, iteration scale) without the constant factor."""
    lg = math.log(n * d_max)
    return n / alpha**2 * lg, n * m / alpha**2 * lg
