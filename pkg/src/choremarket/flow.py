"""Maximum flow and product-maximizing (balanced) money flows.

The max-flow engine is a plain Edmonds-Karp over a residual graph whose
capacities are Fractions or floats; ``None`` stands for an uncapacitated arc.
Arc order is fixed by construction order, so results are reproducible.

:func:`balance_allocation` computes the money flow that saturates every chore
and maximizes the product of agent earnings.  It peels off agent levels from
the bottom: at each level the largest uniform earning ``lam`` that every
active agent can reach is

    lam* = min over agent sets T of p(chores adjacent to T) / |T|,

found by a Newton (Dinkelbach) iteration on min cuts.  The maximal set of
agents that cannot reach the sink in the residual graph at ``lam*`` is frozen
at that earning together with all of its chores, and the recursion continues
on what is left.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

from .mpb import MarketNetwork, MpbStructure, build_market_network, mpb_structure
from .numeric import EXACT, Entry, Numeric, Scalar

logger = logging.getLogger(__name__)


class FlowError(ValueError):
    pass


class ResidualGraph:
    """Residual graph with paired arcs ``a`` / ``a ^ 1``."""

    __slots__ = ("head", "res", "out", "zero", "eps")

    def __init__(self, size: int, zero: Scalar, eps: Scalar):
        self.head: list[int] = []
        self.res: list[Optional[Scalar]] = []
        self.out: list[list[int]] = [[] for _ in range(size)]
        self.zero = zero
        self.eps = eps

    def add_arc(self, u: int, v: int, cap: Optional[Scalar]) -> int:
        a = len(self.head)
        self.head += [v, u]
        self.res += [cap, self.zero]
        self.out[u].append(a)
        self.out[v].append(a + 1)
        return a

    def open(self, a: int) -> bool:
        r = self.res[a]
        return r is None or r > self.eps

    def flow(self, a: int) -> Scalar:
        """Flow on forward arc ``a`` (the residual of its reverse)."""
        return self.res[a ^ 1]

    def _augmenting_path(self, s: int, t: int) -> Optional[list[int]]:
        pred: dict[int, int] = {s: -1}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for a in self.out[u]:
                v = self.head[a]
                if v not in pred and self.open(a):
                    pred[v] = a
                    if v == t:
                        path = []
                        while v != s:
                            a = pred[v]
                            path.append(a)
                            v = self.head[a ^ 1]
                        return path
                    queue.append(v)
        return None

    def max_flow(self, s: int, t: int) -> Scalar:
        total = self.zero
        while True:
            path = self._augmenting_path(s, t)
            if path is None:
                return total
            caps = [self.res[a] for a in path if self.res[a] is not None]
            if not caps:
                raise FlowError("unbounded augmenting path")
            b = min(caps)
            for a in path:
                if self.res[a] is not None:
                    self.res[a] -= b
                if self.res[a ^ 1] is not None:
                    self.res[a ^ 1] += b
            total += b

    def reachable_from(self, s: int) -> set[int]:
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for a in self.out[u]:
                v = self.head[a]
                if v not in seen and self.open(a):
                    seen.add(v)
                    queue.append(v)
        return seen

    def reaching(self, t: int) -> set[int]:
        """Nodes with a residual path to ``t``."""
        seen = {t}
        queue = deque([t])
        while queue:
            v = queue.popleft()
            for a in self.out[v]:
                # a is v -> u; the arc u -> v is a ^ 1
                u = self.head[a]
                if u not in seen and self.open(a ^ 1):
                    seen.add(u)
                    queue.append(u)
        return seen


@dataclass(frozen=True)
class MoneyFlow:
    network: MarketNetwork
    f: dict[tuple[int, int], Scalar]
    earnings: list[Scalar]

    def allocation(self) -> list[list[Scalar]]:
        zero = self.network.cap[0] * 0 if self.network.cap else 0
        x = [[zero] * self.network.m for _ in range(self.network.n)]
        for (i, j), v in self.f.items():
            x[i][j] = v / self.network.cap[j]
        return x


def _eps(num: Numeric, scale: Scalar) -> Scalar:
    return num.zero() if num.exact else num.tol * max(1.0, float(scale))


def _build(net: MarketNetwork, agents, chores, src_cap, num: Numeric):
    """Residual graph on a sub-network. Node ids: s, agents, chores, t."""
    agents, chores = list(agents), list(chores)
    aid = {i: 1 + k for k, i in enumerate(agents)}
    cid = {j: 1 + len(agents) + k for k, j in enumerate(chores)}
    s, t = 0, 1 + len(agents) + len(chores)
    g = ResidualGraph(t + 1, num.zero(), _eps(num, max(net.cap) if net.cap else 1))
    src_arcs = {i: g.add_arc(s, aid[i], src_cap(i)) for i in agents}
    mid_arcs = {}
    for i in agents:
        for j in net.adj[i]:
            if j in cid:
                mid_arcs[(i, j)] = g.add_arc(aid[i], cid[j], None)
    for j in chores:
        g.add_arc(cid[j], t, net.cap[j])
    return g, s, t, aid, cid, src_arcs, mid_arcs


def max_flow(
    network: MarketNetwork,
    lower_bounds: Optional[Sequence[Scalar]] = None,
    num: Numeric = EXACT,
) -> Optional[MoneyFlow]:
    """Maximum money flow from agents through MPB arcs into the sink.

    Without ``lower_bounds`` agents have unbounded supply and the result is
    any maximum flow.  With ``lower_bounds`` the call decides whether all
    chores can be saturated while agent ``i`` sends at least
    ``lower_bounds[i]``; it returns None when that is impossible.
    """
    n, m = network.n, network.m
    if lower_bounds is not None and len(lower_bounds) != n:
        raise FlowError("one lower bound per agent required")
    caps = (lambda i: None) if lower_bounds is None else (lambda i: lower_bounds[i])
    g, s, t, aid, cid, src_arcs, mid_arcs = _build(network, range(n), range(m), caps, num)
    value = g.max_flow(s, t)
    if lower_bounds is not None:
        need = sum(lower_bounds, num.zero())
        if num.lt(value, need):
            return None
        for a in src_arcs.values():
            g.res[a] = None
        value += g.max_flow(s, t)
        if num.lt(value, network.total_capacity):
            return None
    f = {e: g.flow(a) for e, a in mid_arcs.items()}
    earn = [num.zero()] * n
    for (i, _), v in f.items():
        earn[i] += v
    return MoneyFlow(network, f, earn)


@dataclass(frozen=True)
class BalanceResult:
    x: list[list[Scalar]]
    earnings: list[Scalar]
    S: frozenset[int]
    flow: MoneyFlow
    mpb: MpbStructure
    levels: list[tuple[Scalar, tuple[int, ...], tuple[int, ...]]]  # (earning, agents, chores)


def _level(net: MarketNetwork, agents: list[int], chores: set[int], num: Numeric):
    """Lowest uniform earning of the active agents and its maximal tight set."""
    p = net.cap
    lam = sum((p[j] for j in chores), num.zero()) / len(agents)
    for _ in range(4 * len(agents) + 8):
        g, s, t, aid, cid, _, mid = _build(net, agents, sorted(chores), lambda i: lam, num)
        value = g.max_flow(s, t)
        if not num.lt(value, lam * len(agents)):
            break
        side = g.reachable_from(s)
        T = [i for i in agents if aid[i] in side]
        new = sum((p[j] for j in {j for i in T for j in net.adj[i] if j in chores}), num.zero()) / len(T)
        if not new < lam:
            # only reachable through float noise
            break
        lam = new
    else:
        raise FlowError("parametric search did not converge")
    sink_side = g.reaching(t)
    tight = [i for i in agents if aid[i] not in sink_side]
    if not tight:
        # approximate mode only: noise left every agent connected to the sink
        tight = list(agents)
    tight_set = set(tight)
    gamma = sorted({j for i in tight for j in net.adj[i] if j in chores})
    f = {(i, j): g.flow(a) for (i, j), a in mid.items() if i in tight_set}
    return lam, tight, gamma, f


def balance_allocation(
    d: Sequence[Sequence[Entry]],
    p: Sequence[Scalar],
    num: Numeric = EXACT,
    mpb: Optional[MpbStructure] = None,
) -> BalanceResult:
    """Product-maximizing allocation on the MPB network at prices ``p``.

    Returns the allocation (every chore saturated), the earnings, the set
    ``S`` of minimum earners and the per-level decomposition.
    """
    if mpb is None:
        mpb = mpb_structure(d, p, num)
    net = build_market_network(d, p, num, mpb)
    n, m = net.n, net.m
    covered = {j for js in net.adj for j in js}
    missing = [j for j in range(m) if j not in covered]
    if missing:
        raise FlowError(f"chore {missing[0] + 1} has no MPB edge")
    agents = list(range(n))
    chores = set(range(m))
    f: dict[tuple[int, int], Scalar] = {}
    levels = []
    while agents:
        lam, tight, gamma, fl = _level(net, agents, chores, num)
        f.update(fl)
        levels.append((lam, tuple(tight), tuple(gamma)))
        tight_set = set(tight)
        agents = [i for i in agents if i not in tight_set]
        chores.difference_update(gamma)
    if chores:
        raise FlowError("chores left unallocated after balancing")
    earn = [num.zero()] * n
    for (i, _), v in f.items():
        earn[i] += v
    flow = MoneyFlow(net, f, earn)
    low = min(earn)
    if num.exact:
        S = frozenset(i for i in range(n) if earn[i] == low)
    else:
        S = frozenset(i for i in range(n) if earn[i] <= low + num.tol)
    return BalanceResult(flow.allocation(), earn, S, flow, mpb, levels)


def check_local_balance(flow: MoneyFlow, mpb: MpbStructure, num: Numeric = EXACT) -> bool:
    """Local optimality certificate of a complete money flow.

    For every chore ``j`` and agents ``i``, ``i2`` both MPB-adjacent to ``j``
    with positive flow from ``i``: either both earn the same, or ``i`` earns
    less and ``i2`` sends nothing to ``j``.
    """
    return local_balance_violation(flow, mpb, num) is None


def local_balance_violation(flow: MoneyFlow, mpb: MpbStructure, num: Numeric = EXACT):
    e = flow.earnings
    zero = num.zero()
    chore_adj = mpb.chore_adj(flow.network.m)
    for j, holders in enumerate(chore_adj):
        for i in holders:
            if not num.positive(flow.f.get((i, j), zero)):
                continue
            for i2 in holders:
                if i2 == i or num.eq(e[i], e[i2]):
                    continue
                if num.lt(e[i], e[i2]) and not num.positive(flow.f.get((i2, j), zero)):
                    continue
                return (i, i2, j)
    return None
