"""Minimum-pain-per-buck (MPB) structure and the money-flow network.

At prices ``p`` agent ``i`` only wants chores minimizing ``d[i][j] / p[j]``.
The market network has one arc per such (agent, chore) pair, uncapacitated,
and an arc from every chore to the sink with capacity ``p[j]``.

>>> from fractions import Fraction as F
>>> s = mpb_structure([[1, 1, 2], [2, 2, 1]], [F(1), F(1), F(1, 2)])
>>> s.mpb
[Fraction(1, 1), Fraction(2, 1)]
>>> s.adj
[[0, 1], [0, 1, 2]]
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .numeric import EXACT, INF, Entry, Numeric, Scalar, is_inf


class PriceError(ValueError):
    pass


@dataclass(frozen=True)
class MpbStructure:
    mpb: list[Entry]  # INF for an agent with no finite entry
    adj: list[list[int]]  # agent -> MPB chores, increasing index

    @property
    def edges(self) -> set[tuple[int, int]]:
        return {(i, j) for i, js in enumerate(self.adj) for j in js}

    def chore_adj(self, m: int) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(m)]
        for i, js in enumerate(self.adj):
            for j in js:
                out[j].append(i)
        return out

    def gamma(self, agents) -> set[int]:
        """Chores MPB-adjacent to some agent of ``agents``."""
        return {j for i in agents for j in self.adj[i]}


def _check_prices(p: Sequence[Scalar]) -> None:
    for j, pj in enumerate(p):
        if not pj > 0:
            raise PriceError(f"price of chore {j + 1} is not positive: {pj}")


def agent_mpb(row: Sequence[Entry], p: Sequence[Scalar], num: Numeric = EXACT) -> tuple[Entry, list[int]]:
    best: Entry = INF
    for dij, pj in zip(row, p):
        if not is_inf(dij):
            r = dij / pj
            if best is INF or r < best:
                best = r
    if best is INF:
        return INF, []
    chores = [j for j, (dij, pj) in enumerate(zip(row, p)) if not is_inf(dij) and num.rel_le(dij / pj, best)]
    return best, chores


def mpb_structure(d: Sequence[Sequence[Entry]], p: Sequence[Scalar], num: Numeric = EXACT) -> MpbStructure:
    _check_prices(p)
    mpb, adj = [], []
    for row in d:
        b, js = agent_mpb(row, p, num)
        mpb.append(b)
        adj.append(js)
    return MpbStructure(mpb, adj)


@dataclass(frozen=True)
class MarketNetwork:
    """Agents are unbounded sources; chore ``j`` drains ``cap[j]`` into the sink."""

    n: int
    m: int
    adj: list[list[int]]
    cap: list[Scalar]

    @property
    def arcs(self) -> list[tuple[int, int]]:
        return [(i, j) for i, js in enumerate(self.adj) for j in js]

    @property
    def total_capacity(self) -> Scalar:
        return sum(self.cap)

    def to_dot(self) -> str:
        lines = ["digraph market {", "  rankdir=LR;"]
        for i, j in self.arcs:
            lines.append(f"  a{i + 1} -> c{j + 1};")
        for j, c in enumerate(self.cap):
            lines.append(f'  c{j + 1} -> t [label="{c}"];')
        lines.append("}")
        return "\n".join(lines)


def build_market_network(
    d: Sequence[Sequence[Entry]],
    p: Sequence[Scalar],
    num: Numeric = EXACT,
    mpb: Optional[MpbStructure] = None,
) -> MarketNetwork:
    if mpb is None:
        mpb = mpb_structure(d, p, num)
    return MarketNetwork(n=len(d), m=len(p), adj=[list(js) for js in mpb.adj], cap=list(p))
