"""Layered exchange instances built from normalized polymatrix games.

A normalized polymatrix game is a ``2n x 2n`` matrix ``M`` with entries in
``[0, 1]`` whose column pairs ``(2j-1, 2j)`` sum to one in every row.  Player
``i`` mixes over strategies ``2i-1`` and ``2i``; a strategy vector ``x`` is a
``1/n``-approximate equilibrium when no player puts weight on a strategy whose
column payoff ``x^T M_{*,col}`` trails its partner's by more than ``1/n``.

:func:`build_reduction` turns such a game into an exchange market with ``K``
layers of chore pairs.  Layer ``k`` holds chores ``b^k_1 .. b^k_{2n}``; every
finite disutility is ``1 - alpha_k`` or ``1 + alpha_k`` with
``alpha_{k+1} = 3/2 alpha_k``, and the payoff matrix enters only through
endowments.  The companion auditors check the structural guarantees of the
construction and read a strategy vector back off the last layer of prices.

All arithmetic is exact.  Labels use 1-based indices:

* chores ``(k, i)`` for ``b^k_i``;
* agents ``("a", k, i)`` for ``a^k_i`` with ``k < K``, ``("a'", i)``,
  ``("abar", k, i)`` for the pair balancers of layers ``2..K``, and
  ``("aK", i, j)`` for the last-layer agents carrying ``M_{i,j}``.

>>> game = validate_polymatrix([[Fraction(1, 2)] * 4] * 4)
>>> inst, params, labels = build_reduction(game)
>>> params.K, inst.m, inst.n
(6, 24, 50)
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

from .flow import max_flow
from .instance import Instance, finite_components, economy_graph, is_strongly_connected, make_instance
from .mpb import MarketNetwork, mpb_structure
from .numeric import APPROX, INF, Scalar, fmt, from_json_scalar, is_inf
from .verify import CeReport, verify_ce

logger = logging.getLogger(__name__)

Label = tuple  # agent label, see module docstring


class ReductionError(ValueError):
    pass


# --------------------------------------------------------------------------
# games


@dataclass(frozen=True)
class PolymatrixGame:
    n: int
    M: tuple[tuple[Fraction, ...], ...]

    def column_payoff(self, x: Sequence[Scalar], col: int) -> Scalar:
        """``x^T M_{*,col}`` with 0-based ``col``."""
        return sum((x[r] * self.M[r][col] for r in range(2 * self.n)), 0 * x[0])

    def column_sum(self, col: int) -> Fraction:
        return sum((self.M[r][col] for r in range(2 * self.n)), Fraction(0))

    def is_uniform_half(self) -> bool:
        return all(v == Fraction(1, 2) for row in self.M for v in row)

    def to_json(self) -> dict:
        return {"n": self.n, "M": [[{"num": v.numerator, "den": v.denominator} for v in row] for row in self.M]}


def _as_fraction(v: Any) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(repr(v))
    val = from_json_scalar(v, allow_inf=False)
    return Fraction(repr(val)) if isinstance(val, float) else val


def _show(v: Fraction) -> str:
    """Decimal form when it is short and exact, else ``num/den``."""
    den = v.denominator
    for q in (2, 5):
        while den % q == 0:
            den //= q
    return f"{float(v):g}" if den == 1 and v.denominator <= 10**6 else str(v)


def validate_polymatrix(M: Sequence[Sequence[Any]]) -> PolymatrixGame:
    """Check shape, range and pair normalization exactly.

    >>> validate_polymatrix([[0.6, 0.6], [0.5, 0.5]])
    Traceback (most recent call last):
    ...
    choremarket.reduction.ReductionError: row 1 pair sums to 1.2 (columns 1, 2)
    """
    size = len(M)
    if size == 0 or size % 2 or any(len(row) != size for row in M):
        raise ReductionError("payoff matrix must be square with even dimension")
    try:
        rows = tuple(tuple(_as_fraction(v) for v in row) for row in M)
    except (ValueError, TypeError) as exc:
        raise ReductionError(f"bad payoff entry: {exc}") from exc
    for r, row in enumerate(rows):
        for c, v in enumerate(row):
            if v < 0 or v > 1:
                raise ReductionError(f"entry ({r + 1}, {c + 1}) = {_show(v)} outside [0, 1]")
        for j in range(size // 2):
            s = row[2 * j] + row[2 * j + 1]
            if s != 1:
                raise ReductionError(f"row {r + 1} pair sums to {_show(s)} (columns {2 * j + 1}, {2 * j + 2})")
    return PolymatrixGame(size // 2, rows)


def load_game(raw: Any) -> PolymatrixGame:
    """Accept ``{"M": [[...]]}`` (``n`` optional) or a bare matrix."""
    if isinstance(raw, dict):
        if "M" not in raw:
            raise ReductionError("game object needs an 'M' field")
        game = validate_polymatrix(raw["M"])
        if "n" in raw and raw["n"] != game.n:
            raise ReductionError(f"declared n={raw['n']} but M is {2 * game.n}x{2 * game.n}")
        return game
    if isinstance(raw, list):
        return validate_polymatrix(raw)
    raise ReductionError("game must be a JSON object or matrix")


# --------------------------------------------------------------------------
# parameters and labels


@dataclass(frozen=True)
class ReductionParams:
    n: int
    c: int
    K: int
    alphas: tuple[Fraction, ...]  # alphas[k-1] is alpha_k
    eps_target: Fraction
    # the two-sided size bound on alpha_K; informational, fails for tiny n
    alpha_lower_ok: bool
    alpha_upper_ok: bool

    def alpha(self, k: int) -> Fraction:
        return self.alphas[k - 1]

    def delta(self, k: int) -> Fraction:
        if not 2 <= k <= self.K:
            raise ReductionError(f"no balancing endowment on layer {k}")
        return self.n * self.alphas[k - 1] / 2

    @property
    def alpha_K(self) -> Fraction:
        return self.alphas[-1]

    def to_json(self) -> dict:
        def q(v):
            return {"num": v.numerator, "den": v.denominator}

        return {
            "n": self.n,
            "c": self.c,
            "K": self.K,
            "alpha": [q(a) for a in self.alphas],
            "delta": {str(k): q(self.delta(k)) for k in range(2, self.K + 1)},
            "eps_target": q(self.eps_target),
            "alpha_lower_ok": self.alpha_lower_ok,
            "alpha_upper_ok": self.alpha_upper_ok,
        }


def ceil_log2(n: int) -> int:
    return (n - 1).bit_length() if n >= 1 else 0


def reduction_params(n: int, c: int = 3) -> ReductionParams:
    K = 2 * c * ceil_log2(n)
    if n < 2 or K == 0:
        raise ReductionError(f"degenerate layer count K={K} for n={n}; need n >= 2")
    a1 = Fraction(1, n ** (3 * c))
    alphas = [a1]
    for _ in range(K - 1):
        alphas.append(alphas[-1] * Fraction(3, 2))
    aK = alphas[-1]
    return ReductionParams(
        n=n,
        c=c,
        K=K,
        alphas=tuple(alphas),
        eps_target=a1 / (200 * n),
        alpha_lower_ok=n**c * a1 < aK,
        alpha_upper_ok=aK <= Fraction(1, n**c),
    )


def agent_name(label: Label) -> str:
    kind = label[0]
    if kind == "a":
        return f"a^{label[1]}_{label[2]}"
    if kind == "a'":
        return f"a'_{label[1]}"
    if kind == "abar":
        return f"abar^{label[1]}_{label[2]}"
    return f"a^K_{{{label[1]},{label[2]}}}"


def chore_name(label: tuple[int, int]) -> str:
    return f"b^{label[0]}_{label[1]}"


@dataclass(frozen=True)
class LayeredLabels:
    n: int
    K: int
    chores: tuple[tuple[int, int], ...]
    agents: tuple[Label, ...]
    chore_index: dict = field(compare=False, repr=False)
    agent_index: dict = field(compare=False, repr=False)

    @classmethod
    def build(cls, n: int, K: int) -> "LayeredLabels":
        chores = tuple((k, i) for k in range(1, K + 1) for i in range(1, 2 * n + 1))
        agents: list[Label] = []
        agents += [("a", 1, i) for i in range(1, 2 * n + 1)]
        agents += [("a'", i) for i in range(1, 2 * n + 1)]
        for k in range(2, K):
            agents += [("a", k, i) for i in range(1, 2 * n + 1)]
            agents += [("abar", k, i) for i in range(1, n + 1)]
        agents += [("aK", i, j) for i in range(1, 2 * n + 1) for j in range(1, 2 * n + 1)]
        agents += [("abar", K, i) for i in range(1, n + 1)]
        return cls(
            n=n,
            K=K,
            chores=chores,
            agents=tuple(agents),
            chore_index={c: t for t, c in enumerate(chores)},
            agent_index={a: t for t, a in enumerate(agents)},
        )

    def chore(self, k: int, i: int) -> int:
        return self.chore_index[(k, i)]

    def agent(self, *label) -> int:
        return self.agent_index[tuple(label)]

    def layer_of_agent(self, label: Label) -> int:
        if label[0] == "a'":
            return 1
        if label[0] == "aK":
            return self.K
        return label[1]

    def pair_agents(self, k: int, i: int) -> list[Label]:
        """Agents with finite disutility on chores ``b^k_{2i-1}, b^k_{2i}``."""
        n = self.n
        if k == 1:
            return (
                [("aK", r, 2 * i - 1) for r in range(1, 2 * n + 1)]
                + [("aK", r, 2 * i) for r in range(1, 2 * n + 1)]
                + [("a'", 2 * i - 1), ("a'", 2 * i)]
            )
        return [("a", k - 1, 2 * i - 1), ("a", k - 1, 2 * i), ("abar", k, i)]

    def to_json(self, params: Optional[ReductionParams] = None) -> dict:
        agents = []
        for a in self.agents:
            rec: dict[str, Any] = {"kind": a[0], "name": agent_name(a)}
            if a[0] == "a'":
                rec.update(layer=1, index=a[1])
            elif a[0] == "aK":
                rec.update(layer=self.K, row=a[1], col=a[2])
            else:
                rec.update(layer=a[1], index=a[2])
            agents.append(rec)
        out: dict[str, Any] = {
            "chores": [{"layer": k, "index": i} for k, i in self.chores],
            "agents": agents,
        }
        if params is not None:
            out["params"] = params.to_json()
        return out


# --------------------------------------------------------------------------
# construction


def _pair_disutilities(label: Label, k: int, i: int, a: Fraction) -> tuple[Fraction, Fraction]:
    lo, hi = 1 - a, 1 + a
    if label[0] == "abar":
        return lo, lo
    side = label[2] if label[0] in ("a", "aK") else label[1]
    return (lo, hi) if side == 2 * i - 1 else (hi, lo)


def build_reduction(game: PolymatrixGame) -> tuple[Instance, ReductionParams, LayeredLabels]:
    """Layered exchange market for ``game``; exact rationals throughout."""
    n = game.n
    params = reduction_params(n)
    K = params.K
    labels = LayeredLabels.build(n, K)
    N, m = len(labels.agents), len(labels.chores)
    d: list[list[Any]] = [[INF] * m for _ in range(N)]
    w: list[list[Fraction]] = [[Fraction(0)] * m for _ in range(N)]

    for k in range(1, K + 1):
        a = params.alpha(k)
        for i in range(1, n + 1):
            j1, j2 = labels.chore(k, 2 * i - 1), labels.chore(k, 2 * i)
            for lab in labels.pair_agents(k, i):
                r = labels.agent_index[lab]
                d[r][j1], d[r][j2] = _pair_disutilities(lab, k, i, a)

    shrink = (1 - params.alpha_K) / 2
    for i in range(1, 2 * n + 1):
        w[labels.agent("a", 1, i)][labels.chore(1, i)] = Fraction(n)
    for i in range(1, n + 1):
        pair = (labels.chore(1, 2 * i - 1), labels.chore(1, 2 * i))
        for col in (2 * i - 1, 2 * i):
            share = shrink * (2 * n - game.column_sum(col - 1))
            for j in pair:
                w[labels.agent("a'", col)][j] = share
    for k in range(2, K):
        for i in range(1, 2 * n + 1):
            w[labels.agent("a", k, i)][labels.chore(k, i)] = Fraction(n)
    for r in range(1, 2 * n + 1):
        for col in range(1, 2 * n + 1):
            w[labels.agent("aK", r, col)][labels.chore(K, r)] = game.M[r - 1][col - 1]
    for k in range(2, K + 1):
        delta = params.delta(k)
        for i in range(1, n + 1):
            for j in (labels.chore(k, 2 * i - 1), labels.chore(k, 2 * i)):
                w[labels.agent("abar", k, i)][j] = delta

    inst = make_instance(d, w=w, model="exchange", exact=True)
    logger.debug("built layered market: %d agents, %d chores, K=%d", N, m, K)
    return inst, params, labels


def expected_total(params: ReductionParams, k: int) -> Fraction:
    """Total endowment of every chore on layer ``k``."""
    n = params.n
    if k == 1:
        return n + n * (1 - params.alpha_K)
    return n + params.delta(k)


# --------------------------------------------------------------------------
# structural audit


@dataclass
class ReductionReport:
    dimensions_ok: bool
    pairwise_equal_ok: bool
    pairwise_violations: list[tuple[str, str, Fraction, Fraction]]
    totals_ok: bool
    total_violations: list[tuple[str, Fraction, Fraction]]
    biclique_ok: bool
    non_biclique: list[str]
    census_ok: bool
    census: dict[str, int]
    census_problems: list[str]
    economy_ok: bool
    economy_all_agents: bool
    unendowed_agents: list[str]
    values_ok: bool
    bad_values: list[tuple[str, str, Scalar]]

    @property
    def passed(self) -> bool:
        return (
            self.dimensions_ok
            and self.pairwise_equal_ok
            and self.totals_ok
            and self.biclique_ok
            and self.census_ok
            and self.economy_ok
            and self.values_ok
        )

    def to_json(self) -> dict:
        def q(v):
            return {"num": v.numerator, "den": v.denominator} if isinstance(v, Fraction) else str(v)

        return {
            "passed": self.passed,
            "dimensions_ok": self.dimensions_ok,
            "pairwise_equal_ok": self.pairwise_equal_ok,
            "pairwise_violations": [[a, b, q(x), q(y)] for a, b, x, y in self.pairwise_violations],
            "totals_ok": self.totals_ok,
            "total_violations": [[c, q(x), q(y)] for c, x, y in self.total_violations],
            "biclique_ok": self.biclique_ok,
            "non_biclique": self.non_biclique,
            "census_ok": self.census_ok,
            "census": self.census,
            "census_problems": self.census_problems,
            "economy_ok": self.economy_ok,
            "economy_all_agents": self.economy_all_agents,
            "unendowed_agents": self.unendowed_agents,
            "values_ok": self.values_ok,
            "bad_values": [[a, c, q(v)] for a, c, v in self.bad_values],
        }

    def table(self) -> str:
        def mark(ok):
            return "ok  " if ok else "FAIL"

        rows = [
            f"{mark(self.dimensions_ok)} dimensions",
            f"{mark(self.pairwise_equal_ok)} pairwise equal endowments"
            + "".join(f"; {a} has {fmt(x)} but {b} has {fmt(y)}" for a, b, x, y in self.pairwise_violations[:3]),
            f"{mark(self.totals_ok)} per-layer endowment totals"
            + "".join(f"; {c} total {fmt(x)} expected {fmt(y)}" for c, x, y in self.total_violations[:3]),
            f"{mark(self.biclique_ok)} disutility graph is a union of bicliques"
            + "".join(f"; {s}" for s in self.non_biclique[:3]),
            f"{mark(self.census_ok)} component census {self.census}"
            + "".join(f"; {s}" for s in self.census_problems[:3]),
            f"{mark(self.economy_ok)} economy graph strongly connected (endowed agents)"
            + (f"; {len(self.unendowed_agents)} agents own nothing" if self.unendowed_agents else ""),
            f"{mark(self.values_ok)} disutility values on the alpha ladder",
        ]
        rows.append("PASS" if self.passed else "FAIL")
        return "\n".join(rows)


def check_reduction_properties(inst: Instance, labels: LayeredLabels, params: ReductionParams) -> ReductionReport:
    """Exact audit of a layered market; every finding is a report field."""
    n, K = params.n, params.K
    dims_ok = (
        inst.model == "exchange"
        and inst.m == 2 * n * K == len(labels.chores)
        and inst.n == len(labels.agents) == 4 * n + 3 * n * (K - 2) + 4 * n * n + n
    )
    if inst.m != len(labels.chores) or inst.n != len(labels.agents):
        raise ReductionError("labels do not match the instance dimensions")
    supply = inst.supply()

    pair_bad, total_bad = [], []
    for k in range(1, K + 1):
        want = expected_total(params, k)
        for i in range(1, n + 1):
            c1, c2 = (k, 2 * i - 1), (k, 2 * i)
            s1, s2 = supply[labels.chore(*c1)], supply[labels.chore(*c2)]
            if s1 != s2:
                pair_bad.append((chore_name(c1), chore_name(c2), s1, s2))
            for c, s in ((c1, s1), (c2, s2)):
                if s != want:
                    total_bad.append((chore_name(c), s, want))

    comps = finite_components(inst.d)
    non_biclique = []
    census_problems = []
    census = {"4n+2": 0, "3": 0, "other": 0}
    seen_pairs = set()
    for comp in comps:
        chores = [labels.chores[j] for j in comp.chores]
        pair_ids = {(k, (i + 1) // 2) for k, i in chores}
        name = "component " + ("D^{}_{}".format(*next(iter(pair_ids))) if len(pair_ids) == 1 else "?")
        if not comp.is_biclique:
            a, j = comp.missing_edges[0]
            non_biclique.append(
                f"{name} is not a biclique: {agent_name(labels.agents[a])} cannot do {chore_name(labels.chores[j])}"
            )
        if len(pair_ids) != 1 or len(chores) != 2:
            census["other"] += 1
            census_problems.append(f"{name} spans chores {', '.join(chore_name(c) for c in chores)}")
            continue
        (k, i), = pair_ids
        seen_pairs.add((k, i))
        expected = {labels.agent_index[lab] for lab in labels.pair_agents(k, i)}
        if set(comp.agents) != expected:
            census["other"] += 1
            census_problems.append(f"{name} has unexpected agent set")
            continue
        size = len(comp.agents)
        if k == 1 and size == 4 * n + 2:
            census["4n+2"] += 1
        elif k > 1 and size == 3:
            census["3"] += 1
        else:
            census["other"] += 1
            census_problems.append(f"{name} has {size} agents")
    census_ok = (
        len(comps) == n * K
        and census == {"4n+2": n, "3": n * (K - 1), "other": 0}
        and len(seen_pairs) == n * K
    )
    if len(comps) != n * K:
        census_problems.append(f"{len(comps)} components, expected {n * K}")

    # agents without endowment never send money anywhere; strong connectivity
    # is required among the agents that own something
    adj = economy_graph(inst)
    endowed = [r for r in range(inst.n) if any(v > 0 for v in inst.w[r])]
    pos = {r: t for t, r in enumerate(endowed)}
    sub = [[pos[v] for v in adj[r] if v in pos] for r in endowed]
    economy_ok = is_strongly_connected(sub)
    economy_all = len(endowed) == inst.n and economy_ok
    unendowed = [agent_name(labels.agents[r]) for r in range(inst.n) if r not in pos]

    allowed = {v for a in params.alphas for v in (1 - a, 1 + a)}
    bad_values = []
    for r, row in enumerate(inst.d):
        for j, v in enumerate(row):
            if not is_inf(v) and v not in allowed:
                bad_values.append((agent_name(labels.agents[r]), chore_name(labels.chores[j]), v))

    return ReductionReport(
        dimensions_ok=dims_ok,
        pairwise_equal_ok=not pair_bad,
        pairwise_violations=pair_bad,
        totals_ok=not total_bad,
        total_violations=total_bad,
        biclique_ok=not non_biclique,
        non_biclique=non_biclique,
        census_ok=census_ok,
        census=census,
        census_problems=census_problems,
        economy_ok=economy_ok,
        economy_all_agents=economy_all,
        unendowed_agents=unendowed,
        values_ok=not bad_values,
        bad_values=bad_values,
    )


# --------------------------------------------------------------------------
# prices -> strategies


@dataclass(frozen=True)
class Extraction:
    x: list[Scalar]
    raw: list[Scalar]
    clamp: list[Scalar]  # |raw - x| per coordinate

    @property
    def max_clamp(self) -> Scalar:
        return max(self.clamp)


def extract_strategy(p: Sequence[Scalar], labels: LayeredLabels, params: ReductionParams) -> Extraction:
    """Strategy vector read off the last layer of prices.

    ``x_{2i-1} = (2 p(b^K_{2i-1}) - (1 - alpha_K) pi_i) / (2 pi_i alpha_K)``
    with ``pi_i = p(b^K_{2i-1}) + p(b^K_{2i})``, and symmetrically for
    ``x_{2i}``.  Values are clamped to ``[0, 1]``; a nonzero clamp means the
    prices leave the regulated band.
    """
    if len(p) != len(labels.chores):
        raise ReductionError("price vector length does not match the chore labels")
    K, aK = params.K, params.alpha_K
    raw, xs, clamp = [], [], []
    for i in range(1, params.n + 1):
        p1, p2 = p[labels.chore(K, 2 * i - 1)], p[labels.chore(K, 2 * i)]
        if not (p1 > 0 and p2 > 0):
            raise ReductionError(f"nonpositive last-layer price in pair {i}")
        pi = p1 + p2
        for pj in (p1, p2):
            v = (2 * pj - (1 - aK) * pi) / (2 * pi * aK)
            c = min(max(v, 0 * v), 0 * v + 1)
            raw.append(v)
            xs.append(c)
            clamp.append(abs(v - c))
    return Extraction(xs, raw, clamp)


@dataclass(frozen=True)
class NeWitness:
    pair: int  # 1-based player
    dropped: int  # 1-based strategy that should carry no weight
    margin: Scalar  # how far the better column leads, beyond the slack
    weight: Scalar  # weight placed on the dropped strategy

    def describe(self) -> str:
        better = self.dropped - 1 if self.dropped % 2 == 0 else self.dropped + 1
        return (
            f"player {self.pair}: column {better} leads column {self.dropped} by "
            f"{fmt(self.margin)} beyond the slack, yet x_{self.dropped} = {fmt(self.weight)}"
        )


@dataclass(frozen=True)
class NeReport:
    ok: bool
    witnesses: tuple[NeWitness, ...]
    payoffs: tuple[Scalar, ...]

    def __bool__(self) -> bool:
        return self.ok


def verify_polymatrix_ne(
    game: PolymatrixGame,
    x: Sequence[Any],
    slack: Optional[Scalar] = None,
    tol: float = APPROX.tol,
) -> NeReport:
    """Check both implications of the approximate equilibrium condition for every player."""
    n = game.n
    if len(x) != 2 * n:
        raise ReductionError(f"strategy vector needs {2 * n} entries")
    exact = all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in x)
    if exact:
        xs = [Fraction(v) for v in x]
        eps: Scalar = 0
        slack = Fraction(1, n) if slack is None else Fraction(slack)
    else:
        xs = [float(v) for v in x]
        eps = tol
        slack = 1.0 / n if slack is None else float(slack)
    for i in range(n):
        a, b = xs[2 * i], xs[2 * i + 1]
        if a < -eps or b < -eps:
            raise ReductionError(f"negative weight for player {i + 1}")
        if abs(a + b - 1) > eps:
            raise ReductionError(f"player {i + 1} weights sum to {fmt(a + b)}, not 1")
    u = [game.column_payoff(xs, col) for col in range(2 * n)]
    wits = []
    for i in range(n):
        lo_col, hi_col = 2 * i, 2 * i + 1
        for better, worse in ((lo_col, hi_col), (hi_col, lo_col)):
            lead = u[better] - u[worse] - slack
            if lead > eps and xs[worse] > eps:
                wits.append(NeWitness(i + 1, worse + 1, lead, xs[worse]))
    return NeReport(not wits, tuple(wits), tuple(u))


def brute_force_ne(game: PolymatrixGame, grid_step: Optional[Fraction] = None) -> list[Fraction]:
    """First grid point (lexicographic) passing :func:`verify_polymatrix_ne` at slack ``1/n``.

    Grid step ``1/(4n)`` always suffices.  Rounding an exact equilibrium to
    the nearest grid point moves each ``x_{2i-1}`` by at most ``1/(8n)``.
    Because columns are pair-normalized, every difference
    ``u_{2i-1} - u_{2i}`` then moves by at most ``n * 2 * 1/(8n) = 1/4``,
    which stays within the ``1/n`` slack for ``n <= 4``; a coordinate that
    was zero at the equilibrium stays zero on the grid.
    """
    n = game.n
    if n > 3:
        raise ReductionError("brute force is limited to n <= 3")
    step = Fraction(1, 4 * n) if grid_step is None else Fraction(grid_step)
    if step <= 0 or (1 / step).denominator != 1:
        raise ReductionError("grid step must be 1/N for a positive integer N")
    N = int(1 / step)
    for combo in itertools.product(range(N + 1), repeat=n):
        x = []
        for t in combo:
            x += [Fraction(t, N), 1 - Fraction(t, N)]
        if verify_polymatrix_ne(game, x).ok:
            return x
    raise ReductionError("no grid point is an approximate equilibrium; refine the grid")


# --------------------------------------------------------------------------
# price auditors


@dataclass(frozen=True)
class PairAudit:
    layer: int
    pair: int
    pi: Scalar
    ratio: Scalar
    band: tuple[Fraction, Fraction]
    regulation_excess: Scalar  # distance of ratio outside the band, 0 inside
    position: str  # "low", "high" or "inside"


@dataclass(frozen=True)
class PriceAudit:
    pairs: tuple[PairAudit, ...]
    equality_slack: Scalar  # max pi / min pi - 1
    regulation_slack: Scalar  # worst regulation excess

    def layer(self, k: int) -> list[PairAudit]:
        return [a for a in self.pairs if a.layer == k]


def audit_prices(p: Sequence[Scalar], labels: LayeredLabels, params: ReductionParams) -> PriceAudit:
    """Measure how far ``p`` is from pair-sum equality and the regulated ratio band."""
    out = []
    for k in range(1, params.K + 1):
        a = params.alpha(k)
        lo, hi = (1 - a) / (1 + a), (1 + a) / (1 - a)
        for i in range(1, params.n + 1):
            p1, p2 = p[labels.chore(k, 2 * i - 1)], p[labels.chore(k, 2 * i)]
            r = p1 / p2
            excess = max(lo - r, r - hi, 0 * r)
            pos = "low" if r == lo else "high" if r == hi else "inside"
            out.append(PairAudit(k, i, p1 + p2, r, (lo, hi), excess, pos))
    pis = [a.pi for a in out]
    return PriceAudit(tuple(out), max(pis) / min(pis) - 1, max(a.regulation_excess for a in out))


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    prices: dict[str, Fraction]
    requirements: dict[str, Fraction]
    earnings: Optional[dict[str, Fraction]] = None


def boundary_prices(params: ReductionParams, k: int, low: bool) -> tuple[Fraction, Fraction]:
    """Pair prices with sum 2 at the low (or high) end of the layer-``k`` band."""
    a = params.alpha(k)
    return (1 - a, 1 + a) if low else (1 + a, 1 - a)


def reverse_ratio_feasible(
    inst: Instance,
    labels: LayeredLabels,
    params: ReductionParams,
    k: int,
    i: int,
    low: bool = True,
    flip: bool = True,
) -> Feasibility:
    """Can the agents working on pair ``i`` of layer ``k+1`` clear it?

    Layer ``k`` pair ``i`` sits at one boundary of its band and layer ``k+1``
    at the opposite one (``flip=True``) or the same one.  The agents of the
    layer-``k+1`` component must each earn exactly the value of their
    endowment using only MPB chores of that component, and both chores must
    be fully paid for.  Decided by a max-flow with lower bounds.
    """
    if not 1 <= k < params.K:
        raise ReductionError(f"layer {k} has no successor")
    here = boundary_prices(params, k, low)
    there = boundary_prices(params, k + 1, low != flip)
    prices = {
        labels.chore(k, 2 * i - 1): here[0],
        labels.chore(k, 2 * i): here[1],
        labels.chore(k + 1, 2 * i - 1): there[0],
        labels.chore(k + 1, 2 * i): there[1],
    }
    chores = [labels.chore(k + 1, 2 * i - 1), labels.chore(k + 1, 2 * i)]
    agents = [labels.agent_index[lab] for lab in labels.pair_agents(k + 1, i)]
    req = []
    for r in agents:
        total = Fraction(0)
        for j, wj in enumerate(inst.w[r]):
            if wj == 0:
                continue
            if j not in prices:
                raise ReductionError(f"{agent_name(labels.agents[r])} owns a chore outside the audited pairs")
            total += wj * prices[j]
        req.append(total)
    supply = inst.supply()
    p_sub = [prices[j] for j in chores]
    d_sub = [[inst.d[r][j] for j in chores] for r in agents]
    mpb = mpb_structure(d_sub, p_sub)
    net = MarketNetwork(len(agents), 2, [list(js) for js in mpb.adj], [p_sub[t] * supply[j] for t, j in enumerate(chores)])
    names = {r: agent_name(labels.agents[r]) for r in agents}
    price_view = {chore_name(labels.chores[j]): v for j, v in prices.items()}
    req_view = {names[r]: v for r, v in zip(agents, req)}
    if sum(req) != net.total_capacity:
        return Feasibility(False, price_view, req_view)
    flow = max_flow(net, lower_bounds=req)
    if flow is None:
        return Feasibility(False, price_view, req_view)
    earn = {names[r]: e for r, e in zip(agents, flow.earnings)}
    ok = all(e == q for e, q in zip(flow.earnings, req))
    return Feasibility(ok, price_view, req_view, earn)


# --------------------------------------------------------------------------
# the symmetric game


def natural_allocation(inst: Instance, labels: LayeredLabels, params: ReductionParams) -> list[list[Fraction]]:
    """Each agent earns its endowment value at unit prices on its ``1 - alpha`` chore.

    Pair balancers split their work evenly between both chores.
    """
    x = [[Fraction(0)] * inst.m for _ in range(inst.n)]
    for k in range(1, params.K + 1):
        for i in range(1, params.n + 1):
            j1, j2 = labels.chore(k, 2 * i - 1), labels.chore(k, 2 * i)
            for lab in labels.pair_agents(k, i):
                r = labels.agent_index[lab]
                need = sum(inst.w[r], Fraction(0))
                d1, d2 = inst.d[r][j1], inst.d[r][j2]
                if d1 == d2:
                    x[r][j1] = x[r][j2] = need / 2
                elif d1 < d2:
                    x[r][j1] = need
                else:
                    x[r][j2] = need
    return x


def symmetric_ce_report(game: PolymatrixGame, prices: Optional[Sequence[Scalar]] = None) -> CeReport:
    if not game.is_uniform_half():
        raise ReductionError("symmetric check needs every payoff entry equal to 1/2")
    inst, params, labels = build_reduction(game)
    p = [Fraction(1)] * inst.m if prices is None else list(prices)
    x = natural_allocation(inst, labels, params)
    return verify_ce(inst, p, x, 0)


def check_symmetric_ce(game: PolymatrixGame, prices: Optional[Sequence[Scalar]] = None) -> bool:
    """Verify the natural allocation at unit prices (or ``prices``) as an exact equilibrium."""
    return symmetric_ce_report(game, prices).passed
