"""Market instances: validation, structure analysis and decomposition.

An instance is a disutility matrix ``d`` (positive scalars or :data:`INF`)
together with a model tag.  In the ``"ceei"`` model every agent must earn one
unit of money; in the ``"exchange"`` model agent ``i`` owns ``w[i][j]`` units of
chore ``j`` and must earn the value of her endowment.

Instances are immutable and safe to share.

>>> inst = make_instance([[1, 2], [2, 1]])
>>> inst.n, inst.m, inst.model
(2, 2, 'ceei')
>>> analyze_structure(inst).is_biclique_union
True
"""

from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from .numeric import (
    APPROX,
    EXACT,
    INF,
    Entry,
    Numeric,
    Scalar,
    from_json_scalar,
    is_inf,
    to_json_scalar,
)

logger = logging.getLogger(__name__)

Matrix = tuple[tuple[Entry, ...], ...]


class InstanceError(ValueError):
    """Malformed input (dimensions, zero entries, unallocatable chores...)."""


class StructuralError(InstanceError):
    """Well-formed input that the requested solver cannot handle."""


@dataclass(frozen=True)
class Instance:
    d: Matrix
    model: str = "ceei"
    w: Optional[Matrix] = None
    num: Numeric = EXACT
    alpha: Optional[Fraction] = None
    rounded: bool = False
    beta: Optional[Fraction] = None
    bivalued: bool = False
    # (agents, chores) of the parent instance when produced by decompose_ceei
    origin: Optional[tuple[tuple[int, ...], tuple[int, ...]]] = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return len(self.d)

    @property
    def m(self) -> int:
        return len(self.d[0]) if self.d else 0

    @property
    def exact(self) -> bool:
        return self.num.exact

    def finite_values(self) -> list[Scalar]:
        return [v for row in self.d for v in row if not is_inf(v)]

    @property
    def d_max(self) -> Scalar:
        return max(self.finite_values())

    @property
    def d_min(self) -> Scalar:
        return min(self.finite_values())

    def requirements(self, p: Sequence[Scalar]) -> list[Scalar]:
        """Money each agent must earn at prices ``p``."""
        if self.model == "ceei":
            return [self.num.one()] * self.n
        return [sum((wij * pj for wij, pj in zip(row, p)), self.num.zero()) for row in self.w]

    def supply(self) -> list[Scalar]:
        """Units of each chore to be allocated (1 in the CEEI model)."""
        if self.model == "ceei":
            return [self.num.one()] * self.m
        return [sum((self.w[i][j] for i in range(self.n)), self.num.zero()) for j in range(self.m)]

    def to_approx(self, tol: float = APPROX.tol) -> "Instance":
        num = Numeric(exact=False, tol=tol)
        d = tuple(tuple(v if is_inf(v) else float(v) for v in row) for row in self.d)
        w = None if self.w is None else tuple(tuple(float(v) for v in row) for row in self.w)
        return replace(self, d=d, w=w, num=num)

    def to_exact(self) -> "Instance":
        if self.exact:
            return self
        d = tuple(tuple(v if is_inf(v) else Fraction(v) for v in row) for row in self.d)
        w = None if self.w is None else tuple(tuple(Fraction(v) for v in row) for row in self.w)
        return replace(self, d=d, w=w, num=EXACT)


# --------------------------------------------------------------------------
# rounded / bivalued detection


def _iroot(x: int, k: int) -> Optional[int]:
    """Exact integer k-th root of a nonnegative int, or None."""
    if x < 2:
        return x
    r = int(round(x ** (1.0 / k))) if x.bit_length() < 1000 else 1 << (x.bit_length() // k)
    # Newton refinement keeps this exact for large inputs
    while True:
        nxt = ((k - 1) * r + x // r ** (k - 1)) // k
        if nxt >= r:
            break
        r = nxt
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == x:
            return cand
    return None


def power_exponent(v: Fraction, q: Fraction) -> Optional[int]:
    """Return k with ``q**k == v`` exactly (q > 1), or None."""
    if v <= 0 or q <= 1:
        return None
    k, cur = 0, Fraction(1)
    if v >= 1:
        while cur < v:
            cur *= q
            k += 1
    else:
        while cur > v:
            cur /= q
            k -= 1
    return k if cur == v else None


def is_rounded(values: Iterable[Scalar], alpha: Fraction) -> bool:
    q = 1 + Fraction(alpha)
    return all(isinstance(v, Fraction) and power_exponent(v, q) is not None for v in values)


def infer_alpha(values: Iterable[Scalar], max_root: int = 16) -> Optional[Fraction]:
    """Largest alpha such that every value is an integer power of (1 + alpha).

    Only exact rationals are considered.  Returns None when every value is 1
    (any alpha works) or when no rational base fits.
    """
    vals = sorted({v for v in values})
    if not vals or any(not isinstance(v, Fraction) for v in vals):
        return None
    non_unit = [v if v > 1 else 1 / v for v in vals if v != 1]
    if not non_unit:
        return None
    cands: set[Fraction] = set()
    base = min(non_unit)
    for k in range(1, max_root + 1):
        num, den = _iroot(base.numerator, k), _iroot(base.denominator, k)
        if num is not None and den is not None and num > den:
            cands.add(Fraction(num, den))
    for q in sorted(cands, reverse=True):
        if all(power_exponent(v, q) is not None for v in vals):
            return q - 1
    return None


def detect_bivalued(values: Iterable[Scalar]) -> tuple[bool, Optional[Fraction]]:
    """(True, beta) when all values lie in {1, beta} for one beta > 1."""
    vals = {v for v in values}
    if not vals or any(not isinstance(v, Fraction) for v in vals):
        return False, None
    others = vals - {Fraction(1)}
    if not others:
        return True, None
    if len(others) == 1:
        (b,) = others
        if b > 1:
            return True, b
    return False, None


# --------------------------------------------------------------------------
# construction and validation


def _parse_entry(raw: Any) -> Entry:
    if raw is INF:
        return INF
    if isinstance(raw, float) and math.isinf(raw):
        if raw < 0:
            raise InstanceError("negative infinite entry")
        return INF
    if isinstance(raw, Fraction):
        return raw
    try:
        return from_json_scalar(raw)
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc


def validate_instance(raw: dict, exact: Optional[bool] = None, tol: float = APPROX.tol) -> Instance:
    """Validate a parsed JSON-style description and build an :class:`Instance`.

    ``raw`` follows the instance schema: ``model``, ``n``, ``m``,
    ``disutility`` and optional ``endowments`` / ``alpha``.  When ``exact`` is
    None the mode is exact unless the input contains floats.
    """
    if not isinstance(raw, dict):
        raise InstanceError("instance must be a JSON object")
    model = raw.get("model", "ceei")
    if model not in ("ceei", "exchange"):
        raise InstanceError(f"unknown model {model!r}")
    rows = raw.get("disutility")
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InstanceError("disutility must be a non-empty list of rows")
    n = raw.get("n", len(rows))
    m = raw.get("m", len(rows[0]))
    if len(rows) != n or any(len(r) != m for r in rows):
        raise InstanceError(f"dimension mismatch: expected {n}x{m} disutility matrix")
    d = [[_parse_entry(v) for v in row] for row in rows]
    w = None
    if model == "exchange":
        erows = raw.get("endowments")
        if not isinstance(erows, list) or len(erows) != n or any(
            not isinstance(r, list) or len(r) != m for r in erows
        ):
            raise InstanceError(f"dimension mismatch: exchange model needs {n}x{m} endowments")
        w = [[_parse_entry(v) for v in row] for row in erows]
    elif raw.get("endowments") is not None:
        raise InstanceError("endowments given for a ceei instance")
    alpha = raw.get("alpha")
    if alpha is not None:
        alpha = from_json_scalar(alpha, allow_inf=False)
        alpha = Fraction(repr(alpha)) if isinstance(alpha, float) else alpha
    return make_instance(d, w=w, model=model, alpha=alpha, exact=exact, tol=tol)


def make_instance(
    d: Sequence[Sequence[Any]],
    w: Optional[Sequence[Sequence[Any]]] = None,
    model: Optional[str] = None,
    alpha: Optional[Any] = None,
    exact: Optional[bool] = None,
    tol: float = APPROX.tol,
) -> Instance:
    """Build and validate an instance from Python lists.

    Entries may be ints, Fractions, floats, ``"inf"``, ``math.inf`` or
    :data:`INF`.
    """
    if model is None:
        model = "ceei" if w is None else "exchange"
    if model not in ("ceei", "exchange"):
        raise InstanceError(f"unknown model {model!r}")
    if not d or not d[0]:
        raise InstanceError("need at least one agent and one chore")
    n, m = len(d), len(d[0])
    if any(len(row) != m for row in d):
        raise InstanceError("dimension mismatch: ragged disutility matrix")
    dd = [[_parse_entry(v) for v in row] for row in d]
    ww = None
    if model == "exchange":
        if w is None or len(w) != n or any(len(row) != m for row in w):
            raise InstanceError(f"dimension mismatch: exchange model needs {n}x{m} endowments")
        ww = [[_parse_entry(v) for v in row] for row in w]
    elif w is not None:
        raise InstanceError("endowments given for a ceei instance")

    has_float = any(isinstance(v, float) for row in dd + (ww or []) for v in row)
    if exact is None:
        exact = not has_float
    num = EXACT if exact else Numeric(exact=False, tol=tol)

    for i, row in enumerate(dd):
        for j, v in enumerate(row):
            if is_inf(v):
                continue
            if v == 0:
                raise InstanceError(f"zero disutility entry at agent {i + 1}, chore {j + 1}")
            if v < 0:
                raise InstanceError(f"nonpositive disutility at agent {i + 1}, chore {j + 1}")
            row[j] = num.coerce(v)
    for j in range(m):
        if all(is_inf(dd[i][j]) for i in range(n)):
            raise InstanceError(f"chore {j + 1} has no finite disutility")
    if ww is not None:
        for i, row in enumerate(ww):
            for j, v in enumerate(row):
                if is_inf(v):
                    raise InstanceError(f"infinite endowment at agent {i + 1}, chore {j + 1}")
                if v < 0:
                    raise InstanceError(f"negative endowment at agent {i + 1}, chore {j + 1}")
                row[j] = num.coerce(v)
        for j in range(m):
            if sum(ww[i][j] for i in range(n)) <= 0:
                raise InstanceError(f"chore {j + 1} has zero total endowment")

    finite = [v for row in dd for v in row if not is_inf(v)]
    rounded = False
    alpha_f: Optional[Fraction] = None
    if exact:
        if alpha is not None:
            alpha_f = Fraction(alpha)
            if alpha_f <= 0:
                raise InstanceError("alpha must be positive")
            rounded = is_rounded(finite, alpha_f)
        else:
            alpha_f = infer_alpha(finite)
            rounded = alpha_f is not None
        bival, beta = detect_bivalued(finite)
    else:
        alpha_f = None if alpha is None else Fraction(alpha)
        bival, beta = False, None

    return Instance(
        d=tuple(tuple(r) for r in dd),
        model=model,
        w=None if ww is None else tuple(tuple(r) for r in ww),
        num=num,
        alpha=alpha_f,
        rounded=rounded,
        beta=beta,
        bivalued=bival,
    )


# --------------------------------------------------------------------------
# structure


@dataclass(frozen=True)
class Component:
    agents: tuple[int, ...]
    chores: tuple[int, ...]
    missing_edges: tuple[tuple[int, int], ...] = ()

    @property
    def is_biclique(self) -> bool:
        return not self.missing_edges

    def describe(self) -> str:
        a = ",".join(f"a{i + 1}" for i in self.agents)
        c = ",".join(f"c{j + 1}" for j in self.chores)
        return f"{{{a}}}x{{{c}}}"


@dataclass(frozen=True)
class StructureReport:
    components: tuple[Component, ...]
    is_biclique_union: bool
    is_economy_strongly_connected: Optional[bool]
    isolated_agents: tuple[int, ...] = ()

    @property
    def non_biclique_components(self) -> list[Component]:
        return [c for c in self.components if not c.is_biclique]


def finite_components(d: Matrix) -> list[Component]:
    """Connected components of the bipartite graph of finite entries."""
    n, m = len(d), len(d[0])
    parent = list(range(n + m))

    def find(u: int) -> int:
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for i in range(n):
        for j in range(m):
            if not is_inf(d[i][j]):
                ri, rj = find(i), find(n + j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for u in range(n + m):
        if u < n and all(is_inf(v) for v in d[u]):
            continue
        ag, ch = groups.setdefault(find(u), ([], []))
        (ag if u < n else ch).append(u if u < n else u - n)
    comps = []
    ordered = sorted(groups.values(), key=lambda g: (g[0][0] if g[0] else math.inf, g[1][0] if g[1] else math.inf))
    for ag, ch in ordered:
        missing = tuple((i, j) for i in ag for j in ch if is_inf(d[i][j]))
        comps.append(Component(tuple(ag), tuple(ch), missing))
    return comps


def economy_graph(inst: Instance) -> list[list[int]]:
    """Adjacency lists: i -> i' iff some chore j has w_ij > 0 and d_i'j finite."""
    if inst.w is None:
        raise InstanceError("economy graph needs an exchange instance")
    n, m = inst.n, inst.m
    capable = [[i2 for i2 in range(n) if not is_inf(inst.d[i2][j])] for j in range(m)]
    adj = []
    for i in range(n):
        targets: set[int] = set()
        for j in range(m):
            if inst.w[i][j] > 0:
                targets.update(capable[j])
        targets.discard(i)
        adj.append(sorted(targets))
    return adj


def _reaches_all(adj: list[list[int]], start: int) -> bool:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(adj)


def is_strongly_connected(adj: list[list[int]]) -> bool:
    if len(adj) <= 1:
        return True
    radj: list[list[int]] = [[] for _ in adj]
    for u, vs in enumerate(adj):
        for v in vs:
            radj[v].append(u)
    return _reaches_all(adj, 0) and _reaches_all(radj, 0)


def analyze_structure(inst: Instance) -> StructureReport:
    comps = finite_components(inst.d)
    isolated = tuple(i for i in range(inst.n) if all(is_inf(v) for v in inst.d[i]))
    strong = None
    if inst.model == "exchange":
        strong = is_strongly_connected(economy_graph(inst))
    return StructureReport(
        components=tuple(comps),
        is_biclique_union=all(c.is_biclique for c in comps),
        is_economy_strongly_connected=strong,
        isolated_agents=isolated,
    )


def subinstance(inst: Instance, agents: Sequence[int], chores: Sequence[int]) -> Instance:
    d = tuple(tuple(inst.d[i][j] for j in chores) for i in agents)
    w = None
    if inst.w is not None:
        w = tuple(tuple(inst.w[i][j] for j in chores) for i in agents)
    finite = [v for row in d for v in row if not is_inf(v)]
    rounded = inst.rounded or (inst.alpha is not None and inst.exact and is_rounded(finite, inst.alpha))
    return replace(inst, d=d, w=w, rounded=rounded, origin=(tuple(agents), tuple(chores)))


def decompose_ceei(inst: Instance) -> list[Instance]:
    """Split a biclique-union CEEI instance into its components.

    Each returned instance records its parent indices in ``origin``.
    """
    if inst.model != "ceei":
        raise StructuralError("decomposition applies to ceei instances only")
    report = analyze_structure(inst)
    if report.isolated_agents:
        who = ", ".join(f"a{i + 1}" for i in report.isolated_agents)
        raise StructuralError(f"agents with no finite disutility cannot earn: {who}")
    for comp in report.components:
        if not comp.is_biclique:
            raise StructuralError(f"component {comp.describe()} is not a biclique")
    if len(report.components) == 1:
        return [replace(inst, origin=(tuple(range(inst.n)), tuple(range(inst.m))))]
    return [subinstance(inst, c.agents, c.chores) for c in report.components]


# --------------------------------------------------------------------------
# JSON I/O


def instance_to_json(inst: Instance) -> dict:
    out: dict[str, Any] = {
        "model": inst.model,
        "n": inst.n,
        "m": inst.m,
        "disutility": [[to_json_scalar(v) for v in row] for row in inst.d],
    }
    if inst.w is not None:
        out["endowments"] = [[to_json_scalar(v) for v in row] for row in inst.w]
    if inst.alpha is not None:
        out["alpha"] = to_json_scalar(inst.alpha)
    return out


def load_instance(path: str | Path, exact: Optional[bool] = None) -> Instance:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return validate_instance(raw, exact=exact)


def dump_json(obj: Any, path: str | Path | None = None) -> str:
    text = json.dumps(obj, indent=1, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
