"""Seeded random instance families used by tests, demos and benchmarks."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from .instance import Instance, InstanceError, make_instance

KINDS = ("uniform", "rounded", "bivalued")


def random_matrix(
    kind: str,
    n: int,
    m: int,
    rng: random.Random,
    alpha: Fraction = Fraction(1),
    beta: Fraction = Fraction(2),
    max_exponent: int = 8,
) -> list[list[Fraction]]:
    if kind == "uniform":
        # two-decimal rationals in [1, 10]
        return [[Fraction(rng.randint(100, 1000), 100) for _ in range(m)] for _ in range(n)]
    if kind == "rounded":
        q = 1 + Fraction(alpha)
        return [[q ** rng.randint(0, max_exponent) for _ in range(m)] for _ in range(n)]
    if kind == "bivalued":
        b = Fraction(beta)
        return [[rng.choice((Fraction(1), b)) for _ in range(m)] for _ in range(n)]
    raise InstanceError(f"unknown instance kind {kind!r}")


def generate(
    kind: str,
    n: int,
    m: int,
    seed: int,
    alpha=Fraction(1),
    beta=Fraction(2),
    exact: Optional[bool] = True,
) -> Instance:
    """Random all-finite ceei instance; deterministic for a given seed."""
    if n < 1 or m < 1:
        raise InstanceError("n and m must be at least 1")
    alpha, beta = Fraction(alpha), Fraction(beta)
    if alpha <= 0:
        raise InstanceError("alpha must be positive")
    if beta <= 1:
        raise InstanceError("beta must exceed 1")
    rng = random.Random(f"{kind}:{n}:{m}:{seed}")
    d = random_matrix(kind, n, m, rng, alpha=alpha, beta=beta)
    inst = make_instance(d, alpha=alpha if kind == "rounded" else None, exact=True)
    return inst if exact else inst.to_approx()
