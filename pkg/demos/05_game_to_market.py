"""From a two-action polymatrix game to a chore exchange market.

Each of n players mixes two actions.  The builder stacks K layers of small
chore markets whose price ratios amplify a deviation layer by layer; the
last layer is read back as a mixed strategy profile.
"""

from fractions import Fraction as F

from choremarket import (
    build_reduction,
    check_reduction_properties,
    check_symmetric_ce,
    extract_strategy,
    validate_polymatrix,
    verify_polymatrix_ne,
)
from choremarket.numeric import fmt
from choremarket.reduction import audit_prices, boundary_prices, reverse_ratio_feasible

n = 2
game = validate_polymatrix([[F(1, 2)] * (2 * n)] * (2 * n))
inst, params, labels = build_reduction(game)
print(f"{inst.n} agents, {inst.m} chores, {params.K} layers")
print("alpha ladder:", ", ".join(fmt(params.alpha(k)) for k in range(1, params.K + 1)))

print()
print(check_reduction_properties(inst, labels, params).table())

# with every payoff 1/2, unit prices clear the market and read back as 1/2
print("\nunit prices form an equilibrium:", check_symmetric_ce(game))
x = extract_strategy([F(1)] * inst.m, labels, params).x
print("extracted strategy:", [fmt(v) for v in x])
print("accepted as an equilibrium:", verify_polymatrix_ne(game, x).ok)

# a boundary ratio in layer k forces the opposite boundary in layer k + 1
for k in range(1, params.K):
    flip = reverse_ratio_feasible(inst, labels, params, k, 1, low=True)
    same = reverse_ratio_feasible(inst, labels, params, k, 1, low=True, flip=False)
    print(f"layer {k} -> {k + 1}: opposite side feasible {flip.feasible}, same side feasible {same.feasible}")

p = [F(1)] * inst.m
p[labels.chore(params.K, 1)], p[labels.chore(params.K, 2)] = boundary_prices(params, params.K, True)
print("\nlast layer pushed to its low boundary:", [fmt(v) for v in extract_strategy(p, labels, params).x])
print("price audit:", audit_prices(p, labels, params).layer(params.K)[0].position)
