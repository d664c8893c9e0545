"""Whole chores, two possible costs each.

Every chore costs an agent either 1 or beta.  The solver hands chores out
integrally and keeps prices that certify Pareto optimality, moving chores
until nobody envies another bundle by more than one chore.
"""

from fractions import Fraction as F

from choremarket import check_ef1, check_po_certificate, generate, solve_bivalued
from choremarket.bivalued import disutility
from choremarket.numeric import fmt

inst = generate("bivalued", 4, 10, seed=17, beta=F(3))
for row in inst.d:
    print(" ".join(fmt(v) for v in row))

res = solve_bivalued(inst)
print("\nsteps:")
for s in res.steps:
    if s.kind == "price":
        print(f"  price   scale chores of agents {[i + 1 for i in s.S]} by {fmt(s.factor)}")
    else:
        print(f"  {s.kind:8s} chore {s.chore + 1} from a{s.source + 1} to a{s.receiver + 1} (price {fmt(s.price)})")

bundles = res.allocation.bundles()
for i, b in enumerate(bundles):
    print(f"a{i + 1}: chores {[j + 1 for j in b]}  cost {fmt(disutility(inst.d, res.owner, i))}")

print("\nEF1:", check_ef1(inst.d, res.allocation)[0])
print("PO certificate:", check_po_certificate(inst.d, res.prices, res.allocation)[0])
print("product decreases along the run:", res.potential_decreases)
