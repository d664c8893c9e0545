"""Two agents, three chores, exact rational prices.

Agent 1 finds chores 1 and 2 easy, agent 2 prefers chore 3.  Disutilities
are powers of 2, so the exact solver with alpha = 1 applies and every price
it returns is a plain fraction.
"""

from choremarket import make_instance, solve_exact_rounded, verify_ce
from choremarket.numeric import fmt

d = [[1, 1, 2],
     [2, 2, 1]]
inst = make_instance(d)

res = solve_exact_rounded(inst, alpha=1)
print("prices     ", [fmt(v) for v in res.prices])
print("earnings   ", [fmt(v) for v in res.earnings])
for i, row in enumerate(res.allocation):
    print(f"agent {i + 1} does", [fmt(v) for v in row])

# every step of the run, with the product of disutilities it left behind
print("\nstep  kind           gamma      potential")
for rec in res.trace:
    gamma = fmt(rec.gamma) if rec.gamma is not None else "-"
    print(f"{rec.iter:4d}  {rec.kind:13s}  {gamma:9s}  {fmt(rec.potential)}")

# the certificate is checked from scratch, without solver internals
print()
print(verify_ce(inst, res.prices, res.allocation, 0).table())

# identical agents split the cheaper chore: prices 2/3 and 4/3
twin = solve_exact_rounded(make_instance([[1, 2], [1, 2]]), alpha=1)
print("\nidentical agents:", [fmt(v) for v in twin.prices])
