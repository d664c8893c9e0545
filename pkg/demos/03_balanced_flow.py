"""The product-maximizing money flow at fixed prices.

Three agents compete for four chores.  Agents 1 and 2 can only reach the
first chore, so they share its money and form the lowest earning level;
agent 3 takes the rest.  The levels below are peeled off bottom-up.
"""

from fractions import Fraction as F

from choremarket import balance_allocation, check_local_balance
from choremarket.numeric import INF, fmt

d = [[1, INF, INF, INF],
     [1, 2, INF, INF],
     [2, 1, 1, 1]]
p = [F(1), F(1), F(1), F(1)]

bal = balance_allocation(d, p)
for lam, agents, chores in bal.levels:
    names = ", ".join(f"a{i + 1}" for i in agents)
    print(f"level {fmt(lam):>4}: agents {names:<10} chores {[j + 1 for j in chores]}")

print("earnings:", [fmt(e) for e in bal.earnings])
print("least earners:", sorted(i + 1 for i in bal.S))
print("locally balanced:", check_local_balance(bal.flow, bal.mpb))

# raising chore 1 lifts the bottom level
p[0] = F(3, 2)
bal = balance_allocation(d, p)
print("\nafter raising chore 1 to 3/2:", [fmt(e) for e in bal.earnings])
