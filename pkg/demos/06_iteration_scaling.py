"""How iteration counts grow against the n*m/alpha^2 * log(n*D) scale.

Runs the exact solver on growing rounded instances for three rounding
bases and prints the measured counts next to their ratio to the scale.
The ratio staying flat (and small) across sizes is the point.
"""

from fractions import Fraction as F

from choremarket.cli import bench_csv, bench_rows

sizes = [(2, 4), (4, 8), (6, 12), (8, 16)]
for alpha in (F(1), F(1, 2), F(1, 4)):
    rows = bench_rows(sizes, seed=1, alpha=alpha, repeats=3)
    print(f"alpha = {alpha}")
    print("   n   m  iterations  balance calls  ratio")
    for r in rows:
        print(f"{r['n']:4d}{r['m']:4d}  {r['iterations']:10d}  {r['balance_calls']:13d}  {r['bound_ratio']}")
    print()

# the same rows as the CLI would write them
print(bench_csv(bench_rows([(3, 6)], seed=0)), end="")
