"""Arbitrary disutilities: the approximate solver on floats.

Random two-decimal disutilities are not powers of anything, so the exact
solver refuses them.  The approximate engine runs in floating point and
stops once every agent earns within a factor (1 + eps) of her income.
"""

import time

from choremarket import generate, solve_exact_rounded, solve_fptas, verify_ce
from choremarket.instance import StructuralError

inst = generate("uniform", 6, 10, seed=5)
try:
    solve_exact_rounded(inst, alpha=1)
except StructuralError as exc:
    print("exact solver:", exc)

approx = inst.to_approx()
print("\n  eps    iterations  balance calls  achieved   seconds")
for eps in (0.2, 0.05, 0.01, 0.001):
    t0 = time.perf_counter()
    res = solve_fptas(approx, eps)
    secs = time.perf_counter() - t0
    ok = verify_ce(approx, res.prices, res.allocation, eps).passed
    print(f"{eps:6.3f}  {res.iterations:10d}  {res.balance_calls:13d}  {res.epsilon_achieved:.2e}  {secs:7.3f}  {'ok' if ok else 'FAIL'}")

res = solve_fptas(approx, 0.01)
print("\nprices at eps = 0.01:", " ".join(f"{p:.3f}" for p in res.prices))
print("sum of prices:", round(sum(res.prices), 9))
