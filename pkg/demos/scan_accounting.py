"""
How much work does the scan do?
===============================

The work-efficient scan uses at most 2N - 2 operator calls arranged in at
most 2 ceil(log2 N) dependent levels. Here the operator is string
concatenation, so the output also shows the combination order.
"""

import math

from paraode.scan import ScanStats, associative_scan

letters = list("abcdefgh")
stats = ScanStats()
print(associative_scan(lambda a, b: a + b, letters, stats=stats))
print(associative_scan(lambda a, b: a + b, letters, reverse=True))
print(stats)

for n in (7, 64, 1000, 4096):
    stats = ScanStats()
    associative_scan(lambda a, b: a + b, list(range(n)), stats=stats)
    print(f"N={n:5d}  calls {stats.combine_invocations:5d} <= {2 * n - 2:5d}  "
          f"depth {stats.sequential_depth:2d} <= {2 * math.ceil(math.log2(n)):2d}")
