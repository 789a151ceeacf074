"""
Pivots and how they are chosen
==============================

A pivot sends each object left or right based on one feature. Continuous
features use a threshold (``x >= t`` goes right), categorical ones a subset
of categories (members go right).
"""

import numpy as np

from grf import GenerationStrategy, generate_pivot, parse_csv
from grf.pivot import enumerate_thresholds, pivot_gain

# a tiny table with one continuous and one categorical predictor
data = parse_csv(
    """size,colour,label
1,red,small
2,red,small
3,blue,big
4,green,big
5,blue,big
""",
    "label",
)
rows = np.arange(data.n_objects)
print("schema:", [(f.name, f.kind, f.categories) for f in data.schema])

# candidate thresholds are midpoints between neighbouring values
print("thresholds:", enumerate_thresholds(data, rows, 0))

# exhaustive search over every threshold and category subset
best = generate_pivot(GenerationStrategy("optimised", m_try=0), data, rows, np.random.default_rng(0))
print("optimised:", best.to_dict(), "gain", pivot_gain("gini", best, data, rows))

# random pivots are cheap; the heuristic keeps the best of k of them
rng = np.random.default_rng(1)
for strategy in (GenerationStrategy("random", m_try=0), GenerationStrategy("heuristic", k=8, m_try=0)):
    p = generate_pivot(strategy, data, rows, rng)
    print(f"{strategy.kind}:", p.to_dict(), "gain", round(pivot_gain("gini", p, data, rows), 4))

# the pivot is a plain rule; applying it gives an L/R mask
print("goes right:", best.goes_right(data.X))
