"""
Bagging and out-of-bag error
============================

Every member sees a bootstrap sample. Objects a member never saw give an
honest error estimate for free; it tracks the held-out error closely.
"""

import numpy as np

from _data import blobs, halves
from grf import ForestConfig, oob_error, train_forest

train, test = halves(blobs(4, n=600, shift=2.5), 300)

for members in (1, 5, 25, 100):
    f = train_forest(train, ForestConfig(members=members, seed=4))
    oob = oob_error(f, train)
    labels, _ = f.predict(test)
    held_out = np.mean(labels != test.y)
    covered = oob.covered.mean()
    print(f"B={members:3d}  oob {oob.error:.3f} (covers {covered:.0%})  held-out {held_out:.3f}")

# the in-bag masks are kept on the model
f = train_forest(train, ForestConfig(members=10, seed=4))
print("in-bag fraction per member:", np.round(f.inbag.mean(axis=1), 3))
