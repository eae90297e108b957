"""Pure-Python batch kernel, used when the compiled extension is absent."""

import numpy as np

from . import estimators as E
from .errors import DegenerateData
from .model import DesignConfig, summary_from_stats

BACKEND = "python"


def estimate_batch(xbar1, xbar2, ybar, within_ss, n1, n2, kinds, ms):
    """Evaluate estimators on a batch of replications.

    Inputs are per-replication group means and pooled within-group sums of
    squares. Returns ``(q, est)`` with ``q`` an int8 array of selected arms
    and ``est`` of shape ``(len(kinds), reps)``.
    """
    cfg = DesignConfig(int(n1), int(n2))
    reps = len(xbar1)
    q = np.empty(reps, dtype=np.int8)
    est = np.empty((len(kinds), reps), dtype=np.float64)
    ids = [E.EstimatorId(E.Kind(int(k)), int(m) if int(k) == E.Kind.BAYES_M else None)
           for k, m in zip(kinds, ms)]
    for r in range(reps):
        try:
            s = summary_from_stats(float(xbar1[r]), float(xbar2[r]), float(ybar[r]),
                                   float(within_ss[r]), cfg)
            q[r] = s.q
            for j, ident in enumerate(ids):
                est[j, r] = E.evaluate(ident, s, cfg)
        except DegenerateData as exc:
            raise DegenerateData(str(exc), replication=r) from None
    return q, est
