import itertools

import numpy as np
import pytest


def brute_force_max_assignment(S: np.ndarray) -> float:
    """Exhaustive maximum over all injections of the smaller side into the larger."""
    n_p, n_s = S.shape
    if n_p == 0 or n_s == 0:
        return 0.0
    best = -np.inf
    if n_p <= n_s:
        for cols in itertools.permutations(range(n_s), n_p):
            best = max(best, sum(S[i, j] for i, j in enumerate(cols)))
    else:
        for rows in itertools.permutations(range(n_p), n_s):
            best = max(best, sum(S[i, j] for j, i in enumerate(rows)))
    return float(best)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
