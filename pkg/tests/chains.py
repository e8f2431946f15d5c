"""Random finite chains and brute-force references shared by the tests."""

import numpy as np

from optstop.paths import FiniteChain
from optstop.payoff import TablePayoff


def random_chain(rng, k, T, m=1, sparse=False):
    states = rng.permutation(k * 3)[:k].reshape(k, 1).astype(float)
    if m > 1:
        states = np.hstack([states] + [rng.integers(0, 5, (k, 1)).astype(float) for _ in range(m - 1)])
    mats = []
    for _ in range(T):
        p = rng.random((k, k)) ** 2
        if sparse:
            p *= rng.random((k, k)) < 0.6
            p[np.arange(k), rng.integers(0, k, k)] += 0.1
        mats.append(p / p.sum(axis=1, keepdims=True))
    init = rng.random(k) + 0.05
    return FiniteChain(states, tuple(mats), init / init.sum())


def random_table_payoff(rng, chain, scale=1.0, **kw):
    return TablePayoff(chain, scale * rng.random((chain.T + 1, chain.k)), **kw)


def tree_continuation(chain, F):
    """Continuation values by backward induction over the full path tree.

    Every history prefix is its own node (no Markov aggregation, no matrix
    products over state laws). Returns, per time t, an array over prefixes
    of length t+1 together with the prefixes' last states.
    """
    k, T = chain.k, chain.T
    idx = np.array(np.unravel_index(np.arange(k ** (T + 1)), (k,) * (T + 1))).T
    value = F[T][idx[:, T]]
    out = {}
    for t in range(T - 1, -1, -1):
        prefix_last = idx[:: k ** (T - t), t]
        child_last = idx[:: k ** (T - t - 1), t + 1].reshape(-1, k)
        child_val = value.reshape(-1, k)
        P = chain.transitions[t]
        cont = np.einsum("ij,ij->i", P[prefix_last[:, None], child_last], child_val)
        out[t] = (prefix_last, cont)
        value = np.maximum(F[t][prefix_last], cont)
    return out
