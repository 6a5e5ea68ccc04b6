"""Independent reference computations used by the tests."""

import math

import numpy as np


def bisect_tau(R0, rho, tol=1e-13):
    """Final-size root by plain bisection on (0, 1)."""
    g = lambda x: 1.0 - x - math.exp(-R0 * (rho + x))  # noqa: E731
    lo, hi = 1e-300, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ctmc_final_size(N, M, beta, gamma):
    """Exact final-size distribution of the Markov SIR epidemic (infection rate beta S I / N).

    Propagates probability mass over the (S, I) lattice of the embedded jump
    chain; S only decreases and S + I decreases on recovery, so processing
    states in decreasing S + 2I... order is replaced here by sweeping S downward
    and, within S, I downward.
    """
    prob = np.zeros((N + 1, N + M + 1))
    prob[N, M] = 1.0
    final = np.zeros(N + 1)
    for s in range(N, -1, -1):
        for i in range(N + M, -1, -1):
            p = prob[s, i]
            if p == 0:
                continue
            if i == 0:
                final[N - s] += p
                continue
            inf = beta * s * i / N
            rec = gamma * i
            tot = inf + rec
            if s > 0 and inf > 0:
                prob[s - 1, i + 1] += p * inf / tot
            prob[s, i - 1] += p * rec / tot
    return final


def ks_distance(sample, cdf):
    x = np.sort(np.asarray(sample))
    n = x.size
    F = cdf(x)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))
