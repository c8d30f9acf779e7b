"""Pure numpy/Python reference implementations of the hot kernels."""

import numpy as np


def greedy_matching(indptr, indices, scores, order):
    """Greedy edge matching over a CSR graph.

    Nodes are visited in ``order``; an unmatched node pairs with its
    unmatched neighbor of highest score (ties resolved to the lowest
    neighbor index, relying on CSR columns being sorted ascending).
    Nodes left without a partner are matched to themselves. Returns the
    partner array.
    """
    n = len(order)
    match = np.full(n, -1, dtype=np.int64)
    for u in order:
        if match[u] != -1:
            continue
        best_v = -1
        best_s = 0.0
        for ptr in range(indptr[u], indptr[u + 1]):
            v = indices[ptr]
            if v == u or match[v] != -1:
                continue
            s = scores[ptr]
            if best_v == -1 or s > best_s:
                best_v = v
                best_s = s
        if best_v == -1:
            match[u] = u
        else:
            match[u] = best_v
            match[best_v] = u
    return match


def project_rows_to_simplex(z):
    """Euclidean projection of each row of ``z`` onto the probability simplex."""
    z = np.asarray(z, dtype=np.float64)
    n, m = z.shape
    u = np.sort(z, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1)
    j = np.arange(1, m + 1)
    # largest j with u_j > (cumsum_j - 1) / j
    cond = u > (css - 1.0) / j
    rho = cond.shape[1] - np.argmax(cond[:, ::-1], axis=1)
    tau = (css[np.arange(n), rho - 1] - 1.0) / rho
    return np.maximum(z - tau[:, None], 0.0)
