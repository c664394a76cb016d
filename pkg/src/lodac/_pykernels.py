"""Pure-Python/numpy implementation of the hot kernels.

This is the reference for ``_kernels.pyx``: both consume a numpy
``BitGenerator`` through its raw 64-bit output in exactly the same order,
so for equal seeds they return identical results.

Stream conventions (shared with the compiled kernels):

* a fair bit is ``next_uint64() >> 63``;
* ``bounded(s)`` rejects draws below ``(2**64 - s) % s`` and returns ``x % s``;
* a uniform double is ``(next_uint64() >> 11) * 2**-53``.
"""
import numpy as np

_TWO64 = 1 << 64
_INV53 = 1.0 / 9007199254740992.0


def _bit(bg):
    return int(bg.random_raw()) >> 63


def _bounded(bg, s):
    threshold = (_TWO64 - s) % s
    while True:
        x = int(bg.random_raw())
        if x >= threshold:
            return x % s


def _uniform(bg):
    return (int(bg.random_raw()) >> 11) * _INV53


def rls_init(n, bg):
    x = np.empty(n, dtype=np.uint8)
    for j in range(n):
        x[j] = _bit(bg)
    return x


def lo_general(x, z, sigma):
    n = x.shape[0]
    f = 0
    while f < n and x[sigma[f]] == z[sigma[f]]:
        f += 1
    return f


def rls_step(x, fitness, r, z, sigma, sigma_inv, perm, bg):
    n = x.shape[0]
    minrank = n
    for j in range(r):
        t = j + _bounded(bg, n - j)
        perm[j], perm[t] = perm[t], perm[j]
        p = perm[j]
        x[p] ^= 1
        rank = sigma_inv[p]
        if rank < minrank:
            minrank = rank
    if minrank < fitness:
        for j in range(r):
            x[perm[j]] ^= 1
        return fitness
    if minrank == fitness:
        f = fitness + 1
        while f < n and x[sigma[f]] == z[sigma[f]]:
            f += 1
        return f
    return fitness


def rls_episode(table, z, sigma, sigma_inv, cutoff, bg):
    n = z.shape[0]
    x = rls_init(n, bg)
    perm = np.arange(n, dtype=np.int64)
    f = init = lo_general(x, z, sigma)
    steps = 0
    while f < n:
        if 0 <= cutoff <= steps:
            break
        f = rls_step(x, f, int(table[f]), z, sigma, sigma_inv, perm, bg)
        steps += 1
    return steps, init, f == n


def surrogate_init(n, bg):
    f = 0
    while f < n and _bit(bg):
        f += 1
    return f


def surrogate_step(fitness, r, qmat, bg):
    n = qmat.shape[1]
    if _uniform(bg) < qmat[r, fitness]:
        f = fitness + 1
        while f < n and _bit(bg):
            f += 1
        return f
    return fitness


def surrogate_episode(table, qmat, cutoff, bg):
    n = qmat.shape[1]
    f = init = surrogate_init(n, bg)
    steps = 0
    while f < n:
        if 0 <= cutoff <= steps:
            break
        f = surrogate_step(f, int(table[f]), qmat, bg)
        steps += 1
    return steps, init, f == n


def _leaf_values(qmat, cur, first):
    # cumsum keeps the left-to-right summation order of the compiled kernel
    mx = np.maximum(cur[None, :], qmat[first:])
    return 0.5 * np.cumsum(1.0 / mx, axis=1)[:, -1]


def best_subset(qmat, k, lo, hi):
    """Best portfolio ``{1} + C`` over (k-1)-subsets C of [2..n] whose smallest element is in [lo, hi).

    Returns ``(expected_runtime, C)``; ``(inf, None)`` if the range is empty.
    Earliest subset in lexicographic order wins ties.
    """
    n = qmat.shape[1]
    m = k - 1
    best_val = np.inf
    best_combo = None
    lo = max(lo, 2)
    top = n - m + 2  # exclusive bound on the smallest element
    hi = min(hi, top)
    if lo >= hi:
        return best_val, best_combo

    def rec(start, stop, chosen, cur):
        nonlocal best_val, best_combo
        depth = len(chosen)
        if depth == m - 1:
            vals = _leaf_values(qmat[:stop], cur, start)
            if vals.size:
                j = int(np.argmin(vals))
                if vals[j] < best_val:
                    best_val = float(vals[j])
                    best_combo = tuple(chosen) + (start + j,)
            return
        for c in range(start, stop):
            rec(c + 1, n - m + depth + 3, chosen + [c], np.maximum(cur, qmat[c]))

    if m == 1:
        rec(lo, hi, [], qmat[1])
    else:
        for c in range(lo, hi):
            rec(c + 1, n - m + 3, [c], np.maximum(qmat[1], qmat[c]))
    return best_val, best_combo


def subset_runtimes(qmat, k):
    """Expected runtimes of all ``{1} + C`` portfolios, C in lexicographic order."""
    n = qmat.shape[1]
    m = k - 1
    out = []

    def rec(start, depth, cur):
        if depth == m - 1:
            out.append(_leaf_values(qmat, cur, start))
            return
        for c in range(start, n - m + depth + 2):
            rec(c + 1, depth + 1, np.maximum(cur, qmat[c]))

    rec(2, 0, qmat[1])
    return np.concatenate(out) if out else np.empty(0)
