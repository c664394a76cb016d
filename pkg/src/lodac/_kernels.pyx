# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; semantics and random-stream usage mirror ``_pykernels``."""
import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t

cnp.import_array()

cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline bitgen_t* _bitgen(object bg) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(bg.capsule, "BitGenerator")


cdef inline uint64_t _next(bitgen_t* rng) noexcept nogil:
    return rng.next_uint64(rng.state)


cdef inline int _bit(bitgen_t* rng) noexcept nogil:
    return <int>(_next(rng) >> 63)


cdef inline int64_t _bounded(bitgen_t* rng, uint64_t s) noexcept nogil:
    cdef uint64_t threshold = (0 - s) % s
    cdef uint64_t x
    while True:
        x = _next(rng)
        if x >= threshold:
            return <int64_t>(x % s)


cdef inline double _uniform(bitgen_t* rng) noexcept nogil:
    return <double>(_next(rng) >> 11) * INV53


cdef int64_t _lo_general(const uint8_t[::1] x, const uint8_t[::1] z,
                         const int64_t[::1] sigma) noexcept nogil:
    cdef int64_t n = x.shape[0]
    cdef int64_t f = 0
    while f < n and x[sigma[f]] == z[sigma[f]]:
        f += 1
    return f


cdef int64_t _rls_step(uint8_t[::1] x, int64_t fitness, int64_t r, const uint8_t[::1] z,
                       const int64_t[::1] sigma, const int64_t[::1] sigma_inv,
                       int64_t[::1] perm, bitgen_t* rng) noexcept nogil:
    cdef int64_t n = x.shape[0]
    cdef int64_t minrank = n
    cdef int64_t j, t, p, tmp, rank, f
    for j in range(r):
        t = j + _bounded(rng, <uint64_t>(n - j))
        tmp = perm[j]
        perm[j] = perm[t]
        perm[t] = tmp
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


def rls_init(Py_ssize_t n, bg):
    cdef bitgen_t* rng = _bitgen(bg)
    x = np.empty(n, dtype=np.uint8)
    cdef uint8_t[::1] xv = x
    cdef Py_ssize_t j
    for j in range(n):
        xv[j] = <uint8_t>_bit(rng)
    return x


def lo_general(const uint8_t[::1] x, const uint8_t[::1] z, const int64_t[::1] sigma):
    return _lo_general(x, z, sigma)


def rls_step(uint8_t[::1] x, int64_t fitness, int64_t r, const uint8_t[::1] z,
             const int64_t[::1] sigma, const int64_t[::1] sigma_inv, int64_t[::1] perm, bg):
    return _rls_step(x, fitness, r, z, sigma, sigma_inv, perm, _bitgen(bg))


def rls_episode(const int64_t[::1] table, const uint8_t[::1] z, const int64_t[::1] sigma,
                const int64_t[::1] sigma_inv, int64_t cutoff, bg):
    cdef bitgen_t* rng = _bitgen(bg)
    cdef Py_ssize_t n = z.shape[0]
    x_arr = rls_init(n, bg)
    cdef uint8_t[::1] x = x_arr
    cdef int64_t[::1] perm = np.arange(n, dtype=np.int64)
    cdef int64_t f = _lo_general(x, z, sigma)
    cdef int64_t init = f
    cdef int64_t steps = 0
    with nogil:
        while f < n:
            if cutoff >= 0 and steps >= cutoff:
                break
            f = _rls_step(x, f, table[f], z, sigma, sigma_inv, perm, rng)
            steps += 1
    return steps, init, f == n


cdef inline int64_t _surrogate_step(int64_t fitness, int64_t r, const double[:, ::1] qmat,
                                    bitgen_t* rng) noexcept nogil:
    cdef int64_t n = qmat.shape[1]
    cdef int64_t f
    if _uniform(rng) < qmat[r, fitness]:
        f = fitness + 1
        while f < n and _bit(rng):
            f += 1
        return f
    return fitness


def surrogate_init(int64_t n, bg):
    cdef bitgen_t* rng = _bitgen(bg)
    cdef int64_t f = 0
    while f < n and _bit(rng):
        f += 1
    return f


def surrogate_step(int64_t fitness, int64_t r, const double[:, ::1] qmat, bg):
    return _surrogate_step(fitness, r, qmat, _bitgen(bg))


def surrogate_episode(const int64_t[::1] table, const double[:, ::1] qmat, int64_t cutoff, bg):
    cdef bitgen_t* rng = _bitgen(bg)
    cdef int64_t n = qmat.shape[1]
    cdef int64_t f = surrogate_init(n, bg)
    cdef int64_t init = f
    cdef int64_t steps = 0
    with nogil:
        while f < n:
            if cutoff >= 0 and steps >= cutoff:
                break
            f = _surrogate_step(f, table[f], qmat, rng)
            steps += 1
    return steps, init, f == n


# -- portfolio enumeration ---------------------------------------------------

cdef struct Search:
    const double* q      # (n+1) x n, row-major
    Py_ssize_t n
    Py_ssize_t m         # radii chosen besides 1
    double* stack        # (m) x n running maxima; row 0 holds radius 1 merged with level 0
    int64_t* combo
    int64_t* best_combo
    double best_val
    double* out          # sweep mode: every leaf value, lexicographic
    Py_ssize_t out_pos


cdef void _leaves(Search* s, Py_ssize_t depth, Py_ssize_t start, Py_ssize_t stop) noexcept nogil:
    cdef const double* cur = s.stack + depth * s.n
    cdef const double* row
    cdef Py_ssize_t c, i
    cdef double acc, a, b
    for c in range(start, stop):
        row = s.q + c * s.n
        acc = 0.0
        for i in range(s.n):
            a = cur[i]
            b = row[i]
            acc += 1.0 / (a if a >= b else b)
        acc = 0.5 * acc
        if s.out != NULL:
            s.out[s.out_pos] = acc
            s.out_pos += 1
        elif acc < s.best_val:
            s.best_val = acc
            s.combo[depth] = c
            for i in range(s.m):
                s.best_combo[i] = s.combo[i]


cdef void _descend(Search* s, Py_ssize_t depth, Py_ssize_t start, Py_ssize_t stop) noexcept nogil:
    # depth = number of radii already chosen besides 1
    cdef Py_ssize_t c, i
    cdef const double* cur
    cdef double* nxt
    cdef const double* row
    if depth == s.m - 1:
        _leaves(s, depth, start, stop)
        return
    cur = s.stack + depth * s.n
    nxt = s.stack + (depth + 1) * s.n
    for c in range(start, stop):
        row = s.q + c * s.n
        for i in range(s.n):
            nxt[i] = cur[i] if cur[i] >= row[i] else row[i]
        s.combo[depth] = c
        _descend(s, depth + 1, c + 1, s.n - s.m + depth + 3)


cdef int _setup(Search* s, const double[:, ::1] qmat, Py_ssize_t k) except -1:
    s.q = &qmat[0, 0]
    s.n = qmat.shape[1]
    s.m = k - 1
    s.stack = <double*> malloc(s.m * s.n * sizeof(double))
    s.combo = <int64_t*> malloc(s.m * sizeof(int64_t))
    s.best_combo = <int64_t*> malloc(s.m * sizeof(int64_t))
    if s.stack == NULL or s.combo == NULL or s.best_combo == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(s.n):
        s.stack[i] = qmat[1, i]
    s.best_val = np.inf
    s.out = NULL
    s.out_pos = 0
    return 0


cdef void _teardown(Search* s) noexcept:
    free(s.stack)
    free(s.combo)
    free(s.best_combo)


def best_subset(const double[:, ::1] qmat, Py_ssize_t k, Py_ssize_t lo, Py_ssize_t hi):
    cdef Search s
    cdef Py_ssize_t n = qmat.shape[1]
    lo = max(lo, 2)
    hi = min(hi, n - (k - 1) + 2)
    if lo >= hi:
        return np.inf, None
    _setup(&s, qmat, k)
    try:
        with nogil:
            _descend(&s, 0, lo, hi)
        if s.best_val == np.inf:
            return np.inf, None
        return s.best_val, tuple(s.best_combo[i] for i in range(s.m))
    finally:
        _teardown(&s)


def subset_runtimes(const double[:, ::1] qmat, Py_ssize_t k):
    from math import comb
    cdef Search s
    cdef Py_ssize_t n = qmat.shape[1]
    out = np.empty(comb(n - 1, k - 1), dtype=np.float64)
    cdef double[::1] ov = out
    if out.size == 0:
        return out
    _setup(&s, qmat, k)
    s.out = &ov[0]
    try:
        with nogil:
            _descend(&s, 0, 2, n - (k - 1) + 2)
        return out
    finally:
        _teardown(&s)
