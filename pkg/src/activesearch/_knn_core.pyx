# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled lookahead recursion specialised to the k-NN model.

Mirrors ``activesearch._engine.Expectimax`` step for step (same candidate
order, same tie-breaks, same threshold arithmetic), so values, selections and
expansion counts agree with the pure-Python engine.
"""

from libc.stdlib cimport malloc, free, qsort

cdef double PRUNE_SLACK = 1e-10


cdef struct Cand:
    double p
    long long id


cdef int _cmp_cand(const void* a, const void* b) noexcept nogil:
    cdef const Cand* ca = <const Cand*>a
    cdef const Cand* cb = <const Cand*>b
    if ca.p > cb.p:
        return -1
    if ca.p < cb.p:
        return 1
    if ca.id < cb.id:
        return -1
    if ca.id > cb.id:
        return 1
    return 0


cdef class KnnSearchCore:
    """Private copy of a k-NN state plus scratch space for one search."""

    cdef long long n
    cdef double gamma
    cdef long long[::1] alpha
    cdef long long[::1] beta
    cdef signed char[::1] labels
    cdef const long long[::1] rev_ptr
    cdef const long long[::1] rev_idx
    cdef double* ustar
    cdef int ustar_cols
    cdef bint use_bounds
    cdef bint tighten
    cdef Cand* scratch
    cdef int max_depth
    cdef public long long expansions

    def __cinit__(self):
        self.ustar = NULL
        self.scratch = NULL

    def __init__(self, double gamma, long long[::1] alpha, long long[::1] beta,
                 signed char[::1] labels, const long long[::1] rev_ptr,
                 const long long[::1] rev_idx):
        self.n = labels.shape[0]
        self.gamma = gamma
        self.alpha = alpha
        self.beta = beta
        self.labels = labels
        self.rev_ptr = rev_ptr
        self.rev_idx = rev_idx
        self.use_bounds = False
        self.tighten = True
        self.max_depth = 0
        self.expansions = 0

    def __dealloc__(self):
        if self.ustar != NULL:
            free(self.ustar)
        if self.scratch != NULL:
            free(self.scratch)

    cdef void _prepare(self, int h, object ustar, bint tighten) except *:
        cdef int i, j, rows
        self.tighten = tighten
        self.use_bounds = ustar is not None
        if self.ustar != NULL:
            free(self.ustar)
            self.ustar = NULL
        if self.use_bounds:
            rows = len(ustar)
            self.ustar_cols = len(ustar[0])
            self.ustar = <double*>malloc(rows * self.ustar_cols * sizeof(double))
            if self.ustar == NULL:
                raise MemoryError()
            for i in range(rows):
                for j in range(self.ustar_cols):
                    self.ustar[i * self.ustar_cols + j] = ustar[i][j]
        if h > self.max_depth:
            if self.scratch != NULL:
                free(self.scratch)
            self.scratch = <Cand*>malloc((h + 1) * (self.n + 1) * sizeof(Cand))
            if self.scratch == NULL:
                raise MemoryError()
            self.max_depth = h

    cdef inline double _post(self, long long x) noexcept nogil:
        return (self.gamma + self.alpha[x]) / (1 + self.beta[x])

    cdef inline void _cond(self, long long x, int y) noexcept nogil:
        cdef long long j, a
        self.labels[x] = y
        for j in range(self.rev_ptr[x], self.rev_ptr[x + 1]):
            a = self.rev_idx[j]
            self.beta[a] += 1
            self.alpha[a] += y

    cdef inline void _undo(self, long long x, int y) noexcept nogil:
        cdef long long j, a
        self.labels[x] = -1
        for j in range(self.rev_ptr[x], self.rev_ptr[x + 1]):
            a = self.rev_idx[j]
            self.beta[a] -= 1
            self.alpha[a] -= y

    cdef double _value(self, long long x, int h, int n) noexcept nogil:
        cdef double p = self._post(x)
        cdef double v1 = 0.0
        cdef double v0 = 0.0
        cdef long long dummy
        if h == 1:
            return p
        self.expansions += 1
        if p > 0.0:
            self._cond(x, 1)
            v1 = self._best(h - 1, n + 1, &dummy)
            self._undo(x, 1)
        if p < 1.0:
            self._cond(x, 0)
            v0 = self._best(h - 1, n, &dummy)
            self._undo(x, 0)
        return p * (1.0 + v1) + (1.0 - p) * v0

    cdef double _best(self, int h, int n, long long* out) noexcept nogil:
        cdef long long x, bx = -1
        cdef double p, v, bv = -1.0
        if h == 1:
            for x in range(self.n):
                if self.labels[x] < 0:
                    p = self._post(x)
                    if p > bv:
                        bx = x
                        bv = p
        elif not self.use_bounds:
            for x in range(self.n):
                if self.labels[x] < 0:
                    v = self._value(x, h, n)
                    if v > bv:
                        bx = x
                        bv = v
        else:
            return self._pruned_best(h, n, out)
        out[0] = bx
        if bx < 0:
            return 0.0
        return bv

    cdef double _pruned_best(self, int h, int n, long long* out) noexcept nogil:
        cdef Cand* cands = self.scratch + h * (self.n + 1)
        cdef long long m = 0, i, x, bx
        cdef double v, bv, incumbent, lo, hi, denom, theta
        for x in range(self.n):
            if self.labels[x] < 0:
                cands[m].p = self._post(x)
                cands[m].id = x
                m += 1
        if m == 0:
            out[0] = -1
            return 0.0
        qsort(cands, m, sizeof(Cand), _cmp_cand)
        bx = cands[0].id
        bv = self._value(bx, h, n)
        incumbent = bv
        lo = self.ustar[(h - 1) * self.ustar_cols + n]
        hi = self.ustar[(h - 1) * self.ustar_cols + n + 1]
        denom = hi + 1.0 - lo
        for i in range(1, m):
            theta = (incumbent - PRUNE_SLACK - lo) / denom
            if cands[i].p < theta:
                break
            x = cands[i].id
            v = self._value(x, h, n)
            if v > bv or (v == bv and x < bx):
                bx = x
                bv = v
            if self.tighten and v > incumbent:
                incumbent = v
        out[0] = bx
        return bv

    def value(self, long long x, int h, ustar=None, bint tighten=True):
        """Lookahead value of querying ``x`` with ``h`` steps remaining."""
        cdef double v
        if x < 0 or x >= self.n or self.labels[x] >= 0:
            raise ValueError("x must be an unlabeled point id")
        if h < 1:
            raise ValueError("h must be positive")
        self._prepare(h, ustar, tighten)
        self.expansions = 0
        with nogil:
            v = self._value(x, h, 0)
        return v

    def best(self, int h, ustar=None, bint tighten=True):
        """(argmax, max) of the ``h``-step value; (-1, 0.0) when exhausted."""
        cdef long long bx = -1
        cdef double bv
        if h < 1:
            raise ValueError("h must be positive")
        self._prepare(h, ustar, tighten)
        self.expansions = 0
        with nogil:
            bv = self._best(h, 0, &bx)
        return bx, bv
