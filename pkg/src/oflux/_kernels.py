"""Compiled direct-convolution loops.

Each output node accumulates its kernel offsets in a fixed order, so results do
not depend on the number of threads.  Parallelism is over x1 planes only.
Samples beyond the x3 ends of the slab count as zero.
"""
import os

import numba
from numba import njit, prange

# the bundled TBB is too old for numba and only produces a warning; OpenMP is
# always present with the wheels
if "NUMBA_THREADING_LAYER" not in os.environ:
    try:
        from numba.np.ufunc import omppool  # noqa: F401
        numba.config.THREADING_LAYER = "omp"
    except ImportError:
        pass

_threads = os.environ.get("OFLX_THREADS")
if _threads:
    try:
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))
    except ValueError:
        pass


@njit(parallel=True, cache=True)
def conv(src, offs, w, out, k_lo, k_hi):
    # out[c, x] += sum_q w[q] * src[c, x - offs[q]]
    C, nx, ny, nz = src.shape
    K = w.shape[0]
    for i in prange(nx):
        for q in range(K):
            oi = offs[q, 0]
            oj = offs[q, 1]
            ok = offs[q, 2]
            wq = w[q]
            ii = (i - oi) % nx
            lo = max(k_lo, ok)
            hi = min(k_hi, nz + ok)
            for j in range(ny):
                jj = (j - oj) % ny
                for c in range(C):
                    for k in range(lo, hi):
                        out[c, i, j, k] += wq * src[c, ii, jj, k - ok]


@njit(parallel=True, cache=True)
def conv_increment(src, offs, w, out, k_lo, k_hi):
    # out[c, x] += sum_q w[q] * (src[c, x - offs[q]] - src[c, x])
    C, nx, ny, nz = src.shape
    K = w.shape[0]
    for i in prange(nx):
        for q in range(K):
            oi = offs[q, 0]
            oj = offs[q, 1]
            ok = offs[q, 2]
            wq = w[q]
            ii = (i - oi) % nx
            for j in range(ny):
                jj = (j - oj) % ny
                for c in range(C):
                    for k in range(k_lo, k_hi):
                        ks = k - ok
                        if ks >= 0 and ks < nz:
                            out[c, i, j, k] += wq * (src[c, ii, jj, ks] - src[c, i, j, k])
                        else:
                            out[c, i, j, k] += wq * (-src[c, i, j, k])


@njit(parallel=True, cache=True)
def commutator(a, b, offs, w, out, k_lo, k_hi):
    # out[p, r, x] += sum_q w[q] * (a[p, x - y_q] - a[p, x]) * (b[r, x - y_q] - b[r, x])
    P, nx, ny, nz = a.shape
    R = b.shape[0]
    K = w.shape[0]
    for i in prange(nx):
        for q in range(K):
            oi = offs[q, 0]
            oj = offs[q, 1]
            ok = offs[q, 2]
            wq = w[q]
            ii = (i - oi) % nx
            lo = max(k_lo, ok)
            hi = min(k_hi, nz + ok)
            for j in range(ny):
                jj = (j - oj) % ny
                for p in range(P):
                    for r in range(R):
                        for k in range(k_lo, k_hi):
                            if k >= lo and k < hi:
                                da = a[p, ii, jj, k - ok] - a[p, i, j, k]
                                db = b[r, ii, jj, k - ok] - b[r, i, j, k]
                            else:
                                da = -a[p, i, j, k]
                                db = -b[r, i, j, k]
                            out[p, r, i, j, k] += wq * da * db
