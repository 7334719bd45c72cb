# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-SNP sweep kernels.

Single-pass fused versions of the block statistics in ``_kernels_py``:
no intermediate float casts, one walk over each genotype row.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isnan

cnp.import_array()

IS_COMPILED = True


def decode_packed(raw, int n):
    """Unpack 2-bit genotype codes into int8 calls (LUT per byte)."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] r = np.ascontiguousarray(raw, dtype=np.uint8)
    cdef Py_ssize_t n_snps = r.shape[0]
    cdef Py_ssize_t nbytes = r.shape[1]
    if nbytes * 4 < n:
        raise ValueError("packed rows too short for the declared sample count")
    cdef cnp.ndarray[cnp.int8_t, ndim=2, mode="c"] out = np.empty((n_snps, n), dtype=np.int8)
    cdef cnp.int8_t[4] code_map
    code_map[0] = 0
    code_map[1] = -1
    code_map[2] = 1
    code_map[3] = 2
    cdef Py_ssize_t i, j, k, col
    cdef unsigned int byte
    for i in range(n_snps):
        col = 0
        for j in range(nbytes):
            byte = r[i, j]
            for k in range(4):
                if col >= n:
                    break
                out[i, col] = code_map[(byte >> (2 * k)) & 0b11]
                col += 1
    return out


def hardcall_stats(g, y):
    """Per-SNP class counts and response sums for a hard-call block.

    Returns (counts (B,3) int64, ysums (B,3) float64, ymiss (B,), yymiss (B,)).
    """
    cdef cnp.ndarray[cnp.int8_t, ndim=2, mode="c"] gg = np.ascontiguousarray(g, dtype=np.int8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n_snps = gg.shape[0]
    cdef Py_ssize_t n = gg.shape[1]
    if yy.shape[0] != n:
        raise ValueError("response length must match the block width")
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] counts = np.zeros((n_snps, 3), dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] ysums = np.zeros((n_snps, 3), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] ymiss = np.zeros(n_snps, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] yymiss = np.zeros(n_snps, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef int v
    cdef double yv
    with nogil:
        for i in range(n_snps):
            for j in range(n):
                v = gg[i, j]
                yv = yy[j]
                if v < 0:
                    ymiss[i] += yv
                    yymiss[i] += yv * yv
                else:
                    counts[i, v] += 1
                    ysums[i, v] += yv
    return np.asarray(counts), np.asarray(ysums), np.asarray(ymiss), np.asarray(yymiss)


def dosage_stats(x, y):
    """Per-SNP feature sums for a dosage block; see the NumPy twin for the
    column layout [nmiss, s1, s2, s11, s22, s12, s1y, s2y, ymiss]."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] xx = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n_snps = xx.shape[0]
    cdef Py_ssize_t n = xx.shape[1]
    if yy.shape[0] != n:
        raise ValueError("response length must match the block width")
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = np.zeros((n_snps, 9), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double v, f1, f2, yv
    with nogil:
        for i in range(n_snps):
            for j in range(n):
                v = xx[i, j]
                yv = yy[j]
                if isnan(v):
                    out[i, 0] += 1.0
                    out[i, 8] += yv
                else:
                    f1 = v
                    f2 = fabs(v - 1.0)
                    out[i, 1] += f1
                    out[i, 2] += f2
                    out[i, 3] += f1 * f1
                    out[i, 4] += f2 * f2
                    out[i, 5] += f1 * f2
                    out[i, 6] += f1 * yv
                    out[i, 7] += f2 * yv
    return np.asarray(out)
