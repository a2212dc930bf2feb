# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops of the sharding search: fitness terms and gene mixing."""

import numpy as np

cimport numpy as cnp

IMPL = "cython"


def fitness_terms(cnp.int64_t[::1] genes, double[::1] trust, double[::1] stability,
                  cnp.uint8_t[::1] malicious, int q):
    """Per-shard aggregate gaps for one genome.

    Returns (count_gap, trust_gap, stability_gap, max_malicious_ratio,
    shard_trusts, shard_stabilities, counts) or None when some shard is empty.
    """
    cdef int p = genes.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(q, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] tsum = np.zeros(q, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ssum = np.zeros(q, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] msum = np.zeros(q, dtype=np.int64)
    cdef cnp.int64_t[::1] counts_v = counts
    cdef double[::1] tsum_v = tsum
    cdef double[::1] ssum_v = ssum
    cdef cnp.int64_t[::1] msum_v = msum
    cdef int i, j
    for i in range(p):
        j = <int> genes[i]
        counts_v[j] += 1
        tsum_v[j] += trust[i]
        ssum_v[j] += stability[i]
        msum_v[j] += malicious[i]
    cdef double cmin = 1e300, cmax = -1e300
    cdef double tmin = 1e300, tmax = -1e300
    cdef double smin = 1e300, smax = -1e300
    cdef double mal = 0.0
    cdef double tj, sj, mj
    for j in range(q):
        if counts_v[j] == 0:
            return None
        if counts_v[j] < cmin:
            cmin = counts_v[j]
        if counts_v[j] > cmax:
            cmax = counts_v[j]
        tj = tsum_v[j] / counts_v[j]
        sj = ssum_v[j] / counts_v[j]
        tsum_v[j] = tj
        ssum_v[j] = sj
        if tj < tmin:
            tmin = tj
        if tj > tmax:
            tmax = tj
        if sj < smin:
            smin = sj
        if sj > smax:
            smax = sj
        mj = (<double> msum_v[j]) / counts_v[j]
        if mj > mal:
            mal = mj
    return (cmax - cmin, tmax - tmin, smax - smin, mal, tsum, ssum, counts)


def gene_mix(cnp.int64_t[::1] keep, cnp.int64_t[::1] take, double[::1] draws,
             double factor, double[::1] stab_keep, double[::1] stab_take,
             double s_max):
    """Gene-wise donor selection with stability-damped acceptance probability."""
    cdef int p = keep.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(p, dtype=np.int64)
    cdef cnp.int64_t[::1] out_v = out
    cdef int j
    cdef double pr
    for j in range(p):
        pr = factor * (1.0 - (stab_keep[j] + stab_take[j]) / (2.0 * s_max))
        if draws[j] < pr:
            out_v[j] = take[j]
        else:
            out_v[j] = keep[j]
    return out
