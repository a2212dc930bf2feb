"""Pure-numpy fallback for the compiled sharding kernels."""

import numpy as np

IMPL = "python"


def fitness_terms(genes, trust, stability, malicious, q):
    counts = np.bincount(genes, minlength=q)
    if (counts == 0).any():
        return None
    tmean = np.bincount(genes, weights=trust, minlength=q) / counts
    smean = np.bincount(genes, weights=stability, minlength=q) / counts
    mal = np.bincount(genes, weights=malicious.astype(np.float64), minlength=q) / counts
    return (float(counts.max() - counts.min()),
            float(tmean.max() - tmean.min()),
            float(smean.max() - smean.min()),
            float(mal.max()),
            tmean, smean, counts.astype(np.int64))


def gene_mix(keep, take, draws, factor, stab_keep, stab_take, s_max):
    pr = factor * (1.0 - (np.asarray(stab_keep) + np.asarray(stab_take)) / (2.0 * s_max))
    return np.where(np.asarray(draws) < pr, take, keep).astype(np.int64)
