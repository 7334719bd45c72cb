"""Pure-NumPy implementations of the per-SNP sweep kernels.

These mirror the compiled extension's API exactly and are selected at
import when the extension is unavailable (or when forced via
``GDCSCAN_BACKEND=python``).  The hard-call statistics use the polynomial
identities 1{x=1} = 2x - x^2 and 1{x=2} = (x^2 - x)/2 so that each block
needs a handful of BLAS sweeps instead of per-class boolean products.
"""

from __future__ import annotations

import numpy as np

IS_COMPILED = False


def decode_packed(raw: np.ndarray, n: int) -> np.ndarray:
    """Unpack 2-bit genotype codes into int8 calls.

    ``raw`` is (n_snps, ceil(n/4)) uint8; bit pairs are little-endian
    within each byte.  Code map: 00 -> 0, 01 -> missing (-1), 10 -> 1,
    11 -> 2.
    """
    raw = np.ascontiguousarray(raw, dtype=np.uint8)
    lut = _decode_lut()
    calls = lut[raw].reshape(raw.shape[0], -1)
    return np.ascontiguousarray(calls[:, :n])


_LUT_CACHE = None


def _decode_lut() -> np.ndarray:
    global _LUT_CACHE
    if _LUT_CACHE is None:
        code_map = np.array([0, -1, 1, 2], dtype=np.int8)
        lut = np.empty((256, 4), dtype=np.int8)
        for byte in range(256):
            for k in range(4):
                lut[byte, k] = code_map[(byte >> (2 * k)) & 0b11]
        _LUT_CACHE = lut
    return _LUT_CACHE


def hardcall_stats(g: np.ndarray, y: np.ndarray):
    """Per-SNP sufficient statistics for a hard-call block.

    Parameters
    ----------
    g:
        (n_snps, n) int8 calls, -1 for missing.
    y:
        (n,) float64 response (phenotype or residuals).

    Returns
    -------
    counts : (n_snps, 3) int64 class counts over non-missing entries.
    ysums : (n_snps, 3) float64 per-class sums of y.
    ymiss : (n_snps,) float64 sum of y over missing entries.
    yymiss : (n_snps,) float64 sum of y^2 over missing entries.
    """
    g = np.ascontiguousarray(g, dtype=np.int8)
    y = np.ascontiguousarray(y, dtype=np.float64)
    miss = g < 0
    a = np.where(miss, 0, g).astype(np.float64)
    aa = a * a
    ca = a.sum(axis=1)
    caa = aa.sum(axis=1)
    nmiss = miss.sum(axis=1)
    n1 = (2.0 * ca - caa).astype(np.int64)
    n2 = ((caa - ca) / 2.0).astype(np.int64)
    n0 = g.shape[1] - nmiss - n1 - n2
    counts = np.column_stack([n0, n1, n2]).astype(np.int64)

    sa = a @ y
    saa = aa @ y
    mf = miss.astype(np.float64)
    ymiss = mf @ y
    yymiss = mf @ (y * y)
    s1 = 2.0 * sa - saa
    s2 = (saa - sa) / 2.0
    ytot = float(y.sum())
    s0 = (ytot - ymiss) - s1 - s2
    ysums = np.column_stack([s0, s1, s2])
    return counts, ysums, ymiss, yymiss


def dosage_stats(x: np.ndarray, y: np.ndarray):
    """Per-SNP sufficient statistics for a dosage block.

    Features are f1 = x and f2 = |x - 1|; sums run over non-missing
    (non-NaN) entries.

    Returns a (n_snps, 9) float64 array with columns
    [nmiss, s1, s2, s11, s22, s12, s1y, s2y, ymiss].
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    miss = np.isnan(x)
    f1 = np.where(miss, 0.0, x)
    f2 = np.abs(f1 - 1.0)
    f2[miss] = 0.0
    out = np.empty((x.shape[0], 9), dtype=np.float64)
    out[:, 0] = miss.sum(axis=1)
    out[:, 1] = f1.sum(axis=1)
    out[:, 2] = f2.sum(axis=1)
    out[:, 3] = (f1 * f1).sum(axis=1)
    out[:, 4] = (f2 * f2).sum(axis=1)
    out[:, 5] = (f1 * f2).sum(axis=1)
    out[:, 6] = f1 @ y
    out[:, 7] = f2 @ y
    out[:, 8] = miss.astype(np.float64) @ y
    return out
