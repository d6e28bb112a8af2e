"""Deterministic compensated summation of index-generated sequences.

Indices ``n = 1, 2, ...`` are cut into absolute blocks of ``BLOCK`` terms.
Each block is summed with Neumaier compensation; block sums are combined by a
fixed pairwise tree.  Blocks never depend on how the index range was split
into work chunks, so results are bit-identical for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 1 << 10
_CHUNK_BUDGET = 1 << 21          # floats per work chunk (channels x indices)


def neumaier_rows(x: np.ndarray) -> np.ndarray:
    """Compensated sum along the last axis of a 2-D float array."""
    x = np.asarray(x, dtype=np.float64)
    rows, width = x.shape
    if width == 0:
        return np.zeros(rows)
    s = x[:, 0].copy()
    c = np.zeros(rows)
    cols = np.ascontiguousarray(x.T)
    for j in range(1, width):
        v = cols[j]
        t = s + v
        c += np.where(np.abs(s) >= np.abs(v), (s - t) + v, (v - t) + s)
        s = t
    return s + c


def pairwise_tree(x: np.ndarray) -> np.ndarray:
    """Sum along the last axis by adjacent pairing; odd leftovers carry up."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] == 0:
        return np.zeros(x.shape[:-1])
    while x.shape[-1] > 1:
        carry = None
        if x.shape[-1] % 2:
            carry = x[..., -1:]
            x = x[..., :-1]
        x = x[..., 0::2] + x[..., 1::2]
        if carry is not None:
            x = np.concatenate([x, carry], axis=-1)
    return x[..., 0]


def _as_channels(v) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim == 1:
        v = v[None, :]
    if np.iscomplexobj(v):
        return np.concatenate([v.real, v.imag], axis=0), True
    return v.astype(np.float64, copy=False), False


def compensated_sum(values) -> complex | np.ndarray:
    """Sum a 1-D (or channels x length) array with the block/tree scheme."""
    v = np.asarray(values)
    squeeze = v.ndim == 1
    ch, cplx = _as_channels(v)
    total = _block_tree_sum(ch)
    out = total[: len(total) // 2] + 1j * total[len(total) // 2:] if cplx else total
    return out[0] if squeeze else out


def _block_tree_sum(ch: np.ndarray) -> np.ndarray:
    rows, length = ch.shape
    full = length // BLOCK
    sums = np.zeros((rows, 0))
    if full:
        body = ch[:, : full * BLOCK].reshape(rows * full, BLOCK)
        sums = neumaier_rows(body).reshape(rows, full)
    tail = neumaier_rows(ch[:, full * BLOCK:])
    return pairwise_tree(sums) + tail


def partial_sums(fn, horizons, threads: int = 1) -> np.ndarray:
    """Sums S_N = sum_{n=1..N} fn(n) at every N in ``horizons``.

    ``fn`` maps an int64 index array to values of shape (L,) or (m, L), real
    or complex.  Returns an array of shape (len(horizons), m) (m=1 for 1-D
    output) of the same kind.  ``threads`` changes speed only.
    """
    horizons = [int(h) for h in horizons]
    top = max(horizons)
    probe = np.asarray(fn(np.arange(1, 2, dtype=np.int64)))
    cplx = np.iscomplexobj(probe)
    m = 1 if probe.ndim == 1 else probe.shape[0]
    rows = 2 * m if cplx else m

    n_blocks = top // BLOCK
    per_chunk = max(1, _CHUNK_BUDGET // (rows * BLOCK))
    starts = list(range(0, n_blocks, per_chunk))

    def work(b0):
        b1 = min(b0 + per_chunk, n_blocks)
        idx = np.arange(b0 * BLOCK + 1, b1 * BLOCK + 1, dtype=np.int64)
        ch, _ = _as_channels(fn(idx))
        body = ch.reshape(rows * (b1 - b0), BLOCK)
        return neumaier_rows(body).reshape(rows, b1 - b0)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(b0) for b0 in starts]
    sums = np.concatenate(parts, axis=1) if parts else np.zeros((rows, 0))

    out = np.zeros((len(horizons), rows))
    for i, h in enumerate(horizons):
        nb = h // BLOCK
        tail = np.zeros(rows)
        if h > nb * BLOCK:
            idx = np.arange(nb * BLOCK + 1, h + 1, dtype=np.int64)
            ch, _ = _as_channels(fn(idx))
            tail = neumaier_rows(ch)
        out[i] = pairwise_tree(sums[:, :nb]) + tail
    if cplx:
        return out[:, :m] + 1j * out[:, m:]
    return out
