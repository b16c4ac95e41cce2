"""Packed-bitset helpers: node sets as uint64 word arrays."""

import numpy as np

WORD = 64


def n_words(n: int) -> int:
    return (n + WORD - 1) // WORD


def pack_rows(n: int, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Pack CSR adjacency into an (n, n_words) uint64 bit matrix."""
    rows = np.zeros((n, n_words(n)), dtype=np.uint64)
    if len(indices):
        owner = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
        col = indices.astype(np.int64) >> 6
        bit = np.uint64(1) << (indices.astype(np.uint64) & np.uint64(63))
        np.bitwise_or.at(rows, (owner, col), bit)
    rows.setflags(write=False)
    return rows


def mask_from_ids(n: int, ids) -> np.ndarray:
    """Bit mask (1-D uint64 array) with the given node ids set."""
    m = np.zeros(n_words(n), dtype=np.uint64)
    ids = np.asarray(ids, dtype=np.int64)
    if len(ids):
        np.bitwise_or.at(m, ids >> 6, np.uint64(1) << (ids.astype(np.uint64) & np.uint64(63)))
    return m


def ids_from_mask(mask: np.ndarray) -> np.ndarray:
    """Sorted node ids present in a bit mask."""
    out = []
    for w, word in enumerate(mask):
        word = int(word)
        base = w << 6
        while word:
            low = word & -word
            out.append(base + low.bit_length() - 1)
            word ^= low
    return np.asarray(out, dtype=np.int64)


def popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


def popcount_rows(mat: np.ndarray) -> np.ndarray:
    """Row-wise popcount of a 2-D uint64 array."""
    return np.bitwise_count(mat).sum(axis=1, dtype=np.int64)
