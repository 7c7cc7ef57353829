"""Hot inner loops with two interchangeable backends.

The numba backend (default when numba is importable) JIT-compiles the
per-window loops; the pure-numpy backend expresses the same arithmetic with
``np.add.at`` scatter adds so both produce bit-identical output.  Set
``ISAGRAM_PURE_NUMPY=1`` before import to force the numpy path; call
``use_backend()`` to switch at runtime (used by tests and the benchmark).

All kernels operate on int64 term-code arrays.  Documents are passed as one
flat concatenated code array plus an offsets array (length n_docs + 1), and
windows never cross document boundaries.
"""

from __future__ import annotations

import os

import numpy as np

ENV_FLAG = "ISAGRAM_PURE_NUMPY"

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _np_window_codes(codes: np.ndarray, n: int, base: int) -> np.ndarray:
    length = codes.shape[0]
    if length < n:
        return np.empty(0, dtype=np.int64)
    out = codes[: length - n + 1].astype(np.int64, copy=True)
    for j in range(1, n):
        out *= base
        out += codes[j : length - n + 1 + j]
    return out


def _np_gram_stats(flat, offsets, n, base, counts, df):
    for d in range(offsets.shape[0] - 1):
        wc = _np_window_codes(flat[offsets[d] : offsets[d + 1]], n, base)
        if wc.shape[0] == 0:
            continue
        np.add.at(counts, wc, 1)
        df[np.unique(wc)] += 1


def _np_tfidf_fill(flat, offsets, base, sorted3, pos3, idf1, idf2, idf3, out):
    off2 = base
    off3 = base + base * base
    for d in range(offsets.shape[0] - 1):
        codes = flat[offsets[d] : offsets[d + 1]]
        row = out[d]
        length = codes.shape[0]
        # scale by a precomputed reciprocal, same fp operation as the numba
        # loop, so the two backends stay bit-identical
        if length >= 1:
            np.add.at(row, codes, idf1[codes] * (1.0 / length))
        if length >= 2:
            c2 = _np_window_codes(codes, 2, base)
            np.add.at(row, off2 + c2, idf2[c2] * (1.0 / (length - 1)))
        if length >= 3 and sorted3.shape[0] > 0:
            c3 = _np_window_codes(codes, 3, base)
            j = np.searchsorted(sorted3, c3)
            j[j == sorted3.shape[0]] = 0
            hit = sorted3[j] == c3
            p = pos3[j[hit]]
            np.add.at(row, off3 + p, idf3[p] * (1.0 / (length - 2)))


def _np_hist_fill(flat, offsets, out):
    for d in range(offsets.shape[0] - 1):
        codes = flat[offsets[d] : offsets[d + 1]]
        if codes.shape[0]:
            np.add.at(out[d], codes, 1.0 / codes.shape[0])


def _np_count_pattern(data: np.ndarray, pattern: np.ndarray) -> int:
    length, plen = data.shape[0], pattern.shape[0]
    if length < plen:
        return 0
    hit = data[: length - plen + 1] == pattern[0]
    for j in range(1, plen):
        hit &= data[j : length - plen + 1 + j] == pattern[j]
    return int(hit.sum())


_NUMPY_BACKEND = {
    "window_codes": _np_window_codes,
    "gram_stats": _np_gram_stats,
    "tfidf_fill": _np_tfidf_fill,
    "hist_fill": _np_hist_fill,
    "count_pattern": _np_count_pattern,
}


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_window_codes(codes, n, base):
        length = codes.shape[0]
        if length < n:
            return np.empty(0, dtype=np.int64)
        out = np.empty(length - n + 1, dtype=np.int64)
        for i in range(length - n + 1):
            c = codes[i]
            for j in range(1, n):
                c = c * base + codes[i + j]
            out[i] = c
        return out

    @njit(cache=True)
    def _nb_gram_stats(flat, offsets, n, base, counts, df):
        for d in range(offsets.shape[0] - 1):
            s, e = offsets[d], offsets[d + 1]
            nwin = e - s - n + 1
            if nwin <= 0:
                continue
            wc = np.empty(nwin, dtype=np.int64)
            for i in range(nwin):
                c = flat[s + i]
                for j in range(1, n):
                    c = c * base + flat[s + i + j]
                wc[i] = c
                counts[c] += 1
            wc.sort()
            prev = np.int64(-1)
            for i in range(nwin):
                if wc[i] != prev:
                    prev = wc[i]
                    df[prev] += 1

    @njit(cache=True)
    def _nb_tfidf_fill(flat, offsets, base, sorted3, pos3, idf1, idf2, idf3, out):
        off2 = base
        off3 = base + base * base
        n3 = sorted3.shape[0]
        for d in range(offsets.shape[0] - 1):
            s, e = offsets[d], offsets[d + 1]
            length = e - s
            row = out[d]
            if length >= 1:
                w1 = 1.0 / length
                for i in range(s, e):
                    c = flat[i]
                    row[c] += w1 * idf1[c]
            if length >= 2:
                w2 = 1.0 / (length - 1)
                for i in range(s, e - 1):
                    c = flat[i] * base + flat[i + 1]
                    row[off2 + c] += w2 * idf2[c]
            if length >= 3 and n3 > 0:
                w3 = 1.0 / (length - 2)
                for i in range(s, e - 2):
                    c = (flat[i] * base + flat[i + 1]) * base + flat[i + 2]
                    j = np.searchsorted(sorted3, c)
                    if j < n3 and sorted3[j] == c:
                        p = pos3[j]
                        row[off3 + p] += w3 * idf3[p]

    @njit(cache=True)
    def _nb_hist_fill(flat, offsets, out):
        for d in range(offsets.shape[0] - 1):
            s, e = offsets[d], offsets[d + 1]
            if e > s:
                w = 1.0 / (e - s)
                for i in range(s, e):
                    out[d, flat[i]] += w

    @njit(cache=True)
    def _nb_count_pattern(data, pattern):
        length, plen = data.shape[0], pattern.shape[0]
        total = 0
        for i in range(length - plen + 1):
            for j in range(plen):
                if data[i + j] != pattern[j]:
                    break
            else:
                total += 1
        return total

    _NUMBA_BACKEND = {
        "window_codes": _nb_window_codes,
        "gram_stats": _nb_gram_stats,
        "tfidf_fill": _nb_tfidf_fill,
        "hist_fill": _nb_hist_fill,
        "count_pattern": _nb_count_pattern,
    }
else:
    _NUMBA_BACKEND = None

BACKENDS = {"numpy": _NUMPY_BACKEND}
if _NUMBA_BACKEND is not None:
    BACKENDS["numba"] = _NUMBA_BACKEND

ACTIVE_BACKEND = "numpy"
_ACTIVE = _NUMPY_BACKEND


def use_backend(name: str) -> None:
    global ACTIVE_BACKEND, _ACTIVE
    if name not in BACKENDS:
        raise KeyError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    ACTIVE_BACKEND = name
    _ACTIVE = BACKENDS[name]


def default_backend() -> str:
    if "numba" in BACKENDS and os.environ.get(ENV_FLAG, "") not in ("1", "true", "yes"):
        return "numba"
    return "numpy"


use_backend(default_backend())


# ---------------------------------------------------------------------------
# public surface (delegates to the active backend)
# ---------------------------------------------------------------------------

def window_codes(codes: np.ndarray, n: int, base: int) -> np.ndarray:
    """Codes of all length-n windows (stride 1); empty if the doc is shorter."""
    return _ACTIVE["window_codes"](codes, n, base)


def gram_stats(flat, offsets, n: int, base: int, counts, df) -> None:
    """Accumulate per-window occurrence counts and per-document presence."""
    _ACTIVE["gram_stats"](flat, offsets, n, base, counts, df)


def tfidf_fill(flat, offsets, base, sorted3, pos3, idf1, idf2, idf3, out) -> None:
    """Fill unnormalized TF-IDF rows; ``out`` must be zeroed beforehand.

    ``sorted3`` holds the 3-gram vocabulary codes in ascending order and
    ``pos3`` maps each back to its rank position in the feature block.
    """
    _ACTIVE["tfidf_fill"](flat, offsets, base, sorted3, pos3, idf1, idf2, idf3, out)


def hist_fill(flat, offsets, out) -> None:
    """Fill normalized symbol-frequency rows into a zeroed matrix."""
    _ACTIVE["hist_fill"](flat, offsets, out)


def count_pattern(data: np.ndarray, pattern: np.ndarray) -> int:
    """Overlapping occurrences of ``pattern`` in ``data`` at every offset."""
    return _ACTIVE["count_pattern"](data, pattern)
