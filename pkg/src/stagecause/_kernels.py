"""Hot numeric kernels: greedy stage merging and Lloyd iterations.

Both kernels exist twice, a numba-compiled version and a pure-NumPy
fallback.  The backend is picked once at import time from the
STAGECAUSE_BACKEND environment variable:

    auto   (default) numba when importable, else numpy
    numba  require numba, fail loudly if missing
    numpy  force the fallback

Both backends implement identical greedy logic and tie-breaking (first
minimum in row-major pair order); results can differ only through
last-ulp floating point noise in degenerate ties.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["BACKEND", "bhc_merge", "lloyd", "IMPLEMENTATIONS"]


def _pick_backend() -> str:
    choice = os.environ.get("STAGECAUSE_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"STAGECAUSE_BACKEND={choice!r}: expected auto, numba or numpy"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise RuntimeError("STAGECAUSE_BACKEND=numba but numba is not installed")
        return "numpy"
    return "numba"


BACKEND = _pick_backend()


# ---------------------------------------------------------------------------
# NumPy fallback
# ---------------------------------------------------------------------------


def _stage_ll_np(counts: np.ndarray) -> np.ndarray:
    """Per-row multinomial log-likelihood sum(n log(n/tot)), 0 log 0 = 0."""
    counts = np.atleast_2d(counts)
    safe = np.where(counts > 0.0, counts, 1.0)
    s = np.sum(counts * np.log(safe), axis=-1)
    tot = counts.sum(axis=-1)
    tot_safe = np.where(tot > 0.0, tot, 1.0)
    return s - tot * np.log(tot_safe)


def _bhc_merge_numpy(counts: np.ndarray, log_n: float):
    c, lv = counts.shape
    pen = (lv - 1) * log_n
    stage = counts.astype(np.float64).copy()
    active = np.ones(c, dtype=bool)
    labels = np.arange(c, dtype=np.int64)
    f = _stage_ll_np(stage)

    # pairwise merge deltas; delta[a, b] valid for a < b both active
    merged = stage[:, None, :] + stage[None, :, :]
    delta = -2.0 * (_stage_ll_np(merged) - f[:, None] - f[None, :]) - pen
    iu = np.tril_indices(c)
    delta[iu] = np.inf

    trace: list[tuple[int, int, float]] = []
    while True:
        flat = np.argmin(delta)
        a, b = np.unravel_index(flat, delta.shape)
        best = delta[a, b]
        if not best < 0.0:
            break
        stage[a] += stage[b]
        active[b] = False
        labels[labels == b] = a
        f[a] = _stage_ll_np(stage[a])[0]
        delta[b, :] = np.inf
        delta[:, b] = np.inf
        others = np.flatnonzero(active)
        others = others[others != a]
        if others.size:
            m = _stage_ll_np(stage[a][None, :] + stage[others])
            d = -2.0 * (m - f[a] - f[others]) - pen
            lo = np.minimum(others, a)
            hi = np.maximum(others, a)
            delta[lo, hi] = d
        trace.append((int(a), int(b), float(best)))

    out, m = _dense_relabel_np(labels)
    bic = -2.0 * f[active].sum() + m * pen
    return out, float(bic), trace


def _dense_relabel_np(labels: np.ndarray) -> tuple[np.ndarray, int]:
    remap = np.full(labels.max() + 1 if labels.size else 1, -1, dtype=np.int64)
    out = np.empty_like(labels)
    nxt = 0
    for i, r in enumerate(labels):
        if remap[r] < 0:
            remap[r] = nxt
            nxt += 1
        out[i] = remap[r]
    return out, nxt


def _lloyd_numpy(points: np.ndarray, centers: np.ndarray, max_iter: int):
    n = points.shape[0]
    k = centers.shape[0]
    centers = centers.copy()
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            mask = labels == j
            if mask.any():
                centers[j] = points[mask].mean(axis=0)
    wcss = float(((points - centers[labels]) ** 2).sum())
    return labels, centers, wcss


# ---------------------------------------------------------------------------
# Numba kernels
# ---------------------------------------------------------------------------

if BACKEND == "numba":
    from numba import njit

    @njit(cache=True)
    def _stage_ll_jit(vec):
        tot = 0.0
        s = 0.0
        for x in range(vec.shape[0]):
            v = vec[x]
            if v > 0.0:
                s += v * np.log(v)
                tot += v
        if tot > 0.0:
            s -= tot * np.log(tot)
        return s

    @njit(cache=True)
    def _bhc_merge_jit(counts, log_n):
        c, lv = counts.shape
        pen = (lv - 1) * log_n
        stage = counts.copy()
        active = np.ones(c, dtype=np.bool_)
        labels = np.arange(c)
        f = np.empty(c)
        for s in range(c):
            f[s] = _stage_ll_jit(stage[s])

        delta = np.full((c, c), np.inf)
        buf = np.empty(lv)
        for a in range(c):
            for b in range(a + 1, c):
                for x in range(lv):
                    buf[x] = stage[a, x] + stage[b, x]
                delta[a, b] = -2.0 * (_stage_ll_jit(buf) - f[a] - f[b]) - pen

        max_merges = c - 1 if c > 0 else 0
        tr_a = np.empty(max_merges, dtype=np.int64)
        tr_b = np.empty(max_merges, dtype=np.int64)
        tr_d = np.empty(max_merges)
        n_merges = 0
        while True:
            best = 0.0
            ba = -1
            bb = -1
            for a in range(c):
                if not active[a]:
                    continue
                for b in range(a + 1, c):
                    if active[b] and delta[a, b] < best:
                        best = delta[a, b]
                        ba = a
                        bb = b
            if ba < 0:
                break
            for x in range(lv):
                stage[ba, x] += stage[bb, x]
            active[bb] = False
            for i in range(c):
                if labels[i] == bb:
                    labels[i] = ba
            f[ba] = _stage_ll_jit(stage[ba])
            for o in range(c):
                if active[o] and o != ba:
                    for x in range(lv):
                        buf[x] = stage[ba, x] + stage[o, x]
                    d = -2.0 * (_stage_ll_jit(buf) - f[ba] - f[o]) - pen
                    if o < ba:
                        delta[o, ba] = d
                    else:
                        delta[ba, o] = d
            tr_a[n_merges] = ba
            tr_b[n_merges] = bb
            tr_d[n_merges] = best
            n_merges += 1

        out = np.empty(c, dtype=np.int64)
        remap = np.full(c, -1, dtype=np.int64)
        nxt = 0
        total_f = 0.0
        for i in range(c):
            r = labels[i]
            if remap[r] < 0:
                remap[r] = nxt
                nxt += 1
            out[i] = remap[r]
        for s in range(c):
            if active[s]:
                total_f += f[s]
        bic = -2.0 * total_f + nxt * pen
        return out, bic, tr_a[:n_merges], tr_b[:n_merges], tr_d[:n_merges]

    @njit(cache=True)
    def _lloyd_jit(points, centers, max_iter):
        n, d = points.shape
        k = centers.shape[0]
        centers = centers.copy()
        labels = np.full(n, -1, dtype=np.int64)
        for _ in range(max_iter):
            changed = False
            for i in range(n):
                best = np.inf
                bj = 0
                for j in range(k):
                    dist = 0.0
                    for x in range(d):
                        diff = points[i, x] - centers[j, x]
                        dist += diff * diff
                    if dist < best:
                        best = dist
                        bj = j
                if labels[i] != bj:
                    labels[i] = bj
                    changed = True
            if not changed:
                break
            for j in range(k):
                cnt = 0
                for x in range(d):
                    centers[j, x] = 0.0
                for i in range(n):
                    if labels[i] == j:
                        cnt += 1
                        for x in range(d):
                            centers[j, x] += points[i, x]
                if cnt > 0:
                    for x in range(d):
                        centers[j, x] /= cnt
        wcss = 0.0
        for i in range(n):
            j = labels[i]
            for x in range(d):
                diff = points[i, x] - centers[j, x]
                wcss += diff * diff
        return labels, centers, wcss

    def _bhc_merge_numba(counts: np.ndarray, log_n: float):
        out, bic, tr_a, tr_b, tr_d = _bhc_merge_jit(
            np.ascontiguousarray(counts, dtype=np.float64), float(log_n)
        )
        trace = [(int(a), int(b), float(d)) for a, b, d in zip(tr_a, tr_b, tr_d)]
        return out, float(bic), trace

    def _lloyd_numba(points: np.ndarray, centers: np.ndarray, max_iter: int):
        labels, centers, wcss = _lloyd_jit(
            np.ascontiguousarray(points, dtype=np.float64),
            np.ascontiguousarray(centers, dtype=np.float64),
            int(max_iter),
        )
        return labels, centers, float(wcss)


def _bhc_merge_numpy_wrapped(counts: np.ndarray, log_n: float):
    return _bhc_merge_numpy(np.asarray(counts, dtype=np.float64), float(log_n))


def _lloyd_numpy_wrapped(points: np.ndarray, centers: np.ndarray, max_iter: int):
    return _lloyd_numpy(
        np.asarray(points, dtype=np.float64),
        np.asarray(centers, dtype=np.float64),
        int(max_iter),
    )


IMPLEMENTATIONS: dict[str, dict] = {
    "numpy": {"bhc_merge": _bhc_merge_numpy_wrapped, "lloyd": _lloyd_numpy_wrapped}
}
if BACKEND == "numba":
    IMPLEMENTATIONS["numba"] = {"bhc_merge": _bhc_merge_numba, "lloyd": _lloyd_numba}


def bhc_merge(counts: np.ndarray, log_n: float):
    """Greedy bottom-up stage merging on one stratum's count table.

    Starts saturated, repeatedly applies the unordered stage merge with the
    largest score decrease (penalised log-likelihood, penalty (L-1) log N per
    stage), stops when no merge helps.  Returns (labels, score, merge trace);
    labels are dense, numbered by first occurrence.
    """
    return IMPLEMENTATIONS[BACKEND]["bhc_merge"](counts, log_n)


def lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int = 100):
    """Lloyd's algorithm from the given centers.

    Ties in assignment go to the lowest cluster index; empty clusters keep
    their previous center.  Returns (labels, centers, within-cluster SS).
    """
    return IMPLEMENTATIONS[BACKEND]["lloyd"](points, centers, max_iter)
