"""Hot numeric kernels, each in a numba loop form and a vectorised numpy form.

The public names at the bottom of the module resolve to the backend chosen in
:mod:`mobiflow._accel`. Both forms share a calling convention and must agree:
bit-for-bit for label propagation (its tie handling depends on exact sums) and
to rounding for the floating-point reductions elsewhere.

Graphs are passed as CSR arrays over node indices ``0..n-1``: ``indptr``
(int64, n+1), ``indices`` (int64) and a per-entry float64 array (weights or
costs); every undirected edge appears once in each endpoint's row.
"""

import numpy as np

from ._accel import BACKEND, njit, select

EARTH_RADIUS_KM = 6371.0088

# relative slack when comparing path lengths or label weights for equality
PATH_RTOL = 1e-12
LABEL_RTOL = 1e-9

LAG_OK = 0
LAG_SHORT = 1
LAG_FLAT = 2


# -- lag profile -------------------------------------------------------------


@njit
def _pearson_jit(x, y):
    n = x.shape[0]
    mx = 0.0
    my = 0.0
    for i in range(n):
        mx += x[i]
        my += y[i]
    mx /= n
    my /= n
    sxx = 0.0
    syy = 0.0
    sxy = 0.0
    for i in range(n):
        dx = x[i] - mx
        dy = y[i] - my
        sxx += dx * dx
        syy += dy * dy
        sxy += dx * dy
    if sxx == 0.0 or syy == 0.0:
        return np.nan
    r = sxy / np.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def _pearson_np(x, y):
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = np.dot(dx, dx)
    syy = np.dot(dy, dy)
    if sxx == 0.0 or syy == 0.0:
        return np.nan
    return float(np.clip(np.dot(dx, dy) / np.sqrt(sxx * syy), -1.0, 1.0))


@njit
def _lag_profile_jit(m, a, offset, max_shift):
    r = np.full(max_shift + 1, np.nan)
    counts = np.zeros(max_shift + 1, dtype=np.int64)
    status = np.zeros(max_shift + 1, dtype=np.int64)
    for d in range(max_shift + 1):
        lo = max(0, d - offset)
        hi = min(m.shape[0], a.shape[0] - offset + d)
        cnt = hi - lo
        if cnt < 3:
            counts[d] = max(cnt, 0)
            status[d] = LAG_SHORT
            continue
        counts[d] = cnt
        j = lo + offset - d
        v = _pearson_jit(m[lo:hi], a[j : j + cnt])
        if np.isnan(v):
            status[d] = LAG_FLAT
        else:
            r[d] = v
    return r, counts, status


def _lag_profile_np(m, a, offset, max_shift):
    r = np.full(max_shift + 1, np.nan)
    counts = np.zeros(max_shift + 1, dtype=np.int64)
    status = np.zeros(max_shift + 1, dtype=np.int64)
    for d in range(max_shift + 1):
        lo = max(0, d - offset)
        hi = min(m.shape[0], a.shape[0] - offset + d)
        cnt = hi - lo
        if cnt < 3:
            counts[d] = max(cnt, 0)
            status[d] = LAG_SHORT
            continue
        counts[d] = cnt
        j = lo + offset - d
        v = _pearson_np(m[lo:hi], a[j : j + cnt])
        if np.isnan(v):
            status[d] = LAG_FLAT
        else:
            r[d] = v
    return r, counts, status


# -- label propagation -------------------------------------------------------


@njit
def _lpa_sweep_jit(indptr, indices, weights, labels, order, draws, rtol):
    n = labels.shape[0]
    acc = np.zeros(n)
    marked = np.zeros(n, dtype=np.bool_)
    cand = np.empty(n, dtype=np.int64)
    changes = 0
    for k in range(order.shape[0]):
        i = order[k]
        s = indptr[i]
        e = indptr[i + 1]
        if s == e:
            continue
        for p in range(s, e):
            acc[labels[indices[p]]] += weights[p]
        best = 0.0
        for p in range(s, e):
            v = acc[labels[indices[p]]]
            if v > best:
                best = v
        thr = best - rtol * best
        if acc[labels[i]] < thr:
            nc = 0
            for p in range(s, e):
                lab = labels[indices[p]]
                if not marked[lab] and acc[lab] >= thr:
                    marked[lab] = True
                    cand[nc] = lab
                    nc += 1
            picks = np.sort(cand[:nc])
            c = int(draws[k] * nc)
            if c >= nc:
                c = nc - 1
            labels[i] = picks[c]
            changes += 1
            for q in range(nc):
                marked[cand[q]] = False
        for p in range(s, e):
            acc[labels[indices[p]]] = 0.0
    return changes


def _lpa_sweep_np(indptr, indices, weights, labels, order, draws, rtol):
    n = labels.shape[0]
    changes = 0
    for k in range(order.shape[0]):
        i = order[k]
        s, e = indptr[i], indptr[i + 1]
        if s == e:
            continue
        acc = np.bincount(labels[indices[s:e]], weights=weights[s:e], minlength=n)
        best = acc.max()
        thr = best - rtol * best
        if acc[labels[i]] < thr:
            picks = np.flatnonzero(acc >= thr)
            c = min(int(draws[k] * picks.size), picks.size - 1)
            labels[i] = picks[c]
            changes += 1
    return changes


# -- shortest-path metrics ---------------------------------------------------


@njit
def _path_metrics_jit(indptr, indices, cost, rtol):
    n = indptr.shape[0] - 1
    dist_all = np.full((n, n), np.inf)
    bc = np.zeros(n)
    dist = np.empty(n)
    settled = np.empty(n, dtype=np.bool_)
    sigma = np.empty(n)
    delta = np.empty(n)
    order = np.empty(n, dtype=np.int64)
    for s in range(n):
        dist[:] = np.inf
        settled[:] = False
        sigma[:] = 0.0
        delta[:] = 0.0
        dist[s] = 0.0
        cnt = 0
        for _ in range(n):
            u = -1
            du = np.inf
            for v in range(n):
                if not settled[v] and dist[v] < du:
                    du = dist[v]
                    u = v
            if u < 0:
                break
            settled[u] = True
            order[cnt] = u
            cnt += 1
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                if not settled[v]:
                    alt = du + cost[p]
                    if alt < dist[v]:
                        dist[v] = alt
        sigma[s] = 1.0
        for k in range(1, cnt):
            w = order[k]
            tol = rtol * dist[w]
            for p in range(indptr[w], indptr[w + 1]):
                v = indices[p]
                if dist[v] < dist[w] and abs(dist[v] + cost[p] - dist[w]) <= tol:
                    sigma[w] += sigma[v]
        for k in range(cnt - 1, 0, -1):
            w = order[k]
            tol = rtol * dist[w]
            coeff = (1.0 + delta[w]) / sigma[w]
            for p in range(indptr[w], indptr[w + 1]):
                v = indices[p]
                if dist[v] < dist[w] and abs(dist[v] + cost[p] - dist[w]) <= tol:
                    delta[v] += sigma[v] * coeff
            bc[w] += delta[w]
        dist_all[s, :] = dist
    return dist_all, bc


def _dense_costs(indptr, indices, cost):
    n = indptr.shape[0] - 1
    c = np.full((n, n), np.inf)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    c[rows, indices] = cost
    return c


def _path_metrics_np(indptr, indices, cost, rtol):
    n = indptr.shape[0] - 1
    c = _dense_costs(indptr, indices, cost)
    dist_all = np.full((n, n), np.inf)
    bc = np.zeros(n)
    for s in range(n):
        dist = np.full(n, np.inf)
        dist[s] = 0.0
        settled = np.zeros(n, dtype=bool)
        order = []
        for _ in range(n):
            u = int(np.argmin(np.where(settled, np.inf, dist)))
            if settled[u] or not np.isfinite(dist[u]):
                break
            settled[u] = True
            order.append(u)
            open_ = ~settled
            dist[open_] = np.minimum(dist[open_], dist[u] + c[u, open_])
        sigma = np.zeros(n)
        sigma[s] = 1.0
        preds = {}
        for w in order[1:]:
            mask = (dist < dist[w]) & (np.abs(dist + c[:, w] - dist[w]) <= rtol * dist[w])
            preds[w] = mask
            sigma[w] = sigma[mask].sum()
        delta = np.zeros(n)
        for w in reversed(order[1:]):
            mask = preds[w]
            delta[mask] += sigma[mask] * ((1.0 + delta[w]) / sigma[w])
            bc[w] += delta[w]
        dist_all[s] = dist
    return dist_all, bc


# -- great-circle distances --------------------------------------------------


@njit
def _haversine_matrix_jit(lat1, lon1, lat2, lon2, radius):
    out = np.empty((lat1.shape[0], lat2.shape[0]))
    for i in range(lat1.shape[0]):
        p1 = np.radians(lat1[i])
        l1 = np.radians(lon1[i])
        c1 = np.cos(p1)
        for j in range(lat2.shape[0]):
            p2 = np.radians(lat2[j])
            sdp = np.sin((p2 - p1) / 2.0)
            sdl = np.sin((np.radians(lon2[j]) - l1) / 2.0)
            h = sdp * sdp + c1 * np.cos(p2) * sdl * sdl
            h = min(1.0, max(0.0, h))
            out[i, j] = 2.0 * radius * np.arcsin(np.sqrt(h))
    return out


def _haversine_matrix_np(lat1, lon1, lat2, lon2, radius):
    p1 = np.radians(lat1)[:, None]
    p2 = np.radians(lat2)[None, :]
    dl = np.radians(lon2)[None, :] - np.radians(lon1)[:, None]
    h = np.sin((p2 - p1) / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2.0) ** 2
    return 2.0 * radius * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


pearson_kernel = select(_pearson_jit, _pearson_np)
lag_profile = select(_lag_profile_jit, _lag_profile_np)
lpa_sweep = select(_lpa_sweep_jit, _lpa_sweep_np)
path_metrics = select(_path_metrics_jit, _path_metrics_np)
haversine_matrix = select(_haversine_matrix_jit, _haversine_matrix_np)

IMPLEMENTATIONS = {
    "pearson": (_pearson_jit, _pearson_np),
    "lag_profile": (_lag_profile_jit, _lag_profile_np),
    "lpa_sweep": (_lpa_sweep_jit, _lpa_sweep_np),
    "path_metrics": (_path_metrics_jit, _path_metrics_np),
    "haversine_matrix": (_haversine_matrix_jit, _haversine_matrix_np),
}

__all__ = [
    "BACKEND",
    "EARTH_RADIUS_KM",
    "IMPLEMENTATIONS",
    "haversine_matrix",
    "lag_profile",
    "lpa_sweep",
    "path_metrics",
    "pearson_kernel",
]
