"""numba-compiled hot loops. Signatures mirror ``_numpy`` exactly."""
import numpy as np
from numba import njit

NAME = "numba"

_INF = np.inf


@njit(cache=True, nogil=True)
def _walk(nx, ny, nz, res, go, o, d, max_range, out):
    sx = (o[0] - go[0]) / res
    sy = (o[1] - go[1]) / res
    sz = (o[2] - go[2]) / res
    cx = int(np.floor(sx))
    cy = int(np.floor(sy))
    cz = int(np.floor(sz))
    if cx < 0 or cy < 0 or cz < 0 or cx >= nx or cy >= ny or cz >= nz:
        return 0

    c = np.array([cx, cy, cz])
    s = np.array([sx, sy, sz])
    n = np.array([nx, ny, nz])
    step = np.zeros(3, np.int64)
    tmax = np.empty(3)
    tdelta = np.empty(3)
    for k in range(3):
        if d[k] > 0.0:
            step[k] = 1
            tmax[k] = ((c[k] + 1) - s[k]) * res / d[k]
            tdelta[k] = res / d[k]
        elif d[k] < 0.0:
            step[k] = -1
            tmax[k] = (c[k] - s[k]) * res / d[k]
            tdelta[k] = -res / d[k]
        else:
            tmax[k] = _INF
            tdelta[k] = _INF

    m = 0
    while True:
        out[m] = c[0] + nx * (c[1] + ny * c[2])
        m += 1
        # ties step x before y before z
        if tmax[0] <= tmax[1] and tmax[0] <= tmax[2]:
            a = 0
        elif tmax[1] <= tmax[2]:
            a = 1
        else:
            a = 2
        if tmax[a] >= max_range:
            break
        c[a] += step[a]
        if c[a] < 0 or c[a] >= n[a]:
            break
        tmax[a] += tdelta[a]
    return m


@njit(cache=True, nogil=True)
def traverse_batch(dims, resolution, grid_origin, origins, dirs, max_range):
    nx, ny, nz = dims[0], dims[1], dims[2]
    n = origins.shape[0]
    cap = nx + ny + nz
    buf = np.empty((n, cap), np.int64)
    lengths = np.zeros(n, np.int64)
    for r in range(n):
        lengths[r] = _walk(nx, ny, nz, resolution, grid_origin, origins[r],
                           dirs[r], max_range[r], buf[r])
    indptr = np.zeros(n + 1, np.int64)
    for r in range(n):
        indptr[r + 1] = indptr[r] + lengths[r]
    indices = np.empty(indptr[n], np.int64)
    for r in range(n):
        indices[indptr[r]:indptr[r + 1]] = buf[r, :lengths[r]]
    return indptr, indices


@njit(cache=True, nogil=True)
def coverage_batch(q, indptr, indices, include_self):
    out = np.empty(indices.shape[0])
    n = indptr.shape[0] - 1
    for r in range(n):
        lo = indptr[r]
        hi = indptr[r + 1]
        prefix = 1.0
        for e in range(lo, hi):
            out[e] = prefix  # stash exclusive prefix
            prefix *= 1.0 - q[indices[e]]
        suffix = 1.0
        for e in range(hi - 1, lo - 1, -1):
            keep = 1.0 - q[indices[e]]
            if include_self:
                suffix *= keep
                out[e] = 1.0 - out[e] * (1.0 - suffix)
            else:
                out[e] = 1.0 - out[e] * (1.0 - suffix)
                suffix *= keep
    return out


@njit(cache=True, nogil=True)
def _delta(b, indptr, indices, omp, j):
    s = 0.0
    for e in range(indptr[j], indptr[j + 1]):
        s += b[indices[e]] * omp[e]
    return s


@njit(cache=True, nogil=True)
def _select(b, indptr, indices, values, j):
    for e in range(indptr[j], indptr[j + 1]):
        b[indices[e]] *= values[e]


@njit(cache=True, nogil=True)
def greedy(indptr, indices, values, positions, n_positions, budget, eps,
           log_iter, log_row, log_val):
    n = indptr.shape[0] - 1
    omp = 1.0 - values
    b = eps.copy()
    avail = np.ones(n, np.bool_)
    counts = np.zeros(n_positions, np.int64)
    order = np.empty(n, np.int64)
    trace = np.empty(n + 1)
    f = 0.0
    for i in range(b.shape[0]):
        f += b[i]
    trace[0] = f
    n_avail = n
    n_sel = 0
    evals = 0
    n_log = 0
    cap = log_iter.shape[0]
    while n_avail > 0:
        best = -1
        best_d = -1.0
        for j in range(n):
            if not avail[j]:
                continue
            d = _delta(b, indptr, indices, omp, j)
            evals += 1
            if n_log < cap:
                log_iter[n_log] = n_sel
                log_row[n_log] = j
                log_val[n_log] = d
                n_log += 1
            # strict: equal gains keep the smaller ray id
            if d > best_d:
                best_d = d
                best = j
        _select(b, indptr, indices, values, best)
        f = max(f - best_d, 0.0)
        order[n_sel] = best
        n_sel += 1
        trace[n_sel] = f
        avail[best] = False
        n_avail -= 1
        lpos = positions[best]
        counts[lpos] += 1
        if counts[lpos] == budget:
            for j in range(n):
                if avail[j] and positions[j] == lpos:
                    avail[j] = False
                    n_avail -= 1
    return order[:n_sel], trace[:n_sel + 1], evals, n_log


@njit(cache=True, nogil=True)
def _before(a, b, prio):
    # sequence order: larger priority first, then smaller row
    if prio[a] > prio[b]:
        return True
    if prio[a] < prio[b]:
        return False
    return a < b


@njit(cache=True, nogil=True)
def prioritized(indptr, indices, values, positions, n_positions, budget, eps,
                log_iter, log_row, log_val):
    n = indptr.shape[0] - 1
    omp = 1.0 - values
    b = eps.copy()
    prio = np.full(n, _INF)
    # live candidates are seq[lo:hi], kept sorted by (-prio, row)
    seq = np.arange(n)
    lo = 0
    hi = n
    counts = np.zeros(n_positions, np.int64)
    order = np.empty(n, np.int64)
    trace = np.empty(n + 1)
    f = 0.0
    for i in range(b.shape[0]):
        f += b[i]
    trace[0] = f
    n_sel = 0
    evals = 0
    n_log = 0
    cap = log_iter.shape[0]
    while hi > lo:
        best_d = -1.0
        m = lo
        while True:
            j = seq[m]
            d = _delta(b, indptr, indices, omp, j)
            evals += 1
            if n_log < cap:
                log_iter[n_log] = n_sel
                log_row[n_log] = j
                log_val[n_log] = d
                n_log += 1
            prio[j] = d
            if d > best_d:
                best_d = d
            m += 1
            if m == hi:
                break
            # strict: a stale priority equal to the best may still win the tie
            if best_d > prio[seq[m]]:
                break

        # sort the refreshed prefix: by row, then stably by priority
        head = np.sort(seq[lo:m])
        head = head[np.argsort(-prio[head], kind="mergesort")]
        # merge it forward into place; the write index never overtakes ib, and
        # once the head is used up the rest of the tail is already in position
        cnt = m - lo
        ia = 0
        ib = m
        k = lo
        while ia < cnt:
            h = head[ia]
            # first tail slot h precedes, by bisection; the run before it shifts left
            a = ib
            z = hi
            while a < z:
                mid = (a + z) // 2
                if _before(h, seq[mid], prio):
                    z = mid
                else:
                    a = mid + 1
            for t in range(ib, a):
                seq[k] = seq[t]
                k += 1
            ib = a
            seq[k] = h
            k += 1
            ia += 1

        best = seq[lo]
        lo += 1
        _select(b, indptr, indices, values, best)
        f = max(f - prio[best], 0.0)
        order[n_sel] = best
        n_sel += 1
        trace[n_sel] = f
        lpos = positions[best]
        counts[lpos] += 1
        if counts[lpos] == budget:
            k = lo
            for t in range(lo, hi):
                if positions[seq[t]] != lpos:
                    seq[k] = seq[t]
                    k += 1
            hi = k
    return order[:n_sel], trace[:n_sel + 1], evals, n_log


@njit(cache=True, nogil=True)
def linear_predict(codes, weights, bias, radius):
    nx, ny, nz = codes.shape
    out = np.full((nx, ny, nz), bias)
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                acc = 0.0
                o = 0
                for dz in range(-radius, radius + 1):
                    zz = z + dz
                    for dy in range(-radius, radius + 1):
                        yy = y + dy
                        for dx in range(-radius, radius + 1):
                            xx = x + dx
                            if (0 <= xx < nx and 0 <= yy < ny and 0 <= zz < nz):
                                acc += weights[o, codes[xx, yy, zz]]
                            o += 1
                out[x, y, z] += acc
    return out


@njit(cache=True, nogil=True)
def linear_grad(codes, g, radius):
    nx, ny, nz = codes.shape
    w = 2 * radius + 1
    grad = np.zeros((w * w * w, 3))
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                gv = g[x, y, z]
                if gv == 0.0:
                    continue
                o = 0
                for dz in range(-radius, radius + 1):
                    zz = z + dz
                    for dy in range(-radius, radius + 1):
                        yy = y + dy
                        for dx in range(-radius, radius + 1):
                            xx = x + dx
                            if (0 <= xx < nx and 0 <= yy < ny and 0 <= zz < nz):
                                grad[o, codes[xx, yy, zz]] += gv
                            o += 1
    return grad
