"""Pure-numpy implementations of the hot loops.

Used when numba is unavailable or ``ACTIVEMAP_DISABLE_NUMBA=1``. Traversal and
coverage reproduce the compiled kernels bit for bit; planner sums may differ in
the last ulp because segment reductions use numpy's summation order.
"""
import numpy as np

NAME = "numpy"


def traverse_batch(dims, resolution, grid_origin, origins, dirs, max_range):
    dims = np.asarray(dims, np.int64)
    origins = np.asarray(origins, np.float64)
    dirs = np.asarray(dirs, np.float64)
    max_range = np.asarray(max_range, np.float64)
    n = origins.shape[0]
    res = float(resolution)
    s = (origins - np.asarray(grid_origin, np.float64)) / res
    c = np.floor(s).astype(np.int64)
    active = np.all((c >= 0) & (c < dims), axis=1)

    pos = dirs > 0.0
    neg = dirs < 0.0
    step = pos.astype(np.int64) - neg.astype(np.int64)
    tmax = np.full((n, 3), np.inf)
    tdelta = np.full((n, 3), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        tmax[pos] = ((c[pos] + 1) - s[pos]) * res / dirs[pos]
        tdelta[pos] = res / dirs[pos]
        tmax[neg] = (c[neg] - s[neg]) * res / dirs[neg]
        tdelta[neg] = -res / dirs[neg]

    columns = []
    rows = np.arange(n)
    while active.any():
        lin = np.where(active, c[:, 0] + dims[0] * (c[:, 1] + dims[1] * c[:, 2]), -1)
        columns.append(lin)
        # ties step x before y before z
        ax = np.where((tmax[:, 0] <= tmax[:, 1]) & (tmax[:, 0] <= tmax[:, 2]), 0,
                      np.where(tmax[:, 1] <= tmax[:, 2], 1, 2))
        t = tmax[rows, ax]
        active &= t < max_range
        idx = rows[active]
        a = ax[idx]
        c[idx, a] += step[idx, a]
        inside = (c[idx, a] >= 0) & (c[idx, a] < dims[a])
        active[idx[~inside]] = False
        idx = idx[inside]
        a = a[inside]
        tmax[idx, a] += tdelta[idx, a]

    if not columns:
        return np.zeros(n + 1, np.int64), np.zeros(0, np.int64)
    table = np.stack(columns, axis=1)
    valid = table >= 0
    lengths = valid.sum(axis=1)
    indptr = np.zeros(n + 1, np.int64)
    np.cumsum(lengths, out=indptr[1:])
    # valid entries form a prefix of every row, so row-major order is traversal order
    return indptr, table[valid].astype(np.int64)


def _padded(indptr, data, fill):
    lengths = np.diff(indptr)
    n = lengths.shape[0]
    width = int(lengths.max()) if n else 0
    out = np.full((n, max(width, 1)), fill, dtype=np.float64)
    mask = np.arange(out.shape[1])[None, :] < lengths[:, None]
    out[mask] = data
    return out, mask


def coverage_batch(q, indptr, indices, include_self):
    if indices.shape[0] == 0:
        return np.zeros(0)
    keep, mask = _padded(indptr, 1.0 - q[indices], 1.0)
    n = keep.shape[0]
    prefix = np.empty_like(keep)
    prefix[:, 0] = 1.0
    np.cumprod(keep[:, :-1], axis=1, out=prefix[:, 1:])
    suffix = np.cumprod(keep[:, ::-1], axis=1)[:, ::-1]
    if not include_self:
        suffix = np.concatenate([suffix[:, 1:], np.ones((n, 1))], axis=1)
    return (1.0 - prefix * (1.0 - suffix))[mask]


class _Deltas:
    """Segment sums of b_i (1 - p_ij) for arbitrary subsets of rays."""

    def __init__(self, indptr, indices, values):
        self.indptr = indptr
        self.indices = indices
        self.omp = 1.0 - values
        self.lengths = np.diff(indptr)

    def __call__(self, b, rows):
        rows = np.asarray(rows, np.int64)
        out = np.zeros(rows.shape[0])
        lens = self.lengths[rows]
        nz = lens > 0
        if not nz.any():
            return out
        r = rows[nz]
        starts = self.indptr[r]
        ln = lens[nz]
        offs = np.zeros(r.shape[0], np.int64)
        np.cumsum(ln[:-1], out=offs[1:])
        gather = np.repeat(starts - offs, ln) + np.arange(int(ln.sum()))
        contrib = b[self.indices[gather]] * self.omp[gather]
        out[nz] = np.add.reduceat(contrib, offs)
        return out


def _log(logs, n_sel, rows, vals):
    log_iter, log_row, log_val, n_log = logs
    cap = log_iter.shape[0]
    take = min(cap - n_log, rows.shape[0])
    if take > 0:
        log_iter[n_log:n_log + take] = n_sel
        log_row[n_log:n_log + take] = rows[:take]
        log_val[n_log:n_log + take] = vals[:take]
    return n_log + max(take, 0)


def greedy(indptr, indices, values, positions, n_positions, budget, eps,
           log_iter, log_row, log_val):
    n = indptr.shape[0] - 1
    deltas = _Deltas(indptr, indices, values)
    b = eps.copy()
    avail = np.ones(n, bool)
    counts = np.zeros(n_positions, np.int64)
    order = []
    f = float(b.sum())
    trace = [f]
    evals = 0
    n_log = 0
    while avail.any():
        rows = np.flatnonzero(avail)
        d = deltas(b, rows)
        evals += rows.shape[0]
        n_log = _log((log_iter, log_row, log_val, n_log), len(order), rows, d)
        # argmax returns the first maximum, i.e. the smallest ray id
        k = int(np.argmax(d))
        best = int(rows[k])
        sl = slice(indptr[best], indptr[best + 1])
        b[indices[sl]] *= values[sl]
        f = max(f - float(d[k]), 0.0)
        order.append(best)
        trace.append(f)
        avail[best] = False
        lpos = positions[best]
        counts[lpos] += 1
        if counts[lpos] == budget:
            avail[positions == lpos] = False
    return (np.asarray(order, np.int64), np.asarray(trace), evals, n_log)


def prioritized(indptr, indices, values, positions, n_positions, budget, eps,
                log_iter, log_row, log_val):
    n = indptr.shape[0] - 1
    deltas = _Deltas(indptr, indices, values)
    b = eps.copy()
    prio = np.full(n, np.inf)
    seq = np.arange(n)
    counts = np.zeros(n_positions, np.int64)
    order = []
    f = float(b.sum())
    trace = [f]
    evals = 0
    n_log = 0
    one = np.zeros(1, np.int64)
    while seq.shape[0] > 0:
        best_d = -1.0
        m = 0
        n_seq = seq.shape[0]
        while True:
            one[0] = seq[m]
            d = float(deltas(b, one)[0])
            evals += 1
            n_log = _log((log_iter, log_row, log_val, n_log), len(order),
                         one, np.array([d]))
            prio[seq[m]] = d
            best_d = max(best_d, d)
            m += 1
            if m == n_seq or best_d > prio[seq[m]]:
                break
        head = seq[:m]
        head = head[np.lexsort((head, -prio[head]))]
        merged = np.concatenate([head, seq[m:]])
        # both runs are already sorted; a stable lexsort is an exact merge
        merged = merged[np.lexsort((merged, -prio[merged]))]
        best = int(merged[0])
        sl = slice(indptr[best], indptr[best + 1])
        b[indices[sl]] *= values[sl]
        f = max(f - float(prio[best]), 0.0)
        order.append(best)
        trace.append(f)
        lpos = positions[best]
        counts[lpos] += 1
        if counts[lpos] == budget:
            seq = merged[positions[merged] != lpos]
        else:
            seq = merged[1:]
    return (np.asarray(order, np.int64), np.asarray(trace), evals, n_log)


def _window(radius):
    r = radius
    return [(dx, dy, dz) for dz in range(-r, r + 1)
            for dy in range(-r, r + 1) for dx in range(-r, r + 1)]


def _slices(shift, size):
    # destination / source slices for out[x] += f(src[x + shift])
    if shift >= 0:
        return slice(0, size - shift), slice(shift, size)
    return slice(-shift, size), slice(0, size + shift)


def linear_predict(codes, weights, bias, radius):
    shape = codes.shape
    out = np.zeros(shape)
    for o, (dx, dy, dz) in enumerate(_window(radius)):
        dst_x, src_x = _slices(dx, shape[0])
        dst_y, src_y = _slices(dy, shape[1])
        dst_z, src_z = _slices(dz, shape[2])
        out[dst_x, dst_y, dst_z] += weights[o][codes[src_x, src_y, src_z]]
    return out + bias


def linear_grad(codes, g, radius):
    shape = codes.shape
    offsets = _window(radius)
    grad = np.zeros((len(offsets), 3))
    for o, (dx, dy, dz) in enumerate(offsets):
        dst_x, src_x = _slices(dx, shape[0])
        dst_y, src_y = _slices(dy, shape[1])
        dst_z, src_z = _slices(dz, shape[2])
        grad[o] = np.bincount(codes[src_x, src_y, src_z].ravel(),
                              weights=g[dst_x, dst_y, dst_z].ravel(), minlength=3)
    return grad
