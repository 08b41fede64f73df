"""Pure numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` line for line in terms of algorithm: the same
breakpoints, the same Gauss-Kronrod rule, the same per-panel acceptance test
with halving error allowances.  Only summation order differs, so results
agree with the compiled path to rounding.
"""
import numpy as np

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-point node set on [-1, 1] and matching weight vectors.
NODES = np.concatenate([-XGK[:7], XGK[::-1]])
KRONROD = np.concatenate([WGK[:7], WGK[::-1]])
GAUSS = np.zeros(15)
GAUSS[[1, 3, 5]] = WG[:3]
GAUSS[[9, 11, 13]] = WG[2::-1]
GAUSS[7] = WG[3]

EPS = np.finfo(float).eps
MAX_DEPTH = 60
GEOM_RATIO = 16.0
GEOM_STEPS = 32


def gk15(func, a, b):
    """Apply the 15-point Kronrod rule to many panels at once.

    ``func`` maps an array of shape (m, 15) to values of the same shape.
    Returns (integral, error, resabs) arrays of length m.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    fx = func(x)
    k = (fx * KRONROD).sum(axis=1) * half
    g = (fx * GAUSS).sum(axis=1) * half
    resabs = (np.abs(fx) * KRONROD).sum(axis=1) * np.abs(half)
    return k, np.abs(k - g), resabs


def adaptive_panels(func, owner, a, b, n_points, atol, rtol, max_evals, kind=None):
    """Batched adaptive quadrature over panels grouped by ``owner``.

    Every panel first receives an error allowance of tol / (number of panels
    of its point); a panel whose Kronrod-Gauss difference exceeds its
    allowance is bisected and each half inherits half the allowance, so the
    accepted allowances always sum to at most ``tol``.

    ``func(x, owner, kind)`` evaluates the integrand for the points listed in
    ``owner`` (one row of ``x`` per panel); ``kind`` is an opaque per-panel
    tag passed through unchanged.

    Returns (values, errors, evals, status) with status 0 ok, 1 budget
    exhausted, 2 depth limit reached.
    """
    owner = np.asarray(owner, dtype=np.intp)
    kind = np.zeros(len(a), dtype=np.int8) if kind is None else np.asarray(kind)
    values = np.zeros(n_points)
    errors = np.zeros(n_points)
    evals = np.zeros(n_points, dtype=np.int64)
    status = np.zeros(n_points, dtype=np.int64)

    i_val, e_val, r_abs = gk15(lambda x: func(x, owner, kind), a, b)
    np.add.at(evals, owner, 15)
    first = np.zeros(n_points)
    np.add.at(first, owner, i_val)
    counts = np.bincount(owner, minlength=n_points).astype(float)
    tol = np.maximum(atol, rtol * np.abs(first))
    allow = tol[owner] / counts[owner]
    depth = np.zeros(len(a), dtype=np.int64)

    while len(a):
        floor = 50.0 * EPS * r_abs
        tiny = (b - a) <= 4.0 * EPS * np.maximum(np.abs(a), np.abs(b))
        done = (e_val <= allow) | (e_val <= floor) | tiny
        deep = ~done & (depth >= MAX_DEPTH)
        if deep.any():
            status[owner[deep]] = np.maximum(status[owner[deep]], 2)
            done |= deep
        np.add.at(values, owner[done], i_val[done])
        np.add.at(errors, owner[done], e_val[done])
        keep = ~done
        if not keep.any():
            break
        owner, a, b, kind = owner[keep], a[keep], b[keep], kind[keep]
        allow, depth = allow[keep], depth[keep]
        over = evals[owner] + 30 > max_evals
        if over.any():
            status[owner[over]] = 1
            # abandoned panels contribute their last estimate and its error
            np.add.at(values, owner[over], i_val[keep][over])
            np.add.at(errors, owner[over], e_val[keep][over])
            ok = ~over
            owner, a, b, allow, depth = owner[ok], a[ok], b[ok], allow[ok], depth[ok]
            kind = kind[ok]
            if not len(a):
                break
        m = 0.5 * (a + b)
        owner = np.concatenate([owner, owner])
        kind = np.concatenate([kind, kind])
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        allow = np.concatenate([allow, allow]) * 0.5
        depth = np.concatenate([depth, depth]) + 1
        i_val, e_val, r_abs = gk15(lambda x: func(x, owner, kind), a, b)
        np.add.at(evals, owner, 15)
    return values, errors, evals, status


def box_poisson(x, t, h, left=None, right=None):
    """Poisson kernel at height t averaged over a box of half-width h.

    h = 0 gives the Poisson kernel itself.  ``left`` and ``right`` are x - h
    and x + h when the caller can form them without cancellation.  Evaluated
    in scaled form so heights near the bottom of the float range neither
    underflow nor overflow.
    """
    x = np.asarray(x, dtype=float)
    if h == 0.0:
        a = x / t
        with np.errstate(over="ignore"):
            return 1.0 / (np.pi * t * (1.0 + a * a))
    if left is None:
        left, right = x - h, x + h
    m = max(t, h)
    tm, hm = t / m, h / m
    with np.errstate(over="ignore", invalid="ignore"):
        return np.arctan2(2.0 * hm * tm, tm * tm + (left / m) * (right / m)) / (2.0 * np.pi * h)


DEEP_RATIO = 1e-9
WINDOW_RATIO = 1e-6


def window_halfwidth(c, t, h, radius):
    """Half-width of the window excised around a peak too narrow to resolve.

    Zero where the peak at z = c is resolvable by ordinary panels, i.e. its
    width max(t, h) is not tiny compared with c itself.
    """
    w = max(t, h)
    delta = np.minimum(WINDOW_RATIO * c, 0.5 * np.abs(radius - c))
    deep = (c > 0.0) & (c < radius) & (w <= 1e-3 * delta) & (w <= DEEP_RATIO * c)
    return np.where(deep, delta, 0.0)


def window_mass(delta, t, h):
    """Mass of box_poisson(., t, h) on [-delta, delta], for delta >> max(t, h)."""
    delta = np.asarray(delta, dtype=float)
    if h == 0.0:
        return 1.0 - (2.0 / np.pi) * np.arctan(t / delta)
    u = h * NODES
    d = delta[..., None]
    deficit = (np.arctan(t / (d - u)) + np.arctan(t / (d + u))) / np.pi
    return 1.0 - 0.5 * (deficit * KRONROD).sum(axis=-1)


def _clusters(base, t, h):
    """Offsets of the geometric clusters: peak (from ``base``) and box edges."""
    steps = GEOM_RATIO ** np.arange(GEOM_STEPS)
    peak = np.concatenate([-base[:, None] * steps, base[:, None] * steps], axis=1)
    if h > t:
        e = t * steps
        edge = np.concatenate([[-h, h], -h - e, -h + e, h - e, h + e])
    elif h > 0.0:
        edge = np.array([-h, h])
    else:
        edge = np.zeros(0)
    return peak, edge


def panel_layout(c, t, h, beta, radius, delta):
    """Initial panels for every point: arrays (owner, a, b, kind).

    kind 0 panels live in s = z**(1 - beta) and carry the singularity at 0;
    kind 1 panels live in u = z - c, so points near the peak are exact.
    The split is at z = c/2 when the peak is separated from the singularity
    (w < c < 2R), otherwise everything is in s.
    """
    n = len(c)
    w = max(t, h)
    q = 1.0 - beta
    base = np.where(delta > 0.0, delta, w)
    peak, edge = _clusters(base, t, h)
    split = (c > w) & (c < 2.0 * radius)
    zs_end = np.where(split, np.minimum(0.5 * c, radius), radius)

    # s panels: z candidates in [0, zs_end]
    z = [np.zeros(n), zs_end]
    z += [c[:, None] + peak]
    if len(edge):
        z += [c[:, None] + edge[None, :], -c[:, None] + edge[None, :]]
    z = np.concatenate([np.atleast_2d(v).reshape(n, -1) for v in z], axis=1)
    z = np.clip(z, 0.0, zs_end[:, None])
    z.sort(axis=1)
    s = z ** q
    sa, sb = s[:, :-1], s[:, 1:]
    own_s = np.repeat(np.arange(n), sa.shape[1])

    # u panels: offsets in [-c/2, R - c], only where split
    ua, ub = -0.5 * c, radius - c
    u = [ua, ub, np.zeros(n), peak]
    if len(edge):
        u += [np.broadcast_to(edge, (n, len(edge))), -2.0 * c[:, None] + edge[None, :]]
    u = np.concatenate([np.atleast_2d(v).reshape(n, -1) if np.ndim(v) > 1 else v[:, None]
                        for v in u], axis=1)
    u = np.clip(u, ua[:, None], ub[:, None])
    u.sort(axis=1)
    pa, pb = u[:, :-1], u[:, 1:]
    # the excised window (-delta, delta) is integrated analytically
    inside = (pa >= -delta[:, None]) & (pb <= delta[:, None]) & (delta[:, None] > 0.0)
    live_u = (pb > pa) & split[:, None] & ~inside
    own_u = np.repeat(np.arange(n), pa.shape[1])

    live_s = (sb > sa).ravel()
    lu = live_u.ravel()
    owner = np.concatenate([own_s[live_s], own_u[lu]])
    a = np.concatenate([sa.ravel()[live_s], pa.ravel()[lu]])
    b = np.concatenate([sb.ravel()[live_s], pb.ravel()[lu]])
    kind = np.concatenate([np.zeros(live_s.sum(), dtype=np.int8), np.ones(lu.sum(), dtype=np.int8)])
    order = np.lexsort((a, kind, owner))
    return owner[order], a[order], b[order], kind[order]


def smoothed_potential(ys, t, h, beta, radius, atol, rtol, max_evals):
    """Integral of |z|^-beta * box_poisson(y - z) over |z| <= radius, per y."""
    ys = np.abs(np.asarray(ys, dtype=float))
    n = len(ys)
    p = 1.0 / (1.0 - beta)
    w = max(t, h)
    delta = window_halfwidth(ys, t, h, radius)
    owner, a, b, kind = panel_layout(ys, t, h, beta, radius, delta)

    def integrand(x, who, kinds):
        c = ys[who][:, None]
        out = np.empty_like(x)
        ks = kinds == 0
        if ks.any():
            z = x[ks] ** p
            cs = c[ks]
            cl, cr = cs - h, cs + h
            out[ks] = p * w * (box_poisson(cs - z, t, h, cl - z, cr - z)
                               + box_poisson(cs + z, t, h, cl + z, cr + z))
        ku = ~ks
        if ku.any():
            u = x[ku]
            cu = c[ku]
            far = 2.0 * cu + u
            # scale by w before the power so the product stays finite
            out[ku] = (w * (box_poisson(-u, t, h, -u - h, -u + h)
                            + box_poisson(far, t, h, far - h, far + h))) * (cu + u) ** -beta
        return out

    values, errors, evals, status = adaptive_panels(
        integrand, owner, a, b, n, atol * w, rtol, max_evals, kind)
    values /= w
    errors /= w
    deep = delta > 0.0
    if deep.any():
        c, d = ys[deep], delta[deep]
        values[deep] += c ** -beta * (window_mass(d, t, h) + 2.0 * d * box_poisson(2.0 * c, t, h, 2.0 * c - h, 2.0 * c + h))
    return values, errors, evals, status


def sparse_table(row):
    table = [row]
    span = 1
    while 2 * span <= len(row):
        prev = table[-1]
        table.append(np.maximum(prev[:-span], prev[span:]))
        span *= 2
    return table


def region_max(values, ys, row_ptr, lo, hi, xs):
    """Maximum of values[j, i] over nodes ys[i] in xs + [lo, hi] for any row j.

    Sections for row j are the intervals lo[row_ptr[j]:row_ptr[j+1]].
    Returns zeros where no node falls inside any shifted interval.
    """
    out = np.zeros(len(xs))
    for j in range(values.shape[0]):
        start, stop = row_ptr[j], row_ptr[j + 1]
        if start == stop:
            continue
        table = sparse_table(values[j])
        for k in range(start, stop):
            i0 = np.searchsorted(ys, xs + lo[k], side="left")
            i1 = np.searchsorted(ys, xs + hi[k], side="right") - 1
            hit = i1 >= i0
            if not hit.any():
                continue
            i0, i1 = i0[hit], i1[hit]
            length = i1 - i0 + 1
            level = np.floor(np.log2(length)).astype(np.intp)
            best = np.empty(len(i0))
            for lv in np.unique(level):
                sel = level == lv
                tab = table[lv]
                best[sel] = np.maximum(tab[i0[sel]], tab[i1[sel] - (1 << lv) + 1])
            out[hit] = np.maximum(out[hit], best)
    return out
