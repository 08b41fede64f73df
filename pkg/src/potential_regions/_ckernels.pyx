# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: batched singular quadrature and region maxima.

Algorithms match ``_fallback.py``; see that module for the description.
"""
import numpy as np
from libc.math cimport atan, atan2, pow, fabs, fmax, floor, log2, M_PI
from libc.stdlib cimport malloc, free, qsort

DEF GEOM_STEPS = 32
DEF NS = 2 + 2 * GEOM_STEPS + 2 * (2 + 4 * GEOM_STEPS)
DEF NU = 1 + NS
DEF STACK = 512
DEF MAX_DEPTH = 60

cdef double XGK[8]
cdef double WGK[8]
cdef double WG[4]
XGK[:] = [0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
          0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
          0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
          0.207784955007898467600689403773245, 0.0]
WGK[:] = [0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
          0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
          0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
          0.204432940075298892414161999234649, 0.209482141084727828012999174891714]
WG[:] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
         0.381830050505118944950369775488975, 0.417959183673469387755102040816327]

cdef double EPS = np.finfo(float).eps


cdef double DEEP_RATIO = 1e-9
cdef double WINDOW_RATIO = 1e-6


cdef struct Params:
    double y, yl, yr, t, h, p, m, tm, hm, beta


cdef inline double box_poisson(double x, double left, double right, Params* q) nogil:
    cdef double a
    if q.h == 0.0:
        a = x / q.t
        return 1.0 / (M_PI * q.t * (1.0 + a * a))
    return atan2(2.0 * q.hm * q.tm,
                 q.tm * q.tm + (left / q.m) * (right / q.m)) / (2.0 * M_PI * q.h)


cdef inline double integrand(double s, int kind, Params* q) nogil:
    cdef double z, far
    if kind == 0:
        z = pow(s, q.p)
        return q.p * q.m * (box_poisson(q.y - z, q.yl - z, q.yr - z, q)
                            + box_poisson(q.y + z, q.yl + z, q.yr + z, q))
    # s is the offset u = z - y here; scaling by m first keeps the product finite
    far = 2.0 * q.y + s
    return (q.m * (box_poisson(-s, -s - q.h, -s + q.h, q)
                   + box_poisson(far, far - q.h, far + q.h, q))) * pow(q.y + s, -q.beta)


cdef void gk15(double a, double b, int kind, Params* q, double* res, double* err,
               double* resabs) nogil:
    cdef double half = 0.5 * (b - a)
    cdef double mid = 0.5 * (b + a)
    cdef double fc = integrand(mid, kind, q)
    cdef double k = fc * WGK[7]
    cdef double g = fc * WG[3]
    cdef double ra = fabs(fc) * WGK[7]
    cdef double f1, f2, dx
    cdef int j
    for j in range(7):
        dx = half * XGK[j]
        f1 = integrand(mid - dx, kind, q)
        f2 = integrand(mid + dx, kind, q)
        k += WGK[j] * (f1 + f2)
        ra += WGK[j] * (fabs(f1) + fabs(f2))
        if j % 2 == 1:
            g += WG[j // 2] * (f1 + f2)
    res[0] = k * half
    err[0] = fabs((k - g) * half)
    resabs[0] = ra * fabs(half)


cdef double window_mass(double delta, double t, double h) nogil:
    cdef double acc, u
    cdef int j
    if h == 0.0:
        return 1.0 - (2.0 / M_PI) * atan(t / delta)
    acc = WGK[7] * 2.0 * atan(t / delta)
    for j in range(7):
        u = h * XGK[j]
        acc += WGK[j] * (atan(t / (delta - u)) + atan(t / (delta + u))
                         + atan(t / (delta + u)) + atan(t / (delta - u)))
    return 1.0 - 0.5 * acc / M_PI


cdef int cmp_double(const void* a, const void* b) noexcept nogil:
    cdef double x = (<const double*>a)[0], y = (<const double*>b)[0]
    return (x > y) - (x < y)


cdef void sort_small(double* v, int n) nogil:
    qsort(v, n, sizeof(double), cmp_double)


cdef int add_clusters(double* v, int n, double centre, double base, double t, double h) nogil:
    """Append peak and box-edge cluster points around ``centre``."""
    cdef int i
    cdef double step = base
    for i in range(GEOM_STEPS):
        v[n] = centre - step
        v[n + 1] = centre + step
        n += 2
        step *= 16.0
    return n


cdef int add_edges(double* v, int n, double centre, double t, double h) nogil:
    cdef int i
    cdef double step = t
    if h <= 0.0:
        return n
    v[n] = centre - h
    v[n + 1] = centre + h
    n += 2
    if h > t:
        for i in range(GEOM_STEPS):
            v[n] = centre - h - step
            v[n + 1] = centre - h + step
            v[n + 2] = centre + h - step
            v[n + 3] = centre + h + step
            n += 4
            step *= 16.0
    return n


cdef int quad_point(double y, double t, double h, double beta, double radius,
                    double atol, double rtol, long max_evals,
                    double* value, double* error, long* nevals) nogil:
    cdef Params q
    cdef double zs[NS]
    cdef double us[NU]
    cdef double sa[STACK]
    cdef double sb[STACK]
    cdef double sallow[STACK]
    cdef double sval[STACK]
    cdef double serr[STACK]
    cdef double sabs[STACK]
    cdef int sdepth[STACK]
    cdef int skind[STACK]
    cdef int i, top = 0, npan = 0, status = 0, d, ns, nu, kind, split
    cdef double c = fabs(y), w = t if t > h else h, first = 0.0, tol
    cdef double a, b, m, r1, e1, ab1, r2, e2, ab2, allow, total = 0.0, terr = 0.0
    cdef double delta, base, zs_end, ua, ub, qexp = 1.0 - beta

    q.y = c
    q.yl = c - h
    q.yr = c + h
    q.t = t
    q.h = h
    q.p = 1.0 / qexp
    q.m = w
    q.tm = t / w
    q.hm = h / w
    q.beta = beta

    delta = WINDOW_RATIO * c
    if 0.5 * fabs(radius - c) < delta:
        delta = 0.5 * fabs(radius - c)
    if not (c > 0.0 and c < radius and w <= 1e-3 * delta and w <= DEEP_RATIO * c):
        delta = 0.0
    base = delta if delta > 0.0 else w
    split = c > w and c < 2.0 * radius
    zs_end = radius
    if split:
        zs_end = 0.5 * c if 0.5 * c < radius else radius

    # s panels on [0, zs_end]
    zs[0] = 0.0
    zs[1] = zs_end
    ns = add_clusters(zs, 2, c, base, t, h)
    ns = add_edges(zs, ns, c, t, h)
    ns = add_edges(zs, ns, -c, t, h)
    for i in range(ns):
        if zs[i] < 0.0:
            zs[i] = 0.0
        elif zs[i] > zs_end:
            zs[i] = zs_end
    sort_small(zs, ns)
    for i in range(ns):
        zs[i] = pow(zs[i], qexp)

    # u panels on [-c/2, R - c]
    nu = 0
    if split:
        ua = -0.5 * c
        ub = radius - c
        us[0] = ua
        us[1] = ub
        us[2] = 0.0
        nu = add_clusters(us, 3, 0.0, base, t, h)
        nu = add_edges(us, nu, 0.0, t, h)
        nu = add_edges(us, nu, -2.0 * c, t, h)
        for i in range(nu):
            if us[i] < ua:
                us[i] = ua
            elif us[i] > ub:
                us[i] = ub
        sort_small(us, nu)

    nevals[0] = 0
    # initial panels, pushed so that the leftmost s panel pops first
    for i in range(nu - 1, 0, -1):
        a = us[i - 1]
        b = us[i]
        if b > a and not (delta > 0.0 and a >= -delta and b <= delta):
            gk15(a, b, 1, &q, &sval[top], &serr[top], &sabs[top])
            nevals[0] += 15
            sa[top] = a
            sb[top] = b
            skind[top] = 1
            sdepth[top] = 0
            first += sval[top]
            top += 1
    for i in range(ns - 1, 0, -1):
        a = zs[i - 1]
        b = zs[i]
        if b > a:
            gk15(a, b, 0, &q, &sval[top], &serr[top], &sabs[top])
            nevals[0] += 15
            sa[top] = a
            sb[top] = b
            skind[top] = 0
            sdepth[top] = 0
            first += sval[top]
            top += 1
    npan = top
    # panels integrate m times the integrand
    tol = rtol * fabs(first)
    if tol < atol * w:
        tol = atol * w
    for i in range(npan):
        sallow[i] = tol / npan

    while top > 0:
        top -= 1
        if (serr[top] <= sallow[top] or serr[top] <= 50.0 * EPS * sabs[top]
                or sb[top] - sa[top] <= 4.0 * EPS * fmax(fabs(sa[top]), fabs(sb[top]))):
            total += sval[top]
            terr += serr[top]
            continue
        if sdepth[top] >= MAX_DEPTH or top + 2 > STACK:
            status = 2
            total += sval[top]
            terr += serr[top]
            continue
        if nevals[0] + 30 > max_evals:
            status = 1
            total += sval[top]
            terr += serr[top]
            continue
        a = sa[top]
        b = sb[top]
        kind = skind[top]
        m = 0.5 * (a + b)
        allow = 0.5 * sallow[top]
        d = sdepth[top] + 1
        gk15(a, m, kind, &q, &r1, &e1, &ab1)
        gk15(m, b, kind, &q, &r2, &e2, &ab2)
        nevals[0] += 30
        # right half first so the left half is processed next
        sa[top] = m
        sb[top] = b
        sval[top] = r2
        serr[top] = e2
        sabs[top] = ab2
        sallow[top] = allow
        sdepth[top] = d
        skind[top] = kind
        top += 1
        sa[top] = a
        sb[top] = m
        sval[top] = r1
        serr[top] = e1
        sabs[top] = ab1
        sallow[top] = allow
        sdepth[top] = d
        skind[top] = kind
        top += 1
    total /= w
    terr /= w
    if delta > 0.0:
        total += pow(c, -beta) * (window_mass(delta, t, h)
                                  + 2.0 * delta * box_poisson(2.0 * c, c - h + c, c + h + c, &q))
    value[0] = total
    error[0] = terr
    return status


def smoothed_potential(ys, double t, double h, double beta, double radius,
                       double atol, double rtol, long max_evals):
    cdef double[::1] yv = np.ascontiguousarray(ys, dtype=float)
    cdef Py_ssize_t n = yv.shape[0], i
    values = np.empty(n)
    errors = np.empty(n)
    evals = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int64)
    cdef double[::1] vv = values, ev = errors
    cdef long long[::1] nv = evals, sv = status
    cdef long ne
    with nogil:
        for i in range(n):
            sv[i] = quad_point(yv[i], t, h, beta, radius, atol, rtol, max_evals,
                               &vv[i], &ev[i], &ne)
            nv[i] = ne
    return values, errors, evals, status


cdef inline Py_ssize_t lower_bound(const double[::1] ys, Py_ssize_t ny, double v) nogil:
    """First index with ys[i] >= v."""
    cdef Py_ssize_t left = 0, right = ny, mid
    while left < right:
        mid = (left + right) // 2
        if ys[mid] < v:
            left = mid + 1
        else:
            right = mid
    return left


cdef inline Py_ssize_t upper_bound(const double[::1] ys, Py_ssize_t ny, double v) nogil:
    """First index with ys[i] > v."""
    cdef Py_ssize_t left = 0, right = ny, mid
    while left < right:
        mid = (left + right) // 2
        if ys[mid] <= v:
            left = mid + 1
        else:
            right = mid
    return left


def region_max(const double[:, ::1] values, const double[::1] ys, const long long[::1] row_ptr,
               const double[::1] lo, const double[::1] hi, const double[::1] xs):
    cdef Py_ssize_t nt = values.shape[0], ny = values.shape[1], nx = xs.shape[0]
    cdef Py_ssize_t j, k, i, lv, span, nlev, i0, i1
    cdef double best, v, a, b
    cdef bint sorted_x = True
    out = np.zeros(nx)
    cdef double[::1] o = out
    nlev = 1
    while (1 << nlev) <= ny:
        nlev += 1
    cdef double* table = <double*> malloc(nlev * ny * sizeof(double))
    cdef int* level = <int*> malloc((ny + 1) * sizeof(int))
    if table == NULL or level == NULL:
        free(table)
        free(level)
        raise MemoryError()
    try:
        with nogil:
            level[0] = 0
            level[1] = 0
            for i in range(2, ny + 1):
                level[i] = level[i // 2] + 1
            for i in range(1, nx):
                if xs[i] < xs[i - 1]:
                    sorted_x = False
                    break
            for j in range(nt):
                if row_ptr[j] == row_ptr[j + 1]:
                    continue
                for i in range(ny):
                    table[i] = values[j, i]
                span = 1
                lv = 1
                while 2 * span <= ny:
                    for i in range(ny - 2 * span + 1):
                        v = table[(lv - 1) * ny + i + span]
                        best = table[(lv - 1) * ny + i]
                        table[lv * ny + i] = best if best > v else v
                    span *= 2
                    lv += 1
                for k in range(row_ptr[j], row_ptr[j + 1]):
                    i0 = 0
                    i1 = 0
                    for i in range(nx):
                        a = xs[i] + lo[k]
                        b = xs[i] + hi[k]
                        if sorted_x:
                            # both window ends only move right as x increases
                            while i0 < ny and ys[i0] < a:
                                i0 += 1
                            if i1 < i0:
                                i1 = i0
                            while i1 < ny and ys[i1] <= b:
                                i1 += 1
                        else:
                            i0 = lower_bound(ys, ny, a)
                            i1 = upper_bound(ys, ny, b)
                        # nodes i0 .. i1 - 1 lie in the window
                        if i1 <= i0:
                            continue
                        lv = level[i1 - i0]
                        best = table[lv * ny + i0]
                        v = table[lv * ny + i1 - (1 << lv)]
                        if v > best:
                            best = v
                        if best > o[i]:
                            o[i] = best
    finally:
        free(table)
        free(level)
    return out
