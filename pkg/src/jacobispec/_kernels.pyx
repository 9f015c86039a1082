# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.  ``_pykernels`` mirrors every function here."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, log, exp, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef double complex cplx

cdef extern from "complex.h" nogil:
    double cabs(double complex)
    double complex conj(double complex)
    double creal(double complex)
    double cimag(double complex)


cdef int _jacobi(cplx* h, cplx* v, double* w, int d, double tol, int max_sweeps) noexcept nogil:
    """In-place cyclic Jacobi on a row-major Hermitian ``h``; returns sweep count or -1."""
    cdef int i, j, k, p, q, sweep
    cdef double fro = 0.0, off, r, app, aqq, tau, t, c, s, hr
    cdef cplx e, ec, hkp, hkq, vkp, vkq
    for i in range(d):
        for j in range(d):
            v[i * d + j] = 1.0 if i == j else 0.0
            hr = cabs(h[i * d + j])
            fro += hr * hr
        h[i * d + i] = creal(h[i * d + i])
    fro = sqrt(fro)
    if d == 1 or fro == 0.0:
        for i in range(d):
            w[i] = creal(h[i * d + i])
        return 0
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(d):
            for q in range(p + 1, d):
                hr = cabs(h[p * d + q])
                off += hr * hr
        if sqrt(off) <= tol * fro:
            for i in range(d):
                w[i] = creal(h[i * d + i])
            return sweep
        for p in range(d - 1):
            for q in range(p + 1, d):
                r = cabs(h[p * d + q])
                if r == 0.0:
                    continue
                e = h[p * d + q] / r
                ec = conj(e)
                app = creal(h[p * d + p])
                aqq = creal(h[q * d + q])
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                # H <- H G, columns p and q
                for k in range(d):
                    hkp = h[k * d + p]
                    hkq = h[k * d + q]
                    h[k * d + p] = c * hkp - s * ec * hkq
                    h[k * d + q] = s * e * hkp + c * hkq
                    vkp = v[k * d + p]
                    vkq = v[k * d + q]
                    v[k * d + p] = c * vkp - s * ec * vkq
                    v[k * d + q] = s * e * vkp + c * vkq
                # H <- G* H, rows p and q
                for k in range(d):
                    hkp = h[p * d + k]
                    hkq = h[q * d + k]
                    h[p * d + k] = c * hkp - s * e * hkq
                    h[q * d + k] = s * ec * hkp + c * hkq
                h[p * d + q] = 0.0
                h[q * d + p] = 0.0
                h[p * d + p] = app - t * r
                h[q * d + q] = aqq + t * r
    return -1


def jacobi_eigh(H, double tol=1e-15, int max_sweeps=100):
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix."""
    cdef cnp.ndarray[cplx, ndim=2, mode="c"] h = np.array(H, dtype=np.complex128, order="C", copy=True)
    cdef int d = h.shape[0]
    cdef cnp.ndarray[cplx, ndim=2, mode="c"] v = np.empty((d, d), dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] w = np.empty(d, dtype=np.float64)
    cdef int sweeps
    with nogil:
        sweeps = _jacobi(&h[0, 0], &v[0, 0], &w[0], d, tol, max_sweeps)
    if sweeps < 0:
        raise ArithmeticError("Jacobi sweeps did not converge")
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def scalar_negcounts(const double[::1] diag, const double[::1] offsq, const double[::1] shifts, const double[::1] tols):
    """Sturm counts #{eig < shift} for a real symmetric tridiagonal matrix.

    ``singular[s]`` is the first 0-based index whose pivot fell within ``tols[s]``,
    or -1.
    """
    cdef Py_ssize_t n = diag.shape[0], ns = shifts.shape[0], s, k
    counts = np.zeros(ns, dtype=np.int64)
    singular = np.full(ns, -1, dtype=np.int64)
    cdef long long[::1] cv = counts
    cdef long long[::1] sv = singular
    cdef double q, lam, tol
    cdef long long c
    with nogil:
        for s in range(ns):
            lam = shifts[s]
            tol = tols[s]
            q = diag[0] - lam
            c = 0
            for k in range(n):
                if k > 0:
                    q = diag[k] - lam - offsq[k - 1] / q
                if fabs(q) <= tol:
                    sv[s] = k
                    break
                if q < 0.0:
                    c += 1
            cv[s] = c
    return counts, singular


def block_negcount(diag, off, double lam, double tol, int max_sweeps=100):
    """Negative count of the block LDL* pivots D_k for a Hermitian block-tridiagonal matrix.

    Returns ``(n_minus, n_plus, singular)`` with ``singular`` the first block index
    (0-based) owning an eigenvalue of modulus <= tol, or -1.
    """
    cdef cnp.ndarray[cplx, ndim=3, mode="c"] B = np.ascontiguousarray(diag, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=3, mode="c"] A = np.ascontiguousarray(off, dtype=np.complex128)
    cdef int n = B.shape[0], d = B.shape[1]
    cdef int k, i, j, l, sweeps
    cdef int neg = 0, pos = 0, singular = -1
    cdef cplx* D = <cplx*> malloc(d * d * sizeof(cplx))
    cdef cplx* V = <cplx*> malloc(d * d * sizeof(cplx))
    cdef cplx* X = <cplx*> malloc(d * d * sizeof(cplx))
    cdef double* w = <double*> malloc(d * sizeof(double))
    cdef cplx acc
    cdef const cplx[:, :, ::1] Bv = B
    cdef const cplx[:, :, ::1] Av
    if n > 1:
        Av = A
    try:
        with nogil:
            for i in range(d):
                for j in range(d):
                    D[i * d + j] = Bv[0, i, j]
                D[i * d + i] = D[i * d + i] - lam
            for k in range(n):
                sweeps = _jacobi(D, V, w, d, 1e-15, max_sweeps)
                if sweeps < 0:
                    singular = k
                    break
                for i in range(d):
                    if fabs(w[i]) <= tol:
                        singular = k
                    elif w[i] < 0.0:
                        neg += 1
                    else:
                        pos += 1
                if singular >= 0 or k == n - 1:
                    break
                # X = D^{-1} A_k = V diag(1/w) V* A_k
                for i in range(d):
                    for j in range(d):
                        acc = 0.0
                        for l in range(d):
                            acc = acc + conj(V[l * d + i]) * Av[k, l, j]
                        X[i * d + j] = acc / w[i]
                # D_{k+1} = B_{k+1} - lam I - A_k* V X
                for i in range(d):
                    for j in range(d):
                        D[i * d + j] = 0.0
                        for l in range(d):
                            D[i * d + j] = D[i * d + j] + V[i * d + l] * X[l * d + j]
                for i in range(d):
                    for j in range(d):
                        X[i * d + j] = D[i * d + j]
                for i in range(d):
                    for j in range(d):
                        acc = 0.0
                        for l in range(d):
                            acc = acc + conj(Av[k, l, i]) * X[l * d + j]
                        D[i * d + j] = Bv[k + 1, i, j] - acc
                    D[i * d + i] = D[i * d + i] - lam
                for i in range(d):
                    for j in range(i + 1, d):
                        acc = 0.5 * (D[i * d + j] + conj(D[j * d + i]))
                        D[i * d + j] = acc
                        D[j * d + i] = conj(acc)
    finally:
        free(D)
        free(V)
        free(X)
        free(w)
    return neg, pos, singular


def three_term(const double[::1] a, const double[::1] b, double lam, double complex first, double complex second,
               bint forward, double guard=1e150):
    """Run a_{n-1}u_{n-1} + b_n u_n + a_n u_{n+1} = lam u_n over n = 1..N.

    ``a`` and ``b`` are 1-based (index 0 holds a_0 = 0 / unused).  Forward
    starts from (u_1, u_2) = (first, second); backward from (u_N, u_{N-1}).
    Returns mantissas and log scales with u_n = m_n * exp(L_n).
    """
    cdef Py_ssize_t N = b.shape[0] - 1, n
    mant = np.zeros(N + 1, dtype=np.complex128)
    logs = np.zeros(N + 1, dtype=np.float64)
    cdef cplx[::1] m = mant
    cdef double[::1] L = logs
    cdef cplx prev, cur, nxt
    cdef double scale = 0.0, big, inv = 1.0 / guard
    cdef Py_ssize_t bad = -1
    with nogil:
        if forward:
            prev = first
            cur = second
            m[1] = prev
            m[2] = cur
            for n in range(2, N):
                nxt = ((lam - b[n]) * cur - a[n - 1] * prev) / a[n]
                prev = cur
                cur = nxt
                big = cabs(prev) if cabs(prev) > cabs(cur) else cabs(cur)
                if big != big or big == INFINITY:
                    bad = n + 1
                    break
                if big > guard or (big < inv and big > 0.0):
                    prev = prev / big
                    cur = cur / big
                    scale = scale + log(big)
                    m[n] = prev
                    L[n] = scale
                m[n + 1] = cur
                L[n + 1] = scale
        else:
            prev = first
            cur = second
            m[N] = prev
            m[N - 1] = cur
            for n in range(N - 1, 1, -1):
                nxt = ((lam - b[n]) * cur - a[n] * prev) / a[n - 1]
                prev = cur
                cur = nxt
                big = cabs(prev) if cabs(prev) > cabs(cur) else cabs(cur)
                if big != big or big == INFINITY:
                    bad = n - 1
                    break
                if big > guard or (big < inv and big > 0.0):
                    prev = prev / big
                    cur = cur / big
                    scale = scale + log(big)
                    m[n] = prev
                    L[n] = scale
                m[n - 1] = cur
                L[n - 1] = scale
    if bad >= 0:
        raise OverflowError(f"recursion left the representable range at n={bad}")
    return mant, logs
