"""Pure-Python/numpy versions of the routines in ``_kernels.pyx``.

Signatures and results match the compiled module; speed does not.
"""

import math

import numpy as np


def _jacobi_inplace(h, tol=1e-15, max_sweeps=100):
    d = h.shape[0]
    v = np.eye(d, dtype=np.complex128)
    h[np.diag_indices(d)] = h.diagonal().real
    fro = np.linalg.norm(h)
    if d == 1 or fro == 0.0:
        return h.diagonal().real.copy(), v
    iu = np.triu_indices(d, 1)
    for _ in range(max_sweeps):
        if math.sqrt(float(np.sum(np.abs(h[iu]) ** 2))) <= tol * fro:
            return h.diagonal().real.copy(), v
        for p in range(d - 1):
            for q in range(p + 1, d):
                # plain Python scalars: numpy complex division overflows on subnormals
                hpq = complex(h[p, q])
                r = abs(hpq)
                if r == 0.0:
                    continue
                e = complex(hpq.real / r, hpq.imag / r)
                app = float(h[p, p].real)
                aqq = float(h[q, q].real)
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ec = e.conjugate()
                colp = h[:, p].copy()
                colq = h[:, q].copy()
                h[:, p] = c * colp - s * ec * colq
                h[:, q] = s * e * colp + c * colq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * ec * vq
                v[:, q] = s * e * vp + c * vq
                rowp = h[p, :].copy()
                rowq = h[q, :].copy()
                h[p, :] = c * rowp - s * e * rowq
                h[q, :] = s * ec * rowp + c * rowq
                h[p, q] = h[q, p] = 0.0
                h[p, p] = app - t * r
                h[q, q] = aqq + t * r
    raise ArithmeticError("Jacobi sweeps did not converge")


def jacobi_eigh(H, tol=1e-15, max_sweeps=100):
    h = np.array(H, dtype=np.complex128, copy=True)
    w, v = _jacobi_inplace(h, tol, max_sweeps)
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def scalar_negcounts(diag, offsq, shifts, tols):
    diag = np.asarray(diag, dtype=np.float64)
    offsq = np.asarray(offsq, dtype=np.float64)
    shifts = np.asarray(shifts, dtype=np.float64)
    tols = np.asarray(tols, dtype=np.float64)
    counts = np.zeros(shifts.shape, dtype=np.int64)
    singular = np.full(shifts.shape, -1, dtype=np.int64)
    live = np.ones(shifts.shape, dtype=bool)
    q = diag[0] - shifts
    for k in range(diag.shape[0]):
        if k > 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                q = diag[k] - shifts - offsq[k - 1] / q
        hit = live & (np.abs(q) <= tols)
        singular[hit] = k
        live &= ~hit
        counts += live & (q < 0.0)
        # keep the recursion finite for lanes that are already flagged
        q = np.where(live, q, 1.0)
    return counts, singular


def block_negcount(diag, off, lam, tol, max_sweeps=100):
    B = np.asarray(diag, dtype=np.complex128)
    A = np.asarray(off, dtype=np.complex128)
    n, d = B.shape[0], B.shape[1]
    eye = np.eye(d)
    D = B[0] - lam * eye
    neg = pos = 0
    for k in range(n):
        D = 0.5 * (D + D.conj().T)
        w, V = np.linalg.eigh(D)
        if np.any(np.abs(w) <= tol):
            return neg, pos, k
        neg += int(np.sum(w < 0.0))
        pos += int(np.sum(w > 0.0))
        if k == n - 1:
            break
        X = (V / w) @ (V.conj().T @ A[k])
        D = B[k + 1] - lam * eye - A[k].conj().T @ X
    return neg, pos, -1


def three_term(a, b, lam, first, second, forward, guard=1e150):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    N = b.shape[0] - 1
    m = np.zeros(N + 1, dtype=np.complex128)
    L = np.zeros(N + 1, dtype=np.float64)
    inv = 1.0 / guard
    scale = 0.0
    al, bl = a.tolist(), b.tolist()
    prev, cur = complex(first), complex(second)
    if forward:
        m[1], m[2] = prev, cur
        rng = range(2, N)
        step = 1
    else:
        m[N], m[N - 1] = prev, cur
        rng = range(N - 1, 1, -1)
        step = -1
    for n in rng:
        if forward:
            nxt = ((lam - bl[n]) * cur - al[n - 1] * prev) / al[n]
        else:
            nxt = ((lam - bl[n]) * cur - al[n] * prev) / al[n - 1]
        prev, cur = cur, nxt
        big = max(abs(prev), abs(cur))
        if not math.isfinite(big):
            raise OverflowError(f"recursion left the representable range at n={n + step}")
        if big > guard or 0.0 < big < inv:
            prev /= big
            cur /= big
            scale += math.log(big)
            m[n] = prev
            L[n] = scale
        m[n + step] = cur
        L[n + step] = scale
    return m, L
