"""Scalar transfer matrices, Levinson-type hypotheses and subordinacy diagnostics.

Convention: [u_n, u_{n+1}]^T = T_n [u_{n-1}, u_n]^T with
T_n = [[0, 1], [-a_{n-1}/a_n, (lam - b_n)/a_n]].  A k-step product ending at
index k n is Sigma_n = T_{kn} ... T_{kn-k+1}.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import (DependentSolutionsError, InputDomainError, RecursionOverflowError,
                     UsageError)
from .model import CoefficientFamily

GUARD = 1e150
R_MIN = 0.05
DROP = 10.0


def _require_scalar(f: CoefficientFamily):
    if f.block_dim != 1:
        raise UsageError(f"transfer dynamics are scalar only; {f.family_id} has d = {f.block_dim}")


def _coefficients(f: CoefficientFamily, ns: np.ndarray):
    A, B = f.blocks(ns)
    if np.any(A[:, 0, 0].imag != 0):
        raise UsageError("transfer matrices need real a_n")
    return A[:, 0, 0].real, B[:, 0, 0].real


@dataclass(frozen=True)
class Transfer2:
    matrix: np.ndarray = field(repr=False)
    n: int
    lam: float

    @property
    def det(self) -> complex:
        m = self.matrix
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]

    @property
    def trace(self) -> complex:
        return self.matrix[0, 0] + self.matrix[1, 1]


def transfer_steps(f: CoefficientFamily, ns, lam: float) -> np.ndarray:
    """Stack of one-step matrices T_n for the indices ``ns`` (each >= 2)."""
    _require_scalar(f)
    ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
    if ns.size and ns.min() < 2:
        raise UsageError("transfer_step needs n >= 2")
    a_prev, _ = _coefficients(f, ns - 1)
    a, b = _coefficients(f, ns)
    out = np.zeros((ns.size, 2, 2), dtype=np.complex128)
    out[:, 0, 1] = 1.0
    out[:, 1, 0] = -a_prev / a
    out[:, 1, 1] = (lam - b) / a
    return out


def transfer_step(f: CoefficientFamily, n: int, lam: float) -> Transfer2:
    return Transfer2(transfer_steps(f, [n], lam)[0], int(n), float(lam))


def kstep_products(f: CoefficientFamily, ns, k: int, lam: float) -> np.ndarray:
    """Stack of Sigma_n = T_{kn} ... T_{kn-k+1} for group indices ``ns``."""
    if k not in (2, 3):
        raise UsageError("k must be 2 or 3")
    ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
    if ns.size and k * ns.min() - k + 1 < 2:
        raise UsageError(f"group index must satisfy k n - k + 1 >= 2")
    out = transfer_steps(f, k * ns - k + 1, lam)
    for j in range(k - 2, -1, -1):
        out = transfer_steps(f, k * ns - j, lam) @ out
    return out


def kstep_product(f: CoefficientFamily, n: int, k: int, lam: float) -> Transfer2:
    return Transfer2(kstep_products(f, [n], k, lam)[0], int(n), float(lam))


def det2(M: np.ndarray):
    M = np.asarray(M)
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


def _safe_div(x, y):
    # numpy's complex division returns nan for subnormal divisors; split into modulus and phase
    r = np.abs(y)
    r = np.where(r > 0, r, 1.0)
    return (x.real / r + 1j * (x.imag / r)) * (y.real / r - 1j * (y.imag / r))


def eig_2x2_stack(M) -> tuple[np.ndarray, np.ndarray]:
    """tr/2 +- sqrt((tr/2)^2 - det), principal root, vectorised over a stack.

    The smaller root is recomputed as det / (larger root) to avoid cancellation.
    Each matrix is normalised by its largest entry first, so tiny or huge
    entries neither underflow nor overflow.
    """
    M = np.asarray(M, dtype=np.complex128)
    scale = np.abs(M).max(axis=(-2, -1))
    scale = np.where(scale > 0, scale, 1.0)
    sc = scale[..., None, None]
    M = M.real / sc + 1j * (M.imag / sc)
    h = 0.5 * (M[..., 0, 0] + M[..., 1, 1])
    det = det2(M)
    s = np.sqrt(h * h - det)
    plus = h + s
    minus = h - s
    big_plus = np.abs(plus) >= np.abs(minus)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        minus = np.where(big_plus & (plus != 0), _safe_div(det, plus), minus)
        plus = np.where(~big_plus & (minus != 0), _safe_div(det, minus), plus)
    return plus * scale, minus * scale


def eig_2x2(M) -> tuple[complex, complex]:
    m = M.matrix if isinstance(M, Transfer2) else np.asarray(M, dtype=np.complex128)
    if not np.all(np.isfinite(m)):
        raise InputDomainError("matrix has non-finite entries")
    p, q = eig_2x2_stack(m)
    return complex(p), complex(q)


# -- V/R splittings -------------------------------------------------------------

_F1 = np.array([[0, 1], [-2, 0]], dtype=np.complex128)
_F2 = np.array([[-1, 0], [0, -2]], dtype=np.complex128)
_F3 = np.array([[0, 0], [0, 1]], dtype=np.complex128)
_SWAP = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def _step3_V(f: CoefficientFamily, ns: np.ndarray, lam: float) -> np.ndarray:
    # the delta*lam/(3n)^alpha * F3 * swap term is kept in V; leaving it in R
    # would make R_n = O(n^-alpha), which is not summable for alpha < 1
    al, de = f.params["alpha"], f.params["delta"]
    x = 3.0 * ns.astype(np.float64)
    V0 = np.array([[0, -1], [1, de]], dtype=np.complex128)
    p = x ** -al
    return (V0 + (al / x)[:, None, None] * _F1 + (lam * p)[:, None, None] * _F2
            - (de * al / x)[:, None, None] * _F3
            + (de * lam * p)[:, None, None] * (_F3 @ _SWAP))


def _heuristic_V(f: CoefficientFamily, ns: np.ndarray, lam: float) -> np.ndarray:
    al = f.params["alpha"]
    x = 2.0 * ns.astype(np.float64)
    _, b = _coefficients(f, 2 * ns - 1)
    out = np.zeros((ns.size, 2, 2), dtype=np.complex128)
    out[:, 0, 0] = -1 + al / x
    out[:, 0, 1] = lam / x**al - b / (x - 1) ** al
    out[:, 1, 0] = -lam / x**al
    out[:, 1, 1] = -1 + al / x - lam * b / x ** (2 * al)
    return out


SPLITTINGS = {"step3": (3, _step3_V), "heuristic2step": (2, _heuristic_V)}


def split(f: CoefficientFamily, ns, lam: float, rule=None, k: int | None = None):
    """(Sigma, V, R) stacks with Sigma = V + R over group indices ``ns``.

    ``rule`` defaults to the catalog entry for the family; a callable
    rule(f, ns, lam) -> V stack may be supplied together with k.
    """
    ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
    if rule is None:
        if f.name not in SPLITTINGS:
            raise UsageError(f"no catalog splitting for {f.name}; supply rule= and k=")
        k, rule = SPLITTINGS[f.name]
    elif k is None:
        raise UsageError("a custom splitting needs k")
    S = kstep_products(f, ns, k, lam)
    V = np.asarray(rule(f, ns, lam), dtype=np.complex128)
    return S, V, S - V


def _op_norms(M: np.ndarray) -> np.ndarray:
    return np.linalg.norm(M, ord=2, axis=(1, 2))


def _fit_exponent(ns, values):
    ns = np.asarray(ns, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    keep = values > 0
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(ns[keep]), np.log(values[keep]), 1)[0])


@dataclass
class LevinsonReport:
    window: tuple[int, int]
    min_abs_det_A: float
    min_abs_det_V: float
    bv_sum: float
    bv_exponent: float | None
    l1_sum: float
    l1_exponent: float | None
    V_inf: list
    V_inf_eigenvalues: list
    moduli: list
    eig_distance: float
    moduli_separation: float
    verdicts: dict
    notes: list[str]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def levinson_hypotheses(V_seq, R_seq, window, sep_tol: float = 1e-8) -> LevinsonReport:
    """Finite-window evidence for the three Levinson conditions.

    Summability is judged by the fitted decay exponent of the increments
    (must be < -1).  V_inf is estimated by the last element of V_seq.
    """
    V = np.asarray(V_seq, dtype=np.complex128)
    R = np.asarray(R_seq, dtype=np.complex128)
    lo, hi = int(window[0]), int(window[1])
    ns = np.arange(lo, hi + 1)
    if V.shape != (ns.size, 2, 2) or R.shape != V.shape:
        raise UsageError("V_seq and R_seq must hold one 2x2 matrix per window index")
    dA = np.abs(det2(V + R))
    dV = np.abs(det2(V))
    bv = _op_norms(np.diff(V, axis=0))
    rn = _op_norms(R)
    bv_exp = _fit_exponent(ns[:-1], bv)
    l1_exp = _fit_exponent(ns, rn)
    Vinf = V[-1]
    p, q = eig_2x2(Vinf)
    dist = abs(p - q)
    sep = abs(abs(p) - abs(q))
    notes = []
    verdicts = {
        "nonvanishing_dets": "holds" if dA.min() > 0 and dV.min() > 0 else "fails",
        "bounded_variation": ("holds" if bv_exp is None or bv_exp < -1
                              else f"fails (increment exponent {bv_exp:.3f})"),
        "remainder_l1": ("holds" if l1_exp is None or l1_exp < -1
                         else f"fails (remainder exponent {l1_exp:.3f})"),
    }
    if min(abs(p), abs(q)) == 0 or dist <= sep_tol:
        verdicts["limit_eigenvalues"] = "fails (zero or repeated eigenvalue)"
    elif sep <= sep_tol * max(abs(p), abs(q)):
        verdicts["limit_eigenvalues"] = "fails (distinct eigenvalues, equal moduli)"
        notes.append("distinct eigenvalues, equal moduli: the modulus-separation clause fails; "
                     "conjugate-pair limits need a variant of the theorem")
    else:
        verdicts["limit_eigenvalues"] = "holds"
    return LevinsonReport((lo, hi), float(dA.min()), float(dV.min()), float(bv.sum()), bv_exp,
                          float(rn.sum()), l1_exp, [[complex(z) for z in row] for row in Vinf],
                          [p, q], [abs(p), abs(q)], float(dist), float(sep), verdicts, notes)


# -- generalized eigenvectors ---------------------------------------------------


@dataclass(frozen=True)
class SolutionPath:
    """u_n = mantissa[n] * exp(logscale[n]) for n = 1..N (index 0 unused)."""

    family: str
    lam: float
    direction: str
    mantissa: np.ndarray = field(repr=False)
    logscale: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.mantissa.size - 1

    def log_modulus(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.mantissa)) + self.logscale

    def values(self) -> np.ndarray:
        """u_n as plain complex numbers (overflows to inf beyond double range)."""
        with np.errstate(over="ignore"):
            return self.mantissa * np.exp(self.logscale)

    def residuals(self) -> np.ndarray:
        """Relative residual of the three-term identity at n = 2..N-1."""
        n = np.arange(2, self.N)
        ref = self.logscale[n]
        m = self.mantissa
        um = m[n - 1] * np.exp(self.logscale[n - 1] - ref)
        u0 = m[n]
        up = m[n + 1] * np.exp(self.logscale[n + 1] - ref)
        t1 = self.a[n - 1] * um
        t2 = (self.b[n] - self.lam) * u0
        t3 = self.a[n] * up
        scale = np.abs(t1) + np.abs(self.b[n] * u0) + np.abs(self.lam * u0) + np.abs(t3)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.abs(t1 + t2 + t3) / scale
        return np.where(scale > 0, r, 0.0)

    def rows(self):
        """(n, re, im, log_modulus); re/im fall back to the phase when u_n overflows."""
        lm = self.log_modulus()
        for n in range(1, self.N + 1):
            z = self.mantissa[n]
            if abs(lm[n]) < 700 or z == 0:
                w = z * math.exp(self.logscale[n])
            else:
                w = z / abs(z)
            yield (n, float(w.real), float(w.imag), float(lm[n]))


def solve_recursion(f: CoefficientFamily, lam: float, init, N: int,
                    direction: str = "forward", guard: float = GUARD) -> SolutionPath:
    """Run a_{n-1}u_{n-1} + b_n u_n + a_n u_{n+1} = lam u_n.

    forward: init = (u_1, u_2); backward: init = (u_N, u_{N-1}).
    """
    _require_scalar(f)
    if direction not in ("forward", "backward"):
        raise UsageError("direction must be 'forward' or 'backward'")
    if N < 3:
        raise UsageError("horizon must be at least 3")
    a, b = f.scalar_coefficients(N)
    first, second = complex(init[0]), complex(init[1])
    try:
        m, L = kernels.three_term(a, b, float(lam), first, second, direction == "forward", guard)
    except OverflowError as exc:
        raise RecursionOverflowError(str(exc)) from exc
    return SolutionPath(f.family_id, float(lam), direction, np.asarray(m), np.asarray(L), a, b)


def _log_cumsum_sq(path: SolutionPath) -> np.ndarray:
    return np.logaddexp.accumulate(2.0 * path.log_modulus()[1:])


def wronskian_rel(u: SolutionPath, v: SolutionPath, n: int) -> float:
    """|a_n (u_n v_{n+1} - u_{n+1} v_n)| relative to the size of its two products."""
    su = u.logscale[n + 1] - u.logscale[n]
    sv = v.logscale[n + 1] - v.logscale[n]
    p1 = u.mantissa[n] * v.mantissa[n + 1] * np.exp(sv)
    p2 = u.mantissa[n + 1] * np.exp(su) * v.mantissa[n]
    denom = abs(p1) + abs(p2)
    return float(abs(p1 - p2) / denom) if denom > 0 else 0.0


@dataclass
class SubordinacyTrace:
    lam: float
    checkpoints: list[int]
    ratios: list[float]
    trend: str
    r_min: float
    wronskian_rel: float

    def rows(self):
        return list(zip(self.checkpoints, self.ratios))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def checkpoint_grid(N: int, start: int = 10, count: int = 13) -> list[int]:
    return sorted({int(round(x)) for x in np.geomspace(start, N, count)})


def subordinacy_ratio(u: SolutionPath, v: SolutionPath, checkpoints=None,
                      r_min: float = R_MIN, drop: float = DROP,
                      wronskian_tol: float = 1e-10) -> SubordinacyTrace:
    """r_N = sum_{n<=N}|u_n|^2 / sum_{n<=N}|v_n|^2 at checkpoints, with a trend tag.

    to-zero: each of the last three checkpoints drops by at least ``drop``;
    bounded-oscillating: every ratio in [r_min, 1/r_min].
    """
    if u.lam != v.lam or u.family != v.family:
        raise UsageError("solutions must share family and spectral parameter")
    N = min(u.N, v.N)
    w = max(wronskian_rel(u, v, 1), wronskian_rel(u, v, N // 2))
    if w < wronskian_tol:
        raise DependentSolutionsError(f"Wronskian vanishes (relative size {w:.3g})")
    if checkpoints is None:
        checkpoints = checkpoint_grid(N)
    checkpoints = [int(c) for c in checkpoints if 1 <= c <= N]
    su = _log_cumsum_sq(u)
    sv = _log_cumsum_sq(v)
    ratios = [float(np.exp(su[c - 1] - sv[c - 1])) for c in checkpoints]
    trend = "inconclusive"
    if len(ratios) >= 4 and all(ratios[-i] * drop <= ratios[-i - 1] for i in (1, 2, 3)):
        trend = "to-zero"
    elif ratios and all(r_min <= r <= 1.0 / r_min for r in ratios):
        trend = "bounded-oscillating"
    return SubordinacyTrace(u.lam, checkpoints, ratios, trend, r_min, w)


def log_product(mu_seq, n0: int, n: int) -> tuple[float, float]:
    """(sum of log|mu_k|, accumulated phase) over k = n0..n-1.

    ``mu_seq`` is either a callable evaluated on the integer array k or a
    sequence holding mu_{n0}, mu_{n0+1}, ...
    """
    if n < n0:
        raise UsageError("need n >= n0")
    ks = np.arange(n0, n)
    if callable(mu_seq):
        mu = np.asarray(mu_seq(ks), dtype=np.complex128)
    else:
        mu = np.asarray(mu_seq, dtype=np.complex128)[: ks.size]
        if mu.size < ks.size:
            raise UsageError("sequence shorter than the requested range")
    zero = np.nonzero(mu == 0)[0]
    if zero.size:
        raise InputDomainError(f"zero factor at k = {int(ks[zero[0]])}")
    return math.fsum(np.log(np.abs(mu))), math.fsum(np.angle(mu))


def wronskian_sequence(u: SolutionPath, v: SolutionPath) -> np.ndarray:
    """a_n (u_n v_{n+1} - u_{n+1} v_n) for n = 1..N-1 (plain values; use when no rescaling occurred)."""
    uv, vv = u.values(), v.values()
    n = np.arange(1, min(u.N, v.N))
    return u.a[n] * (uv[n] * vv[n + 1] - uv[n + 1] * vv[n])
