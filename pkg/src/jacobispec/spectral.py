"""Eigenvalue counting and extraction for block Jacobi sections.

Counts come from Sylvester's law of inertia applied to the block LDL*
recursion D_1 = B_1 - lam, D_k = B_k - lam - A_{k-1}* D_{k-1}^{-1} A_{k-1}.
Eigenvalues are bracketed by bisection on those counts, processed level by
level so that every level is one batched kernel call.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import SingularShiftError, UsageError
from .model import CoefficientFamily, TruncatedJacobi, truncate

log = logging.getLogger(__name__)

SLOPE_MIN = 0.8
MAX_RETRIES = 4


@dataclass(frozen=True)
class Inertia:
    n_minus: int
    n_zero: int
    n_plus: int
    shift: float
    retried: bool = False


@dataclass(frozen=True)
class Interval:
    """Interval with openness flags; infinite endpoints denote half-lines."""

    lo: float
    hi: float
    open_lo: bool = True
    open_hi: bool = True

    def __post_init__(self):
        if not self.lo < self.hi:
            raise UsageError(f"interval needs lo < hi, got ({self.lo}, {self.hi})")
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise UsageError("interval endpoints must not be NaN")

    @property
    def half_line(self) -> bool:
        return math.isinf(self.lo) or math.isinf(self.hi)

    def resolve(self, T: TruncatedJacobi) -> "Interval":
        """Replace infinite endpoints by the Gershgorin bound of ``T`` plus one."""
        if not self.half_line:
            return self
        glo, ghi = T.gershgorin()
        bound = max(abs(glo), abs(ghi)) + 1.0
        lo = -bound if math.isinf(self.lo) else self.lo
        hi = bound if math.isinf(self.hi) else self.hi
        return Interval(lo, hi, self.open_lo, self.open_hi)


def sigma_tol(T: TruncatedJacobi, lam: float) -> float:
    return 1e-12 * (1.0 + abs(lam) + T.max_block_norm())


def _raw_negcounts(T: TruncatedJacobi, shifts: np.ndarray, tols: np.ndarray):
    if T.block_dim == 1:
        b, asq = T.scalar_arrays()
        return kernels.scalar_negcounts(b, asq, shifts, tols)
    counts = np.zeros(shifts.shape, dtype=np.int64)
    singular = np.full(shifts.shape, -1, dtype=np.int64)
    for i, (lam, tol) in enumerate(zip(shifts, tols)):
        neg, _, sing = kernels.block_negcount(T.diag, T.offdiag, float(lam), float(tol))
        counts[i], singular[i] = neg, sing
    return counts, singular


def ldl_inertia(T: TruncatedJacobi, lam: float, max_retries: int = MAX_RETRIES) -> Inertia:
    """Inertia of T - lam I.

    A pivot block with an eigenvalue inside sigma_tol triggers retries at
    lam -/+ 1e-9 (1 + |lam|) (widened tenfold per attempt).  n_zero is
    nonzero only when the two retries disagree.
    """
    if not math.isfinite(lam):
        raise UsageError("shift must be finite")
    size = T.size
    tol_base = T.max_block_norm()
    shifts = np.array([lam], dtype=np.float64)
    counts, sing = _raw_negcounts(T, shifts, 1e-12 * (1.0 + np.abs(shifts) + tol_base))
    if sing[0] < 0:
        neg = int(counts[0])
        return Inertia(neg, 0, size - neg, lam)
    for attempt in range(max_retries):
        delta = 1e-9 * (1.0 + abs(lam)) * 10.0**attempt
        pair = np.array([lam - delta, lam + delta])
        c, s = _raw_negcounts(T, pair, 1e-12 * (1.0 + np.abs(pair) + tol_base))
        if s[0] < 0 and s[1] < 0:
            lo_n, hi_n = int(c[0]), int(c[1])
            log.info("nudged singular shift %r by +/-%g", lam, delta)
            return Inertia(lo_n, hi_n - lo_n, size - hi_n, lam, retried=True)
    raise SingularShiftError(lam)


def negcounts(T: TruncatedJacobi, shifts) -> np.ndarray:
    """#{eigenvalues < s} for every shift (batched; singular hits resolved individually)."""
    shifts = np.asarray(shifts, dtype=np.float64)
    if shifts.size == 0:
        return np.zeros(0, dtype=np.int64)
    tols = 1e-12 * (1.0 + np.abs(shifts) + T.max_block_norm())
    counts, sing = _raw_negcounts(T, shifts, tols)
    for i in np.nonzero(sing >= 0)[0]:
        counts[i] = ldl_inertia(T, float(shifts[i])).n_minus
    return counts


def _below(T: TruncatedJacobi, x: float, inclusive: bool) -> int:
    inert = ldl_inertia(T, x)
    return inert.n_minus + (inert.n_zero if inclusive else 0)


def count(T: TruncatedJacobi, interval: Interval) -> int:
    """Number of eigenvalues of T in ``interval`` (with multiplicity)."""
    iv = interval.resolve(T)
    upper = _below(T, iv.hi, inclusive=not iv.open_hi)
    lower = _below(T, iv.lo, inclusive=iv.open_lo)
    return upper - lower


def eigenvalues_in(T: TruncatedJacobi, interval: Interval, tol: float) -> np.ndarray:
    """Ascending eigenvalues in ``interval``, each the midpoint of a bracket of width <= tol."""
    if not tol > 0:
        raise UsageError("tol must be positive")
    iv = interval.resolve(T)
    n_lo = _below(T, iv.lo, inclusive=iv.open_lo)
    n_hi = _below(T, iv.hi, inclusive=not iv.open_hi)
    frontier = [(iv.lo, iv.hi, n_lo, n_hi)] if n_hi > n_lo else []
    found: list[tuple[float, int]] = []
    while frontier:
        split, mids = [], []
        for lo, hi, nl, nh in frontier:
            mid = 0.5 * (lo + hi)
            if hi - lo <= tol or not lo < mid < hi:
                found.append((mid, nh - nl))
            else:
                split.append((lo, hi, nl, nh))
                mids.append(mid)
        if not split:
            break
        cm = negcounts(T, np.array(mids))
        frontier = []
        for (lo, hi, nl, nh), mid, c in zip(split, mids, cm):
            c = int(c)
            if c > nl:
                frontier.append((lo, mid, nl, c))
            if nh > c:
                frontier.append((mid, hi, c, nh))
    found.sort()
    return np.array([lam for lam, k in found for _ in range(k)], dtype=np.float64)


# -- truncation-schedule classification --------------------------------------


@dataclass
class SubintervalReport:
    lo: float
    hi: float
    counts: list[int]
    match_distance: float | None
    count_slope: float | None
    spacing_slope: float | None
    tag: str


@dataclass
class SpectralReport:
    family_id: str
    interval: tuple[float, float]
    schedule: list[int]
    match_tol_rel: float
    slope_min: float
    subintervals: list[SubintervalReport]
    eigenvalues: dict[int, list[np.ndarray]] = field(repr=False)

    @property
    def tags(self) -> list[str]:
        return [s.tag for s in self.subintervals]

    @property
    def total_counts(self) -> list[int]:
        return [int(sum(s.counts[k] for s in self.subintervals)) for k in range(len(self.schedule))]

    def to_dict(self) -> dict:
        return {
            "family": self.family_id,
            "interval": list(self.interval),
            "schedule": list(self.schedule),
            "match_tol_rel": self.match_tol_rel,
            "slope_min": self.slope_min,
            "total_counts": self.total_counts,
            "subintervals": [dict(s.__dict__) for s in self.subintervals],
        }

    def eigenvalue_rows(self):
        """Rows (lambda, interval_lo, interval_hi, N) for CSV export."""
        for N in self.schedule:
            for sub, vals in zip(self.subintervals, self.eigenvalues[N]):
                for lam in vals:
                    yield (float(lam), sub.lo, sub.hi, N)


def _scan(args):
    f, N, edges, tol = args
    T = truncate(f, N)
    vals = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        vals.append(eigenvalues_in(T, Interval(lo, hi, open_lo=False, open_hi=True), tol))
    return vals


def _loglog_slope(xs, ys) -> float | None:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) < 2 or np.any(ys <= 0):
        return None
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def classify(f: CoefficientFamily, interval: Interval, grid: int, schedule,
             match_tol_rel: float = 1e-6, slope_min: float = SLOPE_MIN,
             tol: float | None = None, map_fn=map) -> SpectralReport:
    """Tag each of ``grid`` subintervals as discrete-like, continuous-like or inconclusive.

    discrete-like: equal counts at the last two N and every eigenvalue at the
    second-to-last N within match_tol_rel * (1 + |lam|) of its partner.
    continuous-like: log-log slope of count vs N >= slope_min and median
    nearest-neighbour spacing slope <= -slope_min.
    ``map_fn`` may be an executor's ``map``; results do not depend on it.
    """
    schedule = [int(N) for N in schedule]
    if len(schedule) < 3 or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise UsageError("schedule must be strictly increasing with at least 3 entries")
    if grid < 1:
        raise UsageError("grid must be >= 1")
    iv = interval
    if iv.half_line:
        iv = iv.resolve(truncate(f, schedule[-1]))
    edges = np.linspace(iv.lo, iv.hi, grid + 1)
    if tol is None:
        tol = 1e-9 * (1.0 + max(abs(iv.lo), abs(iv.hi)))
    per_n = list(map_fn(_scan, [(f, N, edges, tol) for N in schedule]))
    eigen = {N: vals for N, vals in zip(schedule, per_n)}

    subs = []
    for j in range(grid):
        counts = [len(eigen[N][j]) for N in schedule]
        prev, last = eigen[schedule[-2]][j], eigen[schedule[-1]][j]
        match = None
        if len(prev) == len(last):
            match = float(np.max(np.abs(prev - last))) if len(prev) else 0.0
            limit = match_tol_rel * (1.0 + np.abs(prev)) if len(prev) else np.zeros(0)
            matched = bool(np.all(np.abs(prev - last) <= limit))
        else:
            matched = False
        c_slope = _loglog_slope(schedule, counts)
        spacings = []
        for N in schedule:
            vals = eigen[N][j]
            spacings.append(float(np.median(np.diff(vals))) if len(vals) >= 2 else 0.0)
        s_slope = _loglog_slope(schedule, spacings)
        if matched:
            tag = "discrete-like"
        elif (c_slope is not None and c_slope >= slope_min
              and s_slope is not None and s_slope <= -slope_min):
            tag = "continuous-like"
        else:
            tag = "inconclusive"
        subs.append(SubintervalReport(float(edges[j]), float(edges[j + 1]), counts,
                                      match, c_slope, s_slope, tag))
    return SpectralReport(f.family_id, (float(iv.lo), float(iv.hi)), schedule,
                          match_tol_rel, slope_min, subs, eigen)
