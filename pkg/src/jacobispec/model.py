"""Coefficient families (A_n, B_n) and their finite Dirichlet sections.

Indices are 1-based throughout: ``block_at(f, 1)`` returns (A_1, B_1).
A generator maps an integer array of indices to two stacks of shape
(k, d, d), which keeps long horizons vectorised.
"""

import difflib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .errors import InputDomainError, SingularBlockError, UsageError

MAX_INDEX = 10**7
MAX_SECTION = 10**6

Generator = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class CoefficientFamily:
    name: str
    block_dim: int
    params: Mapping[str, float]
    generator: Generator = field(repr=False, compare=False)
    max_index: int = MAX_INDEX

    @property
    def family_id(self) -> str:
        args = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
        return f"{self.name}({args})"

    def blocks(self, ns) -> tuple[np.ndarray, np.ndarray]:
        """Stacks (A_n, B_n) for the 1-based indices ``ns``."""
        ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
        if ns.size and (ns.min() < 1 or ns.max() > self.max_index):
            raise UsageError(f"index outside [1, {self.max_index}] for {self.name}")
        A, B = self.generator(ns)
        A = np.asarray(A, dtype=np.complex128).reshape(-1, self.block_dim, self.block_dim)
        B = np.asarray(B, dtype=np.complex128).reshape(-1, self.block_dim, self.block_dim)
        B = 0.5 * (B + B.conj().transpose(0, 2, 1))
        return A, B

    def scalar_coefficients(self, N: int) -> tuple[np.ndarray, np.ndarray]:
        """1-based real arrays a[0..N], b[0..N] for a scalar family (a[0] = b[0] = 0)."""
        if self.block_dim != 1:
            raise UsageError("scalar coefficients requested for a block family")
        A, B = self.blocks(np.arange(1, N + 1))
        a = np.zeros(N + 1)
        b = np.zeros(N + 1)
        a[1:] = A[:, 0, 0].real
        b[1:] = B[:, 0, 0].real
        if np.any(A[:, 0, 0].imag != 0.0):
            raise UsageError("scalar recursion needs real a_n")
        return a, b


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _scalar_stacks(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return a.reshape(-1, 1, 1), b.reshape(-1, 1, 1)


def _power(n, p, scale=1.0):
    # log space keeps huge horizons finite
    return scale * np.exp(p * np.log(np.asarray(n, dtype=np.float64)))


def _require(cond: bool, message: str):
    if not cond:
        raise UsageError(message)


# -- catalog -----------------------------------------------------------------


def scalar_power(alpha: float) -> CoefficientFamily:
    """a_n = n**alpha, b_n = 0."""
    _require(0 < alpha <= 1, "scalar_power requires 0 < alpha <= 1")

    def gen(ns):
        return _scalar_stacks(_power(ns, alpha), np.zeros(ns.shape))

    return CoefficientFamily("scalar_power", 1, {"alpha": alpha}, gen)


def scalar_power_diag(alpha: float, beta: float) -> CoefficientFamily:
    """a_n = n**alpha, b_n = n**beta."""
    _require(0 < alpha <= 1, "scalar_power_diag requires 0 < alpha <= 1")
    _require(0 < beta < alpha, "scalar_power_diag requires 0 < beta < alpha")

    def gen(ns):
        return _scalar_stacks(_power(ns, alpha), _power(ns, beta))

    return CoefficientFamily("scalar_power_diag", 1, {"alpha": alpha, "beta": beta}, gen)


def example1(alpha: float, b: float) -> CoefficientFamily:
    """a_n = n**alpha; b_n = b n**alpha on odd n, 0 on even n."""
    _require(2 / 3 <= alpha < 1, "example1 requires 2/3 <= alpha < 1")
    _require(b > 0, "example1 requires b > 0")

    def gen(ns):
        diag = np.where(ns % 2 == 1, _power(ns, alpha, b), 0.0)
        return _scalar_stacks(_power(ns, alpha), diag)

    return CoefficientFamily("example1", 1, {"alpha": alpha, "b": b}, gen)


def heuristic2step(alpha: float, beta: float) -> CoefficientFamily:
    """a_n = n**alpha; b_n = n**beta on odd n, 0 on even n."""
    _require(0.5 < alpha < 1, "heuristic2step requires 1/2 < alpha < 1")
    _require(0 < beta < alpha, "heuristic2step requires 0 < beta < alpha")

    def gen(ns):
        diag = np.where(ns % 2 == 1, _power(ns, beta), 0.0)
        return _scalar_stacks(_power(ns, alpha), diag)

    return CoefficientFamily("heuristic2step", 1, {"alpha": alpha, "beta": beta}, gen)


def step3(alpha: float, delta: float) -> CoefficientFamily:
    """a_n = n**alpha; b_n = delta n**alpha when 3 | n, else 0."""
    _require(0.5 < alpha < 1, "step3 requires 1/2 < alpha < 1")
    _require(delta > 0, "step3 requires delta > 0")

    def gen(ns):
        diag = np.where(ns % 3 == 0, _power(ns, alpha, delta), 0.0)
        return _scalar_stacks(_power(ns, alpha), diag)

    return CoefficientFamily("step3", 1, {"alpha": alpha, "delta": delta}, gen)


def prop5(alpha1, alpha2, beta1, beta2, C1, C2, D1, D2) -> CoefficientFamily:
    """a_{2n} = C1 n^alpha1, a_{2n-1} = C2 n^alpha2, b_{2n} = D1 n^beta1, b_{2n-1} = D2 n^beta2."""
    params = dict(alpha1=alpha1, alpha2=alpha2, beta1=beta1, beta2=beta2, C1=C1, C2=C2, D1=D1, D2=D2)
    for key, val in params.items():
        _require(val > 0, f"prop5 requires {key} > 0")

    def gen(ns):
        even = ns % 2 == 0
        half = (ns + 1) // 2
        a = np.where(even, _power(half, alpha1, C1), _power(half, alpha2, C2))
        b = np.where(even, _power(half, beta1, D1), _power(half, beta2, D2))
        return _scalar_stacks(a, b)

    return CoefficientFamily("prop5", 1, params, gen)


def prop6(gamma=1.0, tau=0.75, b_scale=1.0, b_exp=0.75, eps=0.1, eta=1.0,
          a_scale=0.1, a_exp=0.75) -> CoefficientFamily:
    """2x2 blocks: B_{2n-1} = gamma n^tau I, B_{4j} = 0, B_{4j-2} = diag(0, b_j),
    A_n = a_n [[1, 0], [eps, eta]] with b_j = b_scale j^b_exp, a_n = a_scale n^a_exp.

    The defaults give tail margins s1 ~ 0.22 and s2 ~ 0.22 (sum ~ 0.44 < 1).
    """
    params = dict(gamma=gamma, tau=tau, b_scale=b_scale, b_exp=b_exp, eps=eps, eta=eta,
                  a_scale=a_scale, a_exp=a_exp)
    for key in ("gamma", "tau", "b_scale", "b_exp", "a_scale"):
        _require(params[key] > 0, f"prop6 requires {key} > 0")
    _require(eta != 0, "prop6 requires eta != 0 (A_n invertible)")
    _require(a_exp >= 0, "prop6 requires a_exp >= 0")

    def gen(ns):
        k = ns.shape[0]
        A = np.zeros((k, 2, 2))
        an = _power(ns, a_exp, a_scale)
        A[:, 0, 0] = an
        A[:, 1, 0] = an * eps
        A[:, 1, 1] = an * eta
        B = np.zeros((k, 2, 2))
        odd = ns % 2 == 1
        g = _power((ns + 1) // 2, tau, gamma)
        B[odd, 0, 0] = g[odd]
        B[odd, 1, 1] = g[odd]
        partial = ns % 4 == 2
        j = (ns + 2) // 4
        B[partial, 1, 1] = _power(j[partial], b_exp, b_scale)
        return A, B

    return CoefficientFamily("prop6", 2, params, gen)


def custom(name: str, block_dim: int, block_fn, params: Mapping[str, float] | None = None,
           max_index: int = MAX_INDEX) -> CoefficientFamily:
    """Family from a per-index callable ``block_fn(n) -> (A_n, B_n)``."""
    _require(block_dim >= 1, "block_dim must be >= 1")

    def gen(ns):
        As, Bs = [], []
        for n in ns:
            A, B = block_fn(int(n))
            As.append(np.asarray(A, dtype=np.complex128).reshape(block_dim, block_dim))
            Bs.append(np.asarray(B, dtype=np.complex128).reshape(block_dim, block_dim))
        return np.array(As), np.array(Bs)

    return CoefficientFamily(name, block_dim, dict(params or {}), gen, max_index)


def custom_scalar(name: str, a_fn, b_fn, params: Mapping[str, float] | None = None) -> CoefficientFamily:
    """Scalar family from vectorised callables a_fn(ns), b_fn(ns)."""

    def gen(ns):
        nsf = ns.astype(np.float64)
        return _scalar_stacks(a_fn(nsf), b_fn(nsf))

    return CoefficientFamily(name, 1, dict(params or {}), gen)


def prop1_example(scale: float = 1.0, a_exp: float = 2.0) -> CoefficientFamily:
    """b_{2j-1} = scale j, b_{2j} = -scale j, a_n = n**a_exp (two-sided blow-up)."""

    def b_fn(ns):
        j = np.floor((ns + 1) / 2)
        return np.where(ns % 2 == 1, scale * j, -scale * j)

    return custom_scalar("prop1_example", lambda ns: ns**a_exp, b_fn,
                         {"scale": scale, "a_exp": a_exp})


CATALOG = {
    "scalar_power": scalar_power,
    "scalar_power_diag": scalar_power_diag,
    "example1": example1,
    "heuristic2step": heuristic2step,
    "step3": step3,
    "prop5": prop5,
    "prop6": prop6,
    "prop1_example": prop1_example,
}


def make_family(name: str, **params) -> CoefficientFamily:
    """Build a catalog family by name; ``custom`` takes ``path``."""
    if name == "custom":
        if "path" not in params:
            raise UsageError("custom family needs a table path")
        return load_table(params["path"])
    if name not in CATALOG:
        hint = difflib.get_close_matches(name, list(CATALOG) + ["custom"], n=3)
        extra = f"; did you mean {', '.join(hint)}?" if hint else ""
        raise UsageError(f"unknown family {name!r}{extra}")
    try:
        return CATALOG[name](**params)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {name}: {exc}") from None


# -- table files --------------------------------------------------------------


def load_table(path) -> CoefficientFamily:
    """Read a custom family table.

    Format: first non-comment line ``d=<int>``; then one record per line
    ``n A(2d^2 reals, re/im interleaved, row-major) B(2d^2 reals)`` with
    n = 1, 2, ... consecutive.  Blank lines and ``#`` comments are skipped.
    """
    path = Path(path)
    d = None
    As, Bs = [], []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if d is None:
                if not line.startswith("d="):
                    raise InputDomainError(f"{path}:{lineno}: expected header 'd=<int>'")
                try:
                    d = int(line[2:])
                except ValueError:
                    raise InputDomainError(f"{path}:{lineno}: bad block dimension") from None
                if d < 1:
                    raise InputDomainError(f"{path}:{lineno}: block dimension must be >= 1")
                continue
            fields = line.split()
            if len(fields) != 1 + 4 * d * d:
                raise InputDomainError(
                    f"{path}:{lineno}: expected {1 + 4 * d * d} fields, got {len(fields)}")
            try:
                n = int(fields[0])
                vals = np.array([float(x) for x in fields[1:]])
            except ValueError:
                raise InputDomainError(f"{path}:{lineno}: non-numeric field") from None
            if n != len(As) + 1:
                raise InputDomainError(f"{path}:{lineno}: expected index {len(As) + 1}, got {n}")
            if not np.all(np.isfinite(vals)):
                raise InputDomainError(f"{path}:{lineno}: non-finite entry")
            cvals = vals[0::2] + 1j * vals[1::2]
            A = cvals[: d * d].reshape(d, d)
            B = cvals[d * d:].reshape(d, d)
            if np.abs(B - B.conj().T).max() > 1e-12 * (1.0 + np.abs(B).max()):
                raise InputDomainError(f"{path}:{lineno}: B block is not Hermitian")
            if abs(np.linalg.det(A)) == 0.0:
                raise InputDomainError(f"{path}:{lineno}: A block is singular")
            As.append(A)
            Bs.append(B)
    if d is None or not As:
        raise InputDomainError(f"{path}: empty table")
    A_tab = np.array(As)
    B_tab = np.array(Bs)

    def gen(ns):
        return A_tab[ns - 1], B_tab[ns - 1]

    return CoefficientFamily(f"custom:{path.name}", d, {}, gen, max_index=len(As))


def write_table(path, family: CoefficientFamily, n_max: int) -> None:
    """Export blocks 1..n_max of a family in the table format."""
    A, B = family.blocks(np.arange(1, n_max + 1))
    d = family.block_dim
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"d={d}\n")
        for n in range(n_max):
            nums = []
            for M in (A[n], B[n]):
                for z in M.reshape(-1):
                    nums += [format(z.real, ".17g"), format(z.imag, ".17g")]
            fh.write(f"{n + 1} " + " ".join(nums) + "\n")


# -- blocks and sections ------------------------------------------------------


def block_at(f: CoefficientFamily, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(A_n, B_n); raises if A_n is singular."""
    if n < 1:
        raise UsageError("block index starts at 1")
    A, B = f.blocks([n])
    if abs(np.linalg.det(A[0])) == 0.0:
        raise SingularBlockError(f"A_{n} of {f.family_id} is singular")
    return A[0], B[0]


def invertibility_report(f: CoefficientFamily, n_max: int) -> dict:
    """Smallest |det A_n| and largest condition number over 1..n_max."""
    A, _ = f.blocks(np.arange(1, n_max + 1))
    dets = np.abs(np.linalg.det(A))
    conds = np.linalg.cond(A)
    return {
        "n_max": n_max,
        "min_abs_det": float(dets.min()),
        "argmin_abs_det": int(dets.argmin()) + 1,
        "max_condition": float(conds.max()),
        "all_invertible": bool(np.all(dets > 0)),
    }


@dataclass(frozen=True)
class TruncatedJacobi:
    """N-block Dirichlet section: diag holds B_1..B_N, offdiag A_1..A_{N-1}."""

    family_id: str
    diag: np.ndarray = field(repr=False)
    offdiag: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.diag.setflags(write=False)
        self.offdiag.setflags(write=False)

    @property
    def block_dim(self) -> int:
        return self.diag.shape[1]

    @property
    def num_blocks(self) -> int:
        return self.diag.shape[0]

    @property
    def size(self) -> int:
        return self.block_dim * self.num_blocks

    def scalar_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(b, |a|^2) for d == 1 sections."""
        if self.block_dim != 1:
            raise UsageError("scalar arrays need block_dim == 1")
        return self.diag[:, 0, 0].real.copy(), np.abs(self.offdiag[:, 0, 0]) ** 2

    def dense(self) -> np.ndarray:
        d, N = self.block_dim, self.num_blocks
        M = np.zeros((d * N, d * N), dtype=np.complex128)
        for k in range(N):
            M[k * d:(k + 1) * d, k * d:(k + 1) * d] = self.diag[k]
        for k in range(N - 1):
            M[k * d:(k + 1) * d, (k + 1) * d:(k + 2) * d] = self.offdiag[k]
            M[(k + 1) * d:(k + 2) * d, k * d:(k + 1) * d] = self.offdiag[k].conj().T
        return M

    def max_block_norm(self) -> float:
        norms = [np.abs(self.diag).sum(axis=2).max()]
        if self.num_blocks > 1:
            norms.append(np.abs(self.offdiag).sum(axis=2).max())
        return float(max(norms))

    def gershgorin(self) -> tuple[float, float]:
        """Interval containing every eigenvalue (row-sum bound)."""
        d = self.block_dim
        centers = self.diag.reshape(-1, d, d)[:, np.arange(d), np.arange(d)].real
        radius = np.abs(self.diag).sum(axis=2) - np.abs(centers)
        if self.num_blocks > 1:
            radius[:-1] += np.abs(self.offdiag).sum(axis=2)
            radius[1:] += np.abs(self.offdiag).sum(axis=1)
        return float((centers - radius).min()), float((centers + radius).max())


def truncate(f: CoefficientFamily, N: int, max_size: int = MAX_SECTION) -> TruncatedJacobi:
    """Dirichlet section with blocks 1..N (A_N dropped)."""
    if N < 2:
        raise UsageError("a section needs N >= 2 blocks")
    if f.block_dim * N > max_size:
        raise UsageError(f"section size {f.block_dim * N} exceeds cap {max_size}")
    A, B = f.blocks(np.arange(1, N + 1))
    return TruncatedJacobi(f.family_id, np.ascontiguousarray(B), np.ascontiguousarray(A[:-1]))


def apply(T: TruncatedJacobi, v) -> np.ndarray:
    """(Tv)_k = A_{k-1}* v_{k-1} + B_k v_k + A_k v_{k+1}."""
    v = np.asarray(v, dtype=np.complex128)
    if v.shape != (T.size,):
        raise UsageError(f"vector length {v.shape} does not match section size {T.size}")
    d = T.block_dim
    x = v.reshape(T.num_blocks, d)
    out = np.einsum("kij,kj->ki", T.diag, x)
    if T.num_blocks > 1:
        out[:-1] += np.einsum("kij,kj->ki", T.offdiag, x[1:])
        out[1:] += np.einsum("kji,kj->ki", T.offdiag.conj(), x[:-1])
    return out.reshape(-1)


# -- relative-unboundedness residuals ----------------------------------------


@dataclass
class Example0Report:
    alpha: float
    beta: float
    x: float
    N: int
    S_J: float
    S_J_double: float
    S_J_increment: float
    S_B: float
    growth_exponent: float
    predicted_exponent: float
    expansion_max_scaled_error: float
    S_J_cauchy: bool
    cauchy_tol: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _example0_sums(alpha, beta, x, N):
    idx = np.arange(1, N + 2)
    n = idx.astype(np.float64)
    # u_n = i^n / n^x; phases kept exact through n mod 4
    phase = _I_POWERS[idx % 4]
    u = phase * np.exp(-x * np.log(n))
    a = np.exp(alpha * np.log(n))
    Ju = np.zeros(N, dtype=np.complex128)
    Ju += a[:N] * u[1:N + 1]
    Ju[1:] += a[:N - 1] * u[:N - 1]
    Bu = np.exp(beta * np.log(n[:N])) * u[:N]
    return Ju, Bu, idx[:N]


_I_POWERS = np.array([1, 1j, -1, -1j])


def residual_example0(alpha: float, beta: float, x: float, N: int,
                      cauchy_tol: float = 1e-3) -> Example0Report:
    """Partial sums showing u in D(J_alpha) but diag(n^beta) u not in l^2."""
    _require(0 < alpha <= 1, "need 0 < alpha <= 1")
    _require(0 < beta < alpha, "need 0 < beta < alpha")
    _require(0.5 < x, "need x > 1/2 (u in l^2)")
    _require(x <= beta + 0.5, "need x <= beta + 1/2 (Bu not in l^2)")
    _require(2 * x != alpha, "need 2x != alpha")
    _require(N >= 100, "need N >= 100")
    Ju, Bu, idx = _example0_sums(alpha, beta, x, 2 * N)
    n = idx.astype(np.float64)
    cJ = np.cumsum(np.abs(Ju) ** 2)
    cB = np.cumsum(np.abs(Bu) ** 2)
    # local log-log slope of S_B over [N/100, N]
    grid = np.unique(np.geomspace(max(N // 100, 10), N, 25).astype(int))
    slope = float(np.polyfit(np.log(grid), np.log(cB[grid - 1]), 1)[0])
    lead = _I_POWERS[(idx - 1) % 4] * np.exp((alpha - x) * np.log(n)) * (2 * x - alpha) / n
    mask = n >= 10
    rel = np.abs(Ju[mask] - lead[mask]) / np.abs(lead[mask])
    scaled = float(np.max(rel * n[mask])) if mask.any() else math.nan
    return Example0Report(
        alpha=alpha, beta=beta, x=x, N=N,
        S_J=float(cJ[N - 1]), S_J_double=float(cJ[2 * N - 1]),
        S_J_increment=float(cJ[2 * N - 1] - cJ[N - 1]),
        S_B=float(cB[N - 1]), growth_exponent=slope,
        predicted_exponent=2 * beta - 2 * x + 1,
        expansion_max_scaled_error=scaled,
        S_J_cauchy=bool(cJ[2 * N - 1] - cJ[N - 1] <= cauchy_tol),
        cauchy_tol=cauchy_tol,
    )
