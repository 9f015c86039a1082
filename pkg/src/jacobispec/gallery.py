"""Named reproduction experiments and the manifest runner behind ``jacobispec reproduce``.

Each experiment returns (observed, passed, artifacts); artifacts map file
names to either a JSON-able payload or (header, rows) for CSV.
"""

import difflib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checkers, io, spectral, transfer
from .errors import UsageError
from .model import make_family, residual_example0


@dataclass
class Experiment:
    name: str
    reference: str
    expected: str
    run: callable = field(repr=False)
    defaults: dict = field(default_factory=dict)


def _example0(opts, seed, map_fn):
    rep = residual_example0(opts["alpha"], opts["beta"], opts["x"], opts["N"])
    target = 2 * opts["beta"] - 2 * opts["x"] + 1
    ok = abs(rep.growth_exponent - target) <= opts["tolerance"] and rep.S_J_cauchy
    observed = f"S_B exponent {rep.growth_exponent:.4f} (target {target:.4f}), S_J Cauchy {rep.S_J_cauchy}"
    return observed, ok, {"example0.json": rep}


def _example1_dichotomy(opts, seed, map_fn):
    f = make_family("example1", alpha=opts["alpha"], b=opts["b"])
    sched = opts["schedule"]
    up = spectral.classify(f, spectral.Interval(*opts["upper"]), 1, sched, map_fn=map_fn)
    low = spectral.classify(f, spectral.Interval(*opts["lower"]), 1, sched, map_fn=map_fn)
    ok = up.tags == ["discrete-like"] and low.tags == ["continuous-like"]
    s_up, s_low = up.subintervals[0], low.subintervals[0]
    observed = (f"upper {s_up.tag} counts {s_up.counts}; lower {s_low.tag} counts {s_low.counts} "
                f"slope {s_low.count_slope:.3f}")
    rows = list(up.eigenvalue_rows()) + list(low.eigenvalue_rows())
    return observed, ok, {"example1-upper.json": up, "example1-lower.json": low,
                          "example1-eigenvalues.csv": (["lambda", "interval_lo", "interval_hi", "N"], rows)}


def _thm_a_bound(opts, seed, map_fn):
    fams = [make_family("example1", alpha=0.75, b=1.0), make_family("prop1_example")]
    rows, records = [], {}
    for f in fams:
        res = checkers.empirical_bound_check(f, opts["c"], opts["a_values"], opts["schedule"])
        records[f.family_id] = res
        rows += [(f.family_id, r["N"], r["a"], r["count"], r["bound"], r["ok"]) for r in res]
    bad = [r for r in rows if not r[-1]]
    observed = f"{len(rows) - len(bad)}/{len(rows)} counts within d*cutoff + d"
    return observed, not bad, {"thmA-bound.json": records,
                               "thmA-bound.csv": (["family", "N", "a", "count", "bound", "ok"], rows)}


def _positivity_probe(opts, seed, map_fn):
    f = make_family("example1", alpha=0.75, b=1.0)
    rep = checkers.thm_a_witnesses(f, opts["c"], opts["a"], 1000)
    cut = rep.witnesses["calN"][checkers._key(opts["a"])]
    probe = checkers.form_positivity_probe(f, opts["a"], opts["c"], opts["trials"],
                                           (cut, cut + opts["width"]), seed=seed)
    observed = f"min quotient {probe.min_quotient:.6g} beyond block {cut}"
    return observed, probe.passed, {"positivity-probe.json": probe}


def _prop3_det(opts, seed, map_fn):
    al = opts["alpha"]
    f = make_family("step3", alpha=al, delta=opts["delta"])
    ns = np.arange(opts["n_min"], opts["n_max"] + 1)
    rows, worst = [], 0.0
    for lam in opts["lams"]:
        det = transfer.det2(transfer.kstep_products(f, ns, 3, lam)).real
        ref = (1 - 1 / ns) ** al
        diff = np.abs(det - ref)
        worst = max(worst, float(diff.max()))
        rows += [(float(lam), int(n), float(x), float(y), float(z))
                 for n, x, y, z in zip(ns, det, ref, diff)]
    ok = worst <= opts["tolerance"]
    return (f"max |det - (1-1/n)^alpha| = {worst:.3g} (tol {opts['tolerance']:g})", ok,
            {"prop3-det.csv": (["lambda", "n", "det", "closed_form", "diff"], rows)})


def trace_constant(f, ns, lam, exponent=1.5):
    """Smallest C with |tr Sigma_n - expansion| <= C n^-exponent on ns."""
    al, de = f.params["alpha"], f.params["delta"]
    S = transfer.kstep_products(f, ns, 3, lam)
    tr = (S[:, 0, 0] + S[:, 1, 1]).real
    x = 3.0 * ns
    expansion = de - 3 * lam / x**al - al * de / x
    return float(np.max(np.abs(tr - expansion) * ns.astype(float) ** exponent))


def modulus_identity_error(f, ns, lam):
    S = transfer.kstep_products(f, ns, 3, lam)
    p, q = transfer.eig_2x2_stack(S)
    h = 0.5 * (S[:, 0, 0] + S[:, 1, 1])
    det = transfer.det2(S)
    neg = (h * h - det).real < 0
    err = np.abs(np.abs(p) ** 2 - det.real)[neg]
    err2 = np.abs(np.abs(q) ** 2 - det.real)[neg]
    return int(neg.sum()), float(max(err.max(initial=0.0), err2.max(initial=0.0)))


def _prop3_identities(opts, seed, map_fn):
    det_obs, det_ok, art = _prop3_det(opts, seed, map_fn)
    f = make_family("step3", alpha=opts["alpha"], delta=opts["delta"])
    C = trace_constant(f, np.arange(10, 10001), 1.0)
    n_neg, mod_err = modulus_identity_error(f, np.arange(5, 501), 1.0)
    ok = det_ok and C <= opts["trace_C_max"] and n_neg > 0 and mod_err <= opts["tolerance"]
    observed = f"{det_obs}; trace constant {C:.4g}; |lam|^2 = det error {mod_err:.3g} on {n_neg} n"
    return observed, ok, art


def _prop3_subordinacy(opts, seed, map_fn):
    N, lam = opts["N"], opts["lam"]
    g = make_family("step3", alpha=0.75, delta=1.0)
    u = transfer.solve_recursion(g, lam, (1, 0), N)
    v = transfer.solve_recursion(g, lam, (0, 1), N)
    ac = transfer.subordinacy_ratio(u, v)
    e = make_family("example1", alpha=0.75, b=1.0)
    dec = transfer.solve_recursion(e, lam, (1, 1e-30), N, "backward")
    gen = transfer.solve_recursion(e, lam, (1, 0.3), N)
    disc = transfer.subordinacy_ratio(dec, gen)
    ok = ac.trend == "bounded-oscillating" and disc.trend == "to-zero"
    observed = f"step3 {ac.trend}; example1 {disc.trend}"
    return observed, ok, {"subordinacy-step3.csv": (["N", "ratio"], ac.rows()),
                          "subordinacy-example1.csv": (["N", "ratio"], disc.rows()),
                          "subordinacy.json": {"step3": ac, "example1": disc}}


def _prop5_margin(opts, seed, map_fn):
    h = opts["horizon"]
    base = dict(alpha1=1.0, alpha2=1.0, beta1=1.0, beta2=1.0, C1=1.0, C2=1.0)
    sub = checkers.thm_b_margins(make_family("prop5", **base, D1=3.0, D2=3.0), h)
    crit = checkers.thm_b_margins(make_family("prop5", **base, D1=2.0, D2=2.0), h)
    total = sub.witnesses["tail_sum"]
    ok = (abs(total - 2 / 3) <= opts["tolerance"] and sub.verdicts["margin"].startswith("holds")
          and crit.verdicts["margin"] == "fails (< 1 not satisfied)")
    observed = f"tail sum {total:.6f}; critical family: {crit.verdicts['margin']}"
    return observed, ok, {"prop5-subcritical.json": sub, "prop5-critical.json": crit}


def random_hermitian(rng, n, shift=0.0):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (X + X.conj().T) + shift * np.eye(n)


def random_positive(rng, n, floor):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return X @ X.conj().T / n + floor * np.eye(n)


def schur_trials(rng, trials, max_block=12):
    """Equivalence bits for random block matrices with C >= 0.1 I."""
    bits = []
    for _ in range(trials):
        p, q = rng.integers(1, max_block + 1, size=2)
        A = random_hermitian(rng, p, shift=rng.uniform(-2, 4))
        C = random_positive(rng, q, 0.1)
        B = (rng.standard_normal((p, q)) + 1j * rng.standard_normal((p, q))) * rng.uniform(0.1, 1.5)
        bits.append(checkers.schur_frobenius(A, B, C).equivalent)
    return bits


def planted_rank_trials(rng, trials, max_block=12):
    """PSD block matrix plus a rank-one negative term, tested with budget 1."""
    bits = []
    for _ in range(trials):
        p, q = rng.integers(1, max_block + 1, size=2)
        n = p + q
        X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        M = X @ X.conj().T / n + 0.1 * np.eye(n)
        w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        M = M - rng.uniform(1, 20) * np.outer(w, w.conj())
        bits.append(checkers.schur_frobenius_modF(M[:p, :p], M[:p, p:], M[p:, p:], 1).equivalent)
    return bits


def _schur(opts, seed, map_fn):
    rng = np.random.default_rng(seed)
    plain = schur_trials(rng, opts["trials"])
    modf = planted_rank_trials(rng, opts["rank_trials"])
    ok = all(plain) and all(modf)
    observed = f"equivalence {sum(plain)}/{len(plain)}; rank-budget {sum(modf)}/{len(modf)}"
    return observed, ok, {"schur-frobenius.json": {"plain": plain, "rank_budget": modf, "seed": seed}}


EXPERIMENTS = {e.name: e for e in [
    Experiment("example0", "diagonal part unbounded relative to the full operator",
               "S_B exponent 2b-2x+1 +-0.05, S_J Cauchy", _example0,
               dict(alpha=0.75, beta=0.3, x=0.6, N=100_000, tolerance=0.05)),
    Experiment("example1-dichotomy", "alternating diagonal: discrete above 0, continuous below",
               "(0.5,10) discrete-like, (-10,-0.5) continuous-like", _example1_dichotomy,
               dict(alpha=0.75, b=1.0, schedule=[1000, 2000, 4000], upper=[0.5, 10.0],
                    lower=[-10.0, -0.5])),
    Experiment("thmA-bound", "finite eigenvalue count below the even/odd cutoff",
               "count in (c+eps, c+2a) <= d*cutoff + d", _thm_a_bound,
               dict(c=0.0, a_values=[1.0, 5.0, 10.0], schedule=[500, 1000, 2000])),
    Experiment("positivity-probe", "shifted quadratic form nonnegative beyond the cutoff",
               "min Rayleigh quotient >= -1e-8", _positivity_probe,
               dict(a=2.0, c=0.0, trials=200, width=200)),
    Experiment("prop3-identities", "three-step transfer product identities",
               "det error <= tol, trace constant <= 10, |lam|^2 = det", _prop3_identities,
               dict(alpha=0.75, delta=1.0, lams=[-2.0, 1.0, 5.0], n_min=2, n_max=500,
                    tolerance=1e-10, trace_C_max=10.0)),
    Experiment("prop3-subordinacy", "subordinacy separates continuous from discrete",
               "step3 bounded-oscillating, example1 to-zero", _prop3_subordinacy,
               dict(lam=1.0, N=10_000)),
    Experiment("prop5-margin", "matched-exponent margin limit (C1+C2)/sqrt(D1 D2)",
               "tail sum within 0.05 of 2/3; critical family fails", _prop5_margin,
               dict(horizon=100_000, tolerance=0.05)),
    Experiment("schur-frobenius", "block positivity via Schur complement, exact and mod finite rank",
               "equivalence bit true in every trial", _schur,
               dict(trials=500, rank_trials=300)),
    Experiment("prop3-det-identity", "three-step transfer determinant closed form",
               "max |det - (1-1/n)^alpha| <= tol", _prop3_det,
               dict(alpha=0.75, delta=1.0, lams=[1.0], n_min=2, n_max=500, tolerance=1e-10)),
]}

DEFAULT_MANIFEST = ["example0", "example1-dichotomy", "thmA-bound", "positivity-probe",
                    "prop3-identities", "prop3-subordinacy", "prop5-margin", "schur-frobenius"]


@dataclass
class SummaryRow:
    name: str
    reference: str
    expected: str
    observed: str
    passed: bool
    error: str | None = None


def parse_manifest(entries) -> list[tuple[str, dict]]:
    """Entries are names or {"name": ..., <option overrides>} objects."""
    out = []
    for e in entries:
        if isinstance(e, str):
            name, over = e, {}
        elif isinstance(e, dict) and "name" in e:
            over = {k: v for k, v in e.items() if k != "name"}
            name = e["name"]
        else:
            raise UsageError(f"bad manifest entry {e!r}")
        if name not in EXPERIMENTS:
            close = difflib.get_close_matches(name, EXPERIMENTS, n=3)
            hint = f"; did you mean {', '.join(close)}?" if close else ""
            raise UsageError(f"unknown experiment {name!r}{hint}")
        unknown = set(over) - set(EXPERIMENTS[name].defaults)
        if unknown:
            raise UsageError(f"unknown options for {name}: {sorted(unknown)}")
        out.append((name, over))
    return out


def _write_artifact(out_dir: Path, fname: str, payload):
    if fname.endswith(".csv"):
        header, rows = payload
        io.write_csv(out_dir / fname, header, rows)
    else:
        io.write_report(out_dir / fname, fname[:-5], payload)


def reproduce_gallery(manifest, out_dir=None, seed: int = 0, map_fn=map) -> list[SummaryRow]:
    """Run every manifest entry; a failing or crashing entry does not stop the rest."""
    rows = []
    for name, over in parse_manifest(manifest):
        exp = EXPERIMENTS[name]
        opts = {**exp.defaults, **over}
        try:
            observed, ok, artifacts = exp.run(opts, seed, map_fn)
            row = SummaryRow(name, exp.reference, exp.expected, observed, bool(ok))
        except Exception as exc:  # noqa: BLE001 - reported per row
            row = SummaryRow(name, exp.reference, exp.expected, "error", False,
                             f"{type(exc).__name__}: {exc}")
            artifacts = {}
        if out_dir is not None:
            sub = Path(out_dir) / name
            for fname, payload in artifacts.items():
                _write_artifact(sub, fname, payload)
        rows.append(row)
    return rows
