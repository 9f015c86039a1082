"""Command-line front end.

Exit status: 0 success, 2 a verdict failed (hypothesis falsified, bound
violated, gallery row red), 1 usage or input error.
"""

import argparse
import datetime
import difflib
import json
import logging
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import checkers, gallery, io, spectral, transfer
from ._backend import BACKEND
from .errors import JacobiSpecError, UsageError
from .model import CATALOG, load_table, make_family, truncate

EXIT_OK, EXIT_USAGE, EXIT_VERDICT = 0, 1, 2
OUT_ENV = "JACOBISPEC_OUT"

COMMANDS = ["spectrum", "count", "check-a", "check-b", "prop1", "transfer",
            "subordinacy", "probe", "reproduce"]

# per-command option defaults; keys double as the accepted config-file keys
COMMON = {"family": None, "param": [], "table": None, "out": None, "seed": 0, "workers": None}
DEFAULTS = {
    "spectrum": {"interval": None, "grid": 10, "schedule": [500, 1000, 2000],
                 "match_tol": 1e-6, "slope_min": spectral.SLOPE_MIN, "tol": None},
    "count": {"interval": None, "N": None, "closed": False},
    "check-a": {"c": 0.0, "a": [1.0], "horizon": 100_000},
    "check-b": {"horizon": 100_000, "tail_window": None, "crit_tol": checkers.CRIT_TOL},
    "prop1": {"M": [1.0, 10.0, 100.0], "horizon": 100_000},
    "transfer": {"lam": 1.0, "k": None, "window": [10, 10_000]},
    "subordinacy": {"lam": 1.0, "N": 10_000, "mode": "pair", "r_min": transfer.R_MIN},
    "probe": {"a": 2.0, "c": 0.0, "trials": 200, "support": None, "horizon": None},
    "reproduce": {"experiment": [], "manifest": None},
}
FAMILY_FREE = {"reproduce"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _family_flag_value(text: str):
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"family parameter value {text!r} is not a number") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jacobispec", description="Spectral diagnostics for block Jacobi matrices.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_text):
        s = sub.add_parser(name, help=help_text, argument_default=None)
        s.add_argument("--config", type=Path, help="JSON file with options (flags override)")
        s.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./jacobispec-out)")
        s.add_argument("--seed", type=int)
        s.add_argument("--workers", type=int)
        if name not in FAMILY_FREE:
            s.add_argument("--family", help=f"one of {', '.join(sorted(CATALOG))}, or 'custom'")
            s.add_argument("--table", type=Path, help="coefficient table for --family custom")
            s.add_argument("--param", action="append", metavar="K=V",
                           help="family parameter; unknown --name value flags are read the same way")
        return s

    s = add("spectrum", "classify spectrum character over an interval")
    s.add_argument("--interval", nargs=2, type=float, metavar=("LO", "HI"))
    s.add_argument("--grid", type=int)
    s.add_argument("--schedule", nargs="+", type=int)
    s.add_argument("--match-tol", dest="match_tol", type=float)
    s.add_argument("--slope-min", dest="slope_min", type=float)
    s.add_argument("--tol", type=float)

    s = add("count", "count section eigenvalues in an interval")
    s.add_argument("--interval", nargs=2, type=float, metavar=("LO", "HI"))
    s.add_argument("--N", type=int)
    s.add_argument("--closed", action="store_const", const=True)

    s = add("check-a", "witnesses and counting bound for the even/odd criterion")
    s.add_argument("--c", type=float)
    s.add_argument("--a", nargs="+", type=float)
    s.add_argument("--horizon", type=int)

    s = add("check-b", "pseudo-inverse margin criterion")
    s.add_argument("--horizon", type=int)
    s.add_argument("--tail-window", dest="tail_window", type=int)
    s.add_argument("--crit-tol", dest="crit_tol", type=float)

    s = add("prop1", "two-sided blow-up check")
    s.add_argument("--M", nargs="+", type=float)
    s.add_argument("--horizon", type=int)

    s = add("transfer", "k-step transfer matrices and Levinson hypotheses")
    s.add_argument("--lam", type=float)
    s.add_argument("--k", type=int)
    s.add_argument("--window", nargs=2, type=int, metavar=("LO", "HI"))

    s = add("subordinacy", "subordinacy ratio of two generalized eigenvectors")
    s.add_argument("--lam", type=float)
    s.add_argument("--N", type=int)
    s.add_argument("--mode", choices=["pair", "shoot"])
    s.add_argument("--r-min", dest="r_min", type=float)

    s = add("probe", "random positivity probe of the shifted quadratic form")
    s.add_argument("--a", type=float)
    s.add_argument("--c", type=float)
    s.add_argument("--trials", type=int)
    s.add_argument("--support", nargs=2, type=int, metavar=("LO", "HI"))
    s.add_argument("--horizon", type=int)

    s = add("reproduce", "run the reproduction gallery")
    s.add_argument("--experiment", action="append", help="experiment name (repeatable); default all")
    s.add_argument("--manifest", type=Path, help="JSON manifest: list of names or {name, overrides}")
    return p


def _split_extra(extra: list[str]) -> dict:
    """Turn leftover ``--name value`` pairs into family parameters."""
    params = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or i + 1 >= len(extra):
            raise UsageError(f"unrecognized argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            val = extra[i + 1]
            i += 2
        params[key] = _family_flag_value(val)
    return params


def resolve_config(args: argparse.Namespace, extra: list[str]) -> dict:
    """Merge built-in defaults, the optional config file and explicit flags."""
    cmd = args.command
    allowed = {**COMMON, **DEFAULTS[cmd]}
    if cmd in FAMILY_FREE:
        allowed = {k: v for k, v in allowed.items() if k not in ("family", "param", "table")}
    cfg = {k: (list(v) if isinstance(v, list) else v) for k, v in allowed.items()}
    cfg["params"] = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(data) - set(allowed) - {"params", "command"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        if data.get("command", cmd) != cmd:
            raise UsageError(f"config is for command {data['command']!r}, not {cmd!r}")
        for k, v in data.items():
            if k == "params":
                if not isinstance(v, dict):
                    raise UsageError("config 'params' must be an object")
                cfg["params"].update({str(pk): float(pv) for pk, pv in v.items()})
            elif k != "command":
                cfg[k] = v
    for k in allowed:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    for item in cfg.get("param") or []:
        if "=" not in item:
            raise UsageError(f"--param expects K=V, got {item!r}")
        k, v = item.split("=", 1)
        cfg["params"][k.strip()] = _family_flag_value(v)
    extra_params = _split_extra(extra)
    if extra_params and cmd in FAMILY_FREE:
        raise UsageError(f"unrecognized arguments: {' '.join(extra)}")
    cfg["params"].update(extra_params)
    if cfg["out"] is None:
        cfg["out"] = os.environ.get(OUT_ENV, "jacobispec-out")
    cfg["out"] = Path(cfg["out"])
    if cfg["workers"] is None:
        cfg["workers"] = os.cpu_count() or 1
    if int(cfg["workers"]) < 1:
        raise UsageError("--workers must be >= 1")
    return cfg


def _family(cfg):
    name = cfg.get("family")
    if name is None:
        raise UsageError("--family is required")
    if name == "custom":
        if cfg.get("table") is None:
            raise UsageError("--family custom needs --table PATH")
        if cfg["params"]:
            raise UsageError("table families take no parameters")
        return load_table(cfg["table"])
    return make_family(name, **cfg["params"])


def _require(cfg, key, flag):
    if cfg.get(key) is None:
        raise UsageError(f"{flag} is required")
    return cfg[key]


def _echo(kind: str, path: Path, summary: str):
    print(f"{kind}: {summary}")
    print(f"report written to {path}")


def _write_meta(out: Path, cmd: str, cfg: dict):
    meta = {"command": cmd, "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "backend": BACKEND, "python": platform.python_version(), "numpy": np.__version__,
            "workers": cfg["workers"]}
    io.write_meta(out / f"{cmd}.meta.json", meta)


def _public(cfg):
    skip = {"out", "workers", "config"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in cfg.items() if k not in skip}


def cmd_spectrum(cfg, pool_map):
    f = _family(cfg)
    lo, hi = _require(cfg, "interval", "--interval")
    rep = spectral.classify(f, spectral.Interval(lo, hi), int(cfg["grid"]), cfg["schedule"],
                            match_tol_rel=cfg["match_tol"], slope_min=cfg["slope_min"],
                            tol=cfg["tol"], map_fn=pool_map)
    out = cfg["out"]
    path = io.write_report(out / "spectrum.json", "spectrum", {"config": _public(cfg), "result": rep})
    io.write_csv(out / "eigenvalues.csv", ["lambda", "interval_lo", "interval_hi", "N"],
                 rep.eigenvalue_rows())
    tags = {t: rep.tags.count(t) for t in sorted(set(rep.tags))}
    _echo("spectrum", path, ", ".join(f"{k}: {v}" for k, v in tags.items()))
    return EXIT_OK


def cmd_count(cfg, pool_map):
    f = _family(cfg)
    lo, hi = _require(cfg, "interval", "--interval")
    N = int(_require(cfg, "N", "--N"))
    closed = bool(cfg["closed"])
    iv = spectral.Interval(lo, hi, open_lo=not closed, open_hi=not closed)
    n = spectral.count(truncate(f, N), iv)
    path = io.write_report(cfg["out"] / "count.json", "count",
                           {"config": _public(cfg), "result": {"family": f.family_id, "N": N,
                                                               "interval": [lo, hi], "closed": closed,
                                                               "count": n}})
    _echo("count", path, str(n))
    return EXIT_OK


def _verdict_exit(rep) -> int:
    return EXIT_OK if rep.passed else EXIT_VERDICT


def cmd_check_a(cfg, pool_map):
    f = _family(cfg)
    rep = checkers.thm_a_witnesses(f, float(cfg["c"]), cfg["a"], int(cfg["horizon"]))
    path = io.write_report(cfg["out"] / "check-a.json", "condition", {"config": _public(cfg), "result": rep})
    _echo("check-a", path, "hypotheses hold on window" if rep.passed else "hypotheses fail")
    return _verdict_exit(rep)


def cmd_check_b(cfg, pool_map):
    f = _family(cfg)
    rep = checkers.thm_b_margins(f, int(cfg["horizon"]), cfg["tail_window"], float(cfg["crit_tol"]))
    out = cfg["out"]
    path = io.write_report(out / "check-b.json", "condition", {"config": _public(cfg), "result": rep})
    io.write_csv(out / "margins.csv", ["n", "s1", "s2"], checkers.margin_rows(rep))
    _echo("check-b", path, f"tail sum {rep.witnesses['tail_sum']:.6f}, margin {rep.verdicts['margin']}")
    return _verdict_exit(rep)


def cmd_prop1(cfg, pool_map):
    f = _family(cfg)
    rep = checkers.prop1_check(f, cfg["M"], int(cfg["horizon"]))
    path = io.write_report(cfg["out"] / "prop1.json", "condition", {"config": _public(cfg), "result": rep})
    _echo("prop1", path, "verified for every M" if rep.passed else "fails for some M")
    return _verdict_exit(rep)


def cmd_transfer(cfg, pool_map):
    f = _family(cfg)
    lo, hi = (int(x) for x in cfg["window"])
    ns = np.arange(lo, hi + 1)
    k = cfg["k"]
    if f.name in transfer.SPLITTINGS:
        k_cat = transfer.SPLITTINGS[f.name][0]
        if k is not None and int(k) != k_cat:
            raise UsageError(f"catalog splitting for {f.name} uses k = {k_cat}")
        S, V, R = transfer.split(f, ns, float(cfg["lam"]))
        lev = transfer.levinson_hypotheses(V, R, (lo, hi))
    else:
        if k is None:
            raise UsageError(f"no catalog splitting for {f.name}; pass --k to get products only")
        S = transfer.kstep_products(f, ns, int(k), float(cfg["lam"]))
        lev = None
    p, q = transfer.eig_2x2_stack(S)
    det = transfer.det2(S)
    tr = S[:, 0, 0] + S[:, 1, 1]
    rows = ((int(n), float(d.real), float(t.real), float(t.imag), float(abs(a)), float(abs(b)))
            for n, d, t, a, b in zip(ns, det, tr, p, q))
    out = cfg["out"]
    io.write_csv(out / "transfer.csv", ["n", "det", "trace_re", "trace_im", "abs_lam_plus",
                                        "abs_lam_minus"], rows)
    path = io.write_report(out / "transfer.json", "levinson",
                           {"config": _public(cfg), "result": lev})
    ok = lev is None or all(v == "holds" for v in lev.verdicts.values())
    _echo("transfer", path, "all Levinson conditions hold" if ok else
          "some Levinson conditions fail (see verdicts)" if lev else "products written")
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_subordinacy(cfg, pool_map):
    f = _family(cfg)
    lam, N = float(cfg["lam"]), int(cfg["N"])
    if cfg["mode"] == "pair":
        u = transfer.solve_recursion(f, lam, (1, 0), N)
        v = transfer.solve_recursion(f, lam, (0, 1), N)
    elif cfg["mode"] == "shoot":
        u = transfer.solve_recursion(f, lam, (1, 1e-30), N, "backward")
        v = transfer.solve_recursion(f, lam, (1, 0.3), N)
    else:
        raise UsageError("mode must be 'pair' or 'shoot'")
    tr = transfer.subordinacy_ratio(u, v, r_min=float(cfg["r_min"]))
    out = cfg["out"]
    io.write_csv(out / "ratio.csv", ["N", "ratio"], tr.rows())
    io.write_csv(out / "path_u.csv", ["n", "re", "im", "log_modulus"], u.rows())
    io.write_csv(out / "path_v.csv", ["n", "re", "im", "log_modulus"], v.rows())
    path = io.write_report(out / "subordinacy.json", "subordinacy", {"config": _public(cfg), "result": tr})
    _echo("subordinacy", path, tr.trend)
    return EXIT_OK


def cmd_probe(cfg, pool_map):
    f = _family(cfg)
    a, c = float(cfg["a"]), float(cfg["c"])
    support = cfg["support"]
    if support is None:
        rep = checkers.thm_a_witnesses(f, c, a, int(cfg["horizon"] or 1000))
        cut = rep.witnesses["calN"].get(checkers._key(a))
        if cut is None:
            raise UsageError("hypotheses fail on the window; pass --support explicitly")
        support = (cut, cut + 200)
    probe = checkers.form_positivity_probe(f, a, c, int(cfg["trials"]), tuple(support),
                                           seed=int(cfg["seed"]), horizon=cfg["horizon"])
    path = io.write_report(cfg["out"] / "probe.json", "probe", {"config": _public(cfg), "result": probe})
    _echo("probe", path, f"min quotient {probe.min_quotient:.6g}")
    return EXIT_OK if probe.passed else EXIT_VERDICT


def cmd_reproduce(cfg, pool_map):
    if cfg["manifest"] is not None:
        try:
            data = json.loads(Path(cfg["manifest"]).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read manifest: {exc}") from None
        entries = data.get("experiments") if isinstance(data, dict) else data
        if not isinstance(entries, list):
            raise UsageError("manifest must be a list or an object with an 'experiments' list")
    elif cfg["experiment"]:
        entries = list(cfg["experiment"])
    else:
        entries = list(gallery.DEFAULT_MANIFEST)
    gallery.parse_manifest(entries)
    out = cfg["out"]
    rows = gallery.reproduce_gallery(entries, out, seed=int(cfg["seed"]), map_fn=pool_map)
    io.write_report(out / "summary.json", "gallery", {"config": _public(cfg), "rows": rows})
    io.write_csv(out / "summary.csv", ["name", "reference", "expected", "observed", "passed"],
                 ((r.name, r.reference, r.expected, r.observed if r.error is None else r.error,
                   "pass" if r.passed else "fail") for r in rows))
    width = max([len(r.name) for r in rows], default=4)
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  {r.observed if r.error is None else r.error}")
    print(f"{sum(r.passed for r in rows)}/{len(rows)} experiments passed; summary in {out / 'summary.json'}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_VERDICT


HANDLERS = {"spectrum": cmd_spectrum, "count": cmd_count, "check-a": cmd_check_a,
            "check-b": cmd_check_b, "prop1": cmd_prop1, "transfer": cmd_transfer,
            "subordinacy": cmd_subordinacy, "probe": cmd_probe, "reproduce": cmd_reproduce}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv or argv[0] in ("-h", "--help"):
        parser.print_help()
        return EXIT_OK if argv else EXIT_USAGE
    if argv[0] not in COMMANDS:
        close = difflib.get_close_matches(argv[0], COMMANDS, n=3)
        hint = f"; did you mean {', '.join(close)}?" if close else ""
        raise UsageError(f"unknown command {argv[0]!r}{hint}")
    args, extra = parser.parse_known_args(argv)
    cfg = resolve_config(args, extra)
    workers = int(cfg["workers"])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            code = HANDLERS[args.command](cfg, pool.map)
    else:
        code = HANDLERS[args.command](cfg, map)
    _write_meta(cfg["out"], args.command, cfg)
    return code


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (JacobiSpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
