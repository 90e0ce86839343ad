"""``census``: command-line front end.

Every run echoes its resolved configuration first: ``# key=value`` comment
lines for CSV and plain-text output, a ``config`` object for JSON.

Exit codes: 0 success, 1 failed acceptance checks, 2 invalid input,
3 numeric failure (no square-root branch where one was required).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

from .models import ModelSpecError, parse_model
from .sampler import RngStream, SamplerError, sample_conditioned_batch
from .series import SeriesError, compute_F_family, compute_G_family
from .singularity import SingularityError, mixed_constants, singularity_reports, size_law
from .trees import TreeError, counts, format_tree, parse_tree, OrderedTree

EXIT_OK = 0
EXIT_CHECKS = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

# float64 tops out near 1e308; beyond this order the mpmath kind is used
_FLOAT_SAFE = 1e300


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, model=True, fmt="csv"):
    if model:
        p.add_argument("--model", default="binary-full", help="model spec, e.g. binary-full, zeta4:a=0.09")
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--config", default=None, help="file of key = value lines; flags override it")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="census", description="Subtree counts of random simply generated trees.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("count", help="R(T) and S(T) of one tree")
    p.add_argument("--tree", required=True, help="preorder out-degrees, e.g. 2,0,0")
    _common(p, model=False)

    p = sub.add_parser("sample", help="conditioned random trees, one degree sequence per line")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    _common(p)

    p = sub.add_parser("moments", help="exact E R(T_n)^m")
    p.add_argument("--max-n", type=int, default=21)
    p.add_argument("--m", type=int, default=1)
    _common(p)

    p = sub.add_parser("mixed", help="exact E[S(T_n)^m R(T_n)^ell]")
    p.add_argument("--max-n", type=int, default=21)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--ell", type=int, default=0)
    _common(p)

    p = sub.add_parser("singularities", help="rho_m, s_m, tau_m, lambda_m, gamma_m")
    p.add_argument("--max-m", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-13)
    _common(p)

    p = sub.add_parser("sizelaw", help="mean and variance constants of the root-subtree size")
    p.add_argument("--tol", type=float, default=1e-13)
    _common(p)

    p = sub.add_parser("clt", help="Monte Carlo log-normal screen")
    p.add_argument("--size", type=int, default=2001)
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    _common(p, fmt="json")

    p = sub.add_parser("mu", help="mu = E f(T) from small trees plus a Monte Carlo tail")
    p.add_argument("--cutoff", type=int, default=17, help="exact enumeration up to this size")
    p.add_argument("--count", type=int, default=20000, help="Monte Carlo draws")
    p.add_argument("--size", type=int, default=20000, help="size cap for sampled trees")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    _common(p, fmt="json")

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    return ap


def _config_args(path: str) -> List[str]:
    out: List[str] = []
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    for i, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{i}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        out += ["--" + key.replace("_", "-"), value]
    return out


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(list(argv))
    if args.config:
        # file values first so that later command-line flags win
        argv = list(argv)
        cmd = argv.index(args.command)
        merged = argv[: cmd + 1] + _config_args(args.config) + argv[cmd + 1:]
        args = ap.parse_args(merged)
    return args


def _resolved(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("config", "out")}
    if cfg.get("threads", 0) is None:
        cfg["threads"] = os.cpu_count() or 1
    return cfg


def _num(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction) and x.denominator == 1:
        return str(x.numerator)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x) if abs(x) < 1e16 else f"{x:.15e}"


def _emit_table(args, columns, rows, extra=None) -> str:
    cfg = _resolved(args)
    if args.format == "json":
        doc = {"config": cfg, "columns": list(columns), "rows": [dict(zip(columns, r)) for r in rows]}
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2, default=float) + "\n"
    buf = io.StringIO()
    for k, v in cfg.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_num(x) for x in r])
    return buf.getvalue()


def _emit_report(args, report: dict) -> str:
    cfg = _resolved(args)
    if args.format == "json":
        return json.dumps({"config": cfg, "report": report}, indent=2) + "\n"
    return _emit_table(args, list(report), [list(report.values())])


# -- subcommands -----------------------------------------------------------


def cmd_count(args) -> str:
    t = parse_tree(args.tree)
    c = counts(t)
    return _emit_table(args, ["tree", "r", "s"], [[format_tree(t), c.r, c.s]])


def cmd_sample(args) -> str:
    model = parse_model(args.model)
    degs = sample_conditioned_batch(model, args.size, args.count, RngStream(args.seed, 0))
    trees = [format_tree(OrderedTree(tuple(row.tolist()))) for row in degs]
    if args.format == "json":
        return json.dumps({"config": _resolved(args), "trees": trees}, indent=2) + "\n"
    head = "".join(f"# {k}={v}\n" for k, v in _resolved(args).items())
    return head + "".join(t + "\n" for t in trees)


def _family(model, M, N):
    kind = "rational" if model.is_rational and N <= 60 else "float"
    fam = compute_F_family(model, M, N, kind)
    if kind == "float" and not all(math.isfinite(c) and abs(c) < _FLOAT_SAFE for c in fam.F[M].coeffs):
        fam = compute_F_family(model, M, N, "wide")
    return fam


def _ratio(value, const, tau, n):
    try:
        return float(value) / (const * tau ** n)
    except (OverflowError, ZeroDivisionError):
        return math.nan


def _try_reports(model, max_m):
    try:
        reps = singularity_reports(model, max_m)
    except (SingularityError, SamplerError):
        return None
    return reps if len(reps) == max_m + 1 and all(r.is_square_root for r in reps) else None


def cmd_moments(args) -> str:
    model = parse_model(args.model)
    if args.m < 0 or args.max_n < 1:
        raise UsageError("need m >= 0 and max-n >= 1")
    fam = _family(model, args.m, args.max_n)
    reps = _try_reports(model, args.m)
    rows = []
    for n in range(1, args.max_n + 1):
        if not fam.F[0][n]:
            continue
        for m in range(args.m + 1):
            val = fam.F[m][n] / fam.F[0][n]
            ratio = _ratio(val, reps[m].gamma, reps[m].tau, n) if reps else math.nan
            rows.append([n, m, 0, val, ratio])
    return _emit_table(args, ["n", "m", "ell", "moment", "ratio_to_asymptote"], rows)


def cmd_mixed(args) -> str:
    model = parse_model(args.model)
    T = args.m + args.ell
    if args.m < 0 or args.ell < 0:
        raise UsageError("m and ell must be nonnegative")
    fam = _family(model, T, args.max_n)
    mix = compute_G_family(fam, T)
    reps = _try_reports(model, T)
    gp = None
    if reps and T >= 1:
        gp = mixed_constants(model, reps, T).gamma_prime[(args.ell, args.m)]
    rows = []
    for n in range(1, args.max_n + 1):
        if not fam.F[0][n]:
            continue
        val = mix.G[(args.m, args.ell)][n] / fam.F[0][n]
        if T == 0:
            ratio = float(val)
        else:
            ratio = _ratio(val, gp, reps[T].tau, n) if gp is not None else math.nan
        rows.append([n, args.m, args.ell, val, ratio])
    return _emit_table(args, ["n", "m", "ell", "moment", "ratio_to_asymptote"], rows)


def _fmt6(x: float) -> str:
    return "nan" if not math.isfinite(x) else f"{x:.6f}"


def cmd_singularities(args):
    model = parse_model(args.model)
    reps = singularity_reports(model, args.max_m, args.tol)
    rows = [
        [r.m, _fmt6(r.rho), _fmt6(r.s), _fmt6(r.tau), _fmt6(r.lambda_), _fmt6(r.gamma), r.branch_label]
        for r in reps
    ]
    text = _emit_table(args, ["m", "rho", "s", "tau", "lambda", "gamma", "branch"], rows)
    failed = len(reps) < args.max_m + 1 or not all(r.is_square_root for r in reps)
    return text, (EXIT_NUMERIC if failed else EXIT_OK)


def cmd_sizelaw(args):
    model = parse_model(args.model)
    reps = singularity_reports(model, 1, args.tol)
    if len(reps) < 2 or not reps[1].is_square_root:
        raise NumericFailure(f"no square-root branch for m=1 ({reps[-1].branch_label})")
    law = size_law(model, reps[1])
    vals = [law.d1, law.d2, law.d3, law.mu_x, law.sigma2_x]
    return _emit_table(args, ["d1", "d2", "d3", "mu_x", "sigma2_x"], [[_fmt6(v) for v in vals]])


def cmd_clt(args) -> str:
    from .montecarlo import run_clt_experiment

    model = parse_model(args.model)
    rep = run_clt_experiment(model, args.size, args.count, args.seed, threads=args.threads)
    return _emit_report(args, rep.as_dict())


def cmd_mu(args) -> str:
    from .montecarlo import estimate_mu

    model = parse_model(args.model)
    est = estimate_mu(model, args.cutoff, args.count, args.size, args.seed, threads=args.threads)
    return _emit_report(args, est.as_dict())


def cmd_verify(args):
    from .acceptance import run_all

    lines: List[str] = []
    results = run_all(cli_main=main, emit=lambda s: (lines.append(s), print(s, flush=True)))
    ok = all(r.passed for r in results)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return None, (EXIT_OK if ok else EXIT_CHECKS)


COMMANDS = {
    "count": cmd_count,
    "sample": cmd_sample,
    "moments": cmd_moments,
    "mixed": cmd_mixed,
    "singularities": cmd_singularities,
    "sizelaw": cmd_sizelaw,
    "clt": cmd_clt,
    "mu": cmd_mu,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        result = COMMANDS[args.command](args)
        text, code = result if isinstance(result, tuple) else (result, EXIT_OK)
    except UsageError as exc:
        print(f"census: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelSpecError, TreeError, SamplerError, SeriesError, ValueError) as exc:
        print(f"census: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularityError, NumericFailure) as exc:
        print(f"census: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if text is not None:
        if getattr(args, "out", None):
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
