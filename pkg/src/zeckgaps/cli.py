"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 domain error, 3 verification mismatch.
Data goes to stdout (or ``--out``); messages go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from collections import Counter

from . import bulkgaps, longestgap, montecarlo, spectral
from .errors import ZeckError
from .recurrence import SequenceTable, parse, table_for
from .zeck import decompose, enumerate_interval, gap_list, is_legal, longest_gap, reconstruct

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_MISMATCH = 0, 1, 2, 3
SIGNIFICANT = 12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _round(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.{SIGNIFICANT}g}")
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (int, str)):
        return _round(obj.item())  # numpy scalars
    return obj


def dumps(payload) -> str:
    return json.dumps(_round(payload), indent=2, sort_keys=True) + "\n"


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else (f"{v:.{SIGNIFICANT}g}" if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


# -- subcommands ---------------------------------------------------------------

def cmd_seq(args):
    rec = parse(args.recurrence)
    table = SequenceTable.build(rec, args.N)
    return {"recurrence": str(rec), "N": args.N, "values": list(table.values)}, None


def cmd_decompose(args):
    rec = parse(args.recurrence)
    if args.m < 1:
        raise ZeckError("m must be a positive integer")
    table = table_for(rec, args.m)
    d = decompose(table, args.m)
    assert reconstruct(table, d) == args.m
    text = f"{args.m} = {d.pretty()}"
    payload = {
        "recurrence": str(rec),
        "m": args.m,
        "n": d.n,
        "terms": d.to_json(),
        "k": d.k,
        "gaps": gap_list(d),
        "longest_gap": longest_gap(d),
        "sum": text,
    }
    return payload, text + "\n"


def cmd_spectral(args):
    rec = parse(args.recurrence)
    data = spectral.spectral_data(rec, args.n_lo, args.n_hi)
    return {"recurrence": str(rec), **data.to_json()}, None


def cmd_bulk(args):
    rec = parse(args.recurrence)
    theory = None
    if rec.all_positive:
        theory = bulkgaps.BulkGapTheory(spectral.spectral_data(rec))
    elif args.mode in ("closed-form", "theory"):
        raise ZeckError("closed-form and limiting gap laws need every coefficient c_i >= 1")
    counts: dict[int, int] | None = None
    total = None
    extra = {}
    if args.mode == "exact":
        table = SequenceTable.build(rec, args.n + 2)
        if table.width(args.n) <= args.cap:
            hist = bulkgaps.exact_histogram(table, args.n, args.cap)
        else:
            hist = bulkgaps.automaton_histogram(rec, args.n)
        counts, total, extra["source"] = hist.counts, hist.total, hist.source
    elif args.mode == "closed-form":
        table = SequenceTable.build(rec, args.n + 2)
        total = bulkgaps.gaps_total(rec, args.n)
        counts = {k: bulkgaps.x_total(table, args.n, k) for k in range(1, args.n)}
        counts[0] = total - sum(counts.values())
        counts = {k: v for k, v in sorted(counts.items()) if v}
        extra["source"] = "closed-form"
    elif args.mode == "sample":
        cfg = montecarlo.ExperimentConfig(args.recurrence, args.n, args.samples, _seed(args), args.workers, "longest")
        pooled: Counter = Counter()
        for s in montecarlo.collect(cfg, keep_gaps=True):
            pooled.update(s.gaps)
        counts, total = dict(sorted(pooled.items())), sum(pooled.values())
        extra.update(source="sampled", samples=args.samples, seed=cfg.seed)
    if theory is not None:
        extra["alternative_p0_diagnostic"] = bulkgaps.alternative_p0(theory.spectrum)
    k_top = args.k_max if counts is None else max(max(counts, default=0), min(args.k_max, 10))
    rows = []
    for k in range(0, k_top + 1):
        count = None if counts is None else counts.get(k, 0)
        p_emp = None if counts is None or not total else count / total
        p_th = theory.prob(k) if theory is not None else None
        rows.append({"k": k, "count": count, "p_empirical": p_emp, "p_theory": p_th})
    payload = {"recurrence": str(rec), "n": args.n, "mode": args.mode, "total": total, "rows": rows, **extra}
    table_text = _csv(["k", "count", "p_empirical", "p_theory"],
                      [[r["k"], r["count"], r["p_empirical"], r["p_theory"]] for r in rows])
    return payload, table_text


def cmd_longest(args):
    rec = parse(args.recurrence)
    poly = longestgap.build_polynomials(rec, strict=not args.relaxed)
    mode_map = {"exact": "exact-sum", "asymptotic": "asymptotic-sum", "closed-form": "closed-form"}
    mean, var = longestgap.mean_var(poly, args.n, mode_map[args.mode])
    if args.f_min is None or args.f_max is None:
        lo, hi = longestgap.truncation_window(poly, args.n) if args.n * poly.k_const > 1 else (1, args.n + 1)
        f_min = args.f_min if args.f_min is not None else max(1, lo)
        f_max = args.f_max if args.f_max is not None else min(hi, args.n + 1)
    else:
        f_min, f_max = args.f_min, args.f_max
    if f_min < 1 or f_max < f_min:
        raise ZeckError("need 1 <= f-min <= f-max")
    exact = {}
    if args.mode == "exact":
        exact = longestgap.exact_cdf_table(rec, poly, args.n, tail=0.0) if f_max <= args.n + 1 else {}
        exact = {f: exact.get(f, 1.0) for f in range(f_min, f_max + 1)}
    rows = [{"f": f, "cdf_exact": exact.get(f), "cdf_asymptotic": longestgap.cdf_asymptotic(poly, args.n, f)}
            for f in range(f_min, f_max + 1)]
    payload = {
        "recurrence": str(rec),
        "n": args.n,
        "mode": args.mode,
        "mean": mean,
        "variance": var,
        "sd": math.sqrt(var),
        "K": poly.k_const,
        "lambda1": poly.lambda1,
        "rows": rows,
        "diagnostics": poly.diagnostics,
    }
    table_text = _csv(["f", "cdf_exact", "cdf_asymptotic"], [[r["f"], r["cdf_exact"], r["cdf_asymptotic"]] for r in rows])
    return payload, table_text


def _seed(args) -> int:
    if args.seed is None:
        if os.environ.get("CI"):
            raise UsageError("--seed is required when CI is set")
        return 0
    return args.seed


def cmd_experiment(args):
    cfg = montecarlo.ExperimentConfig(
        args.recurrence, args.n, args.samples, _seed(args), args.workers, args.kind,
        keep_samples=args.samples_csv is not None,
    )
    report = montecarlo.run_experiment(cfg)
    if args.samples_csv:
        with open(args.samples_csv, "w", newline="") as fh:
            fh.write(_csv(["index", "value"], [[i, v] for i, v in enumerate(report.per_sample)]))
    payload = report.to_json(include_timings=args.timings)
    payload.pop("per_sample", None)
    return payload, None


def run_verification(rec, max_n: int, cap: int) -> dict:
    """Oracle-equivalence checks; every entry is ``{"checked": int, "mismatches": [...]}``."""
    table = SequenceTable.build(rec, max_n + 2)
    checks = {name: {"checked": 0, "mismatches": []} for name in ("round_trip", "bulk_counts", "longest_counts")}
    for n in range(1, max_n + 1):
        if table.width(n) > cap:
            break
        lo, hi = table.interval(n)
        longest = Counter()
        hist = Counter()
        expected = lo
        for d in enumerate_interval(table, n, cap):
            m = reconstruct(table, d)
            ok = m == expected and decompose(table, m) == d and is_legal(rec, d.digits())
            checks["round_trip"]["checked"] += 1
            if not ok:
                checks["round_trip"]["mismatches"].append({"n": n, "m": m})
            expected += 1
            longest[longest_gap(d)] += 1
            hist.update(gap_list(d))
        if expected != hi:
            checks["round_trip"]["mismatches"].append({"n": n, "covered_up_to": expected})
        if rec.all_positive:
            for k in range(1, n):
                checks["bulk_counts"]["checked"] += 1
                if bulkgaps.x_total(table, n, k) != hist.get(k, 0):
                    checks["bulk_counts"]["mismatches"].append({"n": n, "k": k})
        below = 0
        for f in range(0, n + 2):
            below += longest.get(f - 1, 0) if f >= 1 else 0
            if f > rec.L - 1:
                got = longestgap.count_less_than(rec, n, f)
            else:
                got = longestgap.count_by_automaton(rec, n, f)
            checks["longest_counts"]["checked"] += 1
            if got != below:
                checks["longest_counts"]["mismatches"].append({"n": n, "f": f})
    return checks


def cmd_verify(args):
    rec = parse(args.recurrence)
    checks = run_verification(rec, args.max_n, args.cap)
    ok = all(not c["mismatches"] for c in checks.values())
    payload = {"recurrence": str(rec), "max_n": args.max_n, "passed": ok, "checks": checks}
    return payload, None


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zeckgaps", description="Generalized Zeckendorf decompositions and gap statistics")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, fmt=("json",)):
        p.add_argument("--recurrence", "-r", required=True, help="comma-separated coefficients, e.g. 1,1")
        p.add_argument("--out", "-o", help="write data here instead of stdout")
        p.add_argument("--format", choices=fmt, default=fmt[0])
        return p

    p = common(sub.add_parser("seq", help="sequence values G_1..G_N"))
    p.add_argument("--N", type=int, required=True)
    p.set_defaults(func=cmd_seq)

    p = common(sub.add_parser("decompose", help="legal decomposition of m"), ("json", "pretty"))
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(func=cmd_decompose)

    p = common(sub.add_parser("spectral", help="roots, a1 and Lekkerkerker constants"))
    p.add_argument("--n-lo", type=int, default=40)
    p.add_argument("--n-hi", type=int, default=60)
    p.set_defaults(func=cmd_spectral)

    p = common(sub.add_parser("bulk", help="gap-length distribution"), ("json", "csv"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("exact", "closed-form", "theory", "sample"), default="exact")
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--cap", type=int, default=2_000_000, help="largest interval to enumerate")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=montecarlo.default_workers())
    p.set_defaults(func=cmd_bulk)

    p = common(sub.add_parser("longest", help="longest-gap distribution"), ("json", "csv"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("exact", "asymptotic", "closed-form"), default="closed-form")
    p.add_argument("--f-min", type=int)
    p.add_argument("--f-max", type=int)
    p.add_argument("--relaxed", action="store_true",
                   help="allow recurrences whose M or R has unit-modulus or repeated roots")
    p.set_defaults(func=cmd_longest)

    p = common(sub.add_parser("experiment", help="seeded Monte Carlo experiment"))
    p.add_argument("--kind", choices=montecarlo.KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=montecarlo.default_workers())
    p.add_argument("--samples-csv", help="also write per-sample values to this CSV file")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings (breaks byte-identity)")
    p.set_defaults(func=cmd_experiment)

    p = common(sub.add_parser("verify", help="oracle-equivalence checks against enumeration"))
    p.add_argument("--max-n", type=int, default=12)
    p.add_argument("--cap", type=int, default=500_000)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        payload, text = args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ZeckError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.format == "json":
        out = dumps(payload)
    else:
        out = text if text is not None else dumps(payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    if args.command == "verify" and not payload["passed"]:
        print("verification mismatch", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
