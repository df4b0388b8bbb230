"""Command-line interface: solve, norm, reduce, gen, oracle.

Instance file format (bit-exact canonical rendering):

    TSPBA 1
    n <int>
    k <int>          # optional
    w12 w13 ... w1n  # upper triangle, row-major, one row per line
    w23 ... w2n
    ...

'#' starts a comment until end of line.  Results are printed as a single
JSON object with sorted keys on stdout; diagnostics go to stderr.  Exit
codes: 0 answered, 1 parse/parameter error, 2 profile insufficient or
oracle budget exceeded, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from math import comb
from time import perf_counter

from . import oracle as oracle_mod
from .errors import BudgetExceeded, TspbaError
from .fourcycle import four_cycle_norm
from .instance import Weighting, density, edge_key
from .kernel import Verdict, solve
from .reduction import ConstantsProfile, dichotomy, make_profile


class ParseError(Exception):
    pass


def parse_instance(text: str) -> tuple[Weighting, int | None]:
    """Parse the instance format; returns the weighting and optional k."""
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines or lines[0].split() != ["TSPBA", "1"]:
        raise ParseError("missing or bad header; expected 'TSPBA 1'")
    if len(lines) < 2 or not lines[1].startswith("n"):
        raise ParseError("missing 'n <int>' line")
    parts = lines[1].split()
    if len(parts) != 2 or parts[0] != "n":
        raise ParseError("bad 'n' line")
    try:
        n = int(parts[1])
    except ValueError as exc:
        raise ParseError(f"bad vertex count: {exc}") from None
    if n < 3:
        raise ParseError(f"need n >= 3, got {n}")
    rest = lines[2:]
    k: int | None = None
    if rest and rest[0].split()[0] == "k":
        kparts = rest[0].split()
        if len(kparts) != 2:
            raise ParseError("bad 'k' line")
        try:
            k = int(kparts[1])
        except ValueError as exc:
            raise ParseError(f"bad parameter k: {exc}") from None
        rest = rest[1:]
    tokens: list[int] = []
    for line in rest:
        for tok in line.split():
            try:
                tokens.append(int(tok))
            except ValueError:
                raise ParseError(f"bad weight token: {tok!r}") from None
    if len(tokens) != comb(n, 2):
        raise ParseError(
            f"expected {comb(n, 2)} weights for n={n}, got {len(tokens)}"
        )
    entries = []
    it = iter(tokens)
    for u in range(1, n + 1):
        for v in range(u + 1, n + 1):
            entries.append(((u, v), next(it)))
    from .instance import validate

    return validate(n, entries), k


def render_instance(W: Weighting, k: int | None = None) -> str:
    """Canonical text form; parse(render(W)) is byte-exact."""
    out = ["TSPBA 1", f"n {W.n}"]
    if k is not None:
        out.append(f"k {k}")
    rows = W.rows()
    for u in range(W.n - 1):
        out.append(" ".join(str(rows[u][v]) for v in range(u + 1, W.n)))
    return "\n".join(out) + "\n"


def _emit(record: dict) -> None:
    print(json.dumps(record, sort_keys=True))


def _base_record(W: Weighting, profile: ConstantsProfile | None) -> dict:
    d = density(W)
    rec = {"density_num": d.numerator, "density_den": d.denominator}
    if profile is not None:
        rec["profile"] = profile.name
    return rec


def _verdict_record(v: Verdict, rec: dict) -> dict:
    rec["verdict"] = v.kind
    if v.cycle is not None:
        rec["cycle"] = list(v.cycle.order)
    if v.weight is not None:
        rec["weight"] = v.weight
    if v.reason is not None:
        rec["reason"] = v.reason
    return rec


def _profile_from_args(args) -> ConstantsProfile:
    overrides = {}
    for item in args.const or []:
        if "=" not in item:
            raise ParseError(f"bad --const (need NAME=VALUE): {item!r}")
        name, value = item.split("=", 1)
        if name == "high_degree_fraction":
            if "/" in value:
                num, den = value.split("/", 1)
                overrides[name] = Fraction(int(num), int(den))
            else:
                overrides[name] = Fraction(value)
        else:
            overrides[name] = int(value)
    try:
        return make_profile(args.profile, **overrides)
    except TypeError as exc:
        raise ParseError(f"unknown profile constant: {exc}") from None


def _effective_k(args_k, file_k) -> int:
    if args_k is not None and file_k is not None and args_k != file_k:
        print(
            f"warning: k={file_k} from the file overridden by flag k={args_k}",
            file=sys.stderr,
        )
    k = args_k if args_k is not None else file_k
    if k is None:
        raise ParseError("no k given (use -k or a 'k' line in the file)")
    if k < 0:
        raise ParseError("k must be non-negative")
    return k


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="ascii") as fh:
        return fh.read()


def cmd_solve(args) -> int:
    t_start = perf_counter()
    text = _read(args.path)
    W, file_k = parse_instance(text)
    k = _effective_k(args.k, file_k)
    profile = _profile_from_args(args)
    t_parse = int((perf_counter() - t_start) * 1000)
    timings: dict[str, int] = {}
    t0 = perf_counter()
    verdict = solve(W, k, profile, timings=timings)
    timings["solve"] = int((perf_counter() - t0) * 1000)
    timings["parse"] = t_parse
    timings["total"] = int((perf_counter() - t_start) * 1000)
    rec = _verdict_record(verdict, _base_record(W, profile))
    rec["timings"] = timings
    _emit(rec)
    return 0 if verdict.kind in ("yes", "no") else 2


def cmd_norm(args) -> int:
    t_start = perf_counter()
    W, _ = parse_instance(_read(args.path))
    rec = _base_record(W, None)
    t0 = perf_counter()
    rec["norm4"] = four_cycle_norm(W)
    rec["timings"] = {
        "parse": int((t0 - t_start) * 1000),
        "norm": int((perf_counter() - t0) * 1000),
        "total": int((perf_counter() - t_start) * 1000),
    }
    _emit(rec)
    return 0


def cmd_reduce(args) -> int:
    t_start = perf_counter()
    W, file_k = parse_instance(_read(args.path))
    k = _effective_k(args.k, file_k)
    profile = _profile_from_args(args)
    rec = _base_record(W, profile)
    t0 = perf_counter()
    rec["norm4"] = four_cycle_norm(W)
    result = dichotomy(W, k, profile)
    t_red = int((perf_counter() - t0) * 1000)
    if result.is_certificate:
        rec["verdict"] = "yes"
        rec["cycle"] = list(result.certificate.order)
        rec["weight"] = result.certificate.weight(W)
    else:
        rec["alpha"] = result.ledger.alpha
        rec["abs_norm"] = result.abs_norm
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write(render_instance(result.reduced))
    rec["timings"] = {
        "reduce": t_red,
        "total": int((perf_counter() - t_start) * 1000),
    }
    _emit(rec)
    return 0


def cmd_gen(args) -> int:
    rng = random.Random(args.seed)
    n = args.n
    if n < 3:
        raise ParseError(f"need n >= 3, got {n}")
    lo, hi = args.wrange
    if args.kind == "uniform":
        W = Weighting.from_function(n, lambda u, v: rng.randint(lo, hi))
    elif args.kind == "zero_class":
        from .instance import TransformLedger, apply_transform

        lam = {v: rng.randint(lo, hi) for v in range(1, n + 1)}
        c = rng.randint(lo, hi)
        W = apply_transform(Weighting.zero(n), TransformLedger.shift(n, lam, constant=c))
    elif args.kind == "planted":
        u, v = sorted(rng.sample(range(1, n + 1), 2))
        W = Weighting.zero(n).replace({(u, v): args.weight})
    elif args.kind == "sparse_support":
        count = args.count
        if count > comb(n, 2):
            raise ParseError(f"count {count} exceeds the {comb(n, 2)} edges")
        pairs = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
        chosen = rng.sample(pairs, count)
        upd = {}
        for e in chosen:
            w = 0
            while w == 0:
                w = rng.randint(lo, hi)
            upd[e] = w
        W = Weighting.zero(n).replace(upd)
    else:  # pragma: no cover - argparse restricts choices
        raise ParseError(f"unknown kind {args.kind}")
    text = render_instance(W, k=args.k)
    if args.output:
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_oracle(args) -> int:
    t_start = perf_counter()
    W, file_k = parse_instance(_read(args.path))
    k = _effective_k(args.k, file_k)
    rec = _base_record(W, None)
    try:
        t0 = perf_counter()
        verdict = oracle_mod.verdict_oracle(W, k)
        t_solve = int((perf_counter() - t0) * 1000)
    except BudgetExceeded as exc:
        rec["verdict"] = "profile_insufficient"
        rec["reason"] = str(exc)
        _emit(rec)
        return 2
    rec = _verdict_record(verdict, rec)
    rec["timings"] = {
        "oracle": t_solve,
        "total": int((perf_counter() - t_start) * 1000),
    }
    _emit(rec)
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tspba",
        description="Decide whether a Hamilton cycle of weight at most dn - k exists.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_k=True):
        p.add_argument("path", help="instance file ('-' for stdin)")
        if need_k:
            p.add_argument("-k", type=int, default=None, help="threshold parameter")
        p.add_argument("--profile", default="test", choices=["paper", "test"],
                       help="constants profile (default: test)")
        p.add_argument("--const", action="append", metavar="NAME=VALUE",
                       help="override one profile constant")
        p.add_argument("--threads", type=int, default=1,
                       help="reserved; execution is single-threaded")

    p = sub.add_parser("solve", help="run the decision pipeline")
    common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("norm", help="four-cycle norm and density")
    p.add_argument("path")
    p.set_defaults(fn=cmd_norm)

    p = sub.add_parser("reduce", help="certificate or reduced equivalent instance")
    common(p)
    p.add_argument("-o", "--output", required=True, help="reduced instance path")
    p.set_defaults(fn=cmd_reduce)

    p = sub.add_parser("gen", help="generate a deterministic instance")
    p.add_argument("--kind", required=True,
                   choices=["uniform", "zero_class", "planted", "sparse_support"])
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--wrange", type=int, nargs=2, default=(-10, 10),
                   metavar=("LO", "HI"))
    p.add_argument("--weight", type=int, default=-100, help="planted edge weight")
    p.add_argument("--count", type=int, default=5, help="sparse_support edge count")
    p.add_argument("-k", type=int, default=None, help="embed a k line")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("oracle", help="exact small-n answer for cross-checking")
    p.add_argument("path")
    p.add_argument("-k", type=int, default=None)
    p.set_defaults(fn=cmd_oracle)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except (ParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AssertionError, TspbaError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
