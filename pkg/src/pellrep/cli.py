"""Command-line front end.

Exit codes: 0 success, 1 verification mismatch, 2 usage error,
3 certification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .numerics import MIN_PRECISION, CertificationError

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_CERT = 0, 1, 2, 3

log = logging.getLogger("pellrep")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def read_config(path: str | None) -> dict:
    """Parse a key=value file; blank lines and '#' comments are skipped."""
    if not path:
        return {}
    out = {}
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{i}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pellrep", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="key=value file supplying defaults")
    p.add_argument("--precision", type=int, help="working precision in bits (env PRECISION_BITS)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("seq", help="terms of the k-Pell-Lucas sequence")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, help="single index")
    s.add_argument("--count", type=int, help="print Q_1 .. Q_count")
    s.add_argument("--format", choices=["text", "json", "csv"], default="text")
    s.add_argument("--json", nargs="?", const="-", metavar="PATH")

    s = sub.add_parser("digits", help="repdigit structure of a number")
    s.add_argument("--check", type=int, required=True, metavar="N")
    s.add_argument("--json", nargs="?", const="-", metavar="PATH")

    s = sub.add_parser("root", help="dominant root of the characteristic polynomial")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--digits", type=int, default=30)
    s.add_argument("--json", nargs="?", const="-", metavar="PATH")

    s = sub.add_parser("bound", help="replay a bound from the linear-forms argument")
    s.add_argument("--stage", choices=["lambda1", "lambda2", "lemma31", "lemma32"], required=True)
    s.add_argument("--k", type=int, default=550)
    s.add_argument("--n", type=int, help="index for lambda1/lambda2 (default k + 2)")
    s.add_argument("--json", nargs="?", const="-", metavar="PATH")

    s = sub.add_parser("reduce", help="Dujella-Petho reduction")
    s.add_argument("--instance", choices=["gamma1", "gamma2", "gamma3", "gamma4", "chain"],
                   required=True)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--a", type=int, default=1)
    s.add_argument("--b", type=int, default=0)
    s.add_argument("--l", type=int, default=1)
    s.add_argument("--M", help="bound on the coefficient (default: the chain's value)")
    s.add_argument("--k-values", help="chain: comma list or lo-hi range for stages iv and v")
    s.add_argument("--no-gamma2", action="store_true", help="chain: skip stage v")
    s.add_argument("--record-all", action="store_true", help="chain: keep every stage v instance")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--json", nargs="?", const="-", metavar="PATH")
    s.add_argument("--certificate", metavar="PATH", help="write the JSON certificate here")

    s = sub.add_parser("verify", help="enumerate and reconcile with the solution table")
    s.add_argument("--kmax", type=int, default=60)
    s.add_argument("--nmax", type=int, default=400)
    s.add_argument("--strict-eq12", action="store_true",
                   help="exclude single-digit solutions")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--json", nargs="?", const="-", metavar="PATH")
    return p


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    cfg = read_config(known.config)
    if cfg:
        for action in parser._subparsers._group_actions[0].choices.values():
            dests = {a.dest for a in action._actions}
            action.set_defaults(**{k: v for k, v in cfg.items() if k in dests})
        top = {a.dest for a in parser._actions}
        parser.set_defaults(**{k: v for k, v in cfg.items() if k in top})
    return cfg


def _emit(data, dest: str) -> None:
    """Write JSON to stdout ('-') or to a file."""
    blob = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if dest == "-":
        sys.stdout.write(blob)
    else:
        Path(dest).write_text(blob)


def _envelope(args, cfg: dict, payload: dict, precision: int) -> dict:
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("json", "certificate", "verbose", "workers", "config")}
    return {
        "tool": "pellrep",
        "tool_version": __version__,
        "precision_bits": precision,
        "config_hash": config_hash({"params": params, "config": cfg}),
        "params": {k: (v if isinstance(v, (bool, int, type(None))) else str(v))
                   for k, v in params.items()},
        "result": payload,
    }


def _parse_k_values(spec: str | None):
    if not spec:
        return None
    out = []
    for part in spec.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


# subcommands -----------------------------------------------------------------

def cmd_seq(args, cfg, prec):
    from .sequences import term, terms

    if (args.n is None) == (args.count is None):
        raise UsageError("seq: give exactly one of --n or --count")
    if args.n is not None:
        vals = [(args.n, term(args.k, args.n))]
    else:
        vals = list(enumerate(terms(args.k, args.count), 1))
    fmt = "json" if args.json else args.format
    if fmt == "json":
        payload = {"k": args.k, "terms": [{"n": n, "value": str(v)} for n, v in vals]}
        _emit(_envelope(args, cfg, payload, prec), args.json or "-")
    elif fmt == "csv":
        print("k,n,value")
        for n, v in vals:
            print(f"{args.k},{n},{v}")
    else:
        for n, v in vals:
            print(v)
    return EXIT_OK


def cmd_digits(args, cfg, prec):
    from .repdigits import describe

    if args.check < 1:
        raise UsageError("digits: N must be positive")
    d = describe(args.check)
    if args.json:
        _emit(_envelope(args, cfg, d, prec), args.json)
    else:
        runs = " ".join(f"{r['digit']}x{r['length']}" for r in d["runs"])
        decs = ", ".join(f"(a={c['a']}, l={c['l']}, b={c['b']}, m={c['m']})"
                         for c in d["decompositions"]) or "none"
        print(f"{d['value']}: runs {runs}; two-run {d['two_run']}; decompositions {decs}")
    return EXIT_OK if d["two_run"] else EXIT_MISMATCH


def cmd_root(args, cfg, prec):
    from .sequences import PellLucasContext, root_interval

    ctx = PellLucasContext.create(args.k, prec)
    lo, hi = root_interval(args.k, prec)
    payload = {
        "k": args.k,
        "gamma": ctx.gamma.digits(args.digits),
        "interval": [lo.digits(args.digits), hi.digits(args.digits)],
        "g_k_gamma": ctx.g_gamma.digits(args.digits),
        "coefficient": ctx.coefficient.digits(args.digits),
    }
    if args.json:
        _emit(_envelope(args, cfg, payload, ctx.gamma.prec), args.json)
    else:
        print(payload["gamma"])
    return EXIT_OK


def cmd_bound(args, cfg, prec):
    from . import baker

    n = args.n if args.n is not None else args.k + 2
    if args.stage == "lambda1":
        rep = baker.lambda1_pipeline(args.k, n)
    elif args.stage == "lambda2":
        rep = baker.lambda2_pipeline(args.k, n)
    elif args.stage == "lemma31":
        rep = baker.n_in_k_pipeline(args.k)
    else:
        rep = baker.absolute_bound_report()
    d = rep.to_dict()
    if args.json:
        _emit(_envelope(args, cfg, d, baker.BOUND_PREC), args.json)
    else:
        print(d["value"])
        for c in d["checks"]:
            if not c["holds"]:
                print(f"check failed: {c['claim']}", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_MISMATCH


def cmd_reduce(args, cfg, prec):
    from fractions import Fraction

    from . import reduction

    if args.instance == "chain":
        def progress(msg):
            print(msg, file=sys.stderr, flush=True)

        rep = reduction.reduce_chain(_parse_k_values(args.k_values), not args.no_gamma2,
                                     args.workers, progress, args.record_all)
        payload = rep.to_dict()
        env = _envelope(args, cfg, payload, reduction.required_precision(
            reduction._to_int(reduction.M_ABSOLUTE)))
        if args.certificate:
            _emit(env, args.certificate)
        if args.json:
            _emit(env, args.json)
        else:
            for st in payload["stages"]:
                print(f"stage {st['name']}: {st['status']} {json.dumps(st['result'], sort_keys=True)}")
        return EXIT_OK if rep.conclusive else EXIT_MISMATCH

    M = Fraction(args.M) if args.M else None
    inst, res = reduction.single_instance(args.instance, args.k, args.a, args.b, args.l, M)
    payload = {"label": inst.label, **{k: v for k, v in inst.params.items()},
               "tau": inst.tau_desc, "mu": inst.mu_desc, "A": str(inst.A), "M": str(inst.M),
               **res.to_dict()}
    env = _envelope(args, cfg, payload, res.prec)
    if args.certificate:
        _emit(env, args.certificate)
    if args.json:
        _emit(env, args.json)
    else:
        print(payload["bound"])
    return EXIT_OK


def cmd_verify(args, cfg, prec):
    from .search import verify_theorem

    if args.kmax < 2 or args.nmax < 7:
        raise UsageError("verify: need --kmax >= 2 and --nmax >= 7")
    rep = verify_theorem(args.kmax, args.nmax, args.strict_eq12, args.workers)
    if args.json:
        _emit(_envelope(args, cfg, rep.to_dict(), prec), args.json)
    print(f"k <= {args.kmax}, n <= {args.nmax}: {len(rep.found)} solutions, "
          f"{len(rep.matches)} match, {len(rep.missing)} missing, {len(rep.extras)} extra",
          file=sys.stderr if args.json == "-" else sys.stdout)
    for d in rep.discrepancies:
        print(f"note: {d['note']}", file=sys.stderr)
    return EXIT_OK if rep.agrees else EXIT_MISMATCH


COMMANDS = {"seq": cmd_seq, "digits": cmd_digits, "root": cmd_root, "bound": cmd_bound,
            "reduce": cmd_reduce, "verify": cmd_verify}


def dispatch(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        cfg = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        # values from the config file arrive as strings
        for a in parser._subparsers._group_actions[0].choices[args.command]._actions:
            v = getattr(args, a.dest, None)
            if isinstance(v, str) and a.type is int:
                setattr(args, a.dest, int(v))
        prec = args.precision or int(cfg.get("precision", 0)) or None
        if prec is not None:
            if prec < MIN_PRECISION:
                raise UsageError(f"precision must be >= {MIN_PRECISION} bits")
            os.environ["PRECISION_BITS"] = str(prec)
        from .numerics import default_precision
        prec = default_precision()
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args, cfg, prec)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT


def main() -> None:
    sys.exit(dispatch())
