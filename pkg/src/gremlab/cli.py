"""Command-line front end: ``gremlab <command> --model FILE ...``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import disorder, report
from .chains import Chain, enumerate_chains
from .gibbs import audit_constraints, build_gibbs, chain_audit, flatten
from .model import load_model, product_measure
from .parisi import LOG2, global_parisi_min, minimize_parisi
from .variational import solve_gibbs


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _write(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(args, obj) -> None:
    _write(args, report.dumps(obj) + "\n")


def cmd_chains(args) -> int:
    lines = [c.describe() for c in enumerate_chains(args.n)]
    _write(args, "\n".join(lines) + "\n")
    return 0


def cmd_phi_check(args) -> int:
    spec = load_model(args.model)
    t = spec.phi_table_
    _json(args, {"n": spec.n, "alphabet_size": spec.alphabet_size, "entries": int(t.size),
                 "min": float(t.min()), "max": float(t.max()), "finite": bool(np.all(np.isfinite(t)))})
    return 0


def cmd_parisi(args) -> int:
    spec = load_model(args.model)
    if args.chain:
        p = minimize_parisi(spec, Chain(tuple(_ints(args.chain))))
        _json(args, {"chains": [p.as_dict()], "value": p.value})
        return 0 if p.converged else 1
    gp = global_parisi_min(spec)
    _json(args, gp.as_dict())
    return 0 if gp.converged else 1


def cmd_gibbs(args) -> int:
    spec = load_model(args.model)
    res = solve_gibbs(spec, seed=args.seed, workers=args.threads)
    _json(args, {k: v for k, v in res.as_dict().items()
                 if k in ("value", "nu_star", "active_set", "converged")})
    return 0 if res.converged else 1


def cmd_gibbs_measure(args) -> int:
    spec = load_model(args.model)
    chain = Chain(tuple(_ints(args.chain))) if args.chain else enumerate_chains(spec.n)[0]
    m = np.array(_floats(args.m)) if args.m else minimize_parisi(spec, chain).m
    gs = build_gibbs(spec, chain, m)
    _json(args, {
        "chain": list(chain.perm),
        "m": [float(x) for x in gs.m],
        "gamma": [float(x) for x in gs.gamma],
        "kernels": [[[float(x) for x in row] for row in K] for K in gs.kernels],
        "flattened": [float(x) for x in flatten(gs).weights],
        "constraints": audit_constraints(gs, spec).as_dict(),
        "chain_constraints": chain_audit(gs, spec).as_dict(),
    })
    return 0


def cmd_simulate(args) -> int:
    spec = load_model(args.model)
    chain = Chain(tuple(_ints(args.chain))) if args.chain else None
    Ns = _ints(args.sweep) if args.sweep else [args.N]
    results = disorder.sweep(spec, Ns, args.seed, chain, threads=args.threads)
    if chain is None:
        target = solve_gibbs(spec).value
    else:
        target = minimize_parisi(spec, chain).value - LOG2
    rows = [{"N": r.N, "F_N": r.F_N, "target": target, "gap": abs(r.F_N - target)} for r in results]
    if args.format == "csv":
        _write(args, report.mc_csv(rows))
    else:
        _json(args, {"results": [r.as_dict() for r in results], "series": rows})
    return 0


def cmd_count(args) -> int:
    spec = load_model(args.model)
    center = product_measure(spec)
    count = disorder.count_in_ball(spec, args.N, args.seed, center, args.radius, threads=args.threads)
    _json(args, {"N": args.N, "seed": args.seed, "radius": args.radius, "center": "mu", "count": count,
                 "log_count_per_N": float(np.log(count) / args.N) if count else None})
    return 0


def cmd_verify(args) -> int:
    spec = load_model(args.model)
    Ns = _ints(args.sweep) if args.sweep else []
    enabled = {c: False for c in (args.disable or [])}
    rep = report.run_verify(spec, Ns, args.seed, enabled=enabled)
    text = report.emit(rep, args.format)
    _write(args, text)
    return rep.exit_code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model JSON file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="gremlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("chains", parents=[common], help="list the chains for n species")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_chains)

    s = sub.add_parser("phi", help="interaction-function utilities")
    phisub = s.add_subparsers(dest="phi_command", required=True)
    c = phisub.add_parser("check", parents=[common], help="tabulate phi and print its range")
    c.set_defaults(func=cmd_phi_check)

    s = sub.add_parser("parisi", parents=[common], help="minimise the Parisi functional")
    s.add_argument("--chain", help="comma-separated species order, e.g. 2,1")
    s.set_defaults(func=cmd_parisi)

    s = sub.add_parser("gibbs", parents=[common], help="solve the constrained Gibbs principle")
    s.set_defaults(func=cmd_gibbs)

    s = sub.add_parser("gibbs-measure", parents=[common], help="dump the Gibbs measure of a chain")
    s.add_argument("--chain")
    s.add_argument("--m", help="comma-separated parameters; default: the chain's optimum")
    s.set_defaults(func=cmd_gibbs_measure)

    s = sub.add_parser("simulate", parents=[common], help="exact finite-N free energy")
    s.add_argument("--N", type=int, default=12)
    s.add_argument("--chain")
    s.add_argument("--sweep", help="comma-separated list of N")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("count", parents=[common], help="count empirical measures in a TV ball around mu")
    s.add_argument("--N", type=int, default=12)
    s.add_argument("--radius", type=float, default=0.2)
    s.set_defaults(func=cmd_count)

    s = sub.add_parser("verify", parents=[common], help="run the full verification pipeline")
    s.add_argument("--sweep", help="comma-separated list of N for the enumeration series")
    s.add_argument("--disable", action="append", choices=report.CRITERIA, help="skip a criterion")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    needs_model = args.command not in ("chains",)
    if needs_model and not getattr(args, "model", None):
        print("error: --model is required", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
