"""Command-line front end: infer / verify / bench / list-functions.

stdout carries exactly one machine-readable document per invocation; all
logging goes to stderr with level prefixes.  Identical argv plus seed
produce byte-identical stdout (bench wall times are redacted unless
--timings is passed).  Exit codes: 0 success (infer: at least one
property; verify: pass), 2 for a clean negative (no properties / fail),
1 for hard errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys

from .bench import emit_report, registry, registry_entry, run_bench, select_entries
from .discovery import InferConfig, infer
from .errors import RSRError
from .parser import format_expr, parse
from .queries import queries_by_name
from .sampling import oracle_from_expr, taylor_program
from .verification import VerifyConfig, symbolic_verify

_SENTINEL = object()


def _log(level: str, message: str):
    print(f"{level}: {message}", file=sys.stderr)


def _env_seed() -> int:
    raw = os.environ.get("RSRFORGE_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        _log("warn", f"ignoring non-integer RSRFORGE_SEED={raw!r}")
        return 0


def _load_config(path) -> dict:
    """Flat key = value sections: [infer], [verify], [bench], [sampling]."""
    if path is None:
        return {}
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise RSRError(f"config file {path!r} not found or unreadable")
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            out[f"{section}.{key}"] = value
    return out


def _resolve(args, cfg_file: dict, section: str, key: str, cast, default):
    """Precedence: defaults < config file < explicit flag."""
    flag_val = getattr(args, key.replace("-", "_"), _SENTINEL)
    if flag_val is not _SENTINEL and flag_val is not None:
        return flag_val
    file_val = cfg_file.get(f"{section}.{key.replace('_', '-')}")
    if file_val is None:
        file_val = cfg_file.get(f"{section}.{key}")
    if file_val is not None:
        return cast(file_val)
    return default


def _build_oracle(args):
    box = None
    if args.box:
        lo, hi = (float(t) for t in args.box.split(","))
        box = (lo, hi)
    if args.function:
        entry = registry_entry(args.function)
        oracle = entry.oracle()
        if box is not None:
            oracle.box = box
        return oracle, entry
    if args.program:
        parts = args.program.split(":")
        if len(parts) != 3 or parts[0] != "taylor":
            raise RSRError(
                f"--program expects taylor:<name>:<terms>, got {args.program!r}"
            )
        oracle = taylor_program(parts[1], int(parts[2]), box=box or (-10.0, 10.0))
        return oracle, None
    if args.expr:
        arity = args.arity or 1
        oracle = oracle_from_expr(
            "expr", parse(args.expr), arity, box or (-10.0, 10.0)
        )
        return oracle, None
    raise RSRError("one of --function, --program, or --expr is required")


def cmd_infer(args, cfg_file: dict) -> int:
    oracle, entry = _build_oracle(args)

    degree_default = entry.degree_setting if entry else 2
    degree = _resolve(args, cfg_file, "infer", "max_degree", int, degree_default)
    m = _resolve(args, cfg_file, "infer", "samples", int, 100)
    epsilon = _resolve(args, cfg_file, "infer", "epsilon", float, 1e-3)
    max_den = _resolve(args, cfg_file, "infer", "max_denominator", int, 100)
    method = _resolve(args, cfg_file, "infer", "method", str, "regression")
    var_bound = _resolve(args, cfg_file, "infer", "var_bound", int, 3)
    seed = args.seed if args.seed is not None else _env_seed()
    if method == "integer":
        method = "integer"
    elif method not in ("regression",):
        raise RSRError(f"unknown method {method!r}")

    queries = None
    if args.queries:
        queries = tuple(queries_by_name(args.queries.split(","), oracle.arity))

    cfg = InferConfig(
        queries=queries,
        max_degree=degree,
        m=m,
        epsilon=epsilon,
        max_denominator=max_den,
        method=method,
        seed=seed,
        var_bound=var_bound,
        include_raw_vars=args.include_raw_vars,
        box=oracle.box,
    )
    _log("info", f"infer: oracle={oracle.name} degree={degree} m={m} seed={seed}")
    props, mean_errors, complexities, error = infer(oracle, cfg)

    document = {
        "properties": {pid: p.to_json_dict() for pid, p in props.items()},
        "mean_errors": mean_errors,
        "sample_complexities": complexities,
        "error": error,
        "config": {
            "oracle": oracle.name,
            "box": list(oracle.box) if oracle.box else None,
            **cfg.snapshot(),
        },
    }
    print(json.dumps(document, indent=1))
    return 0 if props else 2


def cmd_verify(args, cfg_file: dict) -> int:
    if args.expr:
        text = args.expr
    elif args.property_file:
        with open(args.property_file) as fh:
            record = json.load(fh)
        text = record["identity"]
        if text.endswith("= 0"):
            text = text[: text.rfind("=")]
    else:
        raise RSRError("one of --expr or --property-file is required")
    if not args.function:
        raise RSRError("--function is required to pick the closed form")

    entry = registry_entry(args.function)
    seed = args.seed if args.seed is not None else _env_seed()
    cfg = VerifyConfig(
        epsilon=_resolve(args, cfg_file, "verify", "epsilon", float, 1e-3),
        hp_points=_resolve(args, cfg_file, "verify", "hp_points", int, 64),
        hp_precision_bits=_resolve(args, cfg_file, "verify", "hp_bits", int, 256),
    )
    _log("info", f"verify: function={entry.name} seed={seed}")
    outcome = symbolic_verify(
        text,
        entry.closed_form,
        cfg,
        box=entry.box,
        seed=seed,
        arity=entry.arity,
    )
    document = {
        **outcome.to_json_dict(),
        "config": {
            "function": entry.name,
            "expr": text.strip(),
            "seed": seed,
            "hp_points": cfg.hp_points,
            "hp_precision_bits": cfg.hp_precision_bits,
        },
    }
    print(json.dumps(document, indent=1))
    return 0 if outcome.passed else 2


def cmd_bench(args, cfg_file: dict) -> int:
    names = args.names.split(",") if args.names else None
    category = None
    if args.filter:
        key, _, value = args.filter.partition("=")
        if key.strip() != "category" or not value:
            raise RSRError(f"--filter expects category=<name>, got {args.filter!r}")
        category = value.strip()

    seed = args.seed if args.seed is not None else _env_seed()
    reps = _resolve(args, cfg_file, "bench", "repetitions", int, 5)
    fmt = args.format or "table"
    overrides = {}
    m = _resolve(args, cfg_file, "bench", "samples", int, None)
    if m is not None:
        overrides["m"] = m
    if args.max_degree is not None:
        overrides["max_degree"] = args.max_degree
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon

    selection = select_entries(names, category)  # validates before running
    _log(
        "info",
        f"bench: {len(selection)} entries, repetitions={reps}, seed={seed}",
    )
    report = run_bench(
        names=names,
        category=category,
        cfg_overrides=overrides,
        repetitions=reps,
        seed=seed,
        workers=args.workers,
    )
    sys.stdout.write(emit_report(report, fmt, timings=args.timings))
    for row in report.rows:
        if row.error:
            _log("warn", f"{row.name}: {row.error}")
        _log("info", f"{row.name}: {row.wall_time_seconds:.2f}s median")
    return 0


def cmd_list_functions(args, _cfg_file: dict) -> int:
    entries = registry()
    if args.format == "json":
        print(
            json.dumps(
                [
                    {
                        "name": e.name,
                        "closed_form": format_expr(e.closed_form),
                        "arity": e.arity,
                        "category": e.category,
                        "degree": e.degree_setting,
                        "box": list(e.box),
                        "ground_truths": len(e.ground_truth),
                    }
                    for e in entries
                ],
                indent=1,
            )
        )
        return 0
    width = max(len(e.name) for e in entries)
    print(f"{'name':<{width}}  arity  degree  category          closed form")
    for e in entries:
        print(
            f"{e.name:<{width}}  {e.arity:^5}  {e.degree_setting:^6}  "
            f"{e.category:<16}  {format_expr(e.closed_form)}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="rsrforge",
        description="Learn and verify randomized self-reductions of numeric functions.",
    )
    top.add_argument("--config", default=None, help="flat key=value config file")
    sub = top.add_subparsers(dest="command", required=True)

    p_inf = sub.add_parser("infer", help="discover identities from a black-box oracle")
    p_inf.add_argument("--function", help="benchmark function name")
    p_inf.add_argument("--program", help="approximate program, e.g. taylor:sigmoid:30")
    p_inf.add_argument("--expr", help="closed-form expression for an ad-hoc oracle")
    p_inf.add_argument("--arity", type=int, default=None)
    p_inf.add_argument(
        "--max-degree", "--degree", dest="max_degree", type=int, default=None
    )
    p_inf.add_argument("--samples", "-n", dest="samples", type=int, default=None)
    p_inf.add_argument("--epsilon", type=float, default=None)
    p_inf.add_argument("--max-denominator", type=int, default=None)
    p_inf.add_argument("--method", choices=("regression", "integer"), default=None)
    p_inf.add_argument("--var-bound", dest="var_bound", type=int, default=None)
    p_inf.add_argument("--queries", help='comma list, e.g. "x+r,x-r,r,x"')
    p_inf.add_argument("--box", help="sampling box lo,hi")
    p_inf.add_argument("--include-raw-vars", action="store_true")
    p_inf.add_argument("--seed", type=int, default=None)
    p_inf.set_defaults(func=cmd_infer)

    p_ver = sub.add_parser("verify", help="verify an identity against a closed form")
    p_ver.add_argument("--expr", help="identity text; Eq(lhs, rhs) or residual")
    p_ver.add_argument("--property-file", help="property JSON file from infer")
    p_ver.add_argument("--function", help="benchmark function supplying the closed form")
    p_ver.add_argument("--epsilon", type=float, default=None)
    p_ver.add_argument("--hp-points", dest="hp_points", type=int, default=None)
    p_ver.add_argument("--hp-bits", dest="hp_bits", type=int, default=None)
    p_ver.add_argument("--seed", type=int, default=None)
    p_ver.set_defaults(func=cmd_verify)

    p_b = sub.add_parser("bench", help="run the RSR-Bench harness")
    p_b.add_argument("--names", help="comma list of benchmark names")
    p_b.add_argument("--filter", help="category=<name> selector")
    p_b.add_argument("--format", choices=("table", "csv", "json"), default=None)
    p_b.add_argument("--repetitions", type=int, default=None)
    p_b.add_argument("--samples", type=int, default=None)
    p_b.add_argument("--max-degree", dest="max_degree", type=int, default=None)
    p_b.add_argument("--epsilon", type=float, default=None)
    p_b.add_argument("--workers", type=int, default=None)
    p_b.add_argument("--timings", action="store_true",
                     help="include wall times in stdout (breaks byte determinism)")
    p_b.add_argument("--seed", type=int, default=None)
    p_b.set_defaults(func=cmd_bench)

    p_ls = sub.add_parser("list-functions", help="print the benchmark registry")
    p_ls.add_argument("--format", choices=("table", "json"), default="table")
    p_ls.set_defaults(func=cmd_list_functions)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg_file = _load_config(args.config)
        return args.func(args, cfg_file)
    except RSRError as exc:
        _log("error", str(exc))
        return 1
    except KeyError as exc:
        _log("error", str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
