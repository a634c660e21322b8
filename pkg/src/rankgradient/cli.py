"""Command-line front end.

Commands: enumerate, lowindex, chain, gradient, graphing, tower, validate.
Every report embeds the tool version and an echo of the effective config,
and repeated runs with the same config produce byte-identical output.

Exit codes: 0 ok, 1 I/O error, 2 parse/config error, 3 budget exhausted,
4 internal invariant violation (a bug).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from importlib import resources

from . import __version__
from .cache import CACHE_DIR_ENV, TableCache
from .chains import (
    farber_chain,
    gradient_sequence,
    hnn_chain,
    lamplighter_chain,
    report_to_csv,
    report_to_json,
)
from .cosets import DEFAULT_COSET_CAP, low_index, validate
from .errors import BudgetError, InternalInvariantError
from .graphings import edge_measure, graphing_to_json_obj, minimize_graphing
from .homology import DEFAULT_PRIMES
from .towers import (
    ambient_presentation,
    build_tower,
    cover_to_json_obj,
    tower_report,
    tower_report_to_csv,
    tower_report_to_json,
)
from .words import ParseError, parse_presentation, serialize_presentation

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_INTERNAL = 4

PRESET_NAMES = (
    "f2",
    "f3",
    "surface2",
    "fig8",
    "s3",
    "z2z2",
    "lamplighter2",
    "lamplighter3",
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    source: str  # "preset:<name>" or "file:<path>"
    depth: int = None
    coset_cap: int = DEFAULT_COSET_CAP
    index_cap: int = None
    label_cap: int = None
    effort: int = 2
    primes: tuple = DEFAULT_PRIMES
    format: str = "json"
    cache_dir: str = None
    seed: int = 0
    jobs: int = 1
    extra: tuple = ()  # command-specific (flag, value) pairs, sorted

    def __post_init__(self):
        for cap in (self.coset_cap, self.index_cap, self.label_cap):
            if cap is not None and cap < 1:
                raise ValueError("caps must be positive")
        if self.format not in ("json", "csv", "text"):
            raise ValueError(f"unknown format {self.format!r}")


def load_source(args):
    """(presentation, specs-by-name, source tag) from --preset or --input."""
    if args.preset:
        ref = resources.files("rankgradient.presets").joinpath(args.preset + ".txt")
        try:
            text = ref.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ParseError(
                f"unknown preset {args.preset!r}; available: {', '.join(PRESET_NAMES)}"
            ) from None
        source = f"preset:{args.preset}"
    else:
        with open(args.input, "r", encoding="utf-8") as fh:
            text = fh.read()
        source = f"file:{args.input}"
    pres, specs = parse_presentation(text)
    by_name = {}
    for spec in specs:
        if spec.name in by_name:
            raise ParseError(f"duplicate subgroup name {spec.name!r}")
        by_name[spec.name] = spec
    return pres, by_name, source


def pick_spec(args, specs):
    if getattr(args, "sub", None):
        if args.sub not in specs:
            raise ParseError(f"no subgroup named {args.sub!r} in the input")
        return specs[args.sub]
    return None


def _config(args, source, **extra):
    return RunConfig(
        command=args.command,
        source=source,
        depth=getattr(args, "depth", None),
        coset_cap=args.coset_cap,
        index_cap=getattr(args, "index_cap", None),
        label_cap=getattr(args, "label_cap", None),
        effort=getattr(args, "effort", 2),
        primes=tuple(args.primes),
        format=args.format,
        cache_dir=args.cache_dir,
        seed=getattr(args, "seed", 0),
        jobs=getattr(args, "jobs", 1),
        extra=tuple(sorted((k, str(v)) for k, v in extra.items() if v is not None)),
    )


def emit(config: RunConfig, body_obj=None, body_csv=None, body_text=None) -> str:
    """Wrap a report in the version/config envelope for the chosen format."""
    echo = asdict(config)
    echo["primes"] = list(echo["primes"])
    echo["extra"] = [list(kv) for kv in echo["extra"]]
    if config.format == "json":
        return json.dumps(
            {"version": __version__, "config": echo, "report": body_obj},
            indent=2,
            sort_keys=False,
        ) + "\n"
    header = f"# rankgradient {__version__}\n# config {json.dumps(echo, sort_keys=True)}\n"
    if config.format == "csv":
        if body_csv is None:
            raise ParseError(f"command {config.command!r} has no csv form")
        return header + body_csv
    return header + body_text


def _frac(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_enumerate(args):
    pres, specs, source = load_source(args)
    spec = pick_spec(args, specs)
    cache = TableCache(args.cache_dir)
    table = cache.enumerate(pres, spec, cap=args.coset_cap, provenance="cli")
    config = _config(args, source, sub=getattr(args, "sub", None))
    obj = {
        "index": table.index,
        "subgroup": spec.name if spec else "1",
        "perms": {
            name: list(p) for name, p in zip(pres.generators, table.perms)
        },
        "cache": {"hits": cache.hits, "misses": cache.misses, "enabled": cache.enabled},
    }
    text = (
        f"index {table.index} (subgroup {obj['subgroup']}, "
        f"cache {'hit' if cache.hits else 'miss'})\n"
    )
    return emit(config, body_obj=obj, body_text=text)


def cmd_lowindex(args):
    pres, _, source = load_source(args)
    tables = low_index(pres, args.max)
    counts = {}
    for t in tables:
        counts[t.index] = counts.get(t.index, 0) + 1
    config = _config(args, source, max=args.max)
    obj = {
        "counts": {str(k): counts.get(k, 0) for k in range(1, args.max + 1)},
        "total": len(tables),
    }
    csv_body = "index,count\n" + "".join(
        f"{k},{counts.get(k, 0)}\n" for k in range(1, args.max + 1)
    )
    text = "".join(
        f"index {k}: {counts.get(k, 0)} subgroups\n" for k in range(1, args.max + 1)
    )
    return emit(config, body_obj=obj, body_csv=csv_body, body_text=text)


def build_chain(args, pres, specs, source):
    kind = args.kind
    if kind == "auto":
        if getattr(args, "sub", None):
            kind = "farber"
        elif source.startswith("preset:lamplighter"):
            kind = "lamplighter"
        elif args.stable in pres.generators:
            kind = "hnn"
        elif len(specs) == 1:
            kind = "farber"
        else:
            raise ParseError(
                "cannot infer the chain kind; pass --kind farber|hnn|lamplighter"
            )
    if kind == "farber":
        spec = pick_spec(args, specs)
        if spec is None:
            if len(specs) != 1:
                raise ParseError("farber chains need --sub naming the seed subgroup")
            spec = next(iter(specs.values()))
        kwargs = {} if args.index_cap is None else {"index_cap": args.index_cap}
        return farber_chain(pres, spec, args.depth, coset_cap=args.coset_cap, **kwargs)
    if kind == "hnn":
        return hnn_chain(pres, args.stable, args.depth)
    if kind == "lamplighter":
        m = args.m
        if m is None and source.startswith("preset:lamplighter"):
            m = int(source.rsplit("lamplighter", 1)[1])
        if m is None:
            raise ParseError("lamplighter chains need --m")
        return lamplighter_chain(m, args.depth)
    raise ParseError(f"unknown chain kind {kind!r}")


def cmd_chain(args, gradient_only=False):
    pres, specs, source = load_source(args)
    chain = build_chain(args, pres, specs, source)
    report = gradient_sequence(
        chain, primes=tuple(args.primes), effort=args.effort, jobs=args.jobs
    )
    config = _config(
        args, source, kind=args.kind, sub=getattr(args, "sub", None),
        stable=args.stable, m=args.m,
    )
    body = json.loads(report_to_json(report))
    if not gradient_only:
        body["chain"] = {
            "provenance": body["chain"],
            "indices": list(chain.indices()),
            "nested": list(chain.nested),
            "stabilized": list(chain.stabilized),
            "truncated": chain.truncated,
        }
    lines = []
    if chain.truncated:
        lines.append(f"TRUNCATED: {chain.truncated}")
    for st in report.levels:
        if st.error:
            lines.append(f"level {st.level}: index {st.index} ERROR {st.error}")
        else:
            ratios = ", ".join(f"{k}={_frac(v)}" for k, v in st.ratios().items())

            lines.append(
                f"level {st.level}: index {st.index} rank [{st.rank_lower}, {st.rank_upper}] "
                f"beta1 {st.beta1} | {ratios}"
            )
    return emit(
        config,
        body_obj=body,
        body_csv=report_to_csv(report),
        body_text="\n".join(lines) + "\n",
    )


def cmd_graphing(args):
    pres, specs, source = load_source(args)
    chain = build_chain(args, pres, specs, source)
    if not 0 <= args.level < len(chain.levels):
        raise ParseError(f"level {args.level} out of range 0..{len(chain.levels) - 1}")
    kwargs = {} if args.label_cap is None else {"label_cap": args.label_cap}
    if args.gens:
        sub_pres, sub_specs = parse_presentation(
            "gens " + " ".join(pres.generators) + "\nsub G " + args.gens + "\n"
        )
        kwargs["gens"] = sub_specs[0].generators
    graphing, bound = minimize_graphing(chain, args.level, seed=args.seed, **kwargs)
    config = _config(
        args, source, kind=args.kind, sub=getattr(args, "sub", None),
        stable=args.stable, m=args.m, level=args.level, gens=args.gens,
    )
    measure = edge_measure(graphing)
    obj = {
        "level": args.level,
        "index": graphing.index,
        "edge_measure": _frac(measure),
        "rank_bound": bound,
        "fibers": graphing_to_json_obj(graphing, pres),
    }
    text = (
        f"level {args.level}: index {graphing.index}, edge measure {_frac(measure)}, "
        f"rank bound {bound}\n"
    )
    return emit(config, body_obj=obj, body_text=text)


def cmd_tower(args):
    ns = argparse.Namespace(preset=args.group, input=None)
    a_pres, _, source = load_source(ns)
    mu = Fraction(args.mu)
    levels = build_tower(a_pres, mu, args.depth, scale=args.scale, seed=args.seed)
    ambient = ambient_presentation(a_pres)
    report = tower_report(levels, ambient, primes=tuple(args.primes), effort=args.effort)
    config = _config(args, source, group=args.group, mu=args.mu, scale=args.scale)
    obj = json.loads(tower_report_to_json(report))
    if args.covers:
        obj["covers"] = [cover_to_json_obj(c) for c in levels]
    lines = []
    for i, lc in enumerate(report.levels):
        lines.append(
            f"level {i}: n {lc.n} p {lc.p} mu {_frac(lc.mu)} radius {lc.radius} "
            f"beta1 {lc.computed_beta1} ({lc.beta1_formula}) "
            f"b1p {{{', '.join(f'{q}: {v}' for q, v in sorted(lc.computed_b1p.items()))}}} "
            f"match {lc.b1p_match}"
        )
    lines.append(
        f"limits: d {_frac(report.limit_d)}, "
        + ", ".join(f"b1p_{q} {_frac(v)}" for q, v in sorted(report.limit_b1p.items()))
        + f", beta1 {_frac(report.limit_beta1)}"
    )
    return emit(
        config,
        body_obj=obj,
        body_csv=tower_report_to_csv(report),
        body_text="\n".join(lines) + "\n",
    )


def cmd_validate(args):
    pres, specs, source = load_source(args)
    cache = TableCache(args.cache_dir)
    config = _config(args, source)
    results = []
    for name in sorted(specs):
        table = cache.enumerate(pres, specs[name], cap=args.coset_cap, provenance="validate")
        problems = validate(table)
        if problems:
            raise InternalInvariantError(
                f"subgroup {name}: " + "; ".join(problems)
            )
        results.append({"subgroup": name, "index": table.index, "ok": True})
    obj = {
        "generators": list(pres.generators),
        "relators": [pres.word_str(r) for r in pres.relators],
        "subgroups": results,
        "canonical": serialize_presentation(pres, [specs[n] for n in sorted(specs)]),
    }
    text = f"ok: {len(pres.generators)} generators, {len(pres.relators)} relators, " \
           f"{len(results)} subgroup(s) enumerated\n"
    return emit(config, body_obj=obj, body_text=text)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _primes(text):
    out = tuple(int(p) for p in text.split(","))
    if not out or any(p < 2 for p in out):
        raise argparse.ArgumentTypeError("primes must be a comma list of ints >= 2")
    return out


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=PRESET_NAMES)
    src.add_argument("--input", help="presentation file")
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--primes", type=_primes, default=DEFAULT_PRIMES)
    common.add_argument("--coset-cap", type=int, default=DEFAULT_COSET_CAP)
    common.add_argument("--cache-dir", default=None,
                        help=f"coset table cache (or ${CACHE_DIR_ENV})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)

    chain_opts = argparse.ArgumentParser(add_help=False)
    chain_opts.add_argument("--kind", choices=("auto", "farber", "hnn", "lamplighter"),
                            default="auto")
    chain_opts.add_argument("--sub", help="seed subgroup name (farber)")
    chain_opts.add_argument("--stable", default="t", help="stable letter (hnn)")
    chain_opts.add_argument("--m", type=int, default=None, help="wreath exponent (lamplighter)")
    chain_opts.add_argument("--depth", type=int, required=True)
    chain_opts.add_argument("--index-cap", type=int, default=None)
    chain_opts.add_argument("--effort", type=int, default=2, choices=(0, 1, 2))

    parser = argparse.ArgumentParser(
        prog="rankgradient",
        description="rank and homology gradients along finite-index subgroup chains",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("enumerate", parents=[common], help="Todd-Coxeter enumeration")
    p.add_argument("--sub", help="subgroup name from the input (default: trivial)")

    p = subs.add_parser("lowindex", parents=[common], help="all subgroups of small index")
    p.add_argument("--max", type=int, required=True)

    subs.add_parser("chain", parents=[common, chain_opts],
                    help="build a chain and report its gradient sequence")
    subs.add_parser("gradient", parents=[common, chain_opts],
                    help="gradient sequence only (no chain structure block)")

    p = subs.add_parser("graphing", parents=[common, chain_opts],
                        help="minimized graphing and rank bound at one chain level")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--label-cap", type=int, default=None)
    p.add_argument("--gens", default=None,
                   help="comma-separated generator words for the level subgroup")

    p = subs.add_parser("tower", parents=[common],
                        help="covering tower with prescribed fixed-vertex ratio")
    p.add_argument("--group", choices=("s3", "z2z2"), required=True)
    p.add_argument("--mu", required=True, help="rational, e.g. 3/4")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--scale", type=int, default=12)
    p.add_argument("--effort", type=int, default=0, choices=(0, 1, 2))
    p.add_argument("--covers", action="store_true", help="embed the cover permutations")

    subs.add_parser("validate", parents=[common],
                    help="parse, enumerate and audit an input file")
    return parser


COMMANDS = {
    "enumerate": cmd_enumerate,
    "lowindex": cmd_lowindex,
    "chain": lambda args: cmd_chain(args, gradient_only=False),
    "gradient": lambda args: cmd_chain(args, gradient_only=True),
    "graphing": cmd_graphing,
    "tower": cmd_tower,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "tower" and not (args.preset or args.input):
        parser.error("one of --preset or --input is required")
    try:
        out = COMMANDS[args.command](args)
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BudgetError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InternalInvariantError, AssertionError) as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
