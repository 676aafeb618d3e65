"""Command line front end: build pants graphs from end-space specs,
rank end spaces, certify mapping schemes and run the fixture corpus.

Exit codes: 0 success (certify: MODULAR), 2 parse or consistency
failure, 3 rank overflow or a perfect kernel, 4 embedding failure,
5 mapping undefined on a probed curve, 10 certified NOT_QC,
11 INCONCLUSIVE, 1 corpus mismatch.
"""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Tuple

from .certify import (MappingScheme, MapUndefinedOnCurve, Thresholds,
                      certify, serialize_certificate)
from .construct import (BifluteParams, biflute, build_re_system, eta_sphere,
                        levels_for, pants_for_pure, serialize_witnesses,
                        standard_tree)
from .fixtures import FIXTURES
from .geometry import FNStructure, parse_structure, unit_structure
from .ordinal import (OrdinalNotation, PerfectKernel, RankOverflow, cb_rank,
                      parse_endspace)
from .pantsgraph import (EmbeddingFailure, PantsScheme, TruncatedGraph,
                         parse_graph, serialize_graph)

CORPUS_PATH = Path(__file__).parent / "corpus" / "cases.json"

EXIT_PARSE = 2
EXIT_RANK = 3
EXIT_EMBED = 4
EXIT_UNDEFINED = 5
EXIT_NOT_QC = 10
EXIT_INCONCLUSIVE = 11

_VERDICT_EXIT = {"MODULAR": 0, "NOT_QC": EXIT_NOT_QC,
                 "INCONCLUSIVE": EXIT_INCONCLUSIVE}


def _fail(message: str, code: int) -> int:
    print("bigsurf: %s" % message, file=sys.stderr)
    return code


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _static_scheme(g: TruncatedGraph, name: str = "file") -> PantsScheme:
    """Wrap a parsed truncation as a scheme that is already fully
    truncated: every depth returns the same graph."""
    return PantsScheme(lambda d: g, name=name)


def _parse_abc(text: str) -> BifluteParams:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (3, 4):
        raise ValueError("--abc wants A,B,C or A,B,C,base, got %r" % text)
    base = parts[3] if len(parts) == 4 else "Z"
    return BifluteParams.constant(int(parts[0]), int(parts[1]),
                                  int(parts[2]), base=base)


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------

def _scheme_for_build(args) -> Tuple[PantsScheme, tuple]:
    """Scheme plus any exchange witnesses the algorithm produced."""
    if args.algo in ("pure", "re"):
        if not args.spec:
            raise ValueError("--algo %s needs an end-space spec file" % args.algo)
        ends = parse_endspace(Path(args.spec).read_text())
        if args.algo == "pure":
            return pants_for_pure(ends, args.depth), ()
        bound = OrdinalNotation.parse(args.rank_bound)
        scheme, _, witnesses = build_re_system(ends, bound, args.depth)
        return scheme, tuple(witnesses)
    if args.algo == "eta-sphere":
        if args.eta is None:
            raise ValueError("--algo eta-sphere needs --eta")
        return eta_sphere(OrdinalNotation.parse(args.eta)), ()
    if args.algo == "tree":
        if args.eta is None:
            raise ValueError("--algo tree needs --eta")
        return standard_tree(OrdinalNotation.parse(args.eta),
                             genus=args.genus), ()
    if args.abc is None:
        raise ValueError("--algo biflute needs --abc")
    return biflute(_parse_abc(args.abc)), ()


def cmd_build(args) -> int:
    try:
        scheme, witnesses = _scheme_for_build(args)
        g = scheme.truncate(args.depth)
        ls = (levels_for(scheme, args.depth)
              if scheme.meta.get("level_roots") else None)
        text = serialize_graph(g, ls)
        if witnesses:
            text += serialize_witnesses(g, witnesses)
    except (RankOverflow, PerfectKernel) as e:
        return _fail(str(e), EXIT_RANK)
    except EmbeddingFailure as e:
        return _fail(str(e), EXIT_EMBED)
    except (ValueError, OSError) as e:
        return _fail(str(e), EXIT_PARSE)
    _emit(text, args.out)
    return 0


# ---------------------------------------------------------------------------
# rank
# ---------------------------------------------------------------------------

def cmd_rank(args) -> int:
    try:
        ends = parse_endspace(Path(args.spec).read_text())
    except (ValueError, OSError) as e:
        return _fail(str(e), EXIT_PARSE)
    try:
        rank = cb_rank(ends)
    except (PerfectKernel, RankOverflow) as e:
        return _fail(str(e), EXIT_RANK)
    _emit("%s\n" % rank, args.out)
    return 0


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------

def _mapping_from_flags(args) -> MappingScheme:
    rules = []
    for spec in args.map or ():
        parts = spec.split(",")
        if parts[0] == "bump" and len(parts) == 3:
            rules.append(("bump", parts[1], int(parts[2])))
        elif parts[0] == "swap" and len(parts) == 3:
            rules.append(("prefix", parts[1], parts[2]))
            rules.append(("prefix", parts[2], parts[1]))
        elif parts[0] == "pairs" and len(parts) == 3:
            rules.append(("pairs", ((parts[1], parts[2]),)))
        else:
            raise ValueError("bad --map rule %r" % spec)
    support = tuple(args.support.split(",")) if args.support else None
    along = _parse_abc(args.along) if args.along else None
    return MappingScheme(kind=args.map_kind, name=args.map_name,
                         rules=tuple(rules), support=support, along=along)


def _certify_inputs(args) -> Tuple[FNStructure, MappingScheme]:
    if args.fixture:
        if args.fixture not in FIXTURES:
            raise ValueError("unknown fixture %r (have: %s)"
                             % (args.fixture, ", ".join(sorted(FIXTURES))))
        return FIXTURES[args.fixture]()
    if not args.graph:
        raise ValueError("certify needs a graph file or --fixture")
    g, _, _, _ = parse_graph(Path(args.graph).read_text())
    scheme = _static_scheme(g)
    if args.structure:
        fn = parse_structure(Path(args.structure).read_text())
        x = FNStructure(lengths=fn.lengths, twists=fn.twists, scheme=scheme)
    else:
        x = unit_structure(scheme)
    return x, _mapping_from_flags(args)


def cmd_certify(args) -> int:
    try:
        x, f = _certify_inputs(args)
        thresholds = Thresholds(ratio=args.threshold)
        cert = certify(x, f, args.depth, thresholds)
    except MapUndefinedOnCurve as e:
        return _fail(str(e), EXIT_UNDEFINED)
    except (ValueError, OSError) as e:
        return _fail(str(e), EXIT_PARSE)
    except OverflowError:
        return _fail("curve lengths overflow the float range at depth %d; "
                     "lower --depth" % args.depth, EXIT_PARSE)
    _emit(serialize_certificate(cert), args.out)
    return _VERDICT_EXIT[cert.verdict]


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------

def _interval_close(got, want, rel: float = 1e-9) -> bool:
    return all(abs(g - w) <= rel * max(1.0, abs(w))
               for g, w in zip(got, want)) and len(got) == len(want)


def _run_case(case, default_depth: int):
    x, f = FIXTURES[case["fixture"]]()
    depth = case.get("depth", default_depth)
    cert = certify(x, f, depth)
    got = {"verdict": cert.verdict}
    if cert.growth is not None:
        got["growth"] = cert.growth
    if cert.interval is not None:
        got["interval"] = list(cert.interval)
    return got


def _describe(fields) -> str:
    text = fields.get("verdict", "?")
    if "growth" in fields:
        text += "/" + fields["growth"]
    if "interval" in fields:
        text += " [%.6g, %.6g]" % tuple(fields["interval"])
    return text


def _case_passes(expect, got) -> bool:
    for key, entry in expect.items():
        want = entry[0]
        if key == "interval":
            if "interval" not in got or not _interval_close(got["interval"], want):
                return False
        elif got.get(key) != want:
            return False
    return True


def cmd_corpus(args) -> int:
    path = Path(args.corpus_file) if args.corpus_file else CORPUS_PATH
    try:
        data = json.loads(path.read_text())
    except (ValueError, OSError) as e:
        return _fail(str(e), EXIT_PARSE)
    cases = [c for c in data["cases"]
             if not args.filter or args.filter in c["name"]]
    if not cases:
        return _fail("no corpus case matches %r" % args.filter, EXIT_PARSE)
    with ThreadPoolExecutor(max_workers=min(8, len(cases))) as pool:
        results = list(pool.map(lambda c: _run_case(c, args.depth), cases))
    rows = sorted(zip(cases, results), key=lambda cr: cr[0]["name"])
    if args.bless:
        for case, got in rows:
            case["expect"] = {key: [value, "BLESSED"]
                              for key, value in got.items()}
        path.write_text(json.dumps(data, indent=2) + "\n")
    failures = 0
    lines = []
    for case, got in rows:
        expect = {k: v for k, v in case["expect"].items()}
        ok = _case_passes(expect, got)
        failures += 0 if ok else 1
        want_text = _describe({k: v[0] for k, v in expect.items()})
        lines.append("%-26s %-28s %-28s %s"
                     % (case["name"], want_text, _describe(got),
                        "PASS" if ok else "FAIL"))
    lines.append("%d/%d cases pass" % (len(rows) - failures, len(rows)))
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_common(sp, depth: int = 8):
    sp.add_argument("--depth", type=int, default=depth,
                    help="truncation depth (default %d)" % depth)
    sp.add_argument("--out", help="write output here instead of stdout")
    sp.add_argument("--seed", type=int, default=0,
                    help="seed for randomized sweeps (reserved)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bigsurf",
        description="pants-graph workbench for infinite-type surfaces")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="realize an end spec as a pants graph")
    b.add_argument("spec", nargs="?", help="endspace v1 file")
    b.add_argument("--algo", default="pure",
                   choices=["pure", "re", "eta-sphere", "tree", "biflute"])
    b.add_argument("--rank-bound", default="w^w",
                   help="ordinal bound for --algo re (default w^w)")
    b.add_argument("--eta", help="ordinal text for eta-sphere/tree")
    b.add_argument("--genus", action="store_true",
                   help="bloom a handle at every tree pants")
    b.add_argument("--abc", help="A,B,C[,base] for --algo biflute")
    _add_common(b)
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("rank", help="Cantor-Bendixson rank of an end spec")
    r.add_argument("spec", help="endspace v1 file")
    _add_common(r)
    r.set_defaults(func=cmd_rank)

    c = sub.add_parser("certify", help="verdict for a mapping scheme")
    c.add_argument("graph", nargs="?", help="pantsgraph v1 file")
    c.add_argument("--fixture", help="use a named fixture instead of files")
    c.add_argument("--structure", help="structure v1 file (default: unit)")
    c.add_argument("--map", action="append", metavar="RULE",
                   help="bump,PREFIX,OFFSET | swap,A,B | pairs,X,Y")
    c.add_argument("--map-kind", default="compact",
                   help="mapping kind (default compact)")
    c.add_argument("--map-name", default="cli-map")
    c.add_argument("--support", help="comma-separated support prefixes")
    c.add_argument("--along", help="A,B,C[,base] declared shift parameters")
    c.add_argument("--threshold", type=float, default=1e6,
                   help="divergence ratio threshold (default 1e6)")
    _add_common(c)
    c.set_defaults(func=cmd_certify)

    k = sub.add_parser("corpus", help="run the expected-verdict corpus")
    k.add_argument("--filter", help="substring filter on case names")
    k.add_argument("--bless", action="store_true",
                   help="rewrite expected values from this run")
    k.add_argument("--corpus-file", help="corpus JSON (default: packaged)")
    _add_common(k)
    k.set_defaults(func=cmd_corpus)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
