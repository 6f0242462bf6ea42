"""Command-line frontend: parsing, invariants, search, compilation,
recognition, and the built-in example corpus.

Exit codes: 0 completed (whatever the verdict), 1 usage or parse error,
2 resource exhaustion, 3 internal consistency failure (a verify mismatch,
which is always a bug).

Reports are JSON with sorted keys and no volatile fields, so a fixed seed
and single-threaded run reproduce them byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .compiler import (
    Cancellation,
    compile_cancellation,
    compile_move,
    serialize_trace,
    verify_trace,
)
from .handles import (
    build_handle_structure,
    enumerate_choices,
    parse_handle_structure,
    serialize_handle_structure,
    sticky_end,
    surface_invariants,
    total_space_euler,
)
from .moves import (
    Conjugate,
    Invert,
    MultiplyRight,
    CertificateReplayError,
    canonical_form,
    parse_certificate,
    replay_certificate,
    serialize_certificate,
    verify_certificate,
)
from .recognizer import OracleConfig, recognize
from .search import (
    ABORTED,
    SearchBounds,
    Strategy,
    scramble,
    trivialization_search,
)
from .words import (
    ParseError,
    Presentation,
    cyclic_reduce,
    free_reduce,
    parse_presentation,
    presentation_text,
    snf_diagonal,
    word_text,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RESOURCE = 2
EXIT_INCONSISTENT = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def corpus() -> list[dict]:
    """Built-in presentations: the worked examples, standard presentations of
    ranks 1-4, and the Akbulut-Kirby family AK(2)..AK(5).  Entries carry no
    trivializability claims."""
    entries = [
        ("free-1", "<a |>"),
        ("free-2", "<a, b |>"),
        ("single", "<a | a>"),
        ("conjugated", "<a, b | a, Aba>"),
        ("multiplied", "<a, b | a, ab>"),
    ]
    for n in range(1, 5):
        names = "abcd"[:n]
        gens = ", ".join(names)
        rels = ", ".join(names)
        entries.append((f"standard-{n}", f"<{gens} | {rels}>"))
    for n in range(2, 6):
        entries.append((f"ak-{n}", f"<x, y | x^{n} Y^{n + 1}, x y x Y X Y>"))
    return [{"name": name, "presentation": text} for name, text in entries]


def _surface_name(orientable: bool, genus: int, boundary: int) -> str:
    if orientable:
        if genus == 0:
            return {0: "sphere", 1: "disc", 2: "annulus", 3: "pair of pants"}.get(
                boundary, f"sphere with {boundary} boundary circles"
            )
        if genus == 1 and boundary == 0:
            return "torus"
        return f"genus-{genus} surface with {boundary} boundary circles"
    return f"non-orientable surface ({genus} cross-caps, {boundary} boundary circles)"


def _emit(args, payload: dict | str) -> None:
    if isinstance(payload, str):
        text = payload
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _bounds(args) -> SearchBounds:
    return SearchBounds(
        max_depth=args.depth,
        max_relator_length=args.maxlen,
        max_states=args.max_states,
        max_memory_bytes=args.mem,
        strategy=Strategy(args.strategy),
    )


def _serialize_cert_lines(cert) -> list[str]:
    return serialize_certificate(cert).rstrip("\n").split("\n")


def _cmd_parse(args) -> int:
    p = parse_presentation(args.presentation)
    names = p.generator_names()
    _emit(
        args,
        {
            "command": "parse",
            "generators": list(names),
            "relators": [list(r) for r in p.relators],
            "relator_texts": [word_text(r, names) for r in p.relators],
            "balanced": p.balanced,
        },
    )
    return EXIT_OK


def _cmd_normalize(args) -> int:
    p = parse_presentation(args.presentation)
    reduced = Presentation(
        p.generator_count,
        tuple(cyclic_reduce(free_reduce(r)) for r in p.relators),
        p.names,
    )
    _emit(
        args,
        {
            "command": "normalize",
            "presentation": presentation_text(reduced),
            "canonical_key": canonical_form(p).decode(),
            "snf_diagonal": list(snf_diagonal(p)),
        },
    )
    return EXIT_OK


def _cmd_invariants(args) -> int:
    p = parse_presentation(args.presentation)
    h = build_handle_structure(p)
    si = surface_invariants(sticky_end(h))
    surfaces = []
    # per-component boundary/orientability, reusing the aggregate data
    from .handles import boundary_circles, _island_components

    g = sticky_end(h)
    roots = _island_components(g)
    comp_ids = sorted(set(roots))
    per_comp_circles = {c: 0 for c in comp_ids}
    ends = g.band_ends()
    for circle in boundary_circles(g):
        pt = next(iter(circle))
        isl = pt[1] if pt[0] == "island" else ends[pt[0][0]][pt[0][1]][0]
        per_comp_circles[roots[isl]] += 1
    for idx, comp in enumerate(comp_ids):
        surfaces.append(
            _surface_name(si.orientable, si.genus_per_component[idx], per_comp_circles[comp])
        )
    _emit(
        args,
        {
            "command": "invariants",
            "euler_M": total_space_euler(h),
            "euler_S": si.euler,
            "s_components": si.components,
            "boundary_circles": si.boundary_circles,
            "orientable": si.orientable,
            "genus_per_component": list(si.genus_per_component),
            "surfaces": surfaces,
            "surface": surfaces[0] if len(surfaces) == 1 else None,
        },
    )
    return EXIT_OK


def _cmd_handle(args) -> int:
    p = parse_presentation(args.presentation)
    if args.action == "build":
        h = build_handle_structure(p)
        _emit(args, serialize_handle_structure(h))
        return EXIT_OK
    enumeration = enumerate_choices(p, args.choices)
    _emit(
        args,
        {
            "command": "handle-choices",
            "total": enumeration.total,
            "truncated": enumeration.truncated,
            "choices": [
                [[list(ref) for ref in order] for order in choice.beam_orders]
                for choice in enumeration.choices
            ],
        },
    )
    return EXIT_OK


def _cmd_search(args) -> int:
    p = parse_presentation(args.presentation)
    report = trivialization_search(p, _bounds(args))
    payload = {
        "command": "search",
        "outcome": report.outcome,
        "snf_diagonal": list(report.snf_diagonal) if report.snf_diagonal else None,
        "bound_hit": report.bound_hit,
        "reason": report.reason,
        "states_expanded": report.states_expanded,
        "frontier_peak": report.frontier_peak,
        "certificate": _serialize_cert_lines(report.certificate)
        if report.certificate
        else None,
    }
    _emit(args, payload)
    return EXIT_RESOURCE if report.outcome == ABORTED else EXIT_OK


def _cmd_scramble(args) -> int:
    p = parse_presentation(args.presentation)
    result, cert = scramble(p, args.k, args.seed, args.maxlen)
    _emit(
        args,
        {
            "command": "scramble",
            "presentation": presentation_text(result),
            "moves_applied": len(cert.steps),
            "certificate": _serialize_cert_lines(cert),
        },
    )
    return EXIT_OK


def _parse_move_text(text: str):
    parts = text.split()
    op = parts[0].upper()
    if op == "INV":
        return Invert(int(parts[1]))
    if op == "CONJ":
        return Conjugate(int(parts[1]), int(parts[2]), int(parts[3]))
    if op == "MULR":
        return MultiplyRight(int(parts[1]), int(parts[2]))
    if op == "CANCEL":
        return Cancellation(int(parts[1]), int(parts[2]))
    raise _UsageError(f"unknown move {text!r}")


def _cmd_compile(args) -> int:
    p = parse_presentation(args.presentation)
    h = build_handle_structure(p)
    steps = []
    consistent = True
    for text in args.move:
        mv = _parse_move_text(text)
        if isinstance(mv, Cancellation):
            h2, trace = compile_cancellation(h, mv.relator, mv.position)
        else:
            h2, trace = compile_move(h, mv)
        report = verify_trace(h, mv, trace, h2)
        consistent = consistent and report.ok
        steps.append(
            {
                "move": text,
                "trace": serialize_trace(trace).rstrip("\n").split("\n"),
                "consistent": report.ok,
                "compared": {k: list(v) if isinstance(v, tuple) else v
                             for k, v in report.compared.items()},
            }
        )
        h = h2
    from .handles import reconstruct_presentation

    _emit(
        args,
        {
            "command": "compile",
            "steps": steps,
            "consistent": consistent,
            "final_presentation": presentation_text(reconstruct_presentation(h)),
        },
    )
    return EXIT_OK if consistent else EXIT_INCONSISTENT


def _cmd_verify_cert(args) -> int:
    with open(args.certificate) as fh:
        cert = parse_certificate(fh.read())
    expected = parse_presentation(args.expected)
    payload = {"command": "verify-cert", "replay_error": None}
    try:
        final = replay_certificate(cert)
        payload["final_presentation"] = presentation_text(final)
        payload["valid"] = verify_certificate(cert, expected)
    except CertificateReplayError as e:
        payload["replay_error"] = str(e)
        payload["final_presentation"] = None
        payload["valid"] = False
    _emit(args, payload)
    return EXIT_OK


def _cmd_recognize(args) -> int:
    p = parse_presentation(args.presentation)
    cfg = OracleConfig(
        use_certificate_oracle=args.oracle in ("cert", "both"),
        use_greedy_oracle=args.oracle in ("greedy", "both"),
        search_bounds=_bounds(args),
    )
    verdict = recognize(p, cfg, choice_limit=args.choices)
    witness_path = None
    if verdict.witness and args.out:
        witness_path = args.out + ".witness"
        with open(witness_path, "w") as fh:
            for item in verdict.witness:
                if "greedy" in item:
                    fh.write(f"component {item['component']}: greedy collapse\n")
                    for line in item["greedy"]:
                        fh.write("  " + line + "\n")
                else:
                    fh.write(f"component {item['component']}: certificate\n")
                    fh.write(serialize_certificate(item["certificate"]))
    _emit(
        args,
        {
            "verdict": verdict.kind,
            "reason": verdict.reason,
            "witness": witness_path,
            "choices_tried": verdict.choices_tried,
            "iterations": verdict.iterations,
            "measure_trace": list(verdict.measure_trace),
            "diagnostics": list(verdict.diagnostics),
        },
    )
    return EXIT_OK


def _cmd_corpus(args) -> int:
    entries = corpus()
    for entry in entries:
        p = parse_presentation(entry["presentation"])
        entry["snf_diagonal"] = list(snf_diagonal(p))
    _emit(args, {"command": "corpus", "entries": entries})
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="acwb", description=__doc__)
    parser.add_argument("--version", action="version", version=f"acwb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, presentation=True):
        if presentation:
            sp.add_argument("presentation", help="presentation text, e.g. '<x,y | xy, y>'")
        sp.add_argument("--out", help="write the report to this path")
        sp.add_argument("--depth", type=int, default=8)
        sp.add_argument("--maxlen", type=int, default=16)
        sp.add_argument("--max-states", type=int, default=500_000, dest="max_states")
        sp.add_argument("--mem", type=int, default=256 * 2**20)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--choices", type=int, default=8)
        sp.add_argument("--oracle", choices=["cert", "greedy", "both"], default="both")
        sp.add_argument(
            "--strategy",
            choices=[s.value for s in Strategy],
            default=Strategy.BIDIRECTIONAL.value,
        )

    common(sub.add_parser("parse", help="parse a presentation"))
    common(sub.add_parser("normalize", help="reduce relators and report the canonical key"))
    common(sub.add_parser("invariants", help="handle-structure invariants"))
    sp = sub.add_parser("handle", help="build a structure or list attachment choices")
    sp.add_argument("action", choices=["build", "choices"])
    common(sp)
    common(sub.add_parser("search", help="bounded trivialization search"))
    sp = sub.add_parser("scramble", help="apply seeded random moves")
    sp.add_argument("-k", type=int, default=5)
    common(sp)
    sp = sub.add_parser("compile", help="compile moves to topology traces")
    sp.add_argument(
        "--move",
        action="append",
        default=[],
        help="'INV i' | 'CONJ i g s' | 'MULR i j' | 'CANCEL i pos' (repeatable)",
    )
    common(sp)
    sp = sub.add_parser("verify-cert", help="replay and verify a certificate file")
    sp.add_argument("certificate", help="certificate file path")
    sp.add_argument("--expected", required=True, help="expected presentation text")
    common(sp, presentation=False)
    common(sub.add_parser("recognize", help="run the restricted recognition loop"))
    common(sub.add_parser("corpus", help="list built-in presentations"), presentation=False)
    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise _UsageError("--threads must be at least 1")
        handler = {
            "parse": _cmd_parse,
            "normalize": _cmd_normalize,
            "invariants": _cmd_invariants,
            "handle": _cmd_handle,
            "search": _cmd_search,
            "scramble": _cmd_scramble,
            "compile": _cmd_compile,
            "verify-cert": _cmd_verify_cert,
            "recognize": _cmd_recognize,
            "corpus": _cmd_corpus,
        }[args.command]
        return handler(args)
    except (_UsageError, ParseError, FileNotFoundError, ValueError) as e:
        sys.stderr.write(f"acwb: error: {e}\n")
        return EXIT_USAGE
    except MemoryError:
        sys.stderr.write("acwb: out of memory\n")
        return EXIT_RESOURCE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
