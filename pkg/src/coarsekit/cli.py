"""The coarsekit command line: one subcommand per operation, deterministic
reports, and exit codes 0 (all verdicts pass), 1 (a verdict failed or a
construction was refused), 2 (parse or structural error).

Reports echo semantic arguments only; execution flags (--jobs, --format)
never appear in machine output, which is required to be byte-identical
across worker counts.  There is no environment-variable configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from concurrent.futures import ThreadPoolExecutor

from . import covers as covers_mod
from . import decomposition as dec_mod
from . import io as io_mod
from . import maps as maps_mod
from . import metric as metric_mod
from .cone import ConePoint, cone_distance, parse_rho, phi, phi_closed_exp
from .errors import CoarsekitError, ParseError, PreconditionError, StructuralError
from .phisuite import run_phi_suite, standard_rho_family
from .report import Report, Verdict, fmt_num

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


def parallel_map(fn, items, jobs: int):
    """Order-preserving map; worker count never changes the result."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_family(path: str) -> metric_mod.MetricFamily:
    return io_mod.parse_family(_read(path))


def _rho_from_arg(literal: str):
    return parse_rho(literal, table_loader=lambda p: io_mod.parse_rho_table(_read(p)))


def _finish_verdict(report: Report, v: Verdict) -> int:
    report.add("verdict", "pass" if v.passed else "fail",
               "PASS" if v.passed else f"FAIL ({len(v.failures)} failing check(s))")
    return EXIT_PASS if v.passed else EXIT_FAIL


def _emit_document(report: Report, args, text: str, as_text_body: bool) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    report.add("document.sha256", digest)
    report.add("document.lines", text.count("\n"))
    if as_text_body:
        report.text(text.rstrip("\n"))


def cmd_validate(args, report: Report) -> int:
    fam = _load_family(args.family)
    report.add("command", "validate")
    report.add("family", fam.id)
    ok = True
    for m in fam.members:
        rep = metric_mod.validate_metric(m, tol=args.tolerance if args.tolerance else 0.0)
        report.add(f"member.{m.id}.violations", len(rep.violations))
        if rep.ok:
            report.text(f"{m.id}: ok ({m.n} points)")
        else:
            ok = False
            for k, v in enumerate(rep.violations):
                wit = ",".join(m.points[i] for i in v.witness)
                report.add(f"member.{m.id}.violation.{k}", f"{v.kind}@{wit}")
                report.text(f"{m.id}: {v.kind} at ({wit}): {v.detail}")
    report.add("verdict", "pass" if ok else "fail", "PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_components(args, report: Report) -> int:
    fam = _load_family(args.family)
    report.add("command", "components")
    report.add("family", fam.id)
    report.add("r", args.r)
    for m in fam.members:
        part = dec_mod.r_components(m, args.r)
        report.add(f"member.{m.id}.blocks", len(part.blocks))
        for k, blk in enumerate(part.blocks):
            labels = " ".join(m.points[i] for i in blk)
            report.add(f"member.{m.id}.block.{k}", labels.replace(" ", ","))
            report.text(f"{m.id} block {k}: {labels}")
    report.add("verdict", "pass", "PASS")
    return EXIT_PASS


def cmd_cover_check(args, report: Report) -> int:
    fam = _load_family(args.family)
    cert = io_mod.parse_asdim_certificate(_read(args.certificate), fam)
    report.add("command", "cover-check")
    report.add("family", fam.id)
    report.add("n", cert.n)

    def check_entry(k_entry):
        k, entry = k_entry
        single = covers_mod.AsdimCertificate(cert.family_id, cert.n, (entry,))
        v = covers_mod.check_asdim_certificate(single, fam, args.tolerance)
        items = tuple(
            i.__class__(i.path.replace("entry0", f"entry{k}"), i.passed, i.detail)
            for i in v.items
        )
        return Verdict(items)

    parts = parallel_map(check_entry, enumerate(cert.entries), args.jobs)
    v = Verdict(tuple(i for p in parts for i in p.items))
    report.extend_verdict("check", v)
    return _finish_verdict(report, v)


def cmd_an_check(args, report: Report) -> int:
    fam = _load_family(args.family)
    cert = io_mod.parse_an_certificate(_read(args.certificate), fam)
    report.add("command", "an-check")
    report.add("family", fam.id)
    report.add("n", cert.n)
    report.add("M", cert.slope)
    report.add("b", cert.offset)

    def check_entry(k_entry):
        k, entry = k_entry
        single = covers_mod.ANControlCertificate(
            cert.family_id, cert.n, cert.slope, cert.offset, (entry,)
        )
        v = covers_mod.check_an_control(single, fam, args.tolerance)
        items = tuple(
            i.__class__(i.path.replace("entry0", f"entry{k}"), i.passed, i.detail)
            for i in v.items
        )
        return Verdict(items)

    parts = parallel_map(check_entry, enumerate(cert.entries), args.jobs)
    v = Verdict(tuple(i for p in parts for i in p.items))
    report.extend_verdict("check", v)
    return _finish_verdict(report, v)


def cmd_quotient_cover(args, report: Report) -> int:
    fam = _load_family(args.family)
    action_doc = io_mod.parse_action(_read(args.action))
    cert = io_mod.parse_asdim_certificate(_read(args.certificate), fam)
    report.add("command", "quotient-cover")
    report.add("family", fam.id)
    q_members: dict[str, metric_mod.FiniteMetricSpace] = {}
    out_entries = []
    ok = True
    for k, entry in enumerate(cert.entries):
        out_covers = []
        for member_id, cover in entry.covers:
            space = fam.member(member_id)
            action = action_doc.for_member(member_id)
            qspace, qcover = covers_mod.pushforward_quotient_cover(space, action, cover)
            q_members[qspace.id] = qspace
            out_covers.append((qspace.id, qcover))
            in_dim = covers_mod.cover_dimension(cover, space)
            out_dim = covers_mod.cover_dimension(qcover, qspace)
            bound = action.order * (in_dim + 1) - 1
            in_leb = covers_mod.lebesgue_number(cover, space)
            out_leb = covers_mod.lebesgue_number(qcover, qspace)
            in_mesh = covers_mod.mesh(cover, space)
            out_mesh = covers_mod.mesh(qcover, qspace)
            good = out_dim <= bound and out_leb >= min(in_leb, entry.lam) and out_mesh <= in_mesh
            ok = ok and good
            path = f"entry{k}.{member_id}"
            report.add(f"{path}.dimension", out_dim)
            report.add(f"{path}.dimension-bound", bound)
            report.add(f"{path}.lebesgue", out_leb)
            report.add(f"{path}.mesh", out_mesh)
            report.add(f"{path}.guarantees", "pass" if good else "fail")
            report.text(
                f"entry {k} {member_id}: dim {out_dim} <= {bound}, "
                f"Lebesgue {fmt_num(out_leb)} >= {fmt_num(min(in_leb, entry.lam))}, "
                f"mesh {fmt_num(out_mesh)} <= {fmt_num(in_mesh)}: "
                + ("ok" if good else "VIOLATED")
            )
        out_entries.append(covers_mod.AsdimEntry(entry.lam, entry.mesh_bound, tuple(out_covers)))
    q_family = metric_mod.MetricFamily(f"{fam.id}/q", tuple(q_members.values()))
    new_n = max(
        action_doc.for_member(m.id).order * (cert.n + 1) - 1 for m in fam.members
    )
    out_cert = covers_mod.AsdimCertificate(q_family.id, new_n, tuple(out_entries))
    text = io_mod.write_family(q_family) + io_mod.write_asdim_certificate(out_cert, q_family)
    _emit_document(report, args, text, as_text_body=args.format == "text")
    v = covers_mod.check_asdim_certificate(out_cert, q_family, args.tolerance)
    report.extend_verdict("pushed", v)
    combined = ok and v.passed
    report.add("verdict", "pass" if combined else "fail", "PASS" if combined else "FAIL")
    return EXIT_PASS if combined else EXIT_FAIL


def cmd_product(args, report: Report) -> int:
    fam = _load_family(args.family)
    p = float("inf") if args.p == "inf" else float(args.p)
    prod = metric_mod.product(list(fam.members), p)
    out_fam = metric_mod.MetricFamily(f"{fam.id}|product", (prod,))
    report.add("command", "product")
    report.add("family", fam.id)
    report.add("p", args.p)
    report.add("points", prod.n)
    report.add("diameter", prod.diameter())
    _emit_document(report, args, io_mod.write_family(out_fam), as_text_body=args.format == "text")
    report.add("verdict", "pass")
    return EXIT_PASS


def cmd_decompose(args, report: Report) -> int:
    fam = _load_family(args.family)
    report.add("command", "decompose")
    report.add("family", fam.id)
    report.add("r", args.r)
    report.add("n", args.n)
    report.add("bound", args.bound)
    report.add("mode", args.mode)
    ok = True
    member_entries = []
    for m in fam.members:
        result = dec_mod.search_decomposition(
            m, args.r, args.n, args.bound, mode=args.mode, ceiling=args.ceiling
        )
        report.add(f"member.{m.id}.result", result.status)
        report.text(f"{m.id}: {result.status}")
        if result.certificate is None:
            ok = False
        else:
            member_entries.extend(result.certificate.members)
    if ok:
        cert = dec_mod.DecompositionCertificate(
            fam.id, float(args.r), args.n, tuple(member_entries), leaf_bound=float(args.bound)
        )
        _emit_document(
            report,
            args,
            io_mod.write_decomposition_certificate(cert, fam),
            as_text_body=args.format == "text",
        )
    report.add("verdict", "pass" if ok else "fail", "PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_check_cert(args, report: Report) -> int:
    fam = _load_family(args.family)
    cert = io_mod.parse_decomposition_certificate(_read(args.certificate), fam)
    report.add("command", "check-cert")
    report.add("family", fam.id)
    report.add("r", cert.r)
    report.add("n", cert.n)
    report.add("stages", cert.depth())
    v = dec_mod.check_decomposition(cert, fam, args.tolerance)
    report.extend_verdict("check", v)
    return _finish_verdict(report, v)


def cmd_check_fibering(args, report: Report) -> int:
    src = _load_family(args.source)
    tgt = _load_family(args.target)
    fmap = io_mod.parse_map(_read(args.map), src, tgt)
    witness = io_mod.parse_fibering_witness(_read(args.witness), src, tgt, fmap)
    report.add("command", "check-fibering")
    report.add("source", src.id)
    report.add("target", tgt.id)
    v = dec_mod.check_fibering_witness(witness, src, tgt, args.tolerance)
    best = dec_mod.largest_certified_radius(witness, v)
    report.add("largest-certified-radius", best)
    report.text(f"largest certified radius: {fmt_num(best)}")
    report.extend_verdict("check", v)
    return _finish_verdict(report, v)


def cmd_map_analyze(args, report: Report) -> int:
    src = _load_family(args.source)
    tgt = _load_family(args.target)
    fmap = io_mod.parse_map(_read(args.map), src, tgt)
    report.add("command", "map-analyze")
    report.add("source", src.id)
    report.add("target", tgt.id)
    control = maps_mod.control_envelope(fmap, src, tgt)
    for k, (s, v) in enumerate(control.breakpoints):
        report.add(f"control.{k}.s", s)
        report.add(f"control.{k}.value", v)
    report.text("control envelope: " + " ".join(f"({fmt_num(s)},{fmt_num(v)})" for s, v in control.breakpoints))
    proper = maps_mod.properness_envelope(fmap, src, tgt)
    for k, (s, v) in enumerate(proper.breakpoints):
        report.add(f"properness.{k}.s", s)
        report.add(f"properness.{k}.value", v)
    flagged = maps_mod.looks_non_proper(proper)
    scale = proper.max_scale
    report.add("properness.flag", "non-proper-looking" if flagged else "consistent")
    if flagged:
        report.text("lower envelope is non-proper-looking (flat over the top half)")
    else:
        report.text(f"consistent with effectively proper at scales up to {fmt_num(scale)}")
    onto, c = maps_mod.is_coarsely_onto(fmap, src, tgt)
    report.add("coarsely-onto", onto)
    report.add("coarsely-onto.C", c)
    report.text(f"coarsely onto: {onto} (C = {fmt_num(c)})")
    report.add("verdict", "pass", "PASS")
    return EXIT_PASS


def cmd_phi(args, report: Report) -> int:
    rho = _rho_from_arg(args.rho)
    value = phi(rho, args.t, args.r)
    report.add("command", "phi")
    report.add("rho", rho.literal())
    report.add("t", args.t)
    report.add("r", args.r)
    report.add("value", value, f"phi_{fmt_num(args.t)}({fmt_num(args.r)}) = {repr(float(value))}")
    if rho.kind == "exp":
        closed = phi_closed_exp(args.t, args.r)
        report.add("closed-form", closed)
    report.add("verdict", "pass")
    return EXIT_PASS


def cmd_phi_suite(args, report: Report) -> int:
    if args.rho:
        rhos = [_rho_from_arg(lit) for lit in args.rho]
    else:
        rhos = standard_rho_family()
    report.add("command", "phi-suite")
    report.add("samples", args.samples)
    report.add("seed", args.seed)

    def run_one(rho):
        return run_phi_suite([rho], samples=args.samples, seed=args.seed)

    parts = parallel_map(run_one, rhos, args.jobs)
    v = Verdict(tuple(i for p in parts for i in p.items))
    report.extend_verdict("property", v)
    for item in v.items:
        report.text(("PASS " if item.passed else "FAIL ") + item.path)
    return _finish_verdict(report, v)


def cmd_cone_dist(args, report: Report) -> int:
    rho = _rho_from_arg(args.rho)
    fam = _load_family(args.family)
    member = fam.member(args.member) if args.member else fam.members[0]
    a = ConePoint(member.index(args.base_a), args.height_a)
    b = ConePoint(member.index(args.base_b), args.height_b)
    value = cone_distance(rho, member, a, b)
    report.add("command", "cone-dist")
    report.add("rho", rho.literal())
    report.add("member", member.id)
    report.add("a", f"{args.base_a}@{fmt_num(args.height_a)}")
    report.add("b", f"{args.base_b}@{fmt_num(args.height_b)}")
    report.add("value", value, f"d_C = {repr(float(value))}")
    report.add("verdict", "pass")
    return EXIT_PASS


def cmd_ultrametric(args, report: Report) -> int:
    from .constructions import minimax_ultrametric

    fam = _load_family(args.family)
    report.add("command", "ultrametric")
    report.add("family", fam.id)
    members = tuple(
        metric_mod.FiniteMetricSpace(m.id, u.points, u.dist)
        for m in fam.members
        for u in (minimax_ultrametric(m),)
    )
    out_fam = metric_mod.MetricFamily(f"{fam.id}|ultrametric", members)
    _emit_document(report, args, io_mod.write_family(out_fam), as_text_body=args.format == "text")
    report.add("verdict", "pass")
    return EXIT_PASS


def cmd_ray_tree(args, report: Report) -> int:
    from .constructions import ray_tree_embed, shell_sequence

    fam = _load_family(args.family)
    member = fam.member(args.member) if args.member else fam.members[0]
    pieces_doc = io_mod.parse_subsets(_read(args.pieces), fam)
    shells_doc = io_mod.parse_subsets(_read(args.shells), fam)
    pieces = [ps for mid, _, ps in pieces_doc if mid == member.id]
    seeds = [ps for mid, _, ps in shells_doc if mid == member.id]
    report.add("command", "ray-tree")
    report.add("family", fam.id)
    report.add("member", member.id)
    shells, covers_all = shell_sequence(member, seeds)
    report.add("shells", len(shells))
    report.add("shells-cover-space", covers_all)
    if not covers_all:
        report.text("shell union does not reach the whole space")
        report.add("verdict", "fail", "FAIL")
        return EXIT_FAIL
    tree, fmap = ray_tree_embed(member, pieces, shells)
    report.add("rays", len(tree.ray_ids))
    report.add("truncation-depth", tree.depth)
    tree_fam = metric_mod.MetricFamily(tree.space.id, (tree.space,))
    text = io_mod.write_family(tree_fam) + io_mod.write_map(
        fmap, metric_mod.MetricFamily(member.id, (member,)), tree_fam
    )
    _emit_document(report, args, text, as_text_body=args.format == "text")
    report.add("verdict", "pass", "PASS")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "machine"), default="text",
                        help="report format (machine is line-oriented key=value)")
    common.add_argument("--tolerance", type=float, default=metric_mod.DEFAULT_TOL,
                        help="absolute tolerance for certificate comparisons")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    common.add_argument("--jobs", type=int, default=1, help="worker count (never changes results)")
    common.add_argument("--out", default=None, help="write emitted documents to this file")

    parser = argparse.ArgumentParser(prog="coarsekit", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", parents=[common], help="check metric axioms of a family")
    p.add_argument("family")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("components", parents=[common], help="components at scale r")
    p.add_argument("family")
    p.add_argument("--r", type=float, required=True)
    p.set_defaults(fn=cmd_components)

    p = sub.add_parser("cover-check", parents=[common], help="check a staged cover certificate")
    p.add_argument("family")
    p.add_argument("certificate")
    p.set_defaults(fn=cmd_cover_check)

    p = sub.add_parser("an-check", parents=[common], help="check an affine control certificate")
    p.add_argument("family")
    p.add_argument("certificate")
    p.set_defaults(fn=cmd_an_check)

    p = sub.add_parser("quotient-cover", parents=[common],
                       help="push a cover certificate to a finite quotient")
    p.add_argument("family")
    p.add_argument("action")
    p.add_argument("certificate")
    p.set_defaults(fn=cmd_quotient_cover)

    p = sub.add_parser("product", parents=[common], help="l^p product of the family members")
    p.add_argument("family")
    p.add_argument("--p", default="2")
    p.set_defaults(fn=cmd_product)

    p = sub.add_parser("decompose", parents=[common], help="search for a decomposition")
    p.add_argument("family")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--bound", type=float, required=True)
    p.add_argument("--mode", choices=("exact", "greedy"), default="exact")
    p.add_argument("--exact", dest="mode", action="store_const", const="exact")
    p.add_argument("--greedy", dest="mode", action="store_const", const="greedy")
    p.add_argument("--ceiling", type=int, default=dec_mod.EXACT_SEARCH_CEILING)
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("check-cert", parents=[common], help="check a decomposition certificate")
    p.add_argument("family")
    p.add_argument("certificate")
    p.set_defaults(fn=cmd_check_cert)

    p = sub.add_parser("check-fibering", parents=[common], help="check a fibering witness")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("map")
    p.add_argument("witness")
    p.set_defaults(fn=cmd_check_fibering)

    p = sub.add_parser("map-analyze", parents=[common], help="envelopes and surjectivity of a map")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("map")
    p.set_defaults(fn=cmd_map_analyze)

    p = sub.add_parser("phi", parents=[common], help="evaluate the height-distortion function")
    p.add_argument("--rho", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.set_defaults(fn=cmd_phi)

    p = sub.add_parser("phi-suite", parents=[common], help="randomized phi property suite")
    p.add_argument("--rho", action="append", default=None)
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(fn=cmd_phi_suite)

    p = sub.add_parser("cone-dist", parents=[common], help="cone distance between two cone points")
    p.add_argument("family")
    p.add_argument("--rho", required=True)
    p.add_argument("--member", default=None)
    p.add_argument("--base-a", required=True)
    p.add_argument("--height-a", type=float, required=True)
    p.add_argument("--base-b", required=True)
    p.add_argument("--height-b", type=float, required=True)
    p.set_defaults(fn=cmd_cone_dist)

    p = sub.add_parser("ultrametric", parents=[common], help="minimax-path ultrametric of a family")
    p.add_argument("family")
    p.set_defaults(fn=cmd_ultrametric)

    p = sub.add_parser("ray-tree", parents=[common], help="ray-tree embedding from pieces and shells")
    p.add_argument("family")
    p.add_argument("pieces")
    p.add_argument("shells")
    p.add_argument("--member", default=None)
    p.set_defaults(fn=cmd_ray_tree)

    return parser


def run(argv) -> tuple[str, int]:
    """Run one invocation; returns (rendered report, exit code)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    report = Report()
    try:
        code = args.fn(args, report)
    except ParseError as exc:
        return f"parse error: {exc}\n", EXIT_ERROR
    except StructuralError as exc:
        return f"structural error: {exc}\n", EXIT_ERROR
    except PreconditionError as exc:
        return f"refused: {exc}\n", EXIT_FAIL
    except CoarsekitError as exc:
        return f"error: {exc}\n", EXIT_ERROR
    return report.render(args.format), code


def main() -> None:
    out, code = run(sys.argv[1:])
    sys.stdout.write(out)
    sys.exit(code)


if __name__ == "__main__":
    main()
