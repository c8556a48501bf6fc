"""Command-line front end.

Every subcommand prints comma-delimited rows to stdout (numbers with 12
significant digits); ``--out`` writes the full-precision data to a file
and ``--figure`` renders a PNG where a plot makes sense.

Exit status: 0 on success, 1 on a usage error, 2 on a numerical failure.
Library warnings are echoed to stderr as ``WARN: <message>``.
"""
from __future__ import annotations

import argparse
import ast
import csv
import json
import math
import re
import sys
import warnings
from collections.abc import Sequence

import numpy as np

from .assembly import assemble_bilinear
from .elements import lagrange
from .errors import FEMError
from .numbering import PointClass
from .plex import Plex, build_unit_interval_mesh, build_unit_square_mesh
from .spaces import FunctionSpace, advection_x, dirichlet_bc, interpolate, mass, stiffness

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

FORMS = {"mass": mass, "stiffness": stiffness, "advection_x": advection_x}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- argument helpers -----------------------------------------------------------
_MESH_RE = re.compile(r"^(square):(\d+),(\d+)$|^(interval):(\d+)(?:,([^,]+))?$")


def parse_mesh(spec: str) -> Plex:
    """``square:NX,NY`` or ``interval:N[,LENGTH]``; LENGTH may be ``pi``."""
    m = _MESH_RE.match(spec.strip())
    if not m:
        raise UsageError(f"bad mesh spec {spec!r}; use square:NX,NY or interval:N[,LENGTH]")
    if m.group(1):
        return build_unit_square_mesh(int(m.group(2)), int(m.group(3)))
    length = 1.0 if m.group(6) is None else _number(m.group(6))
    if not length > 0:
        raise UsageError("interval length must be positive")
    return build_unit_interval_mesh(int(m.group(5)), length)


def _number(text: str) -> float:
    try:
        return float(evaluate_expression(text, {}))
    except (ValueError, SyntaxError) as exc:
        raise UsageError(f"not a number: {text!r}") from exc


def parse_ids(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError as exc:
        raise UsageError(f"bad id list {text!r}") from exc


_FUNCS = {n: getattr(np, n) for n in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")}
_CONSTS = {"pi": math.pi, "e": math.e}
_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


def evaluate_expression(text: str, variables: dict):
    """Evaluate an arithmetic expression in ``x``, ``y`` with a few numpy functions."""
    tree = ast.parse(text, mode="eval")
    names = {**_FUNCS, **_CONSTS, **variables}
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ValueError(f"unsupported syntax in {text!r}")
        if isinstance(node, ast.Name) and node.id not in names:
            raise ValueError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.Call) and not (
            isinstance(node.func, ast.Name) and node.func.id in _FUNCS
        ):
            raise ValueError(f"unsupported call in {text!r}")
    return eval(compile(tree, "<expr>", "eval"), {"__builtins__": {}}, names)


def _expression(text: str):
    try:
        evaluate_expression(text, {"x": 0.5, "y": 0.5})
    except (ValueError, SyntaxError) as exc:
        raise UsageError(str(exc)) from exc

    def f(x, y=None):
        return evaluate_expression(text, {"x": x, "y": 0.0 if y is None else y})

    return f


def _space(mesh: Plex, degree: int, boundary=()) -> FunctionSpace:
    cell = "interval" if mesh.tdim == 1 else "triangle"
    return FunctionSpace(mesh, lagrange(cell, degree), boundary)


# -- output helpers -----------------------------------------------------------
def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_rows(stream, header: Sequence[str], rows) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def dump_json(path: str, data) -> None:
    # json writes floats with repr, the shortest string that round-trips
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_out(path: str | None, header, rows, data) -> None:
    if not path:
        return
    if path.endswith(".json"):
        dump_json(path, data)
    else:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else fmt(v) for v in r])


# -- subcommands ----------------------------------------------------------------
def cmd_plexinfo(args, out) -> int:
    mesh = parse_mesh(args.mesh)
    sizes = mesh.strata_sizes()
    print(f"# {mesh.name} chart=[0,{mesh.npoints}) "
          + " ".join(f"dim{d}={n}" for d, n in sorted(sizes.items())), file=out)
    header = ["point", "dim", "cone", "support", "label"]
    rows = [
        (p, mesh.dim(p), " ".join(map(str, mesh.cone(p))), " ".join(map(str, mesh.support(p))),
         mesh.face_sets.get(p, ""))
        for p in range(mesh.npoints)
    ]
    write_rows(out, header, rows)
    _write_out(args.out, header, rows, {"name": mesh.name, "strata": sizes, "points": [
        {"point": p, "dim": mesh.dim(p), "cone": list(mesh.cone(p)),
         "support": list(mesh.support(p)), "label": mesh.face_sets.get(p)}
        for p in range(mesh.npoints)]})
    return EXIT_OK


def cmd_element(args, out) -> int:
    el = lagrange(args.cell, args.degree)
    entity = {d: key for key, ids in el.entity_dofs.items() for d in ids}
    header = ["dof", "entity_dim", "entity", "xi", "eta"][: 3 + el.tdim]
    rows = [(i, *entity[i], *el.nodes[i]) for i in range(el.space_dimension)]
    print(f"# {el.id} dim={el.space_dimension} dofs_per_entity={list(el.dofs_per_dim())}", file=out)
    write_rows(out, header, rows)
    _write_out(args.out, header, rows, {"element": el.id, "nodes": el.nodes,
                                        "basis_coeffs": el.basis_coeffs})
    return EXIT_OK


def cmd_numbering(args, out) -> int:
    mesh = parse_mesh(args.mesh)
    V = _space(mesh, args.degree, parse_ids(args.boundary))
    sec = V.section
    header = ["point", "dim", "dofs", "constrained", "offset", "renumbering", "lgmap"]
    rows = []
    for p in range(mesh.npoints):
        lg = " ".join(str(V.lgmap[d]) for d in sec.dofs(p)) or "N/A"
        rows.append((p, mesh.dim(p), sec.dof_count[p], sec.constrained[p], sec.offset[p],
                     sec.permutation[p], lg))
    print(f"# dim_total={V.dim_total} dim_free={V.dim_free} constrained={V.dim_constrained}",
          file=out)
    write_rows(out, header, rows)
    _write_out(args.out, header, rows, {
        "dim_total": V.dim_total, "dim_free": V.dim_free, "lgmap": V.lgmap,
        "offset": sec.offset, "dof_count": sec.dof_count, "constrained": sec.constrained,
        "permutation": sec.permutation})
    return EXIT_OK


def cmd_interpolate(args, out) -> int:
    mesh = parse_mesh(args.mesh)
    V = _space(mesh, args.degree)
    f = interpolate(_expression(args.expr), V)
    coord = ["x", "y"][: mesh.gdim]
    header = ["dof", *coord, "value"]
    rows = [(d, *V.node_coordinates[d], f.values[d]) for d in range(V.dim_total)]
    write_rows(out, header, rows)
    _write_out(args.out, header, rows, {"expr": args.expr, "values": f.values,
                                        "coordinates": V.node_coordinates})
    return EXIT_OK


def cmd_assemble(args, out) -> int:
    mesh = parse_mesh(args.mesh)
    ids = parse_ids(args.boundary)
    form = FORMS[args.form]()
    if args.restricted:
        V = _space(mesh, args.degree, ids)
        A = assemble_bilinear(form, V)
    else:
        V = _space(mesh, args.degree)
        A = assemble_bilinear(form, V, bcs=[dirichlet_bc(V, 0.0, i) for i in ids])
    coo = A.tocoo()
    order = np.lexsort((coo.col, coo.row))
    header = ["row", "col", "value"]
    rows = [(coo.row[k], coo.col[k], coo.data[k]) for k in order]
    print(f"# shape={A.shape[0]}x{A.shape[1]} nnz={A.nnz}", file=out)
    write_rows(out, header, rows)
    _write_out(args.out, header, rows, {"shape": A.shape, "dense": A.toarray()})
    return EXIT_OK


def cmd_poisson(args, out) -> int:
    from .problems import manufactured_poisson

    mesh = parse_mesh(args.mesh)
    if mesh.tdim != 2:
        raise UsageError("poisson needs a square mesh")
    res = manufactured_poisson(0, 0, args.degree, args.restricted, mesh=mesh)
    u = res.u
    print(f"l2_error,{fmt(res.error)}", file=out)
    print(f"l2_error_exact,{fmt(res.exact_error)}", file=out)
    header = ["x", "y", "value"]
    rows = [(*u.space.node_coordinates[d], u.values[d]) for d in range(u.space.dim_total)]
    _write_out(args.out, header, rows, {"l2_error": res.error, "l2_error_exact": res.exact_error,
                                        "values": u.values})
    if args.figure:
        from .report import plot_solution

        plot_solution(u, args.figure, "restricted" if args.restricted else "unrestricted")
    return EXIT_OK


def cmd_eigen1d(args, out) -> int:
    from .problems import exact_eigenvalues_1d, poisson_eigen_1d

    if args.restricted and args.shift is not None:
        raise UsageError("--restricted and --shift are mutually exclusive")
    restrict = args.shift is None
    shift = 0.0 if args.shift is None else args.shift
    if shift < 0:
        raise UsageError("--shift must be non-negative")
    res = poisson_eigen_1d(args.cells, args.degree, args.nev, restrict, shift, args.length)
    header = ["index", "re", "im"]
    rows = [(k, v.real, v.imag) for k, v in enumerate(res.eigenvalues)]
    print(f"# mode={res.mode} nconverged={res.nconverged}", file=out)
    write_rows(out, header, rows)
    if args.out:
        dump_json(args.out, {"eigenvalues": list(res.eigenvalues), "nconverged": res.nconverged,
                             "mode": res.mode})
    if args.figure:
        from .report import plot_spectra

        plot_spectra({res.mode: res.eigenvalues}, args.figure,
                     reference=exact_eigenvalues_1d(res.nconverged, args.length))
    return EXIT_OK


def cmd_shiftdemo(args, out) -> int:
    from .solve import shift_demo

    if args.theta < 0:
        raise UsageError("--theta must be non-negative")
    before, after = shift_demo(0.0), shift_demo(args.theta)
    header = ["theta", "lambda1", "lambda2", "lambda3"]
    rows = [(0.0, *before.real), (args.theta, *after.real)]
    write_rows(out, header, rows)
    _write_out(args.out, header, rows, {"before": list(before), "after": list(after),
                                        "theta": args.theta})
    if args.figure:
        from .report import plot_spectra

        plot_spectra({"no shift": before, f"theta={fmt(args.theta)}": after}, args.figure)
    return EXIT_OK


def cmd_ranksim(args, out) -> int:
    from .ranksim import (
        build_rank_views,
        build_star_forest,
        halo_exchange,
        parallel_global_numbering,
        partition_cells,
        rank_spaces,
    )

    mesh = parse_mesh(args.mesh)
    cell = "interval" if mesh.tdim == 1 else "triangle"
    ids = parse_ids(args.boundary)
    try:
        part = partition_cells(mesh, args.ranks)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    views = build_rank_views(mesh, part, overlap=args.overlap)
    spaces = rank_spaces(views, lagrange(cell, args.degree), ids, mesh)
    lgmaps, gsize = parallel_global_numbering(views, spaces)
    forest = build_star_forest(views, spaces, legacy=args.legacy_sf)
    expr = _expression(args.check)

    exact, start = [], []
    for v, V in zip(views, spaces):
        full = interpolate(expr, V).values
        ghost = [d for p in v.points_of(PointClass.GHOST) for d in V.section.dofs(p)]
        partial = full.copy()
        partial[ghost] = 0.0
        exact.append(full)
        start.append(partial)
    exchanged = halo_exchange(forest, start)

    header = ["Mesh Point", "Label", "Offset", "LGMap Index", "Plex Renumbering Index",
              "Constrained?"]
    verdicts = []
    for v, V, lg, got, want in zip(views, spaces, lgmaps, exchanged, exact):
        sec = V.section
        rows = []
        for p in range(v.plex.npoints):
            dofs = list(sec.dofs(p))
            rows.append((p, PointClass(v.classes[p]).label, sec.offset[p],
                         " ".join(str(lg[d]) for d in dofs) or "N/A",
                         sec.permutation[p], bool(sec.constrained[p])))
        print(f"# rank {v.rank} ({len(v.owned_cells)} owned cells)", file=out)
        write_rows(out, header, rows)
        diff = np.abs(got - want)
        verdicts.append({"rank": v.rank, "check": args.check, "max_abs_diff": float(diff.max(initial=0)),
                         "stale_dofs": int(np.count_nonzero(diff > 0)), "ok": bool(np.all(diff == 0))})
    for vd in verdicts:
        print(json.dumps(vd, sort_keys=True), file=out)
    if args.out:
        dump_json(args.out, {"global_size": gsize, "legacy_sf": args.legacy_sf,
                             "leaves": forest.nleaves, "verdicts": verdicts,
                             "lgmaps": lgmaps})
    return EXIT_OK


# -- parser -------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="restrictfem", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, mesh=True, degree=True, figure=False):
        if mesh:
            sp.add_argument("--mesh", default="square:1,1",
                            help="square:NX,NY or interval:N[,LENGTH] (default square:1,1)")
        if degree:
            sp.add_argument("--degree", type=int, default=1, help="Lagrange degree (default 1)")
        sp.add_argument("--out", help="write full-precision data here (.json or .csv)")
        if figure:
            sp.add_argument("--figure", help="render a PNG plot to this path")

    sp = sub.add_parser("plexinfo", help="list points with cones, supports and labels")
    common(sp, degree=False)
    sp.set_defaults(func=cmd_plexinfo)

    sp = sub.add_parser("element", help="list the nodes of a reference element")
    common(sp, mesh=False)
    sp.add_argument("--cell", choices=("interval", "triangle"), default="triangle")
    sp.set_defaults(func=cmd_element)

    sp = sub.add_parser("numbering", help="section and lgmap of a (restricted) space")
    common(sp)
    sp.add_argument("--boundary", help="comma-separated subdomain ids to restrict on")
    sp.set_defaults(func=cmd_numbering)

    sp = sub.add_parser("interpolate", help="nodal interpolation of an expression in x, y")
    common(sp)
    sp.add_argument("--expr", required=True, help="e.g. 'sin(pi*x)*y'")
    sp.set_defaults(func=cmd_interpolate)

    sp = sub.add_parser("assemble", help="assemble a bilinear form as (row, col, value)")
    common(sp)
    sp.add_argument("--form", choices=sorted(FORMS), default="mass")
    sp.add_argument("--boundary", help="subdomain ids: bc subdomains, or the boundary set with --restricted")
    sp.add_argument("--restricted", action="store_true", help="assemble on the restricted space")
    sp.set_defaults(func=cmd_assemble)

    sp = sub.add_parser("poisson", help="manufactured Poisson problem on the unit square")
    common(sp, figure=True)
    sp.add_argument("--restricted", action="store_true", help="solve with restrict=True")
    sp.set_defaults(func=cmd_poisson, degree=2)

    sp = sub.add_parser("eigen1d", help="1D Laplace eigenproblem on [0, LENGTH]")
    common(sp, mesh=False, figure=True)
    sp.add_argument("--cells", type=int, default=10)
    sp.add_argument("--nev", type=int, default=10, help="eigenpairs to report")
    sp.add_argument("--length", type=_number, default=math.pi, help="interval length (default pi)")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--restricted", action="store_true", help="restricted mode (default)")
    mode.add_argument("--shift", type=float, help="unrestricted with boundary shift THETA")
    sp.set_defaults(func=cmd_eigen1d, degree=4)

    sp = sub.add_parser("shiftdemo", help="3x3 spectra before and after a boundary-row shift")
    common(sp, mesh=False, degree=False, figure=True)
    sp.add_argument("--theta", type=float, default=5.0)
    sp.set_defaults(func=cmd_shiftdemo)

    sp = sub.add_parser("ranksim", help="per-rank numbering tables and a halo-exchange check")
    common(sp)
    sp.add_argument("--ranks", type=int, default=2)
    sp.add_argument("--boundary", help="comma-separated boundary set")
    sp.add_argument("--overlap", type=int, choices=(0, 1), default=1)
    sp.add_argument("--legacy-sf", action="store_true",
                    help="build the star forest without constrained dofs")
    sp.add_argument("--check", default="x", help="expression exchanged and verified (default x)")
    sp.set_defaults(func=cmd_ranksim)
    return p


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            args = parser.parse_args(argv)
            status = args.func(args, stdout)
        except UsageError as exc:
            print(f"error: {exc}", file=stderr)
            status = EXIT_USAGE
        except FEMError as exc:
            print(f"error: {exc}", file=stderr)
            status = EXIT_NUMERIC
        except ValueError as exc:
            print(f"error: {exc}", file=stderr)
            status = EXIT_USAGE
        except OSError as exc:
            print(f"error: {exc}", file=stderr)
            status = EXIT_USAGE
    for w in caught:
        if issubclass(w.category, (DeprecationWarning, PendingDeprecationWarning)):
            continue
        print(f"WARN: {w.message}", file=stderr)
    return status


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
