"""Command-line front door.

Exit codes: 0 when every requested check passes, 1 when a verification
fails, 2 for usage errors (click's convention) and 3 when a domain error
is raised; the error text is printed unchanged on stderr.

``LATSEG_OUT`` sets the default output directory of ``sim run``.
"""

from __future__ import annotations

import json
import os
import sys
from itertools import product
from pathlib import Path

import click

from .algebra import format_table, homogeneity_sweep
from .errors import LatsegError
from .instances import (
    DEFAULT_SEED,
    computation_fixtures,
    extend_instances,
    glb_instances,
    staged_fixture,
    two_point_table,
)
from .interpolation import check_alternating, extendibility_interpolate, glb_interpolate, verify_extendibility
from .lattice import CATALOG, FiniteLattice, UslHomomorphism, catalog_lattice, format_lattice, hom_violation, parse_lattice
from .limits import embed_table
from .pudlak import DEFAULT_BUDGET, MODIFIED, ORIGINAL, join_preserved, pudlak_stage, table_from_graph, to_dot, verify_pudlak_conditions
from .simulator import RequirementSchedule, default_functionals, extract_g, reader_functionals, run_construction
from .trees import computation_backward, computation_forward, fmt, project, strings_related

OUT_ENV = "LATSEG_OUT"
FAIL, DOMAIN = 1, 3


def load_lattice(spec: str) -> FiniteLattice:
    """A catalog name, or a path to a file in the lattice text format."""
    if spec in CATALOG:
        return catalog_lattice(spec)
    path = Path(spec)
    if not path.is_file():
        raise click.BadParameter(f"{spec!r} is neither a catalog name ({', '.join(CATALOG)}) nor a file")
    return parse_lattice(path.read_text())


def _finish(ok: bool) -> None:
    if not ok:
        sys.exit(FAIL)


class _Group(click.Group):
    """Turns domain errors into exit status 3 with the message verbatim."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (LatsegError, ValueError) as exc:
            click.echo(f"{type(exc).__name__}: {exc}", err=True)
            sys.exit(DOMAIN)


variant_option = click.option("--variant", type=click.Choice([MODIFIED, ORIGINAL]), default=MODIFIED, show_default=True)
budget_option = click.option("--budget", type=click.IntRange(min=1), default=DEFAULT_BUDGET, show_default=True, help="Vertex budget for graph builds.")


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def main():
    """Verify finite-stage lattice representations and run the bounded construction.

    LATTICE arguments take a catalog name (see `latseg catalog`) or a file path.
    """


# ---------------------------------------------------------------- lattice / catalog


@main.group(cls=_Group)
def lattice():
    """Lattice files."""


@lattice.command("check")
@click.argument("path")
def lattice_check(path):
    """Parse a lattice and report its shape.

    Example: latseg lattice check M3
    """
    L = load_lattice(path)
    click.echo(f"elements {L.n}")
    click.echo(f"bottom {L.label(L.bottom)}")
    click.echo(f"top {L.label(L.top)}")
    click.echo("covers " + " ".join(f"{L.label(a)}<{L.label(b)}" for a, b in L.covers()))
    click.echo("ok")


@main.command()
@click.argument("name", required=False)
@click.option("--max-size", type=click.IntRange(min=1), default=None, help="Only lattices with at most this many elements.")
@click.option("--format", "fmt_", type=click.Choice(["text", "records"]), default="text", show_default=True)
def catalog(name, max_size, fmt_):
    """Print the fixture lattices (or one of them).

    Example: latseg catalog --max-size 4
    """
    names = [name] if name else list(CATALOG)
    for n in names:
        L = catalog_lattice(n)
        if max_size is not None and L.n > max_size:
            continue
        if fmt_ == "records":
            click.echo(json.dumps({"name": n, "elements": L.n, "labels": list(L.labels), "covers": L.covers()}, sort_keys=True))
        else:
            click.echo(f"# {n}")
            click.echo(format_lattice(L), nl=False)


# ---------------------------------------------------------------- pudlak / table


@main.group(cls=_Group)
def pudlak():
    """Pudlák graphs."""


@pudlak.command("build")
@click.argument("lattice_spec", metavar="LATTICE")
@click.option("--stage", type=click.IntRange(min=0), default=1, show_default=True)
@variant_option
@budget_option
@click.option("--dot", "dot_out", type=click.Path(dir_okay=False), default=None, help="Also write DOT to this file.")
@click.option("--format", "fmt_", type=click.Choice(["dot", "text", "records"]), default="text", show_default=True)
def pudlak_build(lattice_spec, stage, variant, budget, dot_out, fmt_):
    """Build a stage and print it.

    Example: latseg pudlak build N5 --stage 1 --dot n5.dot
    """
    G = pudlak_stage(load_lattice(lattice_spec), stage, variant, budget)
    if dot_out:
        Path(dot_out).write_text(to_dot(G))
    if fmt_ == "dot":
        click.echo(to_dot(G), nl=False)
    elif fmt_ == "records":
        L = G.lattice
        for i, v in enumerate(G.vertices):
            click.echo(json.dumps({"kind": "vertex", "id": i, "birth": v.birth, "step": v.step}, sort_keys=True))
        for e, info in enumerate(G.edges):
            click.echo(json.dumps(
                {"kind": "edge", "id": e, "u": info.u, "v": info.v, "color": L.label(info.color), "step": info.step},
                sort_keys=True,
            ))
    else:
        click.echo(f"stage {G.steps} variant {G.variant}")
        click.echo(f"vertices {G.n_vertices}")
        click.echo(f"edges {len(G.edges)}")


@main.group(cls=_Group)
def table():
    """Lattice tables."""


@table.command("show")
@click.argument("lattice_spec", metavar="LATTICE")
@click.option("--stage", type=click.IntRange(min=0), default=0, show_default=True)
@variant_option
@budget_option
@click.option("--format", "fmt_", type=click.Choice(["text", "records"]), default="text", show_default=True)
def table_show(lattice_spec, stage, variant, budget, fmt_):
    """Print the table of a stage: entry (x, k) is the least element related to x mod k.

    Example: latseg table show 2-chain --stage 0
    """
    G = pudlak_stage(load_lattice(lattice_spec), stage, variant, budget)
    T = table_from_graph(G, injective=False)
    L = T.lattice
    if fmt_ == "records":
        for x, row in enumerate(T.matrix()):
            click.echo(json.dumps({"x": x, "least": {L.label(k): v for k, v in enumerate(row)}}, sort_keys=True))
        return
    click.echo(format_table(T), nl=False)
    for x, row in enumerate(T.matrix()):
        click.echo(", ".join(f"{x}^[{L.label(k)}]={v}" for k, v in enumerate(row)))


# ---------------------------------------------------------------- verify


@main.group(cls=_Group)
def verify():
    """Verification sweeps; exit status 1 on any failure."""


@verify.command("homogeneity")
@click.option("--max-carrier", type=click.IntRange(1, 5), default=4, show_default=True)
@click.option("--max-ops", type=click.IntRange(0, 3), default=2, show_default=True)
def verify_homogeneity(max_carrier, max_ops):
    """Every congruence lattice of a small unary algebra is homogeneous.

    Example: latseg verify homogeneity --max-carrier 3
    """
    rep = homogeneity_sweep(max_carrier, max_ops)
    click.echo(f"algebras {rep.algebras} (up to relabeling and operation order)")
    click.echo(f"chains replayed {rep.pairs_replayed}")
    for A, why in rep.failures:
        click.echo(f"FAIL {A.ops}: {why}")
    click.echo("pass" if rep.ok else "fail")
    _finish(rep.ok)


def _homs(src: FiniteLattice, dst: FiniteLattice) -> list[UslHomomorphism]:
    return [
        UslHomomorphism(src, dst, f)
        for f in product(dst.elements, repeat=src.n)
        if hom_violation(src, dst, f) is None
    ]


@verify.command("embedding")
@click.argument("source")
@click.argument("target")
@click.option("--stages", type=click.IntRange(min=0), default=2, show_default=True, help="Check stages 0..N.")
@variant_option
@budget_option
def verify_embedding(source, target, stages, variant, budget):
    """For every homomorphism SOURCE -> TARGET, the TARGET stages embed as SOURCE tables.

    Example: latseg verify embedding 2-chain M3 --stages 2
    """
    src, dst = load_lattice(source), load_lattice(target)
    homs = _homs(src, dst)
    if not homs:
        raise click.UsageError(f"no homomorphism from {source} to {target}")
    ok = True
    for n in range(stages + 1):
        G = pudlak_stage(dst, n, variant, budget)
        for phi in homs:
            rep = embed_table(G, phi)
            names = ",".join(dst.label(x) for x in phi.map)
            click.echo(f"stage {n} map [{names}] vertices {G.n_vertices}: {'pass' if rep.holds else 'FAIL ' + repr(rep.witness)}")
            ok &= rep.holds
    _finish(ok)


@verify.command("conditions")
@click.argument("lattice_spec", metavar="LATTICE")
@click.option("--stage", type=click.IntRange(min=0), default=1, show_default=True)
@variant_option
@budget_option
def verify_conditions(lattice_spec, stage, variant, budget):
    """Graph conditions, join preservation and injectivity of one stage.

    Example: latseg verify conditions N5 --stage 2
    """
    G = pudlak_stage(load_lattice(lattice_spec), stage, variant, budget)
    rep = verify_pudlak_conditions(G, raise_on_failure=False)
    joins = join_preserved(G)
    T = table_from_graph(G, injective=False)
    injective = len(set(T.rel)) == len(T.rel)
    click.echo(f"surjective {rep.surjective}")
    click.echo(f"cycles closed {rep.cycles_closed}")
    click.echo(f"cycle meet {rep.cycle_meet} (search complete {rep.cycle_search_complete})")
    click.echo(f"connectivity criterion {rep.connectivity_criterion}")
    click.echo(f"joins preserved {joins}")
    click.echo(f"injective {injective}")
    ok = rep.ok and joins
    click.echo("pass" if ok else "fail")
    _finish(ok)


fixtures_option = click.option("--fixtures", default="M3,N5", show_default=True, help="Comma-separated catalog names.")
seed_option = click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)


@verify.command("glb")
@click.option("--count", type=click.IntRange(min=1), default=100, show_default=True)
@fixtures_option
@seed_option
def verify_glb(count, fixtures, seed):
    """Seeded GLB interpolation instances, checked link by link.

    Example: latseg verify glb --count 20 --seed 7
    """
    bad = 0
    for inst in glb_instances(tuple(fixtures.split(",")), count, seed):
        S = staged_fixture(inst.fixture, 2)
        chain = glb_interpolate(S, inst.a, inst.b, inst.c, inst.sigma, inst.tau, inst.rho)
        ok = (
            chain[0] == inst.tau
            and chain[-1] == inst.rho
            and check_alternating(S, inst.a, inst.b, chain)
            and all(S.in_S(inst.sigma + t) for t in chain)
        )
        if not ok:
            bad += 1
            click.echo(f"FAIL {inst}")
    click.echo(f"instances {count} failures {bad}")
    _finish(bad == 0)


@verify.command("extend")
@click.option("--count", type=click.IntRange(min=1), default=50, show_default=True)
@fixtures_option
@seed_option
def verify_extend(count, fixtures, seed):
    """Seeded extendibility instances, every map replayed against the whole stage.

    Example: latseg verify extend --count 10
    """
    bad = 0
    for inst in extend_instances(tuple(fixtures.split(",")), count, seed):
        S = staged_fixture(inst.fixture, 2)
        res = extendibility_interpolate(S, inst.m, inst.u, inst.v, inst.lam, inst.lam2)
        problems = verify_extendibility(S, inst.m, inst.u, inst.v, inst.lam, inst.lam2, res)
        if problems:
            bad += 1
            click.echo(f"FAIL {inst}: {problems[0]}")
    click.echo(f"instances {count} failures {bad}")
    _finish(bad == 0)


@verify.command("computation")
@click.option("--depth", type=click.IntRange(min=2), default=6, show_default=True)
def verify_computation(depth):
    """Forward and backward computations on the planted-branch fixtures.

    Example: latseg verify computation --depth 6
    """
    ok = True
    for F in computation_fixtures(depth):
        tab, g, Phi = F.table, F.planted, F.functional
        gk = project(g, tab, F.k)
        forward = all(
            computation_forward(Phi, F.stages, F.k, gk, x) == Phi(g, x)
            for x in range(len(g))
            if Phi(g, x) is not None
        )
        back = computation_backward(Phi, F.stages, F.k, lambda x: Phi(g, x), depth)
        backward = all(strings_related(tab, F.k, s, g) for s in back.sigmas)
        click.echo(f"{F.name}: forward {'pass' if forward else 'FAIL'}, backward {'pass' if backward else 'FAIL'}"
                   f" (final {fmt(back.sigmas[-1])})")
        ok &= forward and backward
    _finish(ok)


# ---------------------------------------------------------------- sim


@main.group(cls=_Group)
def sim():
    """The bounded priority-tree construction."""


@sim.command("run")
@click.option("--stages", type=click.IntRange(min=0), default=100, show_default=True)
@click.option("--budget", type=click.IntRange(min=1), default=8, show_default=True, help="Search budget at stage t is BUDGET + 4t.")
@click.option("--checked/--unchecked", default=True, show_default=True)
@click.option("--functionals", type=click.Choice(["default", "reader"]), default="default", show_default=True)
@click.option("--fault", multiple=True, type=click.Choice(["skip-cancel"]), help="Inject a fault (for checker tests).")
@click.option("--max-tree-size", type=click.IntRange(min=1), default=50_000, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help=f"Output directory (default ${OUT_ENV} or .).")
def sim_run(stages, budget, checked, functionals, fault, max_tree_size, out_dir):
    """Run on the two-point presentation; writes trace.jsonl and report.json.

    Example: latseg sim run --stages 200 --out runs/
    """
    out = Path(out_dir or os.environ.get(OUT_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    S = two_point_table()
    funcs = default_functionals() if functionals == "default" else reader_functionals()
    res = run_construction(
        S,
        stages,
        schedule=RequirementSchedule(S, funcs),
        budget=lambda t: budget + 4 * t,
        checked=checked,
        faults=fault,
        max_tree_size=max_tree_size,
    )
    (out / "trace.jsonl").write_text(res.export())
    g = extract_g(res)
    report = {
        "schema": 1,
        "stages": stages,
        "records": len(res.trace),
        "violations": res.violations(),
        "warnings": res.warnings(),
        "g_prefix": list(g.prefix),
        "last_change": g.last_change,
        "gamma": list(g.gamma),
        "gamma_roots": [[label, kind, list(root), st] for label, kind, root, st in g.gamma_roots],
        "roots_increasing": g.increasing,
        "containment": g.containment,
        "nodes": len(res.nodes),
    }
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=1) + "\n")
    click.echo(f"records {len(res.trace)}")
    click.echo(f"violations {len(report['violations'])} warnings {len(report['warnings'])}")
    click.echo(f"g prefix {fmt(g.prefix)}")
    for v in report["violations"][:10]:
        click.echo(f"  {v}")
    _finish(not report["violations"])


if __name__ == "__main__":
    main()
