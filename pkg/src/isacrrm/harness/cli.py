"""Command line: solve, sweep, verify, reproduce and codebook dump."""

from __future__ import annotations

import json
import sys
import warnings
from pathlib import Path

import click

from ..solver import Infeasible
from ..verify import check_allocation
from .config import (
    SCHEMES,
    ConfigError,
    bundled_names,
    bundled_scenario,
    codebooks_for,
    draw_scenario,
    load_scenario,
    realization_rng,
)
from .runner import (
    allocation_from_record,
    emit_grid,
    emit_results,
    load_results,
    run_scenario,
    run_variants,
    summarize,
    sweep_grid,
    _verification_scenario,
)

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _schemes(text):
    if text is None:
        return None
    names = [s.strip().lower() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in SCHEMES]
    if bad:
        raise click.BadParameter(f"unknown scheme(s) {', '.join(bad)}", param_hint="--schemes")
    return names


def _apply_common(config, seed, realizations):
    over = {}
    if seed is not None:
        over["seed"] = seed
    if realizations is not None:
        over["realizations"] = realizations
    return config.with_overrides(over)


def _print_summary(records):
    rows = summarize(records)
    width = max([7] + [len(r["variant"]) for r in rows])
    click.echo(f"{'variant':<{width}} {'scheme':<6} {'feasible':>9} {'energy_mJ':>10} {'time_ms':>8} {'slots':>6}")
    for r in rows:
        click.echo(
            f"{r['variant']:<{width}} {r['scheme']:<6} {r['feasible']:>4}/{r['realizations']:<4} "
            f"{r['mean_energy_mJ']:>10.4f} {r['mean_time_ms']:>8.3f} {r['mean_active_slots']:>6.2f}"
        )


def _emit(records, out, fmt, default_name):
    if out is None:
        return
    out = Path(out)
    if fmt is None:
        fmt = "json" if out.suffix.lower() == ".json" else "csv"
    if out.is_dir() or not out.suffix:
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"{default_name}.{fmt}"
    emit_results(records, fmt, out)
    click.echo(f"wrote {out}")


common = [
    click.option("--seed", type=int, default=None, help="Override the config seed."),
    click.option("--realizations", type=int, default=None, help="Number of random realizations."),
    click.option("--schemes", default=None, help="Comma list of opt,tlb,elb,bl1,bl2,bl3."),
    click.option("--out", type=click.Path(), default=None, help="Output file or directory."),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None,
                 help="Output format; defaults to the --out suffix, else csv."),
]


def with_common(fn):
    for option in reversed(common):
        fn = option(fn)
    return fn


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (ConfigError, FileNotFoundError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(EXIT_ERROR)


@click.group(cls=_Group)
def main():
    """Robust joint sensing/communication scheduling over beam codebooks."""


@main.command()
@click.argument("config", type=click.Path())
@with_common
def solve(config, seed, realizations, schemes, out, fmt):
    """Solve every realization of CONFIG with the chosen schemes."""
    cfg = _apply_common(load_scenario(config), seed, realizations)
    records = run_scenario(cfg, _schemes(schemes))
    _print_summary(records)
    _emit(records, out, fmt, cfg.name or "results")
    sys.exit(_exit_code(records))


def _exit_code(records):
    if any(r.error.startswith("error:") or (r.feasible and not r.verified) for r in records):
        return EXIT_ERROR
    lead = [r for r in records if records and r.scheme == records[0].scheme]
    if lead and not any(r.feasible for r in lead):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _parse_grid(text):
    axes = {}
    for part in text.split(","):
        key, _, spec = part.partition("=")
        bits = spec.split(":")
        if len(bits) != 3:
            raise click.BadParameter("use key=start:stop:points[,key=...]", param_hint="--grid")
        axes[key.strip()] = [float(bits[0]), float(bits[1]), int(bits[2])]
    if len(axes) != 2:
        raise click.BadParameter("exactly two axes are needed", param_hint="--grid")
    return axes


@main.command()
@click.argument("config", type=click.Path())
@click.option("--grid", "grid_text", default=None, help="key=start:stop:points,key=start:stop:points")
@click.option("--horizons", default=None, help="Comma list of slot budgets, e.g. 1,2.")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
def sweep(config, grid_text, horizons, seed, out):
    """Feasibility/energy heatmap over two requirement axes."""
    cfg = _apply_common(load_scenario(config), seed, None)
    axes = _parse_grid(grid_text) if grid_text else None
    hs = [int(h) for h in horizons.split(",")] if horizons else None
    result = sweep_grid(cfg, axes, hs)
    for h in result.horizons:
        click.echo(f"horizon {h}: {result.count(h)} feasible cells of {result.feasible[h].size}")
    if len(result.horizons) >= 2:
        a, b = result.horizons[0], result.horizons[-1]
        click.echo(f"ratio S={b}/S={a}: {result.ratio(a, b):.3f}  contained: {result.contains(a, b)}")
    if out:
        click.echo(f"wrote {emit_grid(result, out)}")


@main.command()
@click.argument("config", type=click.Path())
@click.argument("allocation_file", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None, help="Write the reports as JSON.")
def verify(config, allocation_file, seed, out):
    """Re-check emitted allocations constraint by constraint."""
    cfg = _apply_common(load_scenario(config), seed, None)
    reports = []
    ok = True
    for rec in load_results(allocation_file):
        if not rec.feasible:
            continue
        scenario = draw_scenario(cfg, realization_rng(cfg, rec.realization))
        alloc = allocation_from_record(scenario, rec)
        report = check_allocation(_verification_scenario(rec.scheme.lower(), scenario), alloc)
        ok &= report.passed
        status = "pass" if report.passed else "FAIL " + ",".join(report.failures())
        click.echo(f"{rec.variant} {rec.scheme} realization {rec.realization}: {status}")
        reports.append({"variant": rec.variant, "scheme": rec.scheme, "realization": rec.realization,
                        **report.to_dict()})
    if out:
        Path(out).write_text(json.dumps(reports, indent=1))
    sys.exit(EXIT_OK if ok else EXIT_ERROR)


@main.command()
@click.argument("name", type=click.Choice(bundled_names(), case_sensitive=False))
@with_common
@click.option("--full", is_flag=True, help="Full-size instances instead of desk scale.")
def reproduce(name, seed, realizations, schemes, out, fmt, full):
    """Run a bundled scenario preset (desk scale unless --full)."""
    cfg = bundled_scenario(name, warn=False)
    if full:
        warnings.warn("full-size presets can take hours", stacklevel=1)
        click.echo("warning: running full-size instances", err=True)
    else:
        cfg = cfg.desk_scale()
    cfg = _apply_common(cfg, seed, realizations)
    if cfg.grid:
        out_dir = Path(out) if out else None
        if out_dir:
            out_dir.mkdir(parents=True, exist_ok=True)
        for label, over in cfg.variant_overrides():
            result = sweep_grid(cfg.with_overrides(over))
            hs = result.horizons
            line = ", ".join(f"S={h}: {result.count(h)}" for h in hs)
            if len(hs) >= 2:
                line += f", ratio {result.ratio(hs[0], hs[-1]):.3f}"
            click.echo(f"{label}: {line}")
            if out_dir:
                emit_grid(result, out_dir / f"{cfg.name}_{label.replace('=', '_').replace(',', '_')}.csv")
        return
    records = run_variants(cfg, _schemes(schemes))
    _print_summary(records)
    _emit(records, out, fmt, cfg.name)
    code = _exit_code(records)
    sys.exit(EXIT_OK if code == EXIT_INFEASIBLE else code)


@main.group()
def codebook():
    """Codebook utilities."""


@codebook.command("dump")
@click.argument("config", type=click.Path())
@click.option("--out", type=click.Path(), default=".", help="Directory for the tx/rx JSON files.")
def dump(config, out):
    """Write the transmit and receive codebooks of CONFIG as JSON."""
    cfg = load_scenario(config, warn=False)
    tx, rx = codebooks_for(cfg)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for book in (tx, rx):
        path = out / f"codebook_{book.side}.json"
        book.dump(path)
        click.echo(f"wrote {path} ({len(book)} codewords)")


if __name__ == "__main__":
    main()
