"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 internal
consistency failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, load_config
from .errors import ConsistencyError, DomainError, ValidationError
from .figures import FIGURES, figure_spec
from .rates import optimize_modulation, secret_key_rate
from .schemes import resolve_jobs, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_CONSISTENCY = 0, 2, 3, 4


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def cmd_rate(args) -> int:
    run: RunConfig = load_config(args.config)
    cfg = run.protocol
    if run.optimize_mu:
        mu_star, rep = optimize_modulation(cfg, run.mu_max)
    else:
        rep = secret_key_rate(cfg)
        mu_star = cfg.mu
    fields = [
        ("rate_bits_per_use", rep.rate), ("mutual_information", rep.mutual_information),
        ("holevo", rep.holevo), ("mu_star", mu_star), ("nu_plus", rep.nu_plus),
        ("nu_minus", rep.nu_minus), ("nu_cond", rep.nu_cond), ("xi", rep.xi),
        ("mode", rep.mode), ("status", rep.status),
    ]
    if rep.conditioning is not None:
        fields.append(("conditioning_group", rep.conditioning))
    if rep.pair is not None:
        fields.append(("worst_pair", f"{rep.pair[0]},{rep.pair[1]}"))
    for k, v in fields:
        print(f"{k} = {_fmt(v)}")
    return EXIT_OK


def _sweep_outputs(run: RunConfig, out: str | None) -> tuple[Path | None, Path | None]:
    if out:
        p = Path(out)
        if p.suffix == ".csv":
            return p, (p.with_suffix(".svg") if run.svg_path else None)
        p.mkdir(parents=True, exist_ok=True)
        return p / "sweep.csv", (p / "sweep.svg" if run.svg_path else None)
    return (Path(run.csv_path) if run.csv_path else None), (Path(run.svg_path) if run.svg_path else None)


def cmd_sweep(args) -> int:
    from .output import sweep_csv_text

    run = load_config(args.config)
    if run.sweep is None:
        raise ValidationError(f"{args.config}: no [sweep] table")
    spec = run.sweep
    if args.plob and not spec.plob:
        spec = replace(spec, plob=True)
    result = run_sweep(spec, resolve_jobs(args.jobs))
    text = sweep_csv_text(result, run.echo)
    csv_path, svg_path = _sweep_outputs(run, args.out)
    if csv_path is None:
        sys.stdout.write(text)
    else:
        csv_path.write_text(text, encoding="utf-8")
        print(f"wrote {csv_path}", file=sys.stderr)
    if svg_path is not None:
        from .figures import Panel
        from .plotting import render_figure

        panel = Panel("main", spec, spec.axis, "max distance [km]" if spec.quantity == "max_distance"
                      else "secret-key rate [bit/use]", log_y=spec.quantity == "rate")
        render_figure(Path(args.config).stem, [panel], [result], svg_path)
        print(f"wrote {svg_path}", file=sys.stderr)
    return EXIT_OK


def cmd_figure(args) -> int:
    from .output import sweep_csv_text
    from .plotting import render_figure

    fig = figure_spec(args.id)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = resolve_jobs(args.jobs)
    results = []
    for panel in fig.panels:
        spec = replace(panel.spec, plob=True) if args.plob else panel.spec
        result = run_sweep(spec, jobs)
        results.append(result)
        name = fig.fig_id if len(fig.panels) == 1 else f"{fig.fig_id}_{panel.name}"
        echo = {"figure": fig.fig_id, "panel": panel.name, "axis": spec.axis, "quantity": spec.quantity}
        (out / f"{name}.csv").write_text(sweep_csv_text(result, echo), encoding="utf-8")
    svg = render_figure(fig.title, fig.panels, results, out / f"{fig.fig_id}.svg")
    print(f"wrote {svg}", file=sys.stderr)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .oracle import selftest

    results = selftest(cases=args.cases, seed=args.seed)
    worst = max(dev for _, dev in results)
    bad = [(d, dev) for d, dev in results if not dev <= args.tol]
    for desc, dev in bad:
        print(f"MISMATCH {dev:.3e} {desc}")
    print(f"selftest: {len(results)} cases, worst relative deviation {worst:.3e}, tolerance {args.tol:g}")
    if bad:
        raise ConsistencyError(f"{len(bad)} case(s) exceed tolerance")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qssrate", description="Secret-key rates for group-based CV secret sharing.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rate", help="rate for a single configuration")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_rate)

    s = sub.add_parser("sweep", help="parameter sweep from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="CSV file or output directory (default: [output] table, else stdout)")
    s.add_argument("--jobs", type=int, default=None, help="worker processes (default: $QSSRATE_JOBS or 1)")
    s.add_argument("--plob", action="store_true", help="add the repeaterless bound column")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("figure", help="regenerate a built-in figure")
    f.add_argument("id", help=f"one of: {', '.join(FIGURES)}")
    f.add_argument("--out", required=True, help="output directory")
    f.add_argument("--jobs", type=int, default=None)
    f.add_argument("--plob", action="store_true")
    f.set_defaults(func=cmd_figure)

    t = sub.add_parser("selftest", help="compare the brute-force pipeline with the closed forms")
    t.add_argument("--cases", type=int, default=40)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--tol", type=float, default=1e-8)
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConsistencyError as exc:
        print(f"consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
