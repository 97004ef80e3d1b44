"""Command-line entry point.

Subcommands write CSV files plus ``resolved_config.json`` and
``manifest.json`` into ``--out``. Exit codes: 0 success, 1 I/O, 2 validation,
3 capacity, 4 empty result.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import AUX_VARS, CHANNEL_KERNELS, DEFAULT_CAP, Violation, Z, build_joint, validate
from .config import (canonical, channel_to_dict, digest_text, load_channel, load_scheme,
                     read_document, scheme_to_dict, search_from_dict, simulation_from_dict)
from .errors import (ArgumentError, CapacityError, EmptyResult, TemplateError, ValidationError,
                     ZeroMassError)
from .estimation import optimal_estimator
from .region import check_monostatic, eliminate, evaluate_bounds, lemma_checks
from .search import tradeoff
from .simulator import SimConfig, preflight, rate_feasibility_report, report_json, run, sweep_csv

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_CAPACITY, EXIT_EMPTY = 0, 1, 2, 3, 4


def _fmt(x) -> str:
    return repr(float(x))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class _Run:
    """Output directory bookkeeping: config dump and manifest precede results."""

    def __init__(self, out: Path, subcommand: str, resolved: dict, seed, outputs):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        text = canonical(resolved)
        (self.out / "resolved_config.json").write_text(text)
        self.manifest = {
            "tool": "cdregion", "version": __version__, "subcommand": subcommand,
            "seed": seed, "config_hash": digest_text(text),
            "started": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "outputs": sorted(outputs), "status": "running",
        }
        self._write_manifest()

    def _write_manifest(self):
        (self.out / "manifest.json").write_text(canonical(self.manifest))

    def write(self, name: str, text: str):
        (self.out / name).write_text(text)

    def finish(self, status="ok"):
        self.manifest["status"] = status
        self.manifest["finished"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        self._write_manifest()


def _load_pair(args):
    channel = load_channel(args.channel)
    scheme = load_scheme(args.scheme)
    if getattr(args, "strictly_causal", False):
        scheme = scheme.with_mode("strictly_causal")
    return channel, scheme


def _check(channel, scheme):
    v = validate(channel, scheme)
    if v:
        raise ValidationError(v)


# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    channel = load_channel(args.channel)
    if args.scheme:
        scheme = load_scheme(args.scheme)
        if args.strictly_causal:
            scheme = scheme.with_mode("strictly_causal")
        violations = validate(channel, scheme)
    else:
        violations = [Violation(c, m) for name in CHANNEL_KERNELS
                      for c, m in channel.kernel(name).violations(name)]
    for v in violations:
        print(f"{v.code}: {v.message}")
    if args.out:
        _Run(args.out, "validate", {"channel": channel_to_dict(channel)}, None,
             ["violations.csv"]).write(
            "violations.csv", _csv(["code", "message"], [(v.code, v.message) for v in violations]))
    if violations:
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def cmd_region(args) -> int:
    channel, scheme = _load_pair(args)
    _check(channel, scheme)
    outputs = ["bounds.csv", "inequalities.csv", "vertices.csv", "conditions.csv",
               "lemmas.csv", "slices.csv"]
    rn = _Run(args.out, "region", {"channel": channel_to_dict(channel),
                                  "scheme": scheme_to_dict(scheme), "cap": args.cap},
              None, outputs)
    sj = build_joint(channel, scheme, cap=args.cap)
    bounds = evaluate_bounds(sj)
    poly = eliminate(bounds)
    rn.write("bounds.csv", _csv(["bound", "value"],
                                [(k, _fmt(v)) for k, v in bounds.as_dict().items()]))
    rn.write("inequalities.csv", _csv(
        ["a_R0", "a_R1", "a_R2", "rhs", "provenance"],
        [[_fmt(x) for x in q.coef] + [_fmt(q.rhs), "+".join(q.provenance)]
         for q in poly.inequalities]))
    rn.write("vertices.csv", _csv(["R0", "R1", "R2"],
                                  [[_fmt(x) for x in v] for v in poly.vertices]))
    rn.write("conditions.csv", _csv(["value", "provenance"],
                                    [(_fmt(v), "+".join(p)) for v, p in poly.conditions]))
    lem = lemma_checks(bounds, sj)
    rn.write("lemmas.csv", _csv(
        ["quantity", "value"],
        [("sum_bound", _fmt(lem.sum_bound)), ("total_bound", _fmt(lem.total_bound)),
         ("r2_information", _fmt(lem.lemma2_information)),
         ("r2_forced_zero", str(lem.lemma2_triggered)), ("max_R2", _fmt(lem.max_r2)),
         ("violations", str(len(lem.violations)))]))
    rows = []
    if not poly.empty:
        r0max = poly.maximize([1, 0, 0])[0]
        for r0 in np.linspace(0.0, r0max, 5):
            for v in poly.slice_vertices(r0):
                rows.append([_fmt(r0), _fmt(v[0]), _fmt(v[1])])
    rn.write("slices.csv", _csv(["R0", "R1", "R2"], rows))
    try:
        check_monostatic(channel)
        j = sj.joint
        print(f"monostatic rate bound I(X1;Y|X2) = {j.mutual_information('X1', 'Y', ('X2',)):.12g}")
    except TemplateError:
        pass
    if poly.empty:
        rn.finish("empty")
        print("region is empty")
        return EXIT_EMPTY
    print(f"{len(poly.vertices)} vertices, {len(poly.A)} inequalities")
    rn.finish()
    return EXIT_OK


def cmd_tradeoff(args) -> int:
    channel = load_channel(args.channel)
    doc = read_document(args.config, "search") if args.config else {"schema": "", "kind": ""}
    cfg, grid = search_from_dict({k: v for k, v in doc.items()})
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.strictly_causal:
        cfg = replace(cfg, mode="strictly_causal")
    if args.d_grid:
        grid = args.d_grid
    if not grid:
        raise ArgumentError("no distortion grid: pass --d-grid or set d_grid in the config")
    resolved = {"channel": channel_to_dict(channel), "d_grid": grid,
                "search": {"cardinalities": cfg.cardinalities, "weights": list(cfg.weights),
                           "strategy": cfg.strategy, "budget": cfg.budget, "seed": cfg.seed,
                           "mode": cfg.mode}}
    rn = _Run(args.out, "tradeoff", resolved, cfg.seed, ["curve.csv"])
    curve = tradeoff(channel, cfg, grid)
    rn.write("curve.csv", curve.to_csv())
    if all(math.isnan(p.rate) for p in curve.points):
        rn.finish("empty")
        print("no feasible scheme at any grid point")
        return EXIT_EMPTY
    rn.finish()
    for p in curve.points:
        print(f"D={p.D:g} rate={p.rate:.6g} scheme={p.digest or '-'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    channel, scheme = _load_pair(args)
    _check(channel, scheme)
    doc = read_document(args.config, "simulation")
    rates, opts = simulation_from_dict(doc)
    for key in ("trials", "seed", "epsilon"):
        if getattr(args, key) is not None:
            opts[key] = getattr(args, key)
    if args.n_sweep:
        opts["n_sweep"] = args.n_sweep
    if args.cap is not None:
        opts["codebook_cap"] = args.cap
    n_sweep = [int(n) for n in opts.pop("n_sweep", [])]
    if not n_sweep:
        raise ArgumentError("no block lengths: pass --n-sweep or set n_sweep in the config")
    base = SimConfig(channel, scheme, rates, n=n_sweep[0], **opts)
    for n in n_sweep:  # fail on capacity before writing anything
        preflight(replace(base, n=n))
    resolved = {"channel": channel_to_dict(channel), "scheme": scheme_to_dict(scheme),
                "rates": {k: getattr(rates, k) for k in rates.__dataclass_fields__},
                "n_sweep": n_sweep,
                "options": {k: getattr(base, k) for k in
                            ("B", "epsilon", "delta", "alpha1", "alpha2", "trials", "seed",
                             "codebook_cap", "search_cap")}}
    rn = _Run(args.out, "simulate", resolved, base.seed,
              ["sweep.csv", "report.json", "feasibility.csv"])
    feas = rate_feasibility_report(base)
    rn.write("feasibility.csv", _csv(
        ["condition", "lhs", "rhs", "sense", "slack"],
        [(c.name, _fmt(c.lhs), _fmt(c.rhs), c.sense, _fmt(c.slack)) for c in feas.checks + feas.guards]))
    reports = [run(replace(base, n=n)) for n in n_sweep]
    rn.write("sweep.csv", sweep_csv(reports))
    rn.write("report.json", report_json(reports) + "\n")
    rn.finish()
    print(sweep_csv(reports), end="")
    return EXIT_OK


def cmd_estimate(args) -> int:
    channel, scheme = _load_pair(args)
    _check(channel, scheme)
    cond = tuple(args.conditioning) if args.conditioning else AUX_VARS + Z
    rn = _Run(args.out, "estimate", {"channel": channel_to_dict(channel),
                                    "scheme": scheme_to_dict(scheme), "conditioning": list(cond)},
              None, ["estimator.csv", "distortion.csv"])
    sj = build_joint(channel, scheme, cap=args.cap)
    est = optimal_estimator(sj, channel, cond)
    cells = np.ndindex(*est.table.shape)
    rn.write("estimator.csv", _csv(list(cond) + ["S_hat"],
                                   [list(c) + [int(est.table[c])] for c in cells]))
    rn.write("distortion.csv", _csv(["conditioning", "distortion"],
                                    [(" ".join(cond), _fmt(est.expected_distortion))]))
    rn.finish()
    print(f"distortion = {est.expected_distortion:.12g}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdregion", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scheme=True, out_required=True):
        sp.add_argument("--channel", required=True, type=Path)
        if scheme:
            sp.add_argument("--scheme", required=True, type=Path)
            sp.add_argument("--strictly-causal", action="store_true",
                            help="treat side information as strictly causal")
        sp.add_argument("--out", required=out_required, type=Path)

    sp = sub.add_parser("validate", help="check channel (and scheme) files")
    sp.add_argument("--channel", required=True, type=Path)
    sp.add_argument("--scheme", type=Path)
    sp.add_argument("--strictly-causal", action="store_true")
    sp.add_argument("--out", type=Path)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("region", help="bounds, polytope and lemma checks for one scheme")
    common(sp)
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="joint tensor size cap")
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("tradeoff", help="search a rate-distortion trade-off curve")
    common(sp, scheme=False)
    sp.add_argument("--config", type=Path, help="search document")
    sp.add_argument("--d-grid", type=_floats)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--strictly-causal", action="store_true")
    sp.set_defaults(func=cmd_tradeoff)

    sp = sub.add_parser("simulate", help="Monte-Carlo run of the block-Markov scheme")
    common(sp)
    sp.add_argument("--config", required=True, type=Path, help="simulation document")
    sp.add_argument("--n-sweep", type=_ints)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--cap", type=int, help="codebook size cap")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="optimal estimator table and its distortion")
    common(sp)
    sp.add_argument("--conditioning", type=lambda t: [x for x in t.split(",") if x])
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP)
    sp.set_defaults(func=cmd_estimate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as e:
        for v in e.violations:
            print(f"{v.code}: {v.message}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ArgumentError, TemplateError, ZeroMassError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except CapacityError as e:
        print(f"capacity: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except EmptyResult as e:
        print(f"empty: {e}", file=sys.stderr)
        return EXIT_EMPTY


if __name__ == "__main__":
    sys.exit(main())
