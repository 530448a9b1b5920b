"""Command-line interface.

Subcommands: ``estimate``, ``design``, ``prime-meridian``, ``reassign`` and
``evaluate``. Exit codes: 0 success, 2 input or configuration error, 3
estimation or solver error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .distortion import ObjectiveConfig, SegmentCostTable, partition_cost, segment_cost, segment_widths
from .dp_quantizer import (
    choose_prime_meridian_uniform,
    design_fixed_k,
    design_open_k,
    uniform_offset_costs,
)
from .exceptions import (
    ConstraintError,
    EstimationError,
    FormatError,
    InconsistencyError,
    InputError,
    SchemaError,
)
from .grid import load_population_profile
from .rdd import (
    EffectEstimate,
    counterfactual_lines,
    effect_to_eta,
    fit_global,
    fit_local,
    load_rdd_dataset,
    load_units,
    mccrary_test,
    reassign_units,
    save_rdd_dataset,
    select_bandwidth_cv,
)
from .vi_quantizer import design_fixed_k_vi

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_ESTIMATION = 0, 2, 3

log = logging.getLogger("rdquant")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _name_list(text: str) -> list:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run")
    g.add_argument("--config", metavar="JSON", help="JSON file of flag values; explicit flags win")
    g.add_argument("--seed", type=int, default=0, help="seed for any randomness (default 0)")
    g.add_argument("--threads", type=int, default=1,
                   help="worker threads for per-anchor solves; results do not depend on it")
    g.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _add_objective(p: argparse.ArgumentParser, eta=True) -> None:
    g = p.add_argument_group("objective")
    g.add_argument("--alpha", type=float, default=1.0, help="circadian exponent (>= 1, default 1)")
    g.add_argument("--beta", type=float, default=1.0, help="edge exponent (>= 1, default 1)")
    g.add_argument("--lam", type=float, default=1.0, help="weight of the edge term (default 1)")
    g.add_argument("--min-width", type=int, default=2, help="minimum region width in cells (default 2)")
    if eta:
        g.add_argument("--eta", type=float, default=None, help="per-boundary penalty (default 0)")
        g.add_argument("--eta-from", metavar="JSON",
                       help="effect JSON from 'estimate'; eta = |beta1|")
        g.add_argument("--eta-scale", choices=("none", "population_total"), default="none",
                       help="multiply eta by total population mass (default none)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rdquant", description="Estimate boundary discontinuities and design optimal longitude partitions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="RD estimates, manipulation test and counterfactual curves")
    p.add_argument("--data", required=True, help="RDD CSV (unit_id,distance,outcome[,controls])")
    p.add_argument("--outcome", default="outcome", help="outcome column (default outcome)")
    p.add_argument("--distance", default="distance", help="running-variable column (default distance)")
    p.add_argument("--controls", type=_name_list, default=[], help="comma-separated control columns")
    p.add_argument("--cutoff", type=float, default=0.0, help="treatment threshold (default 0)")
    p.add_argument("--bandwidth", type=float, help="local-fit bandwidth")
    p.add_argument("--bandwidth-grid", type=_float_list, help="comma-separated CV candidates")
    p.add_argument("--poly-order", type=int, default=2, help="global polynomial order (default 2)")
    p.add_argument("--mccrary-bins", type=int, default=40, help="McCrary bins, both sides (default 40)")
    p.add_argument("--min-side", type=int, default=10, help="minimum rows per side (default 10)")
    p.add_argument("--curves", metavar="CSV", help="write counterfactual curves here")
    p.add_argument("--curve-points", type=int, default=41, help="curve grid size (default 41)")
    _add_common(p)

    p = sub.add_parser("design", help="optimal partition of a population profile")
    p.add_argument("--population", required=True, help="population CSV (index,longitude_deg,population)")
    p.add_argument("--k", type=int, help="number of regions")
    p.add_argument("--k-min", type=int, help="smallest region count for open-k design")
    p.add_argument("--k-max", type=int, help="largest region count for open-k design")
    p.add_argument("--method", choices=("dp", "vi"), default="dp", help="solver (default dp)")
    p.add_argument("--gamma", type=float, default=1.0, help="VI discount in (0, 1] (default 1)")
    p.add_argument("--epsilon", type=float, default=1e-9, help="VI stopping tolerance (default 1e-9)")
    p.add_argument("--max-sweeps", type=int, help="VI sweep budget (default: automatic)")
    p.add_argument("--check-dp", action="store_true", help="with vi, also solve by DP and compare")
    _add_objective(p)
    _add_common(p)

    p = sub.add_parser("prime-meridian", help="best anchor for equal-width regions")
    p.add_argument("--population", required=True, help="population CSV")
    p.add_argument("--k", type=int, required=True, help="number of equal regions (must divide N)")
    p.add_argument("--curve", metavar="CSV", help="write the offset-cost curve here")
    _add_objective(p)
    _add_common(p)

    p = sub.add_parser("reassign", help="signed distances of units to their nearest boundary")
    p.add_argument("--units", required=True, help="units CSV (unit_id,longitude_deg,outcome[,controls])")
    p.add_argument("--partition", required=True, help="partition JSON from 'design'")
    p.add_argument("--population", required=True, help="population CSV the partition was designed on")
    p.add_argument("--outcome", default="outcome", help="outcome column (default outcome)")
    p.add_argument("--controls", type=_name_list, default=None,
                   help="control columns to carry over (default: all extra columns)")
    p.add_argument("--miles-per-degree", type=float, default=None,
                   help="scale degrees to miles (default: keep degrees)")
    _add_common(p)

    p = sub.add_parser("evaluate", help="cost of an existing partition on a profile")
    p.add_argument("--population", required=True, help="population CSV")
    p.add_argument("--partition", required=True, help="partition JSON")
    _add_objective(p)
    _add_common(p)
    return parser


# --- config plumbing --------------------------------------------------------------


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    command = next((a for a in rest if a in COMMANDS), None)
    if known.config is None or command is None:
        return parser.parse_args(argv)
    try:
        with open(known.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.exit(EXIT_INPUT, f"rdquant: error: cannot read config {known.config}: {exc}\n")
    if not isinstance(cfg, dict):
        parser.exit(EXIT_INPUT, "rdquant: error: config must be a JSON object\n")
    subparser = parser._subparsers._group_actions[0].choices[command]
    known_dests = {a.dest for a in subparser._actions}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items() if k != "command"}
    unknown = sorted(set(cfg) - known_dests)
    if unknown:
        parser.exit(EXIT_INPUT, f"rdquant: error: unknown config key(s) {', '.join(unknown)}\n")
    # config values become defaults, so flags given on the command line still win
    for action in subparser._actions:
        if action.dest in cfg:
            action.required = False
    subparser.set_defaults(**cfg)
    return parser.parse_args(argv)


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose",)}


def _envelope(args, body: dict, notes: list) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": _resolved(args),
    }
    out.update(body)
    out["warnings"] = notes
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _emit_text(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="")


def _emit_json(obj: dict, path) -> None:
    _emit_text(json.dumps(_jsonable(obj), indent=2) + "\n", path)


def _objective(args, profile=None) -> ObjectiveConfig:
    eta = getattr(args, "eta", None)
    eta_from = getattr(args, "eta_from", None)
    if eta is not None and eta_from is not None:
        raise ConstraintError("--eta and --eta-from are mutually exclusive")
    if eta_from is not None:
        try:
            effect = json.loads(Path(eta_from).read_text(encoding="utf-8"))
            est = EffectEstimate.from_estimate(float(effect["beta1"]), float(effect["se"]))
        except KeyError as exc:
            raise SchemaError(f"{eta_from}: effect JSON lacks {exc}") from None
        except json.JSONDecodeError as exc:
            raise FormatError(f"{eta_from}: {exc}") from None
        eta = effect_to_eta(est)
    eta = 0.0 if eta is None else eta
    if getattr(args, "eta_scale", "none") == "population_total" and profile is not None:
        eta *= profile.total_mass
    return ObjectiveConfig(args.alpha, args.beta, args.lam, eta, args.min_width)


def _load_partition(path, n_cells: int):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or "boundaries" not in doc:
        raise SchemaError(f"{path}: partition JSON needs a 'boundaries' list")
    b = doc["boundaries"]
    if not isinstance(b, list) or not b or any(not isinstance(x, int) for x in b):
        raise FormatError(f"{path}: 'boundaries' must be a non-empty list of cell indices")
    if any(not 0 <= x < n_cells for x in b):
        raise ConstraintError(f"{path}: boundary indices outside 0..{n_cells - 1} for this profile")
    segment_widths(b, n_cells)
    return SimpleNamespace(boundaries=tuple(b), k=len(b))


# --- commands ---------------------------------------------------------------------


def cmd_estimate(args, notes):
    data = load_rdd_dataset(args.data, args.outcome, args.distance, args.controls, args.cutoff,
                            min_side=args.min_side)
    if data.n_dropped:
        notes.append(f"dropped {data.n_dropped} row(s) with missing fields")
    if (args.bandwidth is None) == (args.bandwidth_grid is None):
        raise ConstraintError("give exactly one of --bandwidth and --bandwidth-grid")
    bw = args.bandwidth
    if bw is None:
        bw = select_bandwidth_cv(data, args.bandwidth_grid)
        log.info("cross-validated bandwidth %g", bw)
    local = fit_local(data, bw)
    glob = fit_global(data, args.poly_order)
    mc = mccrary_test(data, args.mccrary_bins)
    if mc.manipulated:
        notes.append(f"McCrary test rejects continuity of the running-variable density "
                     f"(log ratio {mc.log_ratio:.4g}, p={mc.p_value:.3g})")
    eff = local.effect
    if eff.significant_at is None:
        notes.append("local effect not significant at 10%")

    if args.curves:
        grid = np.linspace(data.cutoff - bw, data.cutoff + bw, max(args.curve_points, 2))
        lines = counterfactual_lines(local, grid)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["distance", "observed_side_prediction", "counterfactual_prediction", "in_support"])
        for r in lines.rows():
            w.writerow([repr(r["distance"]), repr(r["observed_side_prediction"]),
                        repr(r["counterfactual_prediction"]), int(r["in_support"])])
        _emit_text(buf.getvalue(), args.curves)

    body = {
        "estimator": "conventional",
        "kind": "local",
        "beta1": eff.beta1,
        "se": eff.se,
        "p_value": eff.p_value,
        "significant_at": eff.significant_at,
        "n_left": local.n_left,
        "n_right": local.n_right,
        "bandwidth": bw,
        "eta": abs(eff.beta1),
        "n_dropped": data.n_dropped,
        "local": local.to_dict(),
        "global": glob.to_dict(),
        "mccrary": mc.to_dict(),
        "manipulated": mc.manipulated,
    }
    return body


def _design_vi_open(profile, args, cfg, table):
    best, best_score = None, math.inf
    for k in range(args.k_min, args.k_max + 1):
        part = design_fixed_k_vi(profile, k, cfg, args.gamma, args.epsilon, args.max_sweeps,
                                 table=table, n_jobs=args.threads)
        if part.total_cost < best_score - 1e-12 * abs(best_score):
            best, best_score = part, part.total_cost
    return best


def cmd_design(args, notes):
    profile = load_population_profile(args.population)
    cfg = _objective(args, profile)
    fixed = args.k is not None
    if fixed == (args.k_min is not None or args.k_max is not None):
        raise ConstraintError("give --k, or both --k-min and --k-max")
    if not fixed and (args.k_min is None or args.k_max is None):
        raise ConstraintError("open-k design needs both --k-min and --k-max")
    if not 0 < args.gamma <= 1:
        raise ConstraintError(f"--gamma must lie in (0, 1], got {args.gamma}")
    table = SegmentCostTable(profile, cfg)
    if args.method == "dp":
        if fixed:
            part = design_fixed_k(profile, args.k, cfg, table=table)
        else:
            part = design_open_k(profile, args.k_min, args.k_max, cfg, table=table)
    else:
        if fixed:
            part = design_fixed_k_vi(profile, args.k, cfg, args.gamma, args.epsilon, args.max_sweeps,
                                     table=table, n_jobs=args.threads)
        else:
            part = _design_vi_open(profile, args, cfg, table)
    body = {"method": args.method, **part.to_dict(profile)}
    if args.check_dp:
        if args.method != "vi":
            notes.append("--check-dp ignored for --method dp")
        else:
            ref = (design_fixed_k(profile, args.k, cfg, table=table) if fixed
                   else design_open_k(profile, args.k_min, args.k_max, cfg, table=table))
            rel = abs(part.total_cost - ref.total_cost) / max(abs(ref.total_cost), 1e-300)
            same = ref.boundaries == part.boundaries
            body["check_dp"] = {"dp_total_cost": ref.total_cost, "relative_gap": rel,
                                "same_boundaries": same}
            if args.gamma == 1 and (rel > 1e-9 or not same):
                raise InconsistencyError(
                    f"VI result {list(part.boundaries)} (cost {part.total_cost!r}) differs from "
                    f"DP {list(ref.boundaries)} (cost {ref.total_cost!r})"
                )
            if args.gamma < 1 and part.total_cost < ref.total_cost * (1 - 1e-9):
                raise InconsistencyError("discounted VI beat the exact DP optimum")
    return body


def cmd_prime_meridian(args, notes):
    profile = load_population_profile(args.population)
    cfg = _objective(args, profile)
    costs = uniform_offset_costs(profile, args.k, cfg)
    best = choose_prime_meridian_uniform(profile, args.k, cfg)
    width = profile.n_cells // args.k
    boundaries = [(best + m * width) % profile.n_cells for m in range(args.k)]
    if args.curve:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["offset", "longitude_deg", "total_cost"])
        for i, c in enumerate(costs):
            w.writerow([i, repr(profile.east_edge_deg(i)), repr(float(c))])
        _emit_text(buf.getvalue(), args.curve)
    return {
        "k": args.k,
        "best_offset": best,
        "best_longitude_deg": profile.east_edge_deg(best),
        "best_total_cost": float(costs[best]),
        "boundaries": sorted(boundaries),
        "boundaries_deg": [profile.east_edge_deg(b) for b in sorted(boundaries)],
        "cost_range": [float(costs.min()), float(costs.max())],
    }


def cmd_reassign(args, notes):
    profile = load_population_profile(args.population)
    part = _load_partition(args.partition, profile.n_cells)
    units = load_units(args.units, args.outcome, args.controls)
    scale = 1.0 if args.miles_per_degree is None else args.miles_per_degree
    if not (scale > 0 and math.isfinite(scale)):
        raise ConstraintError(f"--miles-per-degree must be positive, got {scale}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        data = reassign_units(units, part, profile, scale=scale)
    notes.extend(str(w.message) for w in caught)
    buf = io.StringIO()
    save_rdd_dataset(data, buf)
    _emit_text(buf.getvalue(), args.out)
    return None


def cmd_evaluate(args, notes):
    profile = load_population_profile(args.population)
    cfg = _objective(args, profile)
    part = _load_partition(args.partition, profile.n_cells)
    b = sorted(part.boundaries)
    widths = segment_widths(b, profile.n_cells)
    segs = [segment_cost(profile, s, int(w), cfg) for s, w in zip(b, widths)]
    return {
        "k": len(b),
        "boundaries": b,
        "widths": widths.tolist(),
        "segment_costs": [s.as_dict() for s in segs],
        "eta": cfg.eta,
        "total_cost": partition_cost(profile, b, cfg),
    }


COMMANDS = {
    "estimate": cmd_estimate,
    "design": cmd_design,
    "prime-meridian": cmd_prime_meridian,
    "reassign": cmd_reassign,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    args = _parse(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    notes: list = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            body = COMMANDS[args.command](args, notes)
        notes.extend(str(w.message) for w in caught if str(w.message) not in notes)
    except (InputError, IndexError, OSError) as exc:
        print(f"rdquant {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EstimationError as exc:
        print(f"rdquant {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"rdquant {args.command}: computation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    for note in notes:
        print(f"rdquant {args.command}: warning: {note}", file=sys.stderr)
    if body is not None:
        _emit_json(_envelope(args, body, notes), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
