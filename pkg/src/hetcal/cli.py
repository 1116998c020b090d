"""Command-line front end: ``hetcal <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .analysis import DEFAULT_ENBW_REL_U, DEFAULT_TYPE_B_REL, EnbwResult, compute_enbw
from .config import CliConfig, default_config, load_config
from .dataset import SCHEMA_VERSION, dumps, persist_dataset, read_json, tone_trace_to_dict, write_atomic
from .exceptions import AnalysisError, ConfigError, HetcalError, SchemaError
from .protocol import (
    SWEEP_AXES,
    analyze,
    run_protocol,
    run_sweep,
    tone_cal_trace,
    validate_scenario,
)
from .uncertainty import propagate_uncertainty
from .validation import check_datasets, trace_from_dict

log = logging.getLogger("hetcal")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ANALYSIS = 0, 1, 2, 3
HELP_WIDTH = 88

_CONFIG_DEFAULTS = """\
config defaults (JSON, "version": 1; every section optional):
  receiver   delta_tau=0 tau_alpha=0.92 tau_beta=0.92 eta1=0.75 eta2=0.75 eta_mm=0.5
             k_conv=1 gain=1 noise_factor=1
  fields     signal_power_w=1e-08 lo_power_w=0.001 wavelength=1.542e-06 if_hz=2e+07
             max_flux_ratio=0.001
  channel    transmissions=[]
  esa        center_hz=<fields.if_hz> span_hz=1e+07 rbw_hz=1e+06 n_bins=1001 n_avg=100
             filter_family=gaussian reference_power=1
  monitor    responsivity=0.5 (V/uW) dark_offset=0.01 readout_noise_std=0.001
  analysis   k=2 type_b_rel=0.005 enbw_type_b_rel=0.003 rel_u_attenuation=0.006
             rel_u_responsivity=0.0045 tone_halfwidth_hz=<2*rbw>
  top level  attenuation_l=0.01 s_elec=5e+14 n_repeats=10 seed=0 deterministic=false
             n_dark=100 n_monitor=100 tone_cal_floor_dbc=-90 output_dir=. verbosity=0
  sweep      axis=<signal_power|attenuation|if_frequency> points=[...]

exit codes: 0 success, 1 usage error, 2 data/schema/config error, 3 analysis error"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _formatter(prog):
    return argparse.RawDescriptionHelpFormatter(prog, width=HELP_WIDTH, max_help_position=30)


def _add_run_flags(p, *, repeats=True, deterministic=True):
    p.add_argument("--config", metavar="PATH", help="JSON run configuration (default: built-in defaults)")
    p.add_argument("--seed", type=int, metavar="N", help="base random seed (default: config seed, 0)")
    if repeats:
        p.add_argument("--repeats", type=int, metavar="N", help="acquisitions per setting (default: config n_repeats, 10)")
    if deterministic:
        p.add_argument("--deterministic", action="store_true", help="noise-free expectation mode (default: off)")


def _add_out(p, default_note):
    p.add_argument("--out", metavar="DIR", help=f"output directory (default: {default_note})")


def _add_k(p):
    p.add_argument("--k", type=float, metavar="FACTOR", help="coverage factor of the expanded uncertainty (default: 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hetcal",
        description="Shot-noise-referenced calibration of heterodyne detection efficiency.",
        epilog=_CONFIG_DEFAULTS,
        formatter_class=_formatter,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr (repeatable)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="simulate acquisitions and write dataset files", formatter_class=_formatter,
                       description="Write dataset_NNN.json for each repeat and tone_cal.json (ENBW trace).")
    _add_run_flags(p)
    _add_out(p, "config output_dir")

    p = sub.add_parser("enbw", help="equivalent noise bandwidth from tone trace files", formatter_class=_formatter,
                       description="Fit the ENBW of the analyzer filter from one or more tone traces; "
                                   "writes enbw.json.")
    p.add_argument("traces", nargs="+", metavar="TRACE", help="tone trace JSON file(s), e.g. tone_cal.json")
    p.add_argument("--rbw-hz", type=float, metavar="HZ", help="nominal RBW (default: from the trace file)")
    p.add_argument("--type-b-rel", type=float, default=DEFAULT_ENBW_REL_U, metavar="REL",
                   help=f"relative uncertainty for a single trace (default: {DEFAULT_ENBW_REL_U})")
    _add_out(p, "directory of the first trace")

    p = sub.add_parser("estimate", help="efficiency estimate from dataset files", formatter_class=_formatter,
                       description="Pool the given acquisitions into one efficiency estimate.\nThe ENBW comes "
                                   "from --enbw, --enbw-hz or a tone_cal.json next to the first dataset.")
    p.add_argument("datasets", nargs="+", metavar="DATASET", help="dataset JSON file(s) taken at one setting")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--enbw", metavar="FILE", help="enbw.json result or tone trace file (default: tone_cal.json beside the data)")
    g.add_argument("--enbw-hz", type=float, metavar="HZ",
                   help=f"ENBW in Hz, given a {DEFAULT_ENBW_REL_U * 100:.1f}%% Type-B uncertainty (default: none)")
    p.add_argument("--config", metavar="PATH", help="JSON configuration for the analysis section (default: built-in)")
    _add_k(p)
    _add_out(p, "none, print only")

    p = sub.add_parser("validate", help="simulate, estimate and compare with the ground truth",
                       formatter_class=_formatter, description="Round-trip report with the normalized error E_n.")
    _add_run_flags(p)
    _add_k(p)
    _add_out(p, "none, print only")

    p = sub.add_parser("sweep", help="run a power, attenuation or IF sweep", formatter_class=_formatter,
                       description="Writes sweep.csv and sweep.json.")
    _add_run_flags(p)
    _add_k(p)
    p.add_argument("--axis", choices=SWEEP_AXES, help="sweep axis (default: config sweep.axis)")
    p.add_argument("--points", type=float, nargs="+", metavar="X", help="axis values (default: config sweep.points)")
    _add_out(p, "config output_dir")

    p = sub.add_parser("budget", help="combine relative uncertainty components", formatter_class=_formatter,
                       description="Quadrature sum of the relative standard uncertainties of the estimate.")
    p.add_argument("--rel-p-alpha", type=float, default=0.0075, metavar="REL",
                   help="signal power (default: 0.0075)")
    p.add_argument("--rel-enbw", type=float, default=0.003, metavar="REL", help="ENBW (default: 0.003)")
    p.add_argument("--rel-x", type=float, default=0.0, metavar="REL", help="spectral ratio (default: 0)")
    p.add_argument("--type-b-rel", type=float, default=DEFAULT_TYPE_B_REL, metavar="REL",
                   help=f"shot-noise approximation (default: {DEFAULT_TYPE_B_REL})")
    p.add_argument("--eta", type=float, metavar="VALUE", help="efficiency to express absolute uncertainties for (default: none)")
    p.add_argument("--k", type=float, default=2.0, metavar="FACTOR", help="coverage factor (default: 2)")
    _add_out(p, "none, print only")
    return parser


def _config(args) -> CliConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else default_config()
    for name in ("repeats", "seed"):
        v = getattr(args, name, None)
        if v is not None and v < (1 if name == "repeats" else 0):
            raise UsageError(f"--{name} must be >= {1 if name == 'repeats' else 0}")
    k = getattr(args, "k", None)
    if k is not None and not k > 0:
        raise UsageError("--k must be positive")
    return cfg.with_overrides(
        seed=getattr(args, "seed", None),
        repeats=getattr(args, "repeats", None),
        deterministic=getattr(args, "deterministic", False),
        k=k,
        output_dir=getattr(args, "out", None),
    )


def _emit(text):
    sys.stdout.write(text)
    sys.stdout.flush()


def _fmt_estimate(est) -> str:
    e = est.eta
    lines = [
        f"eta = {e.value:.6f} +- {est.expanded_u:.6f} (k={est.k:g}; u = {e.u_std:.6f}, {e.rel:.3%} rel)",
        f"X = {est.x_ratio.value:.6g}  P_alpha = {est.p_alpha_w.value:.6g} W  ENBW = {est.enbw_hz.value:.6g} Hz",
    ]
    lines += _budget_lines(est.budget, est.k)
    return "\n".join(lines) + "\n"


_BUDGET_LABELS = (
    ("rel_p_alpha", "signal power P_alpha"),
    ("rel_enbw", "ENBW"),
    ("rel_x", "spectral ratio X"),
    ("rel_type_b", "shot-noise approx. (B)"),
)


def _budget_lines(budget, k, eta=None):
    total = propagate_uncertainty([budget[key] for key, _ in _BUDGET_LABELS])
    head = f"{'component':<26}{'relative u':>14}"
    if eta is not None:
        head += f"{'absolute u':>14}"
    out = [head]
    rows = [(label, budget[key]) for key, label in _BUDGET_LABELS]
    rows += [("combined (k=1)", total), (f"expanded (k={k:g})", k * total)]
    for label, rel in rows:
        line = f"{label:<26}{rel:>13.6%} "
        if eta is not None:
            line += f"{rel * eta:>14.6g}"
        out.append(line.rstrip())
    return out


def cmd_simulate(args):
    cfg = _config(args)
    sc, out = cfg.scenario, Path(cfg.output_dir)
    datasets = run_protocol(sc)
    for i, ds in enumerate(datasets):
        persist_dataset(ds, out / f"dataset_{i:03d}.json")
    write_atomic(out / "tone_cal.json", dumps(tone_trace_to_dict(tone_cal_trace(sc), sc.esa, sc.fields.if_hz)))
    _emit(f"wrote {len(datasets)} dataset(s) and tone_cal.json to {out}\n")


def _load_trace(path):
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return doc, trace_from_dict(doc)


def _enbw_from_traces(paths, rbw_hz, type_b_rel):
    traces, ref = [], None
    for path in paths:
        doc, trace = _load_trace(path)
        esa = doc.get("esa") or {}
        if rbw_hz is None:
            rbw_hz = esa.get("rbw_hz")
        ref = esa.get("reference_power", 1.0) if ref is None else ref
        traces.append(trace)
    if rbw_hz is None:
        raise UsageError("trace files carry no RBW; pass --rbw-hz")
    return compute_enbw(traces, float(rbw_hz), reference_power=float(ref), type_b_rel=type_b_rel)


def _enbw_doc(res: EnbwResult):
    return {"schema_version": SCHEMA_VERSION, "kind": "enbw_result", **res.to_dict()}


def cmd_enbw(args):
    res = _enbw_from_traces(args.traces, args.rbw_hz, args.type_b_rel)
    out = Path(args.out) if args.out else Path(args.traces[0]).parent
    write_atomic(out / "enbw.json", dumps(_enbw_doc(res)))
    u = res.enbw_hz
    _emit(f"ENBW = {u.value / 1e6:.6f} MHz +- {u.u_std / 1e6:.6f} MHz ({u.kind}, k=1)  ENBW/RBW = {res.ratio:.5f}\n")


def _resolve_enbw(args, first_dataset, type_b_rel):
    if args.enbw_hz is not None:
        if not args.enbw_hz > 0:
            raise UsageError("--enbw-hz must be positive")
        return float(args.enbw_hz)
    path = args.enbw
    if path is None:
        candidate = Path(first_dataset).parent / "tone_cal.json"
        if not candidate.exists():
            raise UsageError("no ENBW given: pass --enbw FILE or --enbw-hz HZ "
                             f"(no tone_cal.json next to {first_dataset})")
        path = candidate
    doc = read_json(path)
    if isinstance(doc, dict) and doc.get("kind") == "enbw_result":
        try:
            return EnbwResult.from_dict(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: invalid enbw_result document ({exc})") from None
    return _enbw_from_traces([path], None, type_b_rel)


def cmd_estimate(args):
    cfg = _config(args)
    settings = cfg.scenario.analysis
    datasets = check_datasets([str(p) for p in args.datasets])
    enbw = _resolve_enbw(args, args.datasets[0], settings.enbw_type_b_rel)
    est = analyze(datasets, settings, enbw)
    text = _fmt_estimate(est)
    if args.out:
        doc = {"schema_version": SCHEMA_VERSION, "kind": "efficiency_estimate",
               "n_datasets": len(datasets), **est.to_dict()}
        write_atomic(Path(args.out) / "estimate.json", dumps(doc))
    _emit(text)


def cmd_validate(args):
    cfg = _config(args)
    report = validate_scenario(cfg.scenario)
    verdict = "agree" if report["agree"] else "DISAGREE"
    text = (
        f"eta_est = {report['eta']:.6f} +- {report['expanded_u']:.6f} (k={report['k']:g})\n"
        f"eta_true = {report['eta_true']:.6f}  rel_error = {report['rel_error']:.3e}\n"
        f"E_n = {report['e_n']:.4f} ({verdict})  ENBW = {report['enbw_hz']:.6g} Hz  repeats = {report['n_repeats']}\n"
    )
    if args.out:
        doc = {"schema_version": SCHEMA_VERSION, "kind": "validation_report", **report}
        write_atomic(Path(args.out) / "validate.json", dumps(doc))
    _emit(text)


def cmd_sweep(args):
    cfg = _config(args)
    if args.axis is not None or args.points is not None:
        if args.axis is None or args.points is None:
            raise UsageError("--axis and --points go together")
        cfg = CliConfig(cfg.scenario, args.axis, tuple(args.points), cfg.output_dir, cfg.verbosity)
    report = run_sweep(cfg.sweep_spec())
    out = Path(cfg.output_dir)
    write_atomic(out / "sweep.csv", report.to_csv())
    write_atomic(out / "sweep.json", report.to_json())
    s = report.summary
    lines = [f"{'axis_value':>12} {'eta':>10} {'U(k=2)':>10} {'eta_true':>10} {'E_n':>7}"]
    for r in report.rows:
        lines.append(f"{r.axis_value:>12.4g} {r.estimate.eta.value:>10.6f} {2 * r.estimate.eta.u_std:>10.6f} "
                     f"{r.eta_true:>10.6f} {r.e_n:>7.3f}")
    lines.append(f"mean eta {s['mean_eta']:.6f}  spread {s['spread']:.3g}  mean U {s['mean_expanded_u']:.3g}  "
                 f"{s['fit']} slope {s['slope']:.5g} +- {s['slope_u']:.2g}  max E_n {s['max_e_n']:.3f}")
    lines.append(f"wrote sweep.csv and sweep.json to {out}")
    _emit("\n".join(lines) + "\n")


def cmd_budget(args):
    comps = {"rel_p_alpha": args.rel_p_alpha, "rel_enbw": args.rel_enbw,
             "rel_x": args.rel_x, "rel_type_b": args.type_b_rel}
    for name, v in comps.items():
        if not v >= 0:
            raise UsageError(f"{name} must be non-negative")
    if not args.k > 0:
        raise UsageError("--k must be positive")
    text = "\n".join(_budget_lines(comps, args.k, args.eta)) + "\n"
    if args.out:
        total = propagate_uncertainty(comps.values())
        doc = {"schema_version": SCHEMA_VERSION, "kind": "uncertainty_budget", "components": comps,
               "combined_rel": total, "k": args.k, "expanded_rel": args.k * total}
        if args.eta is not None:
            doc["eta"] = args.eta
        write_atomic(Path(args.out) / "budget.json", dumps(doc))
    _emit(text)


COMMANDS = {
    "simulate": cmd_simulate,
    "enbw": cmd_enbw,
    "estimate": cmd_estimate,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "budget": cmd_budget,
}


def dispatch(argv=None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO,
                            format="hetcal: %(message)s", stream=sys.stderr)
    log.info("running %s", args.command)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hetcal {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AnalysisError as exc:
        print(f"hetcal {args.command}: analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (HetcalError, OSError) as exc:
        kind = "config error" if isinstance(exc, ConfigError) else "data error"
        msg = exc if not isinstance(exc, OSError) else f"{exc.filename}: {exc.strerror}"
        print(f"hetcal {args.command}: {kind}: {msg}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
