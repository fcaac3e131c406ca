"""Command-line entry point.

Subcommands: synth, simulate, dosgen, validate, report. Exit codes are a
stable contract: 0 success, 2 config/schema error, 3 synthesis failure,
4 simulation divergence, 5 infeasible or inadmissible DoS; simulate also
returns 1 when the stability report records violations.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import __version__
from .diagnostics import (
    check_iss_envelope,
    format_comparison,
    summarize_transmissions,
)
from .dos import DosBudget, DosSignal, generate, validate
from .errors import (
    BudgetInfeasibleError,
    CertificateInvalidError,
    DegenerateStatsError,
    DivergenceError,
    SchemaError,
    SignalFormatError,
    SynthesisError,
    ToolkitError,
)
from .scenario import load_scenario
from .simulator import (
    DosRequest,
    TraceTable,
    build_uncertainty_sequence,
    make_event_predictor,
    resolve_certificate,
    run,
)
from .synthesis import SynthesisCertificate, compute_certificate, sweep_alpha

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_CONFIG = 2
EXIT_SYNTHESIS = 3
EXIT_DIVERGENCE = 4
EXIT_DOS = 5


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _apply_overrides(scenario, args):
    """Fold CLI flags into the scenario's config."""
    config = scenario.config
    synthesis = scenario.synthesis
    if getattr(args, "alpha", None) is not None:
        synthesis = dataclasses.replace(synthesis, alpha=args.alpha)
        config = dataclasses.replace(config, synthesis=synthesis)
    options = config.options
    if getattr(args, "mu_formula", None):
        options = dataclasses.replace(options, mu_formula=args.mu_formula)
    if getattr(args, "gamma_formula", None):
        options = dataclasses.replace(options, gamma_formula=args.gamma_formula)
    if getattr(args, "require_valid_certificate", False):
        options = dataclasses.replace(options, require_valid_certificate=True)
    config = dataclasses.replace(config, options=options)

    if getattr(args, "no_dos", False):
        config = dataclasses.replace(config, dos=None)
    elif getattr(args, "seed", None) is not None:
        if isinstance(config.dos, DosRequest):
            config = dataclasses.replace(
                config, dos=dataclasses.replace(config.dos, seed=args.seed))
        uncertainty = config.uncertainty
        if uncertainty.mode == "per-step":
            uncertainty = dataclasses.replace(uncertainty, seed=args.seed)
            config = dataclasses.replace(config, uncertainty=uncertainty)
    return dataclasses.replace(scenario, config=config, synthesis=synthesis)


def _parse_sweep(text: str):
    try:
        lo, hi, steps = text.split(":")
        return float(lo), float(hi), int(steps)
    except ValueError:
        raise SchemaError("--alpha-sweep", f"expected lo:hi:steps, got {text!r}") from None


def _out_dir(args, scenario) -> str:
    return args.out_dir or scenario.output_dir or "."


def cmd_synth(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    inputs = scenario.synthesis

    if args.alpha_sweep:
        lo, hi, steps = _parse_sweep(args.alpha_sweep)
        if scenario.reference_gains is None:
            raise SchemaError("reference_gains",
                              "--alpha-sweep needs reference_gains in the scenario")
        ref = scenario.reference_gains
        result = sweep_alpha(inputs, lo, hi, steps, ref.K, ref.L)
        print(f"alpha sweep {lo}:{hi}:{steps} -> best alpha {result.best_alpha:.6g} "
              f"(max|K - ref| = {result.best_k_error:.6g}, "
              f"max|L - ref| = {result.best_l_error:.6g})")
        inputs = dataclasses.replace(inputs, alpha=result.best_alpha)

    cert = compute_certificate(inputs,
                               mu_formula=scenario.config.options.mu_formula,
                               gamma_formula=scenario.config.options.gamma_formula)
    out = args.output or os.path.join(_out_dir(args, scenario), "certificate.json")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    cert.save(out)
    print(f"certificate written to {out}")
    print(f"  residual {cert.riccati_residual:.3e}  mu {cert.mu:.6g}  "
          f"c1 {cert.c1:.6g}  c2 {cert.c2:.6g}  Xi {cert.Xi:.6g}")
    for name, ok in cert.flags.to_dict().items():
        print(f"  {name}: {'pass' if ok else 'FAIL'}")
    if not (cert.flags.scon1 and cert.flags.scon3) and not args.allow_invalid:
        print("certificate conditions failed (use --allow-invalid to accept)",
              file=sys.stderr)
        return EXIT_SYNTHESIS
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    config = scenario.config
    out_dir = _out_dir(args, scenario)
    os.makedirs(out_dir, exist_ok=True)

    explicit_signal = config.dos if isinstance(config.dos, DosSignal) else None
    trace, cert, signal = run(config)

    budget = None
    try:
        budget = DosBudget.from_certificate(cert)
    except BudgetInfeasibleError:
        pass
    report = check_iss_envelope(trace, cert, signal, budget)
    try:
        stats = summarize_transmissions(trace)
    except DegenerateStatsError:
        stats = None

    cert.save(os.path.join(out_dir, "certificate.json"))
    signal.save(os.path.join(out_dir, "dos.json"))
    trace.save_csv(os.path.join(out_dir, "trace.csv"))
    payload = {
        "scenario": scenario.name,
        "stability": report.to_json_dict(),
        "transmissions": None if stats is None else stats.to_json_dict(),
        "zok1_violation_steps": list(trace.zok1_violation_steps),
        "certificate_flags": cert.flags.to_dict(),
    }
    _write_json(os.path.join(out_dir, "report.json"), payload)

    print(f"trace: {trace.horizon} steps, "
          f"{int(trace.transmitted.sum())} transmissions, "
          f"{int(trace.jammed.sum())} jammed events, "
          f"{int(trace.dos_active.sum())} attacked steps")
    print(f"stability: {len(report.iss_bound_violations)} envelope violations, "
          f"{len(report.lyapunov_violations)} Lyapunov violations"
          + (" (report-only)" if report.lyapunov_report_only else ""))
    print(f"outputs in {out_dir}: trace.csv report.json certificate.json dos.json")

    if explicit_signal is not None and budget is not None:
        if not validate(explicit_signal, budget).admissible:
            print("explicit DoS signal violates the certificate budget",
                  file=sys.stderr)
            return EXIT_DOS
    return EXIT_OK if report.clean else EXIT_VIOLATIONS


def cmd_dosgen(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    config = scenario.config
    cert = resolve_certificate(config)
    budget = DosBudget.from_certificate(cert)

    seed = args.seed if args.seed is not None else (
        config.dos.seed if isinstance(config.dos, DosRequest) else 0)
    style = args.style or (
        config.dos.style if isinstance(config.dos, DosRequest) else "uniform-random")
    predictor = None
    if style == "adversarial-greedy":
        delta_seq, _ = build_uncertainty_sequence(
            config.plant, config.uncertainty, config.horizon_steps,
            enforce=config.options.enforce_zok1)
        a_eff = config.plant.A[None, :, :] + delta_seq
        predictor = make_event_predictor(a_eff, config.plant.B, cert.K,
                                         cert.mu, config.x0)
    signal = generate(config.horizon_steps, budget, seed=seed, style=style,
                      event_predictor=predictor)
    out = args.output or os.path.join(_out_dir(args, scenario), "dos.json")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    signal.save(out)
    print(f"signal with {len(signal.intervals)} intervals "
          f"({signal.total_attacked()} attacked steps) written to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    signal = DosSignal.load(args.signal)
    cert = SynthesisCertificate.load(args.certificate)
    budget = DosBudget.from_certificate(cert)
    report = validate(signal, budget)
    print(f"rate bound {budget.rate_bound:.6g}, "
          f"frequency bound {budget.freq_bound:.6g}")
    print(f"worst margins: rate {report.worst_rate_margin:.6g}, "
          f"frequency {report.worst_freq_margin:.6g}")
    if report.admissible:
        print("signal is admissible")
        return EXIT_OK
    print(f"signal is INADMISSIBLE: {len(report.rate_violations)} rate and "
          f"{len(report.freq_violations)} frequency violations "
          f"(first at k={min(report.rate_violations + report.freq_violations)})")
    return EXIT_DOS


def cmd_report(args) -> int:
    table = TraceTable.from_csv(args.trace)
    period = args.sample_period or table.sample_period
    stats = summarize_transmissions(table, sample_period=period)
    print(format_comparison(stats, period))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etcdos",
        description="Event-triggered robust control under DoS attacks: "
                    "synthesis, attack-signal tooling, simulation, reporting.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True):
        p.add_argument("--out-dir", default=None,
                       help="directory for output files (default: the "
                            "scenario's output_dir, else the working directory)")
        p.add_argument("--alpha", type=float, default=None,
                       help="override the virtual-input weight")
        p.add_argument("--mu-formula", choices=["derivation", "as_printed"],
                       default=None)
        p.add_argument("--gamma-formula", choices=["derivation", "as_printed"],
                       default=None)
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override the scenario's DoS/uncertainty seed")

    p = sub.add_parser("synth", help="solve the Riccati equation, write a certificate")
    p.add_argument("scenario")
    add_common(p, seed=False)
    p.add_argument("-o", "--output", default=None, help="certificate path")
    p.add_argument("--alpha-sweep", default=None, metavar="LO:HI:STEPS",
                   help="scan alpha against the scenario's reference gains")
    p.add_argument("--allow-invalid", action="store_true",
                   help="exit 0 even when certificate conditions fail")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run the closed loop, write trace and report")
    p.add_argument("scenario")
    add_common(p)
    p.add_argument("--no-dos", action="store_true", help="run with an empty signal")
    p.add_argument("--require-valid-certificate", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dosgen", help="generate an admissible DoS signal")
    p.add_argument("scenario")
    add_common(p)
    p.add_argument("-o", "--output", default=None, help="signal path")
    p.add_argument("--style", default=None,
                   choices=["uniform-random", "burst", "adversarial-greedy"])
    p.set_defaults(func=cmd_dosgen)

    p = sub.add_parser("validate", help="check a signal against a certificate budget")
    p.add_argument("signal")
    p.add_argument("--certificate", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="Table-style transmission comparison for a trace")
    p.add_argument("trace")
    p.add_argument("--sample-period", type=float, default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetInfeasibleError, SignalFormatError) as exc:
        print(f"DoS error: {exc}", file=sys.stderr)
        return EXIT_DOS
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (SynthesisError, CertificateInvalidError) as exc:
        print(f"synthesis error: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATIONS


if __name__ == "__main__":
    sys.exit(main())
