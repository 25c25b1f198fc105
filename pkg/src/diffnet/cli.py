"""Command-line front end.

Subcommands: simulate, theory, compare, sweep, validate-noise.
Exit codes: 0 ok, 1 configuration error, 2 theory instability, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import harness, noise, theory
from .errors import ConfigError, DiffnetError, UnstableSystem

CF_GRID = (0.1, 0.5, 1.0, 2.0)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _load(args) -> harness.ExperimentConfig:
    config = harness.load_config(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["base_seed"] = args.seed
    if getattr(args, "realizations", None) is not None:
        overrides["realizations"] = args.realizations
    if getattr(args, "iterations", None) is not None:
        overrides["iterations"] = args.iterations
    if getattr(args, "out", None) is not None:
        overrides["output"] = args.out
    return replace(config, **overrides) if overrides else config


def _cmd_simulate(args) -> int:
    config = _load(args)
    if not config.output:
        raise ConfigError("simulate needs an output path (--out or 'output' in the config)")
    result = harness.run_experiment(config)
    for label in result.labels:
        note = f" ({result.diverged[label]}/{result.realizations} diverged)" if result.diverged[label] else ""
        print(f"{label}: steady-state MSD {result.steady_state_msd_db(label):.2f} dB{note}")
    print(f"wrote {config.output} in {result.wall_time_s:.1f}s")
    return 0


def _theory_curves(config: harness.ExperimentConfig):
    inputs = harness.theory_inputs_from_config(config)
    moments = theory.build_moments(inputs)
    steady = theory.steady_state_metrics(moments)
    curves = theory.transient_curves(moments, n_max=config.iterations)
    return curves, steady


def _cmd_theory(args) -> int:
    config = _load(args)
    if not config.output:
        raise ConfigError("theory needs an output path (--out or 'output' in the config)")
    curves, steady = _theory_curves(config)
    harness.export_theory_csv(curves, steady, config.output)
    print(f"steady-state MSD {theory.to_db(steady.steady_network_msd):.2f} dB, "
          f"EMSE {theory.to_db(steady.steady_network_emse):.2f} dB")
    print(f"wrote {config.output}")
    return 0


def _cmd_compare(args) -> int:
    config = _load(args)
    if not config.output:
        raise ConfigError("compare needs an output path (--out or 'output' in the config)")
    out_path = config.output
    result = harness.run_experiment(replace(config, output=None))
    theory_curve = None
    if config.npdlms_spec() is not None and all(
        isinstance(ns, noise.Gaussian) for ns in config.noise_specs
    ):
        curves, steady = _theory_curves(config)
        theory_curve = theory.to_db(curves.network_msd)
        print(f"theory steady-state MSD {theory.to_db(steady.steady_network_msd):.2f} dB")
    header = "iteration," + ",".join(f"{label}_msd_db" for label in result.labels)
    if theory_curve is not None:
        header += ",theory_msd_db"
    lines = [header]
    for t in range(result.iterations):
        row = [str(t + 1)] + [_fmt(result.network_msd_db(label)[t]) for label in result.labels]
        if theory_curve is not None:
            row.append(_fmt(theory_curve[t + 1]))
        lines.append(",".join(row))
    with open(out_path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    for label in result.labels:
        print(f"{label}: steady-state MSD {result.steady_state_msd_db(label):.2f} dB")
    print(f"wrote {out_path}")
    return 0


def _cmd_sweep(args) -> int:
    config = _load(args)
    if not config.output:
        raise ConfigError("sweep needs an output path (--out or 'output' in the config)")
    values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    if not values:
        raise ConfigError("--values must list at least one number")
    results = harness.sweep(replace(config, output=None), args.param, values)
    harness.export_sweep_csv(values, results, config.output)
    npdlms_label = config.npdlms_spec().label
    for value, result in zip(values, results):
        kappa = result.kappa_mean(npdlms_label)
        print(f"{args.param}={value:g}: kappa={kappa:.1f}, "
              f"steady-state MSD {result.steady_state_msd_db(npdlms_label):.2f} dB")
    print(f"wrote {config.output}")
    return 0


def _cmd_validate_noise(args) -> int:
    parts = [float(x) for x in args.spec.split(",")]
    if len(parts) != 4:
        raise ConfigError("--spec must be 'alpha,beta,gamma,delta'")
    spec = noise.AlphaStable(*parts)
    rng = np.random.default_rng(args.seed)
    samples = noise.sample(spec, rng, int(args.samples))
    lines = ["t,re_emp,im_emp,re_theory,im_theory"]
    for t in CF_GRID:
        emp = noise.empirical_characteristic_function(samples, t)
        ref = noise.characteristic_function(spec, t)
        lines.append(",".join([_fmt(t), _fmt(emp.real), _fmt(emp.imag), _fmt(ref.real), _fmt(ref.imag)]))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_run_overrides=True):
        p.add_argument("--config", required=True, help="YAML experiment configuration")
        p.add_argument("--out", help="output CSV path (overrides 'output' in the config)")
        if with_run_overrides:
            p.add_argument("--seed", type=int, help="override base_seed")
            p.add_argument("--realizations", type=int, help="override realization count")
            p.add_argument("--iterations", type=int, help="override iteration count")

    p = sub.add_parser("simulate", help="run the configured algorithms, export MSD curves")
    add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("theory", help="closed-form MSD/EMSE predictions")
    add_common(p)
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("compare", help="simulate plus theory overlay where applicable")
    add_common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("sweep", help="sweep one kernel-MAP parameter")
    add_common(p)
    p.add_argument("--param", required=True, choices=harness.SWEEPABLE)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate-noise", help="empirical vs closed-form characteristic function")
    p.add_argument("--spec", required=True, help="alpha,beta,gamma,delta")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(func=_cmd_validate_noise)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnstableSystem as exc:
        print(f"theory instability: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except DiffnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
