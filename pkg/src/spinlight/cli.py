"""Command-line front end.

Subcommands::

    spinlight derive      --config run.cfg        channel coefficients + regime checks
    spinlight entangle    --config run.cfg        two-round entanglement generation
    spinlight teleport    --config run.cfg        entangle + local Bell + displacement
    spinlight sweep       --config run.cfg        kappa2 / eta_t trade-off table
    spinlight mb-validate --config run.cfg        grid convergence of the channel

Common flags: ``--config PATH`` (required), ``--seed N``, ``--trials N``,
``--out PATH``, ``--format {json,csv}``.  Flags override ``SPINLIGHT_*``
environment variables, which override the file.

Exit codes: 0 success; 1 usage or configuration error; 2 regime warnings from
``derive``; 3 tolerance failure in ``mb-validate``.

Every artifact embeds the fully resolved configuration and the seed, floats
are emitted with 17 significant digits, and per-trial RNG streams are derived
as ``seed XOR trial_index``, so identical (config, seed) pairs give
byte-identical artifacts no matter how trials are scheduled.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .config import (
    ConfigError,
    apply_env_overrides,
    parse_config_text,
    resolve_run_config,
)
from .interaction import derive_channel, validate_regime
from .maxwell_bloch import Grid, build_transfer, extract_collective
from .protocols import (
    classical_bound_check,
    entangle,
    fidelity_ideal,
    fidelity_lossy,
    lossy_fidelity_sweep,
    optimal_kappa2,
    squeezing_parameter,
    teleport,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REGIME_WARNING = 2
EXIT_TOLERANCE_FAILURE = 3


def _fmt(value):
    """Text form of one scalar; floats carry 17 significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_text(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(str(k))}: {_json_text(v, indent + 1)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {_json_text(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    return json.dumps(str(obj))


def _csv_text(echo, header, rows):
    lines = [f"# {key} = {_fmt(value)}" for key, value in echo.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(cell) for cell in row))
    return "\n".join(lines) + "\n"


def _emit(args, text):
    if args.out:
        with open(args.out, "w", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _trial_seed(seed, trial):
    """Documented per-trial splitting rule: seed XOR trial index."""
    return seed ^ trial


def _record_rows(records):
    return [
        {"round_tag": rec.round_tag, "mode": rec.mode.index,
         "quadrature": rec.quadrature, "outcome": rec.outcome}
        for rec in records
    ]


# ---------------------------------------------------------------------------
# subcommands


def _cmd_derive(cfg, args):
    if cfg.physical is None:
        raise ConfigError("physical", "derive needs the physical.* section")
    channel = derive_channel(cfg.physical)
    report = validate_regime(cfg.physical, channel)
    payload = {
        "command": "derive",
        "kappa": channel.kappa,
        "eps_p": channel.eps_p,
        "eps_a": channel.eps_a,
        "kappa_identity": 2.0
        * math.sqrt(channel.eps_p * channel.eps_a)
        * cfg.physical.Delta
        / math.sqrt(cfg.physical.gamma * cfg.physical.gamma_prime)
        if cfg.physical.gamma > 0 and cfg.physical.gamma_prime > 0
        else None,
        "fresnel": report.fresnel,
        "fresnel_ok": report.fresnel_ok,
        "eps_small": report.eps_small,
        "kappa_vs_sqrt_n": report.kappa_vs_sqrt_n,
        "detuning_large": report.detuning_large,
        "jump_count_estimate": report.jump_count_estimate,
        "regime_pass": report.all_pass,
        "config": cfg.echo,
    }
    if cfg.out_format == "csv":
        header = [k for k in payload if k not in ("command", "config")]
        text = _csv_text(cfg.echo, header, [[payload[k] for k in header]])
    else:
        text = _json_text(payload) + "\n"
    _emit(args, text)
    for name in ("kappa", "eps_p", "eps_a", "fresnel"):
        print(f"{name} = {_fmt(payload[name])}")
    print("regime: " + ("PASS" if report.all_pass else "WARN"))
    return EXIT_OK if report.all_pass else EXIT_REGIME_WARNING


def _cmd_entangle(cfg, args):
    plan1, plan2 = cfg.plans["entangle1"], cfg.plans["entangle2"]
    trials = []
    for trial in range(cfg.trials):
        tseed = _trial_seed(cfg.seed, trial)
        rng = np.random.default_rng(tseed)
        _, report = entangle(plan1, plan2, rng=rng, seed=tseed, config_echo=cfg.echo)
        trials.append(report)
    base = trials[0]
    payload = {
        "command": "entangle",
        "seed": cfg.seed,
        "trials": cfg.trials,
        "epr_x": base.epr_x,
        "epr_p": base.epr_p,
        "r": base.r,
        "r_closed_form": squeezing_parameter(plan2.kappa),
        "records": [
            {"trial": i, "outcomes": _record_rows(rep.records)}
            for i, rep in enumerate(trials)
        ],
        "config": cfg.echo,
    }
    if cfg.trials > 1:
        outcomes = np.array(
            [[rec.outcome for rec in rep.records] for rep in trials]
        )
        payload["monte_carlo"] = {
            "round1_mean": float(outcomes[:, 0].mean()),
            "round1_var": float(outcomes[:, 0].var(ddof=1)),
            "round2_mean": float(outcomes[:, 1].mean()),
            "round2_var": float(outcomes[:, 1].var(ddof=1)),
        }
    if cfg.out_format == "csv":
        header = ["trial", "outcome_round1", "outcome_round2", "epr_x", "epr_p", "r"]
        rows = [
            [i, rep.records[0].outcome, rep.records[1].outcome,
             rep.epr_x, rep.epr_p, rep.r]
            for i, rep in enumerate(trials)
        ]
        text = _csv_text(cfg.echo, header, rows)
    else:
        text = _json_text(payload) + "\n"
    _emit(args, text)
    print(f"epr_x = {_fmt(base.epr_x)}")
    print(f"epr_p = {_fmt(base.epr_p)}")
    print(f"r = {_fmt(base.r)}")
    return EXIT_OK


def _cmd_teleport(cfg, args):
    plans = cfg.plans
    kappa2 = plans["entangle2"].kappa
    trials = []
    for trial in range(cfg.trials):
        tseed = _trial_seed(cfg.seed, trial)
        rng = np.random.default_rng(tseed)
        ent_state, ent_rep = entangle(
            plans["entangle1"], plans["entangle2"], rng=rng, seed=tseed
        )
        _, rep = teleport(
            ent_state,
            cfg.input_mean,
            plans["local1"],
            plans["local2"],
            gain=cfg.gain,
            rng=rng,
            seed=tseed,
        )
        trials.append((ent_rep, rep))
    fidelity = trials[0][1].fidelity
    payload = {
        "command": "teleport",
        "seed": cfg.seed,
        "trials": cfg.trials,
        "fidelity_simulated": fidelity,
        "fidelity_ideal_closed_form": fidelity_ideal(kappa2) if kappa2 > 0 else None,
        "fidelity_lossy_closed_form": fidelity_lossy(kappa2, cfg.eta_t)
        if kappa2 > 0
        else None,
        "classical_bound_exceeded": classical_bound_check(fidelity),
        "epr_x": trials[0][1].epr_x,
        "epr_p": trials[0][1].epr_p,
        "r": trials[0][1].r,
        "input_mean": list(cfg.input_mean),
        "records": [
            {
                "trial": i,
                "outcomes": _record_rows(ent.records) + _record_rows(tel.records),
            }
            for i, (ent, tel) in enumerate(trials)
        ],
        "config": cfg.echo,
    }
    if cfg.out_format == "csv":
        header = ["trial", "fidelity_simulated", "fidelity_ideal_closed_form",
                  "fidelity_lossy_closed_form", "classical_bound_exceeded"]
        rows = [
            [i, tel.fidelity, payload["fidelity_ideal_closed_form"],
             payload["fidelity_lossy_closed_form"],
             classical_bound_check(tel.fidelity)]
            for i, (_, tel) in enumerate(trials)
        ]
        text = _csv_text(cfg.echo, header, rows)
    else:
        text = _json_text(payload) + "\n"
    _emit(args, text)
    print(f"fidelity = {_fmt(fidelity)}")
    print(f"classical bound exceeded: {_fmt(payload['classical_bound_exceeded'])}")
    return EXIT_OK


def _cmd_sweep(cfg, args):
    if cfg.sweep is None:
        raise ConfigError("sweep.min", "sweep needs a sweep.* section")
    points = lossy_fidelity_sweep(
        cfg.sweep.values(),
        cfg.eta_t,
        kappa1_multiplier=cfg.kappa1_multiplier,
        eps_p=cfg.channel.eps_p,
        eps_a=cfg.channel.eps_a,
        eta_d=cfg.eta_d,
        eta_t_local=cfg.eta_t_local,
    )
    header = ["kappa2", "eta_t", "f_simulated", "f_closed_form", "is_argmax"]
    rows = [
        [pt.kappa2, pt.eta_t, pt.f_simulated, pt.f_closed_form, pt.is_argmax]
        for pt in points
    ]
    if cfg.out_format == "json":
        payload = {
            "command": "sweep",
            "seed": cfg.seed,
            "eta_t": cfg.eta_t,
            "kappa2_optimal_closed_form": optimal_kappa2(cfg.eta_t)
            if cfg.eta_t > 0
            else None,
            "points": [dict(zip(header, row)) for row in rows],
            "config": cfg.echo,
        }
        text = _json_text(payload) + "\n"
    else:
        text = _csv_text(cfg.echo, header, rows)
    _emit(args, text)
    best = next(pt for pt in points if pt.is_argmax)
    print(f"argmax kappa2 = {_fmt(best.kappa2)} (f = {_fmt(best.f_simulated)})")
    return EXIT_OK


def _cmd_mb_validate(cfg, args):
    if cfg.physical is None:
        raise ConfigError("physical", "mb-validate needs the physical.* section")
    channel = derive_channel(cfg.physical)
    header = [
        "grid", "kappa_eff", "eps_p_eff", "eps_a_eff",
        "dev_kappa", "dev_eps_p", "dev_eps_a",
        "signal_leak", "noise_var_light_x", "noise_var_atom_x",
    ]
    rows = []
    for size in cfg.mb.grids():
        grid = Grid(n_z=size, n_tau=size, L=cfg.physical.L, T=cfg.physical.T)
        extraction = extract_collective(build_transfer(cfg.physical, grid))
        dev_kappa = abs(extraction.kappa_eff - channel.kappa) / channel.kappa
        dev_eps_p = (
            abs(extraction.eps_p_eff - channel.eps_p) / channel.eps_p
            if channel.eps_p > 0
            else extraction.eps_p_eff
        )
        dev_eps_a = (
            abs(extraction.eps_a_eff - channel.eps_a) / channel.eps_a
            if channel.eps_a > 0
            else extraction.eps_a_eff
        )
        rows.append([
            size, extraction.kappa_eff, extraction.eps_p_eff, extraction.eps_a_eff,
            dev_kappa, dev_eps_p, dev_eps_a,
            extraction.signal_leak, extraction.noise_var_light_x,
            extraction.noise_var_atom_x,
        ])
    final = rows[-1]
    within = (
        final[4] <= cfg.mb.tol_kappa
        and final[5] <= cfg.mb.tol_eps
        and final[6] <= cfg.mb.tol_eps
    )
    if cfg.out_format == "json":
        payload = {
            "command": "mb-validate",
            "seed": cfg.seed,
            "kappa_analytic": channel.kappa,
            "eps_p_analytic": channel.eps_p,
            "eps_a_analytic": channel.eps_a,
            "rows": [dict(zip(header, row)) for row in rows],
            "within_tolerance": within,
            "config": cfg.echo,
        }
        text = _json_text(payload) + "\n"
    else:
        text = _csv_text(cfg.echo, header, rows)
    _emit(args, text)
    print(
        f"final grid {final[0]}x{final[0]}: dev_kappa = {_fmt(final[4])}, "
        f"dev_eps_p = {_fmt(final[5])}, dev_eps_a = {_fmt(final[6])}"
    )
    print("tolerance: " + ("PASS" if within else "FAIL"))
    return EXIT_OK if within else EXIT_TOLERANCE_FAILURE


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


_COMMANDS = {
    "derive": _cmd_derive,
    "entangle": _cmd_entangle,
    "teleport": _cmd_teleport,
    "sweep": _cmd_sweep,
    "mb-validate": _cmd_mb_validate,
}


def _build_parser():
    parser = _Parser(prog="spinlight", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to the run config file")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--trials", type=int, default=None)
        cmd.add_argument("--out", default=None)
        cmd.add_argument("--format", choices=("json", "csv"), default=None)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE

    try:
        with open(args.config) as handle:
            mapping = parse_config_text(handle.read())
        mapping = apply_env_overrides(mapping, os.environ)
        if args.seed is not None:
            mapping["seed"] = args.seed
        if args.trials is not None:
            mapping["trials"] = args.trials
        if args.out is not None:
            mapping["output.path"] = args.out
        if args.format is not None:
            mapping["output.format"] = args.format
        cfg = resolve_run_config(mapping)
        if args.out is None and cfg.out_path is not None:
            args.out = cfg.out_path
        if args.format is None:
            args.format = cfg.out_format
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, OSError, ValueError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
