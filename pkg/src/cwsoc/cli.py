"""Experiment runner: simulate chains, evaluate the smoothing oracle,
enumerate exact distributions, print limit laws, run the acceptance suite.

Every command is a deterministic function of its effective configuration:
reruns with the same flags produce byte-identical files regardless of the
thread count. Numeric output uses shortest round-trip decimal formatting
(17 significant digits where needed). Exit codes: 0 success, 1 verification
failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .hs_oracle import (
    PartitionRatio,
    partition_limit_target,
    partition_ratio,
    smoothed_density_profile,
)
from .limit_law import make_theorem1_law, make_theorem2_law
from .measures import parse_measure
from .sampler import SamplerConfig, enumerate_exact, run_chains
from .stats import EmpiricalDistribution, batch_means, ks_statistic

_DEFAULTS = {
    "measure": "rademacher",
    "n": 400,
    "sweeps": 20_000,
    "burn_in": 1_000,
    "thin": 1,
    "chains": 2,
    "seed": 0,
    "mc_draws": 10_000,
    "z_min": -8.0,
    "z_max": 8.0,
    "z_steps": 161,
    "out": ".",
    "threads": 1,
    "criteria": "",
}

_FLAG_HELP = {
    "measure": "base measure spec: rademacher | gaussian:S | uniform:A | twopoint:X | discrete:v,p;v,p",
    "n": "number of sites",
    "sweeps": "sweeps per chain",
    "burn_in": "sweeps discarded before retention",
    "thin": "retain every thin-th sweep after burn-in",
    "chains": "number of independent chains",
    "seed": "base seed (64-bit nonnegative integer)",
    "mc_draws": "Monte Carlo draws for the smoothing oracle",
    "z_min": "left edge of the z grid",
    "z_max": "right edge of the z grid",
    "z_steps": "number of z grid points",
    "out": "output directory",
    "threads": "worker threads; outputs do not depend on this",
    "criteria": "comma-separated criterion ids to run (default: all)",
}

_FLAG_TYPE = {k: type(v) for k, v in _DEFAULTS.items()}


# -- deterministic formatting helpers ------------------------------------


def fmt(x) -> str:
    """Shortest decimal that round-trips the float exactly."""
    return repr(float(x))


def jsonify(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(jsonify(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(cells) for cells in rows)
    Path(path).write_text("\n".join(lines) + "\n")


# -- commands ------------------------------------------------------------


def cmd_simulate(cfg: dict) -> int:
    measure = parse_measure(cfg["measure"])
    sampler_cfg = SamplerConfig(
        n=cfg["n"],
        measure=measure,
        sweeps=cfg["sweeps"],
        burn_in_sweeps=cfg["burn_in"],
        thin_sweeps=cfg["thin"],
        seed=cfg["seed"],
        chains=cfg["chains"],
    )
    sampler_cfg.validate()
    runs = run_chains(sampler_cfg, threads=cfg["threads"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)

    def rows():
        for run in runs:
            for i in range(run.stat_samples.shape[0]):
                yield (
                    str(run.chain_index),
                    str(i),
                    fmt(run.stat_samples[i]),
                    fmt(run.scaled_samples[i]),
                    fmt(run.t_over_n_samples[i]),
                )

    write_csv(
        out / "samples.csv",
        "chain,index,stat_self_normalized,stat_scaled_sum,t_over_n",
        rows(),
    )

    stat = np.concatenate([r.stat_samples for r in runs])
    scaled = np.concatenate([r.scaled_samples for r in runs])
    t_over_n = np.concatenate([r.t_over_n_samples for r in runs])
    if stat.shape[0] < 100:
        raise ValueError("too few retained samples for summary moments (need >= 100)")
    ess_total = float(sum(r.ess_estimate for r in runs))
    law1 = make_theorem1_law(measure)
    law2 = make_theorem2_law(measure)

    def moment(x):
        mean, se = batch_means(x)
        return {"estimate": mean, "std_error": se}

    def ks_entry(samples, law):
        emp = EmpiricalDistribution.from_samples(samples)
        statistic = ks_statistic(emp, law.cdf)
        # 95% asymptotic Kolmogorov quantile, evaluated at the effective
        # (not nominal) sample count because the chains are autocorrelated
        threshold = 1.3581 / np.sqrt(max(ess_total, 1.0))
        return {
            "statistic": statistic,
            "ess": ess_total,
            "threshold_ks95_at_ess": float(threshold),
            "below_threshold": bool(statistic <= threshold),
        }

    summary = {
        "config": _echo(cfg, "simulate"),
        "chains": [
            {
                "chain_index": r.chain_index,
                "acceptance_rate": r.acceptance_rate,
                "ess_estimate": r.ess_estimate,
                "retained_samples": int(r.stat_samples.shape[0]),
            }
            for r in runs
        ],
        "pooled": {
            "ess_total": ess_total,
            "stat_mean": moment(stat),
            "stat_second_moment": moment(stat**2),
            "stat_fourth_moment": moment(stat**4),
            "scaled_mean": moment(scaled),
            "t_over_n_mean": moment(t_over_n),
        },
        "laws": {"theorem1": law1.to_dict(), "theorem2": law2.to_dict()},
        "ks": {
            "self_normalized_vs_theorem1": ks_entry(stat, law1),
            "scaled_sum_vs_theorem2": ks_entry(scaled, law2),
        },
    }
    write_json(out / "summary.json", summary)
    return 0


def cmd_oracle(cfg: dict) -> int:
    measure = parse_measure(cfg["measure"])
    if cfg["z_steps"] < 3:
        raise ValueError("z_steps must be >= 3")
    if not cfg["z_min"] < cfg["z_max"]:
        raise ValueError("z_min must be below z_max")
    grid = np.linspace(cfg["z_min"], cfg["z_max"], cfg["z_steps"])
    rng = np.random.default_rng(cfg["seed"])
    prof = smoothed_density_profile(
        cfg["n"], measure, grid, cfg["mc_draws"], rng, threads=cfg["threads"]
    )
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_csv(
        out / "profile.csv",
        "z,value,std_error",
        (
            (fmt(z), fmt(v), fmt(e))
            for z, v, e in zip(prof.z_grid, prof.values, prof.std_errors)
        ),
    )
    norm, nerr = prof.normalized()
    write_csv(
        out / "profile_normalized.csv",
        "z,value,std_error",
        ((fmt(z), fmt(v), fmt(e)) for z, v, e in zip(prof.z_grid, norm, nerr)),
    )
    if cfg["n"] == 1:
        pr = partition_ratio(1, measure, 0, rng)
    else:
        pr = PartitionRatio(
            estimate=prof.integral_estimate,
            std_error=prof.integral_std_error,
            limit_target=partition_limit_target(measure),
            n=cfg["n"],
            mc_draws=cfg["mc_draws"],
            measure_name=measure.name,
        )
    write_json(
        out / "partition_ratio.json",
        {
            "estimate": pr.estimate,
            "std_error": pr.std_error,
            "limit_target": pr.limit_target,
            "n": pr.n,
            "mc_draws": pr.mc_draws,
            "measure": pr.measure_name,
            "config": _echo(cfg, "oracle"),
        },
    )
    return 0


def cmd_enumerate(cfg: dict) -> int:
    measure = parse_measure(cfg["measure"])
    values, probs = enumerate_exact(cfg["n"], measure)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_csv(
        out / "exact.csv",
        "value,probability",
        ((fmt(v), fmt(p)) for v, p in zip(values, probs)),
    )
    return 0


def cmd_limit_law(cfg: dict) -> int:
    measure = parse_measure(cfg["measure"])
    grid = np.linspace(cfg["z_min"], cfg["z_max"], cfg["z_steps"])
    laws = {
        "theorem1 (self-normalized statistic)": make_theorem1_law(measure),
        "theorem2 (scaled sum)": make_theorem2_law(measure),
    }
    print(f"measure: {measure.name}")
    probs = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)
    for title, law in laws.items():
        print(title)
        print(f"  a = {fmt(law.a)}")
        print(f"  normalization = {fmt(law.normalization)}")
        print(f"  source_theorem = {law.source_theorem}")
        print("  quantiles:")
        for p in probs:
            print(f"    p={p:<5} q={fmt(law.quantile(p))}")
    print("pdf table: z, " + ", ".join(law.source_theorem for law in laws.values()))
    law_list = list(laws.values())
    for z in grid:
        cells = ", ".join(fmt(law.pdf(float(z))) for law in law_list)
        print(f"{fmt(z)}, {cells}")
    return 0


def cmd_verify(cfg: dict) -> int:
    from . import verify

    criteria = [c.strip() for c in cfg["criteria"].split(",") if c.strip()] or None
    _, all_passed = verify.run_all(
        seed=cfg["seed"],
        threads=cfg["threads"],
        out_dir=cfg["out"],
        criteria=criteria,
    )
    return 0 if all_passed else 1


# -- argument handling ---------------------------------------------------


def _echo(cfg: dict, command: str) -> dict:
    # threads and out are execution details, not part of the result identity;
    # leaving them out keeps reruns byte-identical across thread counts
    keys = _COMMAND_FLAGS[command]
    echoed = {k: cfg[k] for k in keys if k not in ("out", "threads")}
    echoed["command"] = command
    return echoed


_COMMAND_FLAGS = {
    "simulate": ["measure", "n", "sweeps", "burn_in", "thin", "chains", "seed", "threads", "out"],
    "oracle": ["measure", "n", "mc_draws", "seed", "z_min", "z_max", "z_steps", "threads", "out"],
    "enumerate": ["measure", "n", "out"],
    "limit-law": ["measure", "z_min", "z_max", "z_steps"],
    "verify": ["seed", "threads", "criteria", "out"],
}

_COMMAND_FUNC = {
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
    "enumerate": cmd_enumerate,
    "limit-law": cmd_limit_law,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cwsoc",
        description="Curie-Weiss self-organized-criticality simulation and verification toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, flags in _COMMAND_FLAGS.items():
        sp = sub.add_parser(command, help=f"{command} command")
        for key in flags:
            sp.add_argument(
                "--" + key.replace("_", "-"),
                dest=key,
                type=str,
                default=None,
                help=_FLAG_HELP[key],
            )
        sp.add_argument(
            "--config",
            dest="config",
            type=str,
            default=None,
            help="key=value file with defaults; explicit flags override it",
        )
    return parser


def _load_config_file(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values

def _convert(key: str, value: str):
    target = _FLAG_TYPE[key]
    try:
        if target is int:
            return int(value)
        if target is float:
            return float(value)
        return value
    except ValueError as exc:
        raise ValueError(f"bad value for {key}: {value!r}") from exc


def _effective_config(args: argparse.Namespace) -> dict:
    flags = _COMMAND_FLAGS[args.command]
    file_values = _load_config_file(args.config) if args.config else {}
    unknown = set(file_values) - set(flags)
    if unknown:
        raise ValueError(f"config file sets keys not used by {args.command}: {sorted(unknown)}")
    cfg = {}
    for key in flags:
        explicit = getattr(args, key)
        if explicit is not None:
            cfg[key] = _convert(key, explicit)
        elif key in file_values:
            cfg[key] = _convert(key, file_values[key])
        else:
            cfg[key] = _DEFAULTS[key]
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _effective_config(args)
        return _COMMAND_FUNC[args.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
