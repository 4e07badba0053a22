"""Command-line subcommands."""
import argparse
import dataclasses
import glob
import json
import os
from typing import Any

import numpy as np

import volrank
from volrank import detalg, limitlaw
from volrank.harness.ingest import ingest_csv
from volrank.harness.report import (
    write_blocks_csv,
    write_json,
    write_spot_csv,
    write_study_outputs,
)
from volrank.harness.study import run_study, study_config_from_dict, study_hash
from volrank.itosim import load_npz, save_npz, scenario, simulate, write_csv, write_sidecar
from volrank.models import (
    EXIT_DEGENERATE,
    EXIT_OK,
    ConfigError,
    LimitInput,
    PathSample,
    PerturbationConfig,
)
from volrank.ranktest import analyze_path
from volrank.util import Stream, config_hash, derive_int_seed, get_logger

_LOGGER = get_logger("cli")

# flags that change where or how fast results are written, never their content
_RUNTIME_FLAGS = frozenset(("handler", "seed_given", "out", "threads", "debug", "format"))


def provenance(args: argparse.Namespace, **seeds: Any) -> dict[str, Any]:
    """Tool version, the command configuration, its hash and the seeds used."""
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _RUNTIME_FLAGS}
    return {
        "version": volrank.__version__,
        "config_hash": config_hash(config),
        "config": config,
        "seeds": seeds,
    }


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(pairs: list[str] | None) -> dict[str, Any]:
    params: dict[str, Any] = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param expects KEY=VALUE, got {pair!r}")
        params[key.strip()] = _parse_value(value)
    return params


def _theta(text: str | None) -> Any:
    if text is None:
        return None
    try:
        return np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError) as err:
        raise ConfigError(f"--theta must be a JSON matrix, got {text!r}") from err


def _read_json(filename: str) -> Any:
    try:
        with open(filename, encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read {filename}: {err}") from err


def _load_paths(target: str, delta_n: float | None) -> list[tuple[str, PathSample]]:
    if os.path.isdir(target):
        files = sorted(glob.glob(os.path.join(target, "*.csv")))
        files += sorted(glob.glob(os.path.join(target, "*.npz")))
    else:
        files = [target]
    if not files:
        raise ConfigError(f"no path files in {target}")
    loaded = []
    for filename in files:
        if not os.path.exists(filename):
            raise ConfigError(f"{filename} does not exist")
        stem = os.path.splitext(os.path.basename(filename))[0]
        if filename.endswith(".npz"):
            loaded.append((stem, load_npz(filename)))
        else:
            loaded.append((stem, ingest_csv(filename, delta_n)))
    return loaded


def cmd_simulate(args: argparse.Namespace) -> int:
    params = _params(args.param)
    for name in ("d", "q", "r"):
        if getattr(args, name) is not None:
            params[name] = getattr(args, name)
    delta_n = args.T / args.n
    model = scenario(args.scenario, t_max=args.T, fine_step=delta_n / args.refine, **params)
    for index in range(args.paths):
        seed = derive_int_seed(args.seed, Stream.PATH, index)
        path = simulate(model, args.T, delta_n, args.refine, seed, args.latent)
        base = os.path.join(args.out, f"{args.scenario}_{index:04d}")
        extra = {"provenance": provenance(args, path=seed)}
        if args.latent:
            save_npz(path, base, extra)
        else:
            write_csv(path, f"{base}.csv")
            write_sidecar(path, base, extra)
    return EXIT_OK


def _perturbation(args: argparse.Namespace) -> PerturbationConfig:
    seed = args.seed if args.wprime_seed is None else args.wprime_seed
    return PerturbationConfig(theta=_theta(args.theta), seed_wprime=seed)


def cmd_test_rank(args: argparse.Namespace) -> int:
    cfg = _perturbation(args)
    for stem, path in _load_paths(args.path, args.delta_n):
        analysis = analyze_path(
            path, cfg, args.hypothesis or (), args.alpha or (0.05,), const_rank=False
        )
        write_json(
            {
                "provenance": provenance(args, path=path.seed, wprime=cfg.seed_wprime),
                "path": path.metadata(),
                "seed_wprime": cfg.seed_wprime,
                "report": analysis.rank,
            },
            os.path.join(args.out, f"{stem}.rank.json"),
        )
        if args.format == "csv":
            write_blocks_csv(analysis.blocks, os.path.join(args.out, f"{stem}.blocks.csv"))
        _LOGGER.info(f"{stem}: R_hat={analysis.rank.r_hat:.6f}, V={analysis.rank.v_feasible:.6g}")
    return EXIT_OK


def _kn(text: str) -> int | None:
    if text == "auto":
        return None
    try:
        return int(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from err


def cmd_test_const_rank(args: argparse.Namespace) -> int:
    cfg = _perturbation(args)
    for stem, path in _load_paths(args.path, args.delta_n):
        analysis = analyze_path(path, cfg, (), args.alpha or (0.05,), args.p, args.kn)
        assert analysis.const_rank is not None
        write_json(
            {
                "provenance": provenance(args, path=path.seed, wprime=cfg.seed_wprime),
                "path": path.metadata(),
                "seed_wprime": cfg.seed_wprime,
                "report": analysis.const_rank,
            },
            os.path.join(args.out, f"{stem}.const_rank.json"),
        )
        if args.format == "csv":
            write_spot_csv(analysis.const_rank.spot, os.path.join(args.out, f"{stem}.spot.csv"))
        _LOGGER.info(f"{stem}: B={analysis.const_rank.b_stat:.6g}, Z={analysis.const_rank.z_stat:.6g}")
    return EXIT_OK


def cmd_gamma_mc(args: argparse.Namespace) -> int:
    data = _read_json(args.input)
    u = LimitInput.from_dict(data)
    r = args.r if args.r is not None else int(data.get("r", u.d))
    estimate = limitlaw.estimate_gamma(u, r, args.samples, args.substeps, args.seed, args.threads)
    output: dict[str, Any] = {
        "provenance": provenance(args, mc=args.seed),
        "input": u.asdict(),
        "estimate": estimate,
    }
    if args.ks:
        statistic, pvalue = limitlaw.law_equality_ks(
            u, r, args.samples, args.substeps, args.seed, args.threads
        )
        output["law_equality_ks"] = {"statistic": statistic, "pvalue": pvalue}
    write_json(output, os.path.join(args.out, "gamma.json"))
    return EXIT_OK


def cmd_mc_study(args: argparse.Namespace) -> int:
    data = _read_json(args.config)
    if not isinstance(data, dict):
        raise ConfigError(f"{args.config} must hold a JSON object")
    if args.seed_given:
        data["master_seed"] = args.seed
    config = study_config_from_dict(data)
    out_dir = config.out_dir or os.path.join(args.out, f"study_{study_hash(config)}")
    result = run_study(config, threads=args.threads)
    write_study_outputs(result, out_dir)
    return EXIT_OK


def cmd_oracle_det(args: argparse.Namespace) -> int:
    report = detalg.oracle_suite(args.cases, args.seed, args.max_dim)
    write_json(
        {
            "provenance": provenance(args, oracle=args.seed),
            **dataclasses.asdict(report),
            "passed": report.passed,
        },
        os.path.join(args.out, "oracle_det.json"),
    )
    return EXIT_OK if report.passed else EXIT_DEGENERATE


def _add_path_inputs(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--path", required=True, help="path file (.csv, .npz) or directory")
    sub.add_argument("--delta-n", type=float, default=None, help="grid step of CSV input")
    sub.add_argument("--theta", default=None, help="perturbation matrix as JSON")
    sub.add_argument("--wprime-seed", type=int, default=None, help="seed of W' (default --seed)")
    sub.add_argument("--alpha", type=float, action="append", help="test level (repeatable)")


def _add_global_flags(parser: argparse.ArgumentParser, suppress: bool = False) -> None:
    def default(value: Any) -> Any:
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(None), help="master seed (default 0)")
    parser.add_argument(
        "--threads", type=int, default=default(volrank.threads), help="worker threads"
    )
    parser.add_argument("--out", default=default(volrank.out_dir), help="output directory")
    parser.add_argument("--format", choices=("json", "csv"), default=default("json"))
    parser.add_argument(
        "--debug", action="store_true", default=default(False), help="enable debug logs"
    )


def build_parser() -> argparse.ArgumentParser:
    """Global flags are accepted before or after the subcommand."""
    parser = argparse.ArgumentParser(prog="volrank", description=volrank.__doc__)
    _add_global_flags(parser)
    common = argparse.ArgumentParser(add_help=False)
    _add_global_flags(common, suppress=True)
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("simulate", parents=[common], help="simulate paths of a scenario")
    sub.add_argument("--scenario", required=True)
    sub.add_argument("--d", type=int, default=None)
    sub.add_argument("--q", type=int, default=None)
    sub.add_argument("--r", type=int, default=None)
    sub.add_argument("--n", type=int, default=20000, help="observations in [0, T]")
    sub.add_argument("--T", type=float, default=1.0, help="horizon")
    sub.add_argument("--refine", type=int, default=8, help="Euler substeps per observation")
    sub.add_argument("--paths", type=int, default=1)
    sub.add_argument("--latent", action="store_true", help="keep coefficient paths (npz)")
    sub.add_argument("--param", action="append", help="scenario parameter KEY=VALUE")
    sub.set_defaults(handler=cmd_simulate)

    sub = subs.add_parser(
        "test-rank", parents=[common], help="maximal-rank test on observed paths"
    )
    _add_path_inputs(sub)
    sub.add_argument("--hypothesis", action="append", help="'=r', '<=r' or '>=r'")
    sub.set_defaults(handler=cmd_test_rank)

    sub = subs.add_parser(
        "test-const-rank", parents=[common], help="constant-rank test on observed paths"
    )
    _add_path_inputs(sub)
    sub.add_argument("--p", type=float, default=1.0, help="power of the spot ranks")
    sub.add_argument("--kn", type=_kn, default=None, help="window length in blocks or 'auto'")
    sub.set_defaults(handler=cmd_test_const_rank)

    sub = subs.add_parser(
        "gamma-mc", parents=[common], help="Monte Carlo Gamma_r at a limit input"
    )
    sub.add_argument("--input", required=True, help="JSON with alpha, beta, gamma, a")
    sub.add_argument("--r", type=int, default=None)
    sub.add_argument("--samples", type=int, default=20000)
    sub.add_argument("--substeps", type=int, default=512)
    sub.add_argument("--ks", action="store_true", help="also compare the kappa laws")
    sub.set_defaults(handler=cmd_gamma_mc)

    sub = subs.add_parser(
        "mc-study", parents=[common], help="Monte Carlo level and power study"
    )
    sub.add_argument("--config", required=True, help="study JSON")
    sub.set_defaults(handler=cmd_mc_study)

    sub = subs.add_parser(
        "oracle-det", parents=[common], help="randomized determinant identity checks"
    )
    sub.add_argument("--cases", type=int, default=200)
    sub.add_argument("--max-dim", type=int, default=4)
    sub.set_defaults(handler=cmd_oracle_det)
    return parser
