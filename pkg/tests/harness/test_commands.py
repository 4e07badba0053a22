import json

import volrank
from volrank.harness.commands import build_parser, provenance


def _args(argv):
    args = build_parser().parse_args(argv)
    args.seed_given = args.seed is not None
    args.seed = args.seed or 0
    return args


def _check(data, **seeds):
    stamp = data["provenance"]
    assert stamp["version"] == volrank.__version__
    assert len(stamp["config_hash"]) == 16
    assert stamp["seeds"] == seeds
    return stamp


def test_provenance_ignores_runtime_flags():
    first = provenance(_args(["--out", "a", "--threads", "1", "oracle-det"]), oracle=0)
    second = provenance(_args(["oracle-det", "--out", "b", "--threads", "4", "--debug"]), oracle=0)
    assert first == second
    assert "out" not in first["config"]
    assert "threads" not in first["config"]
    assert first["config"]["cases"] == 200

    other = provenance(_args(["oracle-det", "--cases", "5"]), oracle=0)
    assert other["config_hash"] != first["config_hash"]


def test_flags_after_subcommand():
    args = build_parser().parse_args(
        ["--seed", "1", "oracle-det", "--seed", "9", "--threads", "3", "--format", "csv"]
    )
    assert (args.seed, args.threads, args.format) == (9, 3, "csv")
    args = build_parser().parse_args(["--seed", "1", "--threads", "2", "oracle-det"])
    assert (args.seed, args.threads, args.format, args.debug) == (1, 2, "json", False)


def test_outputs_carry_provenance(tmp_path):
    out = str(tmp_path)
    assert (
        volrank.main(
            ["simulate", "--scenario", "constant_rank", "--d", "2", "--r", "1", "--n", "2000",
             "--seed", "5", "--out", out]
        )
        == 0
    )
    with open(tmp_path / "constant_rank_0000.json") as handle:
        sidecar = json.load(handle)
    path_seed = sidecar["seed"]
    _check(sidecar, path=path_seed)
    assert sidecar["provenance"]["config"]["seed"] == 5

    csv_file = str(tmp_path / "constant_rank_0000.csv")
    results = tmp_path / "results"
    assert volrank.main(["test-rank", "--path", csv_file, "--out", str(results)]) == 0
    with open(results / "constant_rank_0000.rank.json") as handle:
        _check(json.load(handle), path=None, wprime=0)

    assert (
        volrank.main(
            ["test-const-rank", "--path", csv_file, "--kn", "10", "--wprime-seed", "4",
             "--out", str(results)]
        )
        == 0
    )
    with open(results / "constant_rank_0000.const_rank.json") as handle:
        _check(json.load(handle), path=None, wprime=4)

    source = tmp_path / "u.json"
    source.write_text(json.dumps({"alpha": [[1.0]]}))
    assert (
        volrank.main(
            ["gamma-mc", "--input", str(source), "--samples", "200", "--substeps", "100",
             "--seed", "2", "--out", str(results)]
        )
        == 0
    )
    with open(results / "gamma.json") as handle:
        _check(json.load(handle), mc=2)

    assert volrank.main(["oracle-det", "--cases", "3", "--out", str(results)]) == 0
    with open(results / "oracle_det.json") as handle:
        _check(json.load(handle), oracle=0)
