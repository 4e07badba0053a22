"""Output files: JSON reports, plot-ready CSV tables and the Markdown summary."""
import csv
import os
from collections.abc import Iterable, Sequence
from typing import Any

import jinja2

from volrank.harness.encoder import dumps
from volrank.models import PerturbedBlocks, SpotSeries, StudyResult
from volrank.util import get_logger

_LOGGER = get_logger("volrank")

_TEMPLATES = os.path.join(os.path.dirname(__file__), "templates")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_json(obj: Any, filename: str) -> str:
    os.makedirs(os.path.dirname(filename) or ".", exist_ok=True)
    with open(filename, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(dumps(obj))
    _LOGGER.info(f"Wrote {filename}")
    return filename


def write_table(filename: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    os.makedirs(os.path.dirname(filename) or ".", exist_ok=True)
    with open(filename, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    _LOGGER.info(f"Wrote {filename}")
    return filename


def write_blocks_csv(blocks: PerturbedBlocks, filename: str) -> str:
    """Per-block audit table (i, f1, f2)."""
    return write_table(
        filename,
        ("i", "f1", "f2"),
        ((i, float(f1), float(f2)) for i, (f1, f2) in enumerate(zip(blocks.f1, blocks.f2))),
    )


def write_spot_csv(spot: SpotSeries, filename: str) -> str:
    """Spot series table (i, t, r_hat_spot); invalid windows are left empty."""
    return write_table(
        filename,
        ("i", "t", "r_hat_spot"),
        (
            (i, float(t), float(v) if v == v else None)
            for i, (t, v) in enumerate(zip(spot.times(), spot.values))
        ),
    )


def level_power_rows(result: StudyResult) -> list[tuple[Any, ...]]:
    rows = []
    for key, freq in result.aggregate.reject_freq.items():
        hypothesis, alpha = key.rsplit("@", 1)
        rows.append(
            (hypothesis, float(alpha), result.config.n_obs, freq, result.aggregate.reject_se[key])
        )
    return rows


def render_summary(result: StudyResult) -> str:
    env = jinja2.Environment(
        loader=jinja2.FileSystemLoader(_TEMPLATES),
        autoescape=False,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
        undefined=jinja2.StrictUndefined,
    )
    template = env.get_template("summary.md.jinja2")
    return template.render(
        config=result.config,
        aggregate=result.aggregate,
        provenance=result.provenance,
        level_power=level_power_rows(result),
        failures=[r for r in result.records if r.error is not None],
    )


def write_study_outputs(result: StudyResult, out_dir: str) -> list[str]:
    """Write the study JSON, the CSV tables and the Markdown summary."""
    os.makedirs(out_dir, exist_ok=True)
    written = [write_json(result, os.path.join(out_dir, "study.json"))]
    written.append(
        write_table(
            os.path.join(out_dir, "level_power.csv"),
            ("hypothesis", "alpha", "n_obs", "reject_freq", "se"),
            level_power_rows(result),
        )
    )
    aggregate = result.aggregate
    written.append(
        write_table(
            os.path.join(out_dir, "normality.csv"),
            ("ks", "p"),
            [(aggregate.ks_distance, aggregate.ks_pvalue)],
        )
    )
    written.append(
        write_table(
            os.path.join(out_dir, "paths.csv"),
            ("index", "r_hat", "r_rounded", "v_feasible", "standardized", "error"),
            (
                (r.index, r.r_hat, r.r_rounded, r.v_feasible, r.standardized, r.error)
                for r in result.records
            ),
        )
    )
    if result.config.const_rank:
        written.append(
            write_table(
                os.path.join(out_dir, "spot_summary.csv"),
                ("index", "spot_median", "b_stat", "z_stat"),
                (
                    (r.index, r.spot_median, r.b_stat, r.z_stat)
                    for r in result.records
                    if r.error is None
                ),
            )
        )
    summary = os.path.join(out_dir, "summary.md")
    with open(summary, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(render_summary(result))
    written.append(summary)
    _LOGGER.info(f"Wrote study summary to {summary}")
    return written
