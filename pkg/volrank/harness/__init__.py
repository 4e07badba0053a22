"""Experiment harness: path ingestion, Monte Carlo studies and report output."""
from volrank.harness.encoder import ReportEncoder, dumps, to_jsonable
from volrank.harness.ingest import ingest_csv
from volrank.harness.normality import ks_normality
from volrank.harness.report import (
    render_summary,
    write_blocks_csv,
    write_json,
    write_spot_csv,
    write_study_outputs,
)
from volrank.harness.study import (
    aggregate_records,
    run_path,
    run_study,
    study_aggregate_from_db,
    study_config_from_dict,
    study_hash,
)
