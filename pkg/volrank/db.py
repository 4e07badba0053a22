"""Database module."""
import os
from typing import Any

from tinydb import Query, TinyDB
from tinydb.table import Document

import volrank

from .util import get_logger

_LOGGER = get_logger("db")


def _db_file() -> str:
    return os.environ.get("VOLRANK_DB_FILE") or _os_db_path()


def _os_db_path() -> str:
    return os.path.join(volrank.out_dir, "studies.json")


def _db_get() -> TinyDB:
    # Will create the database if it doesn't exist
    path = _db_file()
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    db = TinyDB(path, sort_keys=True, indent=1)

    # Will create the tables if they don't exist
    db.table("studies", cache_size=0)
    db.table("paths", cache_size=0)

    return db


def study_upsert(study_hash: str, config: dict[str, Any], provenance: dict[str, Any]) -> None:
    """Store the header of a study."""
    opendb = _db_get()
    with opendb:
        studies = opendb.table("studies")
        Study = Query()
        studies.upsert(
            {"study": study_hash, "config": config, "provenance": provenance},
            Study.study == study_hash,
        )
    _LOGGER.debug(f"Stored study {study_hash}")


def study_get(study_hash: str) -> None | Document:
    """Get study header."""
    studies = _db_get().table("studies")
    Study = Query()
    return studies.get(Study.study == study_hash)


def path_upsert_many(study_hash: str, records: list[dict[str, Any]]) -> None:
    """Replace the per-path records of a study."""
    opendb = _db_get()
    with opendb:
        paths = opendb.table("paths")
        Path = Query()
        paths.remove(Path.study == study_hash)
        paths.insert_multiple({"study": study_hash, **record} for record in records)
    _LOGGER.info(f"Stored {len(records)} path records of study {study_hash}")


def path_records(study_hash: str) -> list[dict[str, Any]]:
    """Per-path records of a study in path index order."""
    paths = _db_get().table("paths")
    Path = Query()
    found = paths.search(Path.study == study_hash)
    records = [{k: v for k, v in doc.items() if k != "study"} for doc in found]
    return sorted(records, key=lambda record: int(record["index"]))

