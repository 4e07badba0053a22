"""Util module."""

import hashlib
import json
import logging
import math
import os
import sys
from collections.abc import Mapping, MutableMapping
from enum import IntEnum
from logging.handlers import RotatingFileHandler
from typing import Any

import numpy as np

logformat = logging.Formatter(
    "[%(asctime)s] :: %(levelname)s :: %(name)s :: %(module)s :: %(funcName)s :: %(lineno)d :: %(message)s"
)

__loggers: MutableMapping[str, logging.Logger] = {}
log_to_stdout = os.environ.get("LOG_TO_STDOUT")


def get_logger(name: str, rotate: RotatingFileHandler | None = None) -> logging.Logger:
    """Get logger."""
    found_logger = __loggers.get(name)
    if found_logger:
        return found_logger

    logger = logging.getLogger(name)

    if not log_to_stdout:
        if not rotate:
            logs_dir = os.environ.get("VOLRANK_LOGS") or "logs"
            os.makedirs(logs_dir, exist_ok=True)
            rotate = RotatingFileHandler(
                os.path.join(logs_dir, f"{name}.log"), maxBytes=5000000, backupCount=5
            )
            rotate.setFormatter(logformat)
        logger.addHandler(rotate)
    else:
        logger.addHandler(logging.StreamHandler(sys.stdout))

    __loggers[name] = logger

    if name == "study":
        # worker threads report through the path pipeline loggers
        get_logger("itosim", rotate)
        get_logger("ranktest", rotate)

    return logger


class Stream(IntEnum):
    """Random stream identifiers, mixed into every derived seed."""

    PATH = 1
    WPRIME = 2
    PSI = 3


def derive_seed(master: int, *keys: int) -> np.random.SeedSequence:
    """Return the seed sequence of the stream identified by ``keys``.

    The stream depends only on ``(master, keys)``, so results do not depend on
    how work is split across threads.
    """
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))


def make_rng(master: int, *keys: int) -> np.random.Generator:
    """Return a PCG64 generator for the stream identified by ``keys``."""
    return np.random.Generator(np.random.PCG64(derive_seed(master, *keys)))


def derive_int_seed(master: int, *keys: int) -> int:
    """Return a 63-bit integer seed for the stream identified by ``keys``."""
    return int(derive_seed(master, *keys).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def config_hash(config: Mapping[str, Any]) -> str:
    """Hash a JSON-serializable mapping."""
    payload = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def floor_ratio(numerator: float, denominator: float) -> int:
    """Floor of ``numerator / denominator`` tolerant to representation error.

    ``0.3 / 0.1`` is 2.9999999999999996 in binary floating point; grid arithmetic
    wants 3.
    """
    ratio = numerator / denominator
    nearest = round(ratio)
    if math.isclose(ratio, nearest, rel_tol=1e-9, abs_tol=1e-12):
        return int(nearest)
    return math.floor(ratio)
