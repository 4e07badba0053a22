"""Import of observation files."""
import csv
import math

import numpy as np

from volrank.models import GridError, PathSample
from volrank.util import get_logger

_LOGGER = get_logger("volrank")

GRID_TOLERANCE = 1e-9


def _parse(value: str, row: int, column: str) -> float:
    try:
        number = float(value)
    except ValueError as err:
        raise GridError(f"row {row}: {column}={value!r} is not a number") from err
    if not math.isfinite(number):
        raise GridError(f"row {row}: {column} is missing")
    return number


def ingest_csv(filename: str, delta_n: float | None = None) -> PathSample:
    """Read a ``t, x_1..x_d`` file into a PathSample.

    The grid step is inferred from the first and last time when ``delta_n`` is not
    given. Every step must match it within a relative tolerance of 1e-9.
    """
    with open(filename, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = [name.strip() for name in next(reader)]
        except StopIteration as err:
            raise GridError(f"{filename} is empty") from err
        if len(header) < 2 or header[0] != "t":
            raise GridError(f"{filename}: header must be t, x_1..x_d, got {header}")
        rows = []
        for number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise GridError(f"row {number}: expected {len(header)} fields, got {len(row)}")
            rows.append([_parse(v, number, header[j]) for j, v in enumerate(row)])

    if len(rows) < 2:
        raise GridError(f"{filename} needs at least two observations")
    table = np.array(rows)
    times = table[:, 0]
    step = (times[-1] - times[0]) / (len(rows) - 1) if delta_n is None else delta_n
    if step <= 0:
        raise GridError(f"{filename}: times must increase")
    jitter = np.max(np.abs(np.diff(times) - step))
    if jitter > GRID_TOLERANCE * step:
        raise GridError(
            f"{filename}: grid is not equidistant with step {step} (deviation {jitter:.3g})"
        )
    _LOGGER.info(f"Ingested {len(rows)} observations of d={len(header) - 1} from {filename}")
    return PathSample(
        delta_n=float(step),
        t_max=float(step * (len(rows) - 1)),
        obs=table[:, 1:],
        scenario="ingested",
    )
