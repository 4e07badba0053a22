"""JSON encoding of reports."""
import dataclasses
import json
import math
from collections.abc import Mapping
from typing import Any

import numpy as np


class ReportEncoder(json.JSONEncoder):
    """Json encoder for sets and numpy values."""

    def default(self, o: Any) -> Any:
        """Convert objects, which are not supported by the default JSONEncoder."""
        if isinstance(o, set):
            return sorted(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        return json.JSONEncoder.default(self, o)


def to_jsonable(obj: Any) -> Any:
    """Dataclasses to dicts and non-finite floats to "nan", "inf" or "-inf"."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(obj: Any) -> str:
    """Byte-stable JSON text: sorted keys, fixed indentation, trailing newline."""
    return (
        json.dumps(to_jsonable(obj), cls=ReportEncoder, sort_keys=True, indent=2, allow_nan=False)
        + "\n"
    )
