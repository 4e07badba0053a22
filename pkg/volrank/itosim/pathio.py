"""Path export and import: CSV and npz with a JSON sidecar."""
import json
import os
from collections.abc import Mapping
from typing import Any

import numpy as np

from volrank.models import ConfigError, Latent, PathSample
from volrank.util import get_logger

_LOGGER = get_logger("itosim")

CSV_FORMAT = "%.17g"


def csv_header(d: int) -> str:
    return ",".join(["t"] + [f"x_{j + 1}" for j in range(d)])


def write_csv(path: PathSample, filename: str) -> str:
    """Write ``t, x_1..x_d`` rows; 17 significant digits reproduce every float."""
    os.makedirs(os.path.dirname(filename) or ".", exist_ok=True)
    table = np.column_stack((path.times(), path.obs))
    np.savetxt(
        filename,
        table,
        fmt=CSV_FORMAT,
        delimiter=",",
        header=csv_header(path.d),
        comments="",
    )
    _LOGGER.info(f"Wrote {path.obs.shape[0]} observations to {filename}")
    return filename


def write_sidecar(
    path: PathSample, base: str, extra: Mapping[str, Any] | None = None
) -> str:
    """Write ``<base>.json`` with the path metadata and any ``extra`` keys."""
    os.makedirs(os.path.dirname(base) or ".", exist_ok=True)
    with open(f"{base}.json", "w", encoding="utf-8") as sidecar:
        json.dump({**(extra or {}), **path.metadata()}, sidecar, indent=2, sort_keys=True, default=str)
    return f"{base}.json"


def save_npz(
    path: PathSample, base: str, extra: Mapping[str, Any] | None = None
) -> tuple[str, str]:
    """Write ``<base>.npz`` with the arrays and ``<base>.json`` with the metadata."""
    os.makedirs(os.path.dirname(base) or ".", exist_ok=True)
    arrays = {"obs": path.obs}
    if path.latent is not None:
        arrays.update(sigma=path.latent.sigma, b=path.latent.b, v=path.latent.v)
    np.savez_compressed(f"{base}.npz", **arrays)
    sidecar = write_sidecar(path, base, extra)
    _LOGGER.info(f"Wrote {base}.npz and {sidecar}")
    return f"{base}.npz", sidecar


def load_npz(base: str) -> PathSample:
    """Read a path written by :func:`save_npz`."""
    base = base[:-4] if base.endswith(".npz") else base
    try:
        with open(f"{base}.json", encoding="utf-8") as sidecar:
            meta = json.load(sidecar)
        with np.load(f"{base}.npz") as data:
            obs = data["obs"]
            latent = None
            if "sigma" in data:
                latent = Latent(sigma=data["sigma"], b=data["b"], v=data["v"])
    except (OSError, KeyError, ValueError) as err:
        raise ConfigError(f"cannot read path container {base}: {err}") from err
    return PathSample(
        delta_n=float(meta["delta_n"]),
        t_max=float(meta["t_max"]),
        obs=obs,
        seed=meta.get("seed"),
        scenario=meta.get("scenario", "custom"),
        latent=latent,
    )
