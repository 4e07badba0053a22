import numpy as np

from volrank.models import PathSample, PerturbedBlocks

Z_TWO_SIDED_05 = 1.959964
Z_ONE_SIDED_05 = 1.644854
DB_FILE = "tests/tmp_studies.json"


def brownian_path(d: int, n: int, t_max: float = 1.0, seed: int = 0, scale: float = 1.0):
    """Standard Brownian motion scaled by ``scale`` on n equidistant increments."""
    delta_n = t_max / n
    rng = np.random.default_rng(seed)
    dx = rng.standard_normal((n, d)) * np.sqrt(delta_n) * scale
    obs = np.vstack((np.zeros(d), np.cumsum(dx, axis=0)))
    return PathSample(delta_n=delta_n, t_max=t_max, obs=obs, seed=seed)


def constant_blocks(d: int, n_blocks: int, delta_n: float, f1=1.0, f2=1.0):
    f1 = np.broadcast_to(np.asarray(f1, dtype=float), (n_blocks,)).copy()
    f2 = np.broadcast_to(np.asarray(f2, dtype=float), (n_blocks,)).copy()
    return PerturbedBlocks(
        f1=f1, f2=f2, delta_n=delta_n, d=d, t_max=n_blocks * 2 * d * delta_n
    )
