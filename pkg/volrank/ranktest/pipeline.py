"""Full test pipeline on one path."""
import dataclasses
from collections.abc import Sequence

from volrank.models import (
    ConstRankReport,
    DomainError,
    PathSample,
    PerturbationConfig,
    PerturbedBlocks,
    RankTestReport,
)
from volrank.ranktest.blocks import perturb_and_block
from volrank.ranktest.constrank import (
    MIN_WINDOWS,
    auto_kn,
    const_rank_statistics,
    spot_rank_series,
    test_const_rank,
    window_count,
)
from volrank.ranktest.maxrank import rank_test_report, test_max_rank


@dataclasses.dataclass(frozen=True, eq=False)
class PathAnalysis:
    blocks: PerturbedBlocks
    rank: RankTestReport
    const_rank: ConstRankReport | None = None


def resolve_kn(k_n: int | None, blocks: PerturbedBlocks) -> int:
    """The given k_n, or auto_kn; either must leave MIN_WINDOWS windows."""
    value = auto_kn(blocks) if k_n is None else k_n
    n_windows = window_count(blocks.t_max, value, blocks.block_span) if value > 0 else 0
    if n_windows < MIN_WINDOWS:
        raise DomainError(
            f"k_n={value} leaves {n_windows} windows in the {blocks.n_blocks} blocks "
            f"of the path, at least {MIN_WINDOWS} are needed"
        )
    return value


def analyze_path(
    path: PathSample,
    cfg: PerturbationConfig,
    hypotheses: Sequence[str] = (),
    alphas: Sequence[float] = (0.05,),
    p: float = 1.0,
    k_n: int | None = None,
    const_rank: bool = True,
) -> PathAnalysis:
    """Perturb, block and run the maximal-rank and constant-rank tests."""
    blocks = perturb_and_block(path, cfg)
    rank = rank_test_report(blocks, hypotheses, alphas)
    if not const_rank:
        return PathAnalysis(blocks=blocks, rank=rank)

    spot = spot_rank_series(blocks, resolve_kn(k_n, blocks))
    report = const_rank_statistics(blocks, spot, p, rank.r_hat, rank.s1, path.t_max)
    decisions = tuple(
        test_const_rank(
            report,
            alpha,
            test_max_rank(rank.r_hat, rank.v_feasible, rank.delta_n, rank.d, 0, alpha, "leq"),
        )
        for alpha in alphas
    )
    report = dataclasses.replace(report, decisions=decisions)
    return PathAnalysis(blocks=blocks, rank=rank, const_rank=report)
