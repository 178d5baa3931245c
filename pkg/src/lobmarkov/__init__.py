"""Markov-chain analysis of intraday limit-order price changes.

Tick files are reduced to nine-state sequences of percent price changes,
per-(tier, interval, side) transition matrices are estimated and tested for
serial dependence, and the chains are compared through spectral and
entropy metrics, low-dimensional embeddings, clustering and Jensen-Shannon
divergences between stationary distributions.
"""

from .chainbuilder import (
    N_STATES,
    STATE_NAMES,
    StateSequence,
    TransitionCounts,
    build_sequence,
    classify,
    classify_array,
    count_transitions,
    pct_change,
)
from .config import RunConfig
from .divergence import jsd, jsd_matrix, kld
from .dtmc import ReducibleChainError, StationaryDist, Tpm, estimate_tpm, pool_counts, simulate, stationary
from .geometry import cut_tree, dbscan, default_eps, pca_fit, tsne, ward_cluster
from .independence import AcfAccumulator, acf, chi2_sf, g_test
from .metrics import ChainMetrics, chain_metrics, entropy_rate, mean_recurrence, spectral_gap
from .pipeline import DataError, NumericError, PipelineError, run_pipeline
from .tickstore import DEFAULT_INTERVALS, DEFAULT_TIER_MAP, DEFAULT_TRADING_DAYS, Side, iter_runs, parse_tick_stream

__version__ = "0.1.0"

__all__ = [
    "N_STATES",
    "STATE_NAMES",
    "StateSequence",
    "TransitionCounts",
    "build_sequence",
    "classify",
    "classify_array",
    "count_transitions",
    "pct_change",
    "RunConfig",
    "jsd",
    "jsd_matrix",
    "kld",
    "ReducibleChainError",
    "StationaryDist",
    "Tpm",
    "estimate_tpm",
    "pool_counts",
    "simulate",
    "stationary",
    "cut_tree",
    "dbscan",
    "default_eps",
    "pca_fit",
    "tsne",
    "ward_cluster",
    "AcfAccumulator",
    "acf",
    "chi2_sf",
    "g_test",
    "ChainMetrics",
    "chain_metrics",
    "entropy_rate",
    "mean_recurrence",
    "spectral_gap",
    "DataError",
    "NumericError",
    "PipelineError",
    "run_pipeline",
    "DEFAULT_INTERVALS",
    "DEFAULT_TIER_MAP",
    "DEFAULT_TRADING_DAYS",
    "Side",
    "iter_runs",
    "parse_tick_stream",
]
