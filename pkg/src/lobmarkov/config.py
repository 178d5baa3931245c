"""Run configuration: JSON file <-> ``RunConfig``."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .tickstore import (
    DEFAULT_INTERVALS,
    DEFAULT_TIER_MAP,
    DEFAULT_TRADING_DAYS,
    Interval,
    SchemaConfig,
    Side,
    UniverseConfig,
    format_time_ms,
    parse_time_ms,
)

CONFIG_ENV = "LOBMARKOV_CONFIG"

# fields that change how a run executes but not what it computes
RUNTIME_FIELDS = ("workers", "output_dir")


@dataclass
class TsneParams:
    perplexity: float = 5.0
    iterations: int = 1000
    learning_rate: float = 10.0
    seed: int = 0
    exaggeration: float = 4.0
    exaggeration_iters: int = 100


@dataclass
class RunConfig:
    inputs: List[str] = field(default_factory=list)
    output_dir: str = "lobmarkov_out"
    tier_map: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_TIER_MAP))
    trading_days: Optional[List[str]] = field(default_factory=lambda: list(DEFAULT_TRADING_DAYS))
    intervals: List[Tuple[str, str, str]] = field(
        default_factory=lambda: [(iv.name, format_time_ms(iv.start_ms), format_time_ms(iv.end_ms))
                                 for iv in DEFAULT_INTERVALS]
    )
    delimiter: str = ","
    header: bool = False
    sides: str = "both"
    seed_with_presession: bool = False
    aggregation: str = "pooled"
    smoothing: float = 0.0
    entropy_base: Optional[float] = None
    jsd_base: float = 2.0
    gtest_pooled: bool = False
    acf_max_lag: int = 5
    acf_on_states: bool = False
    pca_k: int = 8
    cluster_space: str = "pca"
    ward_k: int = 3
    tsne: TsneParams = field(default_factory=TsneParams)
    dbscan_eps: Optional[float] = None
    dbscan_min_pts: int = 3
    workers: int = 1
    formats: List[str] = field(default_factory=lambda: ["csv", "json", "svg"])

    def __post_init__(self):
        if isinstance(self.tsne, dict):
            self.tsne = TsneParams(**self.tsne)
        self.intervals = [tuple(iv) for iv in self.intervals]
        self.validate()

    def validate(self) -> None:
        if self.sides not in ("ask", "bid", "both"):
            raise ValueError(f"sides must be ask, bid or both, not {self.sides!r}")
        if self.aggregation not in ("pooled", "averaged"):
            raise ValueError(f"aggregation must be pooled or averaged, not {self.aggregation!r}")
        if self.cluster_space not in ("pca", "raw", "tsne"):
            raise ValueError(f"cluster_space must be pca, raw or tsne, not {self.cluster_space!r}")
        if self.smoothing < 0:
            raise ValueError("smoothing must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")
        self.universe()  # interval and tier checks

    # ----------------------------------------------------------- derived

    def interval_objects(self) -> Tuple[Interval, ...]:
        ivs = tuple(Interval(n, parse_time_ms(a), parse_time_ms(b)) for n, a, b in self.intervals)
        ordered = sorted(ivs, key=lambda iv: iv.start_ms)
        for a, b in zip(ordered, ordered[1:]):
            if b.start_ms <= a.end_ms:
                raise ValueError(f"intervals {a.name} and {b.name} overlap")
        return ivs

    def universe(self) -> UniverseConfig:
        days = tuple(self.trading_days) if self.trading_days is not None else None
        return UniverseConfig(dict(self.tier_map), days, self.interval_objects())

    def schema(self) -> SchemaConfig:
        return SchemaConfig(self.delimiter, self.header)

    def side_list(self) -> List[Side]:
        if self.sides == "both":
            return [Side.ASK, Side.BID]
        return [Side.ASK if self.sides == "ask" else Side.BID]

    @property
    def interval_names(self) -> List[str]:
        return [iv[0] for iv in self.intervals]

    # ------------------------------------------------------- persistence

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["intervals"] = [list(iv) for iv in self.intervals]
        return d

    @classmethod
    def from_dict(cls, d: dict, base_dir: Optional[Path] = None) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        d = dict(d)
        if base_dir is not None:
            d["inputs"] = [str((base_dir / p)) if not os.path.isabs(p) else p for p in d.get("inputs", [])]
            if "output_dir" in d and not os.path.isabs(d["output_dir"]):
                d["output_dir"] = str(base_dir / d["output_dir"])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        with open(path) as fh:
            return cls.from_dict(json.load(fh), base_dir=path.parent)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def digest(self) -> str:
        """Hash of the analysis settings (runtime-only fields excluded)."""
        d = self.to_dict()
        for k in RUNTIME_FIELDS:
            d.pop(k, None)
        d["inputs"] = sorted(os.path.basename(p) for p in d["inputs"])
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()
