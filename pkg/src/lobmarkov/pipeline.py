"""End-to-end pipeline: ingest -> estimate -> metrics -> embed -> cluster ->
jsd -> report, each stage reading the previous stage's files.

Output layout under ``output_dir``::

    ingest/ingestion_report.json, ingest/counts.json
    independence/gtest_report.json, independence/gtest_summary.csv
    <tier>_<side>/<interval>.tpm.csv|.tpm.json|.tpm.svg
    <tier>_<side>/<interval>.metrics.json|.stationary.csv
    <tier>_<side>/jsd.csv|jsd.svg
    metrics/metrics_table.csv, metrics/mrt_table.csv, metrics/metrics.json
    embedding/<side>/pca.json|embedding.csv|clusters.csv|dendrogram.json|dendrogram.nwk
    report.md, manifest.json
"""

from __future__ import annotations

import math
import time
import warnings
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import artifacts as io
from .chainbuilder import N_STATES, STATE_NAMES, TransitionCounts, build_sequence, count_transitions, state_histogram
from .config import RunConfig
from .divergence import jsd_matrix
from .dtmc import ReducibleChainError, Tpm, average_tpms, estimate_tpm, pool_counts, stationary
from .geometry import cut_tree, dbscan, default_eps, pca_fit, tsne, vectorize, ward_cluster
from .independence import AcfAccumulator, average_g_tests, g_test
from .metrics import EigenFailure, chain_metrics
from .tickstore import IngestReport, iter_runs, parse_tick_stream

__all__ = [
    "PipelineError",
    "DataError",
    "NumericError",
    "RunManifest",
    "run_pipeline",
    "stage_ingest",
    "stage_estimate",
    "stage_metrics",
    "stage_embed",
    "stage_cluster",
    "stage_jsd",
    "stage_report",
    "STAGES",
]


class PipelineError(RuntimeError):
    exit_code = 2

    def __init__(self, stage: str, message: str, cell: Optional[str] = None):
        where = f"[{stage}]" + (f" cell {cell}" if cell else "")
        super().__init__(f"{where}: {message}")
        self.stage = stage
        self.cell = cell


class DataError(PipelineError):
    exit_code = 2


class NumericError(PipelineError):
    exit_code = 3


def cell_id(tier: str, interval: str, side: str) -> str:
    return f"{tier}|{interval}|{side}"


def _side_dir(out: Path, tier: str, side: str) -> Path:
    return out / f"{tier}_{side.lower()}"


def _num(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class Context:
    cfg: RunConfig
    out: Path
    written: List[Path] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    cells: Dict[str, str] = field(default_factory=dict)

    def add(self, path: Path) -> Path:
        self.written.append(Path(path))
        return path

    def warn(self, msg: str) -> None:
        self.warnings.append(msg)

    def cell_keys(self) -> List[Tuple[str, str, str]]:
        uni = self.cfg.universe()
        return [(t, iv, s.value) for t in uni.tiers for s in self.cfg.side_list()
                for iv in self.cfg.interval_names]

    def require(self, stage: str, paths: List[Path]) -> None:
        missing = [str(p) for p in paths if not Path(p).exists()]
        if missing:
            raise DataError(stage, "missing upstream artifacts: " + ", ".join(missing))


# ------------------------------------------------------------------ ingest


def _ingest_file(path: str, cfg_dict: dict, dump_sequences: bool = False) -> Tuple[IngestReport, dict, List[str]]:
    """Reduce one tick file to per-cell transition counts and moments."""
    cfg = RunConfig.from_dict(cfg_dict)
    uni = cfg.universe()
    report = IngestReport()
    cells: Dict[str, dict] = {}
    seqs: List[str] = []
    wanted = {s for s in cfg.side_list()}
    events = parse_tick_stream(path, cfg.schema(), report)
    for (ticker, day, side, iv), run in iter_runs(events, uni, report, cfg.seed_with_presession):
        if side not in wanted:
            continue
        tier = uni.tier_map[ticker]
        key = cell_id(tier, iv, side.value)
        c = cells.get(key)
        if c is None:
            c = cells[key] = {
                "stock_day": {},
                "histogram": np.zeros(N_STATES, dtype=np.int64),
                "acf": AcfAccumulator(cfg.acf_max_lag),
                "acf_states": AcfAccumulator(cfg.acf_max_lag),
                "runs": 0,
            }
        prices = np.array([e.price for e in run])
        seq = build_sequence(prices)
        sd = f"{ticker}|{day}"
        counts = count_transitions(seq).n
        prev = c["stock_day"].get(sd)
        c["stock_day"][sd] = counts if prev is None else prev + counts
        c["histogram"] += state_histogram(seq)
        c["runs"] += 1
        if prices.size >= 2:
            c["acf"].add(100.0 * np.diff(prices) / prices[:-1])
            c["acf_states"].add(seq.states.astype(float) + 1.0)
        if dump_sequences:
            seqs.append(f"{ticker} {day} {side.value} {iv} {seq.letters()}")
    return report, cells, seqs


def _merge_cells(into: Dict[str, dict], part: Dict[str, dict]) -> None:
    for key, c in part.items():
        t = into.get(key)
        if t is None:
            into[key] = c
            continue
        for sd, n in c["stock_day"].items():
            t["stock_day"][sd] = t["stock_day"][sd] + n if sd in t["stock_day"] else n
        t["histogram"] += c["histogram"]
        t["acf"].merge(c["acf"])
        t["acf_states"].merge(c["acf_states"])
        t["runs"] += c["runs"]


def stage_ingest(ctx: Context, dump_sequences: bool = False) -> None:
    cfg = ctx.cfg
    files = io.list_inputs(cfg.inputs)
    if not files:
        raise DataError("ingest", f"no input files found in {cfg.inputs}")
    for f in files:
        if not f.is_file():
            raise DataError("ingest", f"input file not found: {f}")
    cfg_dict = cfg.to_dict()
    report = IngestReport()
    cells: Dict[str, dict] = {}
    seq_lines: List[str] = []
    args = [str(f) for f in files]
    try:
        if cfg.workers == 1 or len(files) == 1:
            parts = [_ingest_file(a, cfg_dict, dump_sequences) for a in args]
        else:
            with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
                parts = list(ex.map(_ingest_file, args, [cfg_dict] * len(args), [dump_sequences] * len(args)))
    except OSError as exc:
        raise DataError("ingest", str(exc)) from exc
    # merge in input order so float accumulators do not depend on scheduling
    for rep, part, seqs in parts:
        report.merge(rep)
        _merge_cells(cells, part)
        seq_lines.extend(seqs)
    if not cells:
        raise DataError("ingest", "no in-session ADD events for the configured universe")
    ctx.out.mkdir(parents=True, exist_ok=True)
    rep = report.to_dict()
    rep["files"] = [f.name for f in files]
    ctx.add(io.write_json(ctx.out / "ingest" / "ingestion_report.json", rep))
    doc = {}
    for key in sorted(cells):
        c = cells[key]
        tier, iv, side = key.split("|")
        doc[key] = {
            "tier": tier, "interval": iv, "side": side, "runs": c["runs"],
            "histogram": c["histogram"],
            "stock_day": {sd: c["stock_day"][sd] for sd in sorted(c["stock_day"])},
            "acf": c["acf"].to_dict(),
            "acf_states": c["acf_states"].to_dict(),
        }
    ctx.add(io.write_json(ctx.out / "ingest" / "counts.json", {"cells": doc}))
    if dump_sequences:
        ctx.add(io.write_text(ctx.out / "ingest" / "sequences.txt", "\n".join(sorted(seq_lines)) + "\n"))


# ---------------------------------------------------------------- estimate


def _load_counts(ctx: Context, stage: str) -> dict:
    path = ctx.out / "ingest" / "counts.json"
    ctx.require(stage, [path])
    return io.read_json(path)["cells"]


def stage_estimate(ctx: Context) -> None:
    cfg = ctx.cfg
    cells = _load_counts(ctx, "estimate")
    greport = {}
    summary = [["tier", "interval", "side", "days_tested", "mean_g", "mean_df", "mean_p", "reject_fraction",
                "pooled_g", "pooled_df", "pooled_p", "acf_n", "acf_lag1", "acf_lag2", "acf_threshold"]]
    for tier, iv, side in ctx.cell_keys():
        key = cell_id(tier, iv, side)
        c = cells.get(key)
        sd = {k: TransitionCounts(np.array(v)) for k, v in (c or {}).get("stock_day", {}).items()}
        pooled = pool_counts(list(sd.values()))
        if pooled.total == 0:
            ctx.cells[key] = "empty"
            ctx.warn(f"cell {key}: no transitions; skipped")
            continue
        prov = {"tier": tier, "interval": iv, "side": side, "aggregation": cfg.aggregation}
        if cfg.aggregation == "pooled":
            tpm = estimate_tpm(pooled, cfg.smoothing, prov)
        else:
            parts = [estimate_tpm(n, cfg.smoothing) for n in sd.values() if n.total > 0]
            tpm = average_tpms(parts)
            tpm.provenance.update(prov)
            tpm.provenance["smoothing"] = cfg.smoothing
        if tpm.degenerate_rows:
            ctx.warn(f"cell {key}: degenerate rows {[STATE_NAMES[i] for i in tpm.degenerate_rows]}")
        d = _side_dir(ctx.out, tier, side)
        ctx.add(io.write_tpm_csv(d / f"{iv}.tpm.csv", tpm.p, cfg.delimiter))
        ctx.add(io.write_json(d / f"{iv}.tpm.json", {
            **prov,
            "smoothing": cfg.smoothing,
            "total_transitions": pooled.total,
            "stock_days": len(sd),
            "degenerate_rows": [STATE_NAMES[i] for i in tpm.degenerate_rows],
            "support": tpm.support,
            "counts": pooled.n,
            "p": tpm.p,
        }))
        if "svg" in cfg.formats:
            ctx.add(io.write_text(d / f"{iv}.tpm.svg", io.svg_heatmap(
                tpm.p, STATE_NAMES, STATE_NAMES, f"{tier} {iv} {side} TPM", decimals=2, vmin=0.0, vmax=1.0)))
        ctx.cells[key] = "ok"

        # independence: per-day tests averaged, optionally the pooled table
        by_day: Dict[str, List[TransitionCounts]] = defaultdict(list)
        for k, n in sd.items():
            by_day[k.split("|")[1]].append(n)
        day_results = {}
        for day in sorted(by_day):
            n = pool_counts(by_day[day])
            if n.total:
                day_results[day] = g_test(n.n)
        dropped = sorted({(r.dropped_rows, r.dropped_cols) for r in day_results.values()})
        if any(r or cc for r, cc in dropped):
            ctx.warn(f"cell {key}: G-test dropped empty rows/cols {dropped}")
        avg = average_g_tests(day_results.values())
        entry = {"per_day": {d_: r.to_dict() for d_, r in day_results.items()}, "average": avg}
        pooled_res = g_test(pooled.n) if cfg.gtest_pooled else None
        if pooled_res is not None:
            entry["pooled"] = pooled_res.to_dict()
        acf_res = AcfAccumulator.from_dict(c["acf"]).result()
        entry["acf"] = acf_res.to_dict() if acf_res else None
        if cfg.acf_on_states:
            r2 = AcfAccumulator.from_dict(c["acf_states"]).result()
            entry["acf_states"] = r2.to_dict() if r2 else None
        entry["histogram"] = c["histogram"]
        greport[key] = entry
        summary.append([
            tier, iv, side, avg["n_tests"], _num(avg["mean_g"]), _num(avg["mean_df"]), _num(avg["mean_p"]),
            _num(avg["reject_fraction"]),
            _num(pooled_res.g) if pooled_res else "", pooled_res.df if pooled_res else "",
            _num(pooled_res.p_value) if pooled_res else "",
            acf_res.n if acf_res else "", _num(acf_res.values[0]) if acf_res else "",
            _num(acf_res.values[1]) if acf_res and len(acf_res.values) > 1 else "",
            _num(acf_res.threshold) if acf_res else "",
        ])
    if not any(v == "ok" for v in ctx.cells.values()):
        raise DataError("estimate", "no cell has any transitions")
    ctx.add(io.write_json(ctx.out / "independence" / "gtest_report.json", greport))
    ctx.add(io.write_csv(ctx.out / "independence" / "gtest_summary.csv", summary))


# ----------------------------------------------------------------- metrics


def _load_tpm(path: Path) -> Tpm:
    d = io.read_json(path)
    return Tpm(np.array(d["p"], dtype=float), np.array(d["support"], dtype=bool),
               {k: d[k] for k in ("tier", "interval", "side", "aggregation")})


def _available(ctx: Context, suffix: str) -> Dict[Tuple[str, str, str], Path]:
    found = {}
    for tier, iv, side in ctx.cell_keys():
        p = _side_dir(ctx.out, tier, side) / f"{iv}{suffix}"
        if p.exists():
            found[(tier, iv, side)] = p
    return found


def stage_metrics(ctx: Context) -> None:
    cfg = ctx.cfg
    tpms = _available(ctx, ".tpm.json")
    if not tpms:
        ctx.require("metrics", [_side_dir(ctx.out, t, s) / f"{i}.tpm.json" for t, i, s in ctx.cell_keys()[:1]])
    records = {}
    for (tier, iv, side), path in tpms.items():
        key = cell_id(tier, iv, side)
        tpm = _load_tpm(path)
        try:
            pi = stationary(tpm)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                m = chain_metrics(tpm, pi, cfg.entropy_base)
        except ReducibleChainError as exc:
            ctx.cells[key] = "failed"
            raise NumericError("metrics", f"{exc} (set smoothing > 0 to regularise sparse cells)", key) from exc
        except EigenFailure as exc:
            ctx.cells[key] = "failed"
            raise NumericError("metrics", str(exc), key) from exc
        for w in m.warnings:
            ctx.warn(f"cell {key}: {w}")
        rec = m.to_dict()
        rec.update({"tier": tier, "interval": iv, "side": side})
        records[key] = rec
        d = _side_dir(ctx.out, tier, side)
        ctx.add(io.write_json(d / f"{iv}.metrics.json", rec))
        ctx.add(io.write_csv(d / f"{iv}.stationary.csv",
                             [list(STATE_NAMES), [_num(v) for v in m.stationary]], cfg.delimiter))
    ctx.add(io.write_json(ctx.out / "metrics" / "metrics.json", records))

    sides = [s.value for s in cfg.side_list()]
    fields = ("spectral_gap", "relaxation_time", "relaxation_rate_log", "entropy_rate", "mixing_rate")
    head = ["tier", "interval"] + [f"{f}_{s.lower()}" for f in fields for s in sides]
    rows5, rows6 = [head], [["tier", "interval"] + [f"{st}_{s.lower()}" for st in STATE_NAMES for s in sides]]
    uni = cfg.universe()
    for tier in uni.tiers:
        for iv in cfg.interval_names:
            recs = [records.get(cell_id(tier, iv, s)) for s in sides]
            if not any(recs):
                continue
            rows5.append([tier, iv] + [
                (_num(float(r[f])) if r else "") for f in fields for r in recs])
            rows6.append([tier, iv] + [
                (_num(float(r["mean_recurrence"][j])) if r else "") for j in range(N_STATES) for r in recs])
    ctx.add(io.write_csv(ctx.out / "metrics" / "metrics_table.csv", rows5, cfg.delimiter))
    ctx.add(io.write_csv(ctx.out / "metrics" / "mrt_table.csv", rows6, cfg.delimiter))


# ------------------------------------------------------- embed and cluster


def _side_vectors(ctx: Context, side: str) -> Tuple[List[str], np.ndarray]:
    keys, vecs = [], []
    uni = ctx.cfg.universe()
    for tier in uni.tiers:
        for iv in ctx.cfg.interval_names:
            p = _side_dir(ctx.out, tier, side) / f"{iv}.tpm.json"
            if p.exists():
                keys.append(f"{tier}|{iv}")
                vecs.append(vectorize(_load_tpm(p)))
    return keys, np.array(vecs)


def stage_embed(ctx: Context) -> None:
    cfg = ctx.cfg
    any_side = False
    for s in cfg.side_list():
        side = s.value
        keys, x = _side_vectors(ctx, side)
        if len(keys) < 2:
            ctx.warn(f"embed {side}: fewer than two matrices; skipped")
            continue
        any_side = True
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            model, scores = pca_fit(x, cfg.pca_k)
        for w in caught:
            ctx.warn(f"embed {side}: {w.message}")
        d = ctx.out / "embedding" / side.lower()
        ctx.add(io.write_json(d / "pca.json", {
            "keys": keys, "k": model.k, "requested_k": cfg.pca_k,
            "explained_variance": model.explained_variance,
            "explained_ratio": model.explained_ratio,
            "cumulative_ratio": np.cumsum(model.explained_ratio),
            "mean": model.mean, "components": model.components, "scores": scores, "vectors": x,
        }))
        t = cfg.tsne
        rows = [["key", "tier", "interval", "x", "y"]]
        try:
            emb = tsne(scores, t.perplexity, t.iterations, t.learning_rate, t.seed, t.exaggeration,
                       t.exaggeration_iters)
        except ValueError as exc:
            ctx.warn(f"embed {side}: t-SNE skipped ({exc})")
            emb = None
        if emb is not None:
            for k, (px, py) in zip(keys, emb.points):
                tier, iv = k.split("|")
                rows.append([k, tier, iv, _num(px), _num(py)])
            ctx.add(io.write_json(d / "tsne.json", {"params": emb.params, "kl_divergence": emb.kl_divergence}))
        ctx.add(io.write_csv(d / "embedding.csv", rows))
    if not any_side:
        raise DataError("embed", "no side has enough matrices to embed")


def stage_cluster(ctx: Context) -> None:
    cfg = ctx.cfg
    done = False
    for s in cfg.side_list():
        side = s.value
        d = ctx.out / "embedding" / side.lower()
        pca_path, emb_path = d / "pca.json", d / "embedding.csv"
        if not pca_path.exists():
            continue
        ctx.require("cluster", [emb_path])
        pca = io.read_json(pca_path)
        keys = pca["keys"]
        emb_rows = io.read_csv(emb_path)[1:]
        xy = {r[0]: (r[3], r[4]) for r in emb_rows}
        if cfg.cluster_space == "pca":
            pts = np.array(pca["scores"], dtype=float)
        elif cfg.cluster_space == "raw":
            pts = np.array(pca["vectors"], dtype=float)
        else:
            if len(xy) != len(keys):
                raise DataError("cluster", f"t-SNE coordinates missing for side {side}")
            pts = np.array([[float(v) for v in xy[k]] for k in keys])
        dend = ward_cluster(pts)
        k = min(cfg.ward_k, len(keys))
        hier = cut_tree(dend, k)
        eps = cfg.dbscan_eps if cfg.dbscan_eps is not None else default_eps(pts, cfg.dbscan_min_pts)
        db = dbscan(pts, eps, cfg.dbscan_min_pts)
        names = [k_.replace("|", "_") for k_ in keys]
        ctx.add(io.write_json(d / "dendrogram.json", {
            **dend.to_dict(names), "space": cfg.cluster_space,
            "linkage": "ward (Lance-Williams on squared Euclidean distances)",
        }))
        ctx.add(io.write_text(d / "dendrogram.nwk", dend.to_newick(names) + "\n"))
        rows = [["key", "x", "y", "hier_label", "dbscan_label"]]
        for i, key in enumerate(keys):
            x_, y_ = xy.get(key, ("", ""))
            rows.append([key, x_, y_, int(hier[i]), int(db[i])])
        ctx.add(io.write_csv(d / "clusters.csv", rows))
        ctx.add(io.write_json(d / "clusters.json", {
            "space": cfg.cluster_space, "ward_k": k, "dbscan_eps": eps,
            "dbscan_eps_source": "config" if cfg.dbscan_eps is not None else "k-distance elbow",
            "dbscan_min_pts": cfg.dbscan_min_pts,
            "n_dbscan_clusters": int(db.max() + 1) if db.size else 0,
            "n_noise": int(np.sum(db == -1)),
        }))
        done = True
    if not done:
        ctx.require("cluster", [ctx.out / "embedding" / s.value.lower() / "pca.json" for s in cfg.side_list()])


# --------------------------------------------------------------------- jsd


def stage_jsd(ctx: Context) -> None:
    cfg = ctx.cfg
    uni = cfg.universe()
    produced = False
    for tier in uni.tiers:
        for s in cfg.side_list():
            side = s.value
            d = _side_dir(ctx.out, tier, side)
            paths = [d / f"{iv}.stationary.csv" for iv in cfg.interval_names]
            have = [p for p in paths if p.exists()]
            if len(have) < len(paths):
                if have:
                    ctx.warn(f"jsd {tier} {side}: {len(paths) - len(have)} stationary files missing; skipped")
                continue
            dists = []
            for p in paths:
                rows = io.read_csv(p, cfg.delimiter)
                v = np.array([float(x) for x in rows[1]])
                dists.append(v / v.sum())
            jm = jsd_matrix(dists, cfg.interval_names, cfg.jsd_base)
            ctx.add(io.write_csv(d / "jsd.csv", jm.to_rows(4), cfg.delimiter))
            if "svg" in cfg.formats:
                ctx.add(io.write_text(d / "jsd.svg", io.svg_heatmap(
                    jm.values, jm.keys, jm.keys, f"{tier} {side} JSD (base {cfg.jsd_base:g})", decimals=4)))
            produced = True
    if not produced:
        ctx.require("jsd", [_side_dir(ctx.out, t, s.value) / f"{iv}.stationary.csv"
                            for t in uni.tiers for s in cfg.side_list() for iv in cfg.interval_names])


# ------------------------------------------------------------------ report


def stage_report(ctx: Context) -> None:
    cfg = ctx.cfg
    need = [ctx.out / "ingest" / "ingestion_report.json",
            ctx.out / "independence" / "gtest_summary.csv",
            ctx.out / "metrics" / "metrics_table.csv"]
    ctx.require("report", need)
    ing = io.read_json(need[0])
    lines = ["# Limit-order price-change Markov chain report", ""]
    lines += ["## Ingestion", "", f"- rows read: {ing['rows_read']}"]
    for k, v in ing["rows_kept"].items():
        lines.append(f"- rows kept ({k}): {v}")
    for k, v in ing["rows_rejected"].items():
        lines.append(f"- rows rejected ({k}): {v}")
    lines += ["", "## Independence (G-test, mean over days)", "",
              "| tier | interval | side | mean G | mean df | mean p | reject |", "|---|---|---|---|---|---|---|"]
    for r in io.read_csv(need[1])[1:]:
        lines.append(f"| {r[0]} | {r[1]} | {r[2]} | {float(r[4]):.1f} | {float(r[5]):.1f} | "
                     f"{float(r[6]):.3g} | {float(r[7]):.2f} |")
    lines += ["", "## Chain metrics", ""]
    rows = io.read_csv(need[2], cfg.delimiter)
    lines.append("| " + " | ".join(rows[0]) + " |")
    lines.append("|" + "---|" * len(rows[0]))
    for r in rows[1:]:
        lines.append("| " + " | ".join(r[:2] + [f"{float(v):.3f}" if v else "" for v in r[2:]]) + " |")
    for s in cfg.side_list():
        cpath = ctx.out / "embedding" / s.value.lower() / "clusters.csv"
        if cpath.exists():
            lines += ["", f"## Clusters ({s.value})", "", "| key | ward | dbscan |", "|---|---|---|"]
            for r in io.read_csv(cpath)[1:]:
                lines.append(f"| {r[0]} | {r[3]} | {r[4]} |")
    uni = cfg.universe()
    for tier in uni.tiers:
        for s in cfg.side_list():
            jp = _side_dir(ctx.out, tier, s.value) / "jsd.csv"
            if jp.exists():
                rows = io.read_csv(jp, cfg.delimiter)
                lines += ["", f"## JSD between interval stationary distributions ({tier}, {s.value})", ""]
                lines.append("| " + " | ".join(rows[0]) + " |")
                lines.append("|" + "---|" * len(rows[0]))
                for r in rows[1:]:
                    lines.append("| " + " | ".join(r) + " |")
    ctx.add(io.write_text(ctx.out / "report.md", "\n".join(lines) + "\n"))


STAGES = {
    "ingest": stage_ingest,
    "estimate": stage_estimate,
    "metrics": stage_metrics,
    "embed": stage_embed,
    "cluster": stage_cluster,
    "jsd": stage_jsd,
    "report": stage_report,
}


# ---------------------------------------------------------------- manifest


@dataclass
class RunManifest:
    config_digest: str
    inputs: Dict[str, str]
    artifacts: Dict[str, dict]
    timings: Dict[str, float]
    warnings: List[str]
    cells: Dict[str, str]
    status: str = "complete"
    error: Optional[str] = None

    @property
    def all_reproduced(self) -> Optional[bool]:
        flags = [a.get("reproduced") for a in self.artifacts.values()]
        if not flags or any(f is None for f in flags):
            return None
        return all(flags)

    def to_dict(self) -> dict:
        return {
            "config_digest": self.config_digest,
            "inputs": self.inputs,
            "artifacts": self.artifacts,
            "timings_s": self.timings,
            "warnings": self.warnings,
            "cells": self.cells,
            "status": self.status,
            "error": self.error,
            "all_reproduced": self.all_reproduced,
        }


def run_pipeline(cfg: RunConfig, stages: Optional[List[str]] = None, dump_sequences: bool = False) -> RunManifest:
    """Run the requested stages (default: all) and write ``manifest.json``.

    Raises :class:`PipelineError` on failure after recording the partial
    manifest (when anything was written).
    """
    out = Path(cfg.output_dir)
    ctx = Context(cfg, out)
    for t, iv, s in ctx.cell_keys():
        ctx.cells[cell_id(t, iv, s)] = "pending"
    previous = {}
    prev_path = out / "manifest.json"
    if prev_path.exists():
        try:
            previous = io.read_json(prev_path).get("artifacts", {})
        except (ValueError, OSError):
            previous = {}
    timings: Dict[str, float] = {}
    error: Optional[PipelineError] = None
    for name in stages or list(STAGES):
        t0 = time.perf_counter()
        try:
            if name == "ingest":
                stage_ingest(ctx, dump_sequences)
            else:
                STAGES[name](ctx)
        except PipelineError as exc:
            error = exc
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            error = NumericError(name, str(exc))
        timings[name] = round(time.perf_counter() - t0, 4)
        if error is not None:
            break
    if error is not None and not ctx.written:
        raise error
    inputs = {}
    for f in io.list_inputs(cfg.inputs):
        if f.is_file():
            inputs[f.name] = io.sha256_file(f)
    arts = {}
    files = sorted(p for p in out.rglob("*") if p.is_file() and p != prev_path) if out.exists() else []
    for p in files:
        rel = p.relative_to(out).as_posix()
        digest = io.sha256_file(p)
        entry = {"sha256": digest}
        if rel in previous:
            entry["reproduced"] = previous[rel].get("sha256") == digest
        arts[rel] = entry
    for t, iv, s in ctx.cell_keys():
        key = cell_id(t, iv, s)
        if ctx.cells[key] == "pending" and (_side_dir(out, t, s) / f"{iv}.tpm.json").exists():
            ctx.cells[key] = "ok"
    manifest = RunManifest(cfg.digest(), inputs, arts, timings, ctx.warnings, ctx.cells,
                           "incomplete" if error else "complete", str(error) if error else None)
    io.write_json(prev_path, manifest.to_dict())
    if error is not None:
        raise error
    return manifest


def p55_profiles(out_dir, cfg: RunConfig) -> Dict[Tuple[str, str], List[float]]:
    """Estimated neutral self-transition per interval, keyed by (tier, side)."""
    out = Path(out_dir)
    prof = {}
    for tier in cfg.universe().tiers:
        for s in cfg.side_list():
            vals = []
            for iv in cfg.interval_names:
                p = _side_dir(out, tier, s.value) / f"{iv}.tpm.json"
                vals.append(float(io.read_json(p)["p"][4][4]) if p.exists() else math.nan)
            prof[(tier, s.value)] = vals
    return prof
