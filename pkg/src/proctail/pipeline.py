"""End-to-end orchestration: files in, reports out."""
from __future__ import annotations

import csv
import json
import logging
import os
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .clustering import (ClusterAssignment, Dendrogram, ValidityReport, cut_dendrogram, elbow_data,
                         validity_sweep, ward_cluster)
from .eventlog import (ColumnMap, CustomerContactRule, DropReport, DurationMode, EventLog, PreprocessSpec,
                       StatsReport, descriptive_stats, parse_csv, parse_xes, preprocess)
from .exceptions import EmptyLogError, LogParseError, ProcTailError
from .indicators import INDICATORS, ContextIndex, IndicatorTable, ResourceRegistry, compute_indicator_table
from .longtail import (ContributionReport, LongTailReport, NormalizedTable, contribution_analysis,
                       distribution_csv, distribution_export, normalize, rank_and_split, report_json)
from .vectorizer import FeatureMatrix, NGramConfig, build_vector_space

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_ANALYSIS = 0, 1, 2, 3


class StageError(ProcTailError):
    def __init__(self, stage: str, cause: BaseException, exit_code: int):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = exit_code


@contextmanager
def stage(name: str, exit_code: int = EXIT_ANALYSIS):
    try:
        yield
    except StageError:
        raise
    except (ProcTailError, ValueError, OSError, KeyError) as exc:
        code = EXIT_INPUT if isinstance(exc, (LogParseError, OSError)) else exit_code
        raise StageError(name, exc, code) from exc


@dataclass
class PipelineConfig:
    input: str | None = None
    format: str | None = None  # "xes" | "csv"; inferred from the extension when None
    column_map: ColumnMap = field(default_factory=ColumnMap)
    delimiter: str = ","
    preprocess: PreprocessSpec = field(default_factory=PreprocessSpec)
    ngram: NGramConfig = field(default_factory=NGramConfig)
    k: int | None = None
    k_sweep: tuple[int, int] | None = None
    pareto_fraction: float = 0.2
    contact_rule: CustomerContactRule = field(default_factory=CustomerContactRule)
    duration_mode: DurationMode = DurationMode.NEXT_EVENT
    cost_table: str | None = None
    weights: tuple[float, ...] | None = None
    out_dir: str = "out"
    strict: bool = False
    seed: int = 42
    threads: int | None = None

    def resolved_format(self) -> str:
        if self.format:
            return self.format.lower()
        suffix = Path(self.input or "").suffix.lower()
        return "xes" if suffix in (".xes", ".xml") else "csv"

    def describe(self) -> dict:
        """Every resolved setting, JSON-serializable."""
        cm = self.column_map
        pp = self.preprocess
        rule = self.contact_rule
        return {
            "input": self.input,
            "format": self.resolved_format(),
            "column_map": {
                "case_id_column": cm.case_id_column, "activity_column": cm.activity_column,
                "timestamp_column": cm.timestamp_column, "resource_column": cm.resource_column,
                "lifecycle_column": cm.lifecycle_column, "timestamp_format": cm.timestamp_format,
            },
            "delimiter": self.delimiter,
            "preprocess": {
                "required_start_activities": sorted(pp.required_start_activities or []) or None,
                "required_end_activities": sorted(pp.required_end_activities or []) or None,
                "min_events": pp.min_events,
                "window": [t.isoformat() for t in pp.drop_cases_outside] if pp.drop_cases_outside else None,
            },
            "ngram": {"sizes": list(self.ngram.sizes), "boundary_sentinels": self.ngram.boundary_sentinels,
                      "weighting": self.ngram.weighting.value},
            "k": self.k,
            "k_sweep": list(self.k_sweep) if self.k_sweep else None,
            "pareto_fraction": self.pareto_fraction,
            "contact_rule": {"mode": rule.mode.value, "patterns": list(rule.patterns),
                             "attribute": rule.attribute, "truthy_values": list(rule.truthy_values)},
            "duration_mode": DurationMode(self.duration_mode).value,
            "cost_table": self.cost_table,
            "weights": list(self.weights) if self.weights else None,
            "out_dir": self.out_dir,
            "strict": self.strict,
            "seed": self.seed,
            "threads": self.threads,
        }


def load_log(cfg: PipelineConfig) -> EventLog:
    if not cfg.input:
        raise LogParseError("no input file given")
    if cfg.resolved_format() == "xes":
        return parse_xes(cfg.input, contact_rule=cfg.contact_rule, strict=cfg.strict)
    cmap = cfg.column_map
    if cmap.customer_contact_rule != cfg.contact_rule:
        cmap = ColumnMap(cmap.case_id_column, cmap.activity_column, cmap.timestamp_column,
                         cmap.resource_column, cmap.lifecycle_column, cmap.timestamp_format,
                         cfg.contact_rule)
    return parse_csv(cfg.input, cmap, strict=cfg.strict, delimiter=cfg.delimiter)


def load_costs(path: str) -> dict[str, float]:
    """Read a ``resource,cost`` CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"resource", "cost"} <= set(reader.fieldnames):
            raise LogParseError(f"cost table {path} needs 'resource' and 'cost' columns")
        return {row["resource"]: float(row["cost"]) for row in reader}


@dataclass
class AnalysisResult:
    log: EventLog
    features: FeatureMatrix
    dendrogram: Dendrogram
    assignment: ClusterAssignment
    table: IndicatorTable
    normalized: NormalizedTable
    report: LongTailReport
    contributions: ContributionReport
    distributions: dict


def analyze_log(log: EventLog, k: int, *, ngram: NGramConfig = NGramConfig(), pareto_fraction: float = 0.2,
                duration_mode: DurationMode | str = DurationMode.NEXT_EVENT,
                costs: Mapping[str, float] | None = None, weights=None,
                rule: CustomerContactRule | None = None) -> AnalysisResult:
    """Vectorize, cluster, score and split an already loaded log."""
    with stage("build_vector_space"):
        if not len(log):
            raise EmptyLogError("log has no cases after preprocessing")
        fm = build_vector_space(log, ngram)
    with stage("ward_cluster"):
        dendro = ward_cluster(fm)
    with stage("cut_dendrogram"):
        assignment = cut_dendrogram(dendro, k)
    with stage("compute_indicator_table"):
        registry = ResourceRegistry.from_log(log, costs)
        ctx = ContextIndex.from_log(log)
        table = compute_indicator_table(log, assignment, registry, ctx, duration_mode, rule)
    with stage("normalize"):
        nt = normalize(table)
    with stage("rank_and_split"):
        report = rank_and_split(nt, pareto_fraction, weights, k=k)
    with stage("contribution_analysis"):
        contrib = contribution_analysis(nt, report)
    with stage("distribution_export"):
        dists = distribution_export(nt, report)
    return AnalysisResult(log, fm, dendro, assignment, table, nt, report, contrib, dists)


class _OutputDir:
    """Collects outputs in a scratch directory and publishes them only on success."""

    def __init__(self, out_dir: str):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=self.out))
        self.files: list[str] = []

    def write(self, name: str, text: str) -> None:
        with open(self.tmp / name, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.files.append(name)

    def write_json(self, name: str, data) -> None:
        self.write(name, json.dumps(data, indent=2, ensure_ascii=False) + "\n")

    def commit(self) -> list[str]:
        for name in self.files:
            os.replace(self.tmp / name, self.out / name)
        shutil.rmtree(self.tmp, ignore_errors=True)
        return list(self.files)

    def discard(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


def _assignment_csv(log: EventLog, assignment: ClusterAssignment) -> str:
    lines = ["case_id,cluster_id"]
    lines += [f"{_csv_field(c.case_id)},{lab}" for c, lab in zip(log.cases, assignment.labels.tolist())]
    return "\r\n".join(lines) + "\r\n"


def _csv_field(text: str) -> str:
    if any(ch in text for ch in ',"\r\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def _elbow_csv(d: Dendrogram) -> str:
    rows = ["k,merge_height"] + [f"{k},{h!r}" for k, h in elbow_data(d)]
    return "\r\n".join(rows) + "\r\n"


@dataclass
class PipelineOutcome:
    summary: dict
    files: list[str]
    result: AnalysisResult | None = None


def _load_and_preprocess(cfg: PipelineConfig) -> tuple[EventLog, DropReport, StatsReport]:
    with stage("parse", EXIT_INPUT):
        raw = load_log(cfg)
    with stage("preprocess"):
        log, drops = preprocess(raw, cfg.preprocess)
        if drops.empty_result:
            raise EmptyLogError("preprocessing dropped every case")
    with stage("descriptive_stats"):
        stats = descriptive_stats(log, cfg.duration_mode)
    return log, drops, stats


def run_pipeline(cfg: PipelineConfig, command: str = "analyze") -> PipelineOutcome:
    """Run one CLI command (``stats``, ``cluster``, ``sweep`` or ``analyze``).

    Raises
    ------
    StageError
        Naming the failing stage; nothing is left in ``cfg.out_dir``.
    """
    out = _OutputDir(cfg.out_dir)
    try:
        outcome = _run(cfg, command, out)
    except BaseException:
        out.discard()
        raise
    outcome.files = out.commit()
    return outcome


def _run(cfg: PipelineConfig, command: str, out: _OutputDir) -> PipelineOutcome:
    log, drops, stats = _load_and_preprocess(cfg)
    summary: dict = {"command": command, "config": cfg.describe(),
                     "n_cases": stats.n_cases, "n_events": stats.n_events,
                     "parse_warnings": len(log.warnings)}
    out.write_json("drop_report.json", drops.to_dict())
    out.write("stats.json", stats.to_json() + "\n")
    out.write("stats.csv", stats.to_csv())
    if command == "stats":
        out.write_json("summary.json", summary)
        return PipelineOutcome(summary, [])

    if command in ("cluster", "sweep"):
        with stage("build_vector_space"):
            fm = build_vector_space(log, cfg.ngram)
        with stage("ward_cluster"):
            dendro = ward_cluster(fm)
        out.write("dendrogram.json", dendro.to_json() + "\n")
        out.write("linkage.csv", dendro.to_csv())
        out.write("elbow.csv", _elbow_csv(dendro))
        if command == "sweep" or cfg.k_sweep:
            _write_sweep(cfg, fm, dendro, out)
        if command == "cluster" and cfg.k is not None:
            with stage("cut_dendrogram"):
                assignment = cut_dendrogram(dendro, cfg.k)
            out.write("assignment.csv", _assignment_csv(log, assignment))
            summary["k"] = cfg.k
            summary["cluster_sizes"] = assignment.sizes().tolist()
        out.write_json("summary.json", summary)
        return PipelineOutcome(summary, [])

    if command != "analyze":
        raise ValueError(f"unknown command {command!r}")
    if cfg.k is None:
        raise StageError("cut_dendrogram", ValueError("k is required for analyze"), EXIT_USAGE)
    costs = None
    if cfg.cost_table:
        with stage("load_costs", EXIT_INPUT):
            costs = load_costs(cfg.cost_table)
    result = analyze_log(log, cfg.k, ngram=cfg.ngram, pareto_fraction=cfg.pareto_fraction,
                         duration_mode=cfg.duration_mode, costs=costs, weights=cfg.weights)
    out.write("dendrogram.json", result.dendrogram.to_json() + "\n")
    out.write("linkage.csv", result.dendrogram.to_csv())
    out.write("elbow.csv", _elbow_csv(result.dendrogram))
    if cfg.k_sweep:
        _write_sweep(cfg, result.features, result.dendrogram, out)
    out.write("assignment.csv", _assignment_csv(log, result.assignment))
    out.write("indicators.csv", result.table.to_csv())
    out.write("indicators.json", result.table.to_json() + "\n")
    out.write("report.json", report_json(result.report, result.contributions, result.normalized) + "\n")
    for name, rows in result.distributions.items():
        out.write(f"distribution_{name}.csv", distribution_csv(rows))
    summary.update({
        "k": cfg.k,
        "head_size": len(result.report.head),
        "tail_size": len(result.report.tail),
        "aggregate_head_share": result.contributions.aggregate.head_share,
        "aggregate_tail_share": result.contributions.aggregate.tail_share,
    })
    out.write_json("summary.json", summary)
    return PipelineOutcome(summary, [], result)


def _write_sweep(cfg: PipelineConfig, fm: FeatureMatrix, dendro: Dendrogram, out: _OutputDir) -> ValidityReport:
    lo, hi = cfg.k_sweep or (2, min(dendro.n_leaves - 1, 30))
    with stage("validity_sweep"):
        if not 1 <= lo <= hi <= dendro.n_leaves:
            raise ValueError(f"k sweep {lo}..{hi} outside 1..{dendro.n_leaves}")
        report = validity_sweep(fm, dendro, range(lo, hi + 1))
    out.write("validity.csv", report.to_csv())
    return report


__all__ = ["AnalysisResult", "PipelineConfig", "PipelineOutcome", "StageError", "analyze_log",
           "load_costs", "load_log", "run_pipeline", "INDICATORS"]
