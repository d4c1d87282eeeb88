"""Command line interface: ``proctail {stats,synth,cluster,sweep,analyze}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .eventlog import ColumnMap, CustomerContactRule, DurationMode, PreprocessSpec, write_csv
from .eventlog._time import parse_iso8601
from .exceptions import ProcTailError
from .pipeline import EXIT_ANALYSIS, EXIT_OK, EXIT_USAGE, PipelineConfig, StageError, run_pipeline
from .synth import SynthSpec, generate_synthetic
from .vectorizer import NGramConfig

logger = logging.getLogger("proctail")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _k_range(text) -> tuple[int, int]:
    if isinstance(text, (list, tuple)):
        lo, hi = text
    else:
        lo, _, hi = str(text).partition(":")
    try:
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input")
    g.add_argument("--input", help="event log file (.xes or .csv)")
    g.add_argument("--format", choices=["xes", "csv"])
    g.add_argument("--config", help="JSON or YAML file with default settings; flags win")
    g.add_argument("--strict", action="store_true", default=None,
                   help="fail on the first malformed event instead of skipping it")
    g.add_argument("--delimiter")
    g.add_argument("--case-column")
    g.add_argument("--activity-column")
    g.add_argument("--timestamp-column")
    g.add_argument("--resource-column")
    g.add_argument("--lifecycle-column")
    g.add_argument("--timestamp-format", help="strptime pattern or ISO8601 (default)")
    g = p.add_argument_group("preprocessing")
    g.add_argument("--require-start", action="append", metavar="ACTIVITY")
    g.add_argument("--require-end", action="append", metavar="ACTIVITY")
    g.add_argument("--min-events", type=int)
    g.add_argument("--window", nargs=2, metavar=("FROM", "TO"))
    g = p.add_argument_group("analysis")
    g.add_argument("--k", type=int, help="number of process variants (clusters)")
    g.add_argument("--k-sweep", type=_k_range, metavar="LOW:HIGH")
    g.add_argument("--pareto", type=float, help="short-head fraction (default 0.2)")
    g.add_argument("--ngram", help="comma separated n-gram sizes (default 2,3)")
    g.add_argument("--no-sentinels", action="store_true", default=None)
    g.add_argument("--weighting", choices=["count", "binary"])
    g.add_argument("--duration-mode", choices=[m.value for m in DurationMode])
    g.add_argument("--contact-pattern", action="append", metavar="PATTERN",
                   help="activity label pattern marking customer contact (repeatable)")
    g.add_argument("--contact-attribute", help="event attribute flagging customer contact")
    g.add_argument("--cost-table", help="CSV with resource,cost columns")
    g.add_argument("--weights", help="nine comma separated indicator weights")
    g.add_argument("--out", help="output directory (default: out)")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int, help="accepted for compatibility; results never depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="proctail", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (("stats", "descriptive statistics of a log"),
                        ("cluster", "n-gram Ward clustering and dendrogram export"),
                        ("sweep", "cluster validity indices over a range of k"),
                        ("analyze", "full pipeline: clusters, indicators, long-tail report")):
        _common(sub.add_parser(name, help=help_))
    syn = sub.add_parser("synth", help="write a seeded synthetic CSV log")
    syn.add_argument("--config")
    syn.add_argument("--out", help="CSV file to write (default synthetic_log.csv)")
    syn.add_argument("--seed", type=int)
    syn.add_argument("--templates", type=int)
    syn.add_argument("--cases", type=int)
    syn.add_argument("--zipf", type=float)
    syn.add_argument("--min-length", type=int)
    syn.add_argument("--max-length", type=int)
    syn.add_argument("--activities", type=int)
    syn.add_argument("--resources", type=int)
    syn.add_argument("--contact-fraction", type=float)
    return parser


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must contain a mapping")
    return data


def _pick(flag, conf: dict, key: str, default=None):
    if flag is not None:
        return flag
    return conf.get(key, default)


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """Merge config-file values and flags (flags win) into a PipelineConfig."""
    conf = _load_config(args.config)
    cols = conf.get("columns", {}) or {}
    pre = conf.get("preprocess", {}) or {}

    patterns = _pick(args.contact_pattern, conf, "contact_patterns")
    attribute = _pick(args.contact_attribute, conf, "contact_attribute")
    if patterns and attribute:
        raise UsageError("use either contact patterns or a contact attribute, not both")
    if patterns:
        rule = CustomerContactRule.from_patterns(patterns if isinstance(patterns, list) else [patterns])
    elif attribute:
        rule = CustomerContactRule.from_attribute(attribute)
    else:
        rule = CustomerContactRule()

    cmap = ColumnMap(
        case_id_column=_pick(args.case_column, cols, "case_id", "case_id"),
        activity_column=_pick(args.activity_column, cols, "activity", "activity"),
        timestamp_column=_pick(args.timestamp_column, cols, "timestamp", "timestamp"),
        resource_column=_pick(args.resource_column, cols, "resource", "resource"),
        lifecycle_column=_pick(args.lifecycle_column, cols, "lifecycle", "lifecycle"),
        timestamp_format=_pick(args.timestamp_format, cols, "timestamp_format", "ISO8601"),
        customer_contact_rule=rule,
    )
    window = _pick(args.window, pre, "window")
    spec = PreprocessSpec(
        required_start_activities=_pick(args.require_start, pre, "start"),
        required_end_activities=_pick(args.require_end, pre, "end"),
        min_events=int(_pick(args.min_events, pre, "min_events", 1)),
        drop_cases_outside=tuple(parse_iso8601(str(t)) for t in window) if window else None,
    )
    ngram_sizes = _pick(args.ngram, conf, "ngram", "2,3")
    if isinstance(ngram_sizes, (list, tuple)):
        ngram_sizes = ",".join(str(s) for s in ngram_sizes)
    no_sentinels = _pick(args.no_sentinels, conf, "no_sentinels", False)
    ngram = NGramConfig.parse(str(ngram_sizes), boundary_sentinels=not no_sentinels,
                              weighting=_pick(args.weighting, conf, "weighting", "count"))
    weights = _pick(args.weights, conf, "weights")
    if isinstance(weights, str):
        weights = [float(w) for w in weights.split(",")]
    if weights is not None and len(weights) != 9:
        raise UsageError("weights need exactly nine values")
    k_sweep = _pick(args.k_sweep, conf, "k_sweep")
    return PipelineConfig(
        input=_pick(args.input, conf, "input"),
        format=_pick(args.format, conf, "format"),
        column_map=cmap,
        delimiter=_pick(args.delimiter, conf, "delimiter", ","),
        preprocess=spec,
        ngram=ngram,
        k=_pick(args.k, conf, "k"),
        k_sweep=_k_range(k_sweep) if k_sweep is not None else None,
        pareto_fraction=float(_pick(args.pareto, conf, "pareto", 0.2)),
        contact_rule=rule,
        duration_mode=DurationMode(_pick(args.duration_mode, conf, "duration_mode", "next_event")),
        cost_table=_pick(args.cost_table, conf, "cost_table"),
        weights=tuple(float(w) for w in weights) if weights is not None else None,
        out_dir=_pick(args.out, conf, "out", "out"),
        strict=bool(_pick(args.strict, conf, "strict", False)),
        seed=int(_pick(args.seed, conf, "seed", 42)),
        threads=_pick(args.threads, conf, "threads"),
    )


def _run_synth(args) -> int:
    conf = _load_config(args.config)
    defaults = SynthSpec()
    spec = SynthSpec(
        n_templates=_pick(args.templates, conf, "templates", defaults.n_templates),
        zipf_exponent=float(_pick(args.zipf, conf, "zipf", defaults.zipf_exponent)),
        length_range=(_pick(args.min_length, conf, "min_length", defaults.length_range[0]),
                      _pick(args.max_length, conf, "max_length", defaults.length_range[1])),
        n_activities=_pick(args.activities, conf, "activities", defaults.n_activities),
        n_resources=_pick(args.resources, conf, "resources", defaults.n_resources),
        contact_fraction=float(_pick(args.contact_fraction, conf, "contact_fraction",
                                     defaults.contact_fraction)),
        n_cases=_pick(args.cases, conf, "cases", defaults.n_cases),
        seed=_pick(args.seed, conf, "seed", defaults.seed),
    )
    out = Path(_pick(args.out, conf, "out", "synthetic_log.csv"))
    if out.suffix.lower() != ".csv":
        out = out / "synthetic_log.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    synth = generate_synthetic(spec)
    write_csv(synth.log, out)
    print(f"wrote {out}: {len(synth.log)} cases, {synth.log.n_events} events, "
          f"{spec.n_templates} templates (seed {spec.seed}, zipf {spec.zipf_exponent})")
    print("template case counts: " + ",".join(map(str, synth.template_counts.tolist())))
    return EXIT_OK


def _print_summary(summary: dict, files: list[str], out_dir: str) -> None:
    print(f"command: {summary['command']}")
    print(f"cases: {summary['n_cases']}  events: {summary['n_events']}")
    if "k" in summary:
        print(f"k: {summary['k']}")
    if "head_size" in summary:
        print(f"short head: {summary['head_size']} variants  long tail: {summary['tail_size']} variants")
        print(f"aggregate share head/tail: {summary['aggregate_head_share']:.2f}% / "
              f"{summary['aggregate_tail_share']:.2f}%")
    print("resolved config: " + json.dumps(summary["config"], sort_keys=True))
    print(f"outputs in {out_dir}: " + ", ".join(files))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return _run_synth(args)
        cfg = build_config(args)
        if cfg.input is None:
            raise UsageError("--input is required")
        if args.command == "analyze" and cfg.k is None:
            raise UsageError("--k is required for analyze")
        outcome = run_pipeline(cfg, args.command)
    except StageError as exc:
        print(f"proctail: error in {exc.stage}: {exc.cause}", file=sys.stderr)
        return exc.exit_code
    except UsageError as exc:
        print(f"proctail: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, yaml.YAMLError) as exc:
        print(f"proctail: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProcTailError as exc:
        print(f"proctail: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    _print_summary(outcome.summary, outcome.files, cfg.out_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
