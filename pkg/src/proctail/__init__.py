"""Process-variant discovery and long-tail prioritization for event logs.

Typical use::

    from proctail import parse_xes, analyze_log
    log = parse_xes("log.xes")
    result = analyze_log(log, k=150)
    result.contributions.aggregate.tail_share
"""
from .clustering import (ClusterAssignment, Dendrogram, ValidityReport, WardClustering, cut_dendrogram,
                         elbow_data, validity_sweep, ward_cluster)
from .eventlog import (UNKNOWN_RESOURCE, Case, ColumnMap, CustomerContactRule, DropReport, DurationMode, Event,
                       EventLog, PreprocessSpec, StatsReport, descriptive_stats, parse_csv, parse_xes, preprocess,
                       write_csv)
from .exceptions import AnalysisError, EmptyLogError, LogParseError, ProcTailError
from .indicators import (INDICATORS, ContextIndex, IndicatorTable, IndicatorVector, ResourceRegistry,
                         compute_indicator_table)
from .longtail import (ContributionReport, LongTailRanker, LongTailReport, NormalizedTable, aggregate_score,
                       contribution_analysis, distribution_export, normalize, rank_and_split)
from .pipeline import AnalysisResult, PipelineConfig, analyze_log, run_pipeline
from .synth import SynthSpec, generate_synthetic, generate_synthetic_log
from .vectorizer import (DistanceMatrix, FeatureMatrix, NGramConfig, NGramVectorizer, build_vector_space,
                         distance_matrix, trace_to_ngrams)

__version__ = "0.1.0"
