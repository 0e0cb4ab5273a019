"""R-fold sampling, judge scoring, aggregation and dataset statistics."""

from .judge import aggregate, judge_sample, judged_query, parse_score
from .pipeline import DatasetBuild, build_dataset, load_dataset
from .sampler import sample_query
from .stats import SourceStats, dataset_stats, format_stats_table
from .types import DroppedQuery, JudgedQuery, JudgeScore, Sample, SampleSet

__all__ = [
    "DatasetBuild",
    "DroppedQuery",
    "JudgeScore",
    "JudgedQuery",
    "Sample",
    "SampleSet",
    "SourceStats",
    "aggregate",
    "build_dataset",
    "dataset_stats",
    "format_stats_table",
    "judge_sample",
    "judged_query",
    "load_dataset",
    "parse_score",
    "sample_query",
]
