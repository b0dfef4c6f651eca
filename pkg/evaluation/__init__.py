"""
评估模块

- harness: rollout、干预成本、策略报告与对比
- report: CSV 输出
"""
from evaluation.harness import (
    ComparisonTables,
    EpisodeTrace,
    PolicyReport,
    StepRecord,
    build_tables,
    compare,
    dominates,
    evaluate_policy,
    intervention_cost,
    rollout,
)
from evaluation.report import write_comparison, write_frame

__all__ = [
    'ComparisonTables',
    'EpisodeTrace',
    'PolicyReport',
    'StepRecord',
    'build_tables',
    'compare',
    'dominates',
    'evaluate_policy',
    'intervention_cost',
    'rollout',
    'write_comparison',
    'write_frame',
]
