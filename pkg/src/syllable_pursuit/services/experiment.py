"""
Repeated splits and support-size sweep
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..config.config_loader import apply_overrides, config_fingerprint
from ..models.config_types import PipelineConfig
from ..storage.report import SWEEP_METRICS, write_sweep_summary
from ..storage.types import MetricsReport, SweepCell, SweepEntry, SweepSummary
from ..utils.logging_config import get_logger
from .pipeline import run_pipeline

logger = get_logger(__name__)


def run_directory(root: Path, support_minutes: float, seed: int) -> Path:
    """Output directory of one (support size, seed) run"""
    return root / "sweep" / f"{support_minutes:g}min" / f"seed{seed}"


def summarize(values: Sequence[Optional[float]]) -> SweepCell:
    """Mean and population standard deviation over the defined values"""
    defined = [value for value in values if value is not None]
    if not defined:
        return SweepCell()
    return SweepCell(mean=float(np.mean(defined)), std=float(np.std(defined)))


def aggregate(support_minutes: float, seeds: Sequence[int], reports: Sequence[MetricsReport]) -> SweepEntry:
    """Combine the reports of one support size"""
    individuals = sorted({row.individual for report in reports for row in report.rows})
    rows: Dict[str, Dict[str, SweepCell]] = {}
    for individual in individuals:
        matching = [row for report in reports for row in report.rows if row.individual == individual]
        rows[individual] = {metric: summarize([getattr(row, metric) for row in matching]) for metric in SWEEP_METRICS}

    average = {metric: summarize([getattr(report.average, metric) for report in reports]) for metric in SWEEP_METRICS}
    template_counts = [report.average.n_templates for report in reports if report.average.n_templates is not None]
    return SweepEntry(
        support_minutes=support_minutes,
        seeds=list(seeds),
        rows=rows,
        average=average,
        median_templates=float(np.median(template_counts)) if template_counts else None,
    )


def run_experiment(
    config: PipelineConfig,
    seeds: Sequence[int],
    support_minutes_values: Sequence[float],
    workers: Optional[int] = None,
) -> SweepSummary:
    """
    Run fit, annotate and eval for every support size and seed

    Each run writes under ``<output_root>/sweep/<minutes>min/seed<seed>/``;
    the summary lands in ``<output_root>``.
    """
    if not seeds or not support_minutes_values:
        raise ValueError("at least one seed and one support size are required")

    root = Path(config.paths.output_root)
    entries: List[SweepEntry] = []
    for minutes in sorted(support_minutes_values):
        reports = []
        for seed in seeds:
            run_config = apply_overrides(
                config,
                seed=seed,
                support_minutes=minutes,
                output_root=run_directory(root, minutes, seed),
            )
            logger.info("Sweep run started", support_minutes=minutes, seed=seed)
            reports.append(run_pipeline(run_config, workers))
        entries.append(aggregate(minutes, seeds, reports))

    summary = SweepSummary(fingerprint=config_fingerprint(config), mode=config.mode, entries=entries)
    write_sweep_summary(summary, root)
    logger.info("Sweep finished", support_sizes=len(entries), seeds=len(seeds))
    return summary
