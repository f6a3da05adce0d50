"""
Metrics report files
"""

import csv
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import orjson

from .types import MetricsReport, MetricsRow, SweepSummary

PathLike = Union[str, Path]

REPORT_JSON = "report.json"
REPORT_MARKDOWN = "report.md"
PROJECTION_CSV = "bos_projection.csv"
SWEEP_JSON = "sweep_summary.json"
SWEEP_MARKDOWN = "sweep_summary.md"

TABLE_COLUMNS: List[Tuple[str, str]] = [
    ("individual", "Individual"),
    ("detection_precision", "Detection P"),
    ("detection_recall", "Detection R"),
    ("micro_precision", "Micro P"),
    ("weighted_precision", "Weighted P"),
    ("weighted_recall", "Weighted R"),
    ("n_templates", "# templates"),
    ("n_gt_syllables", "# GT syllables"),
]
SWEEP_METRICS = ["detection_precision", "detection_recall", "micro_precision", "weighted_precision", "weighted_recall"]


def _dump(model) -> bytes:
    return orjson.dumps(model.model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS) + b"\n"


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def render_markdown(report: MetricsReport) -> str:
    """Per-individual metrics table plus the retrieval block"""
    header = "| " + " | ".join(title for _, title in TABLE_COLUMNS) + " |"
    divider = "|" + "|".join("---" for _ in TABLE_COLUMNS) + "|"
    lines = [
        f"# Annotation report ({report.mode} setup)",
        "",
        f"fingerprint `{report.fingerprint}`, seed {report.seed}, support {report.support_minutes:g} min, IoU >= {report.iou_min:g}",
        "",
        header,
        divider,
    ]
    for row in list(report.rows) + [report.average]:
        lines.append("| " + " | ".join(_cell(getattr(row, key)) for key, _ in TABLE_COLUMNS) + " |")

    if report.bos is not None:
        lines += [
            "",
            "## Bag of syllables",
            "",
            f"- songs: {report.bos.n_songs}",
            f"- mAP: {_cell(report.bos.map)}",
            f"- mAP@{report.bos.k}: {_cell(report.bos.map_at_k)}",
        ]
        if report.bos.skipped_queries:
            lines.append(f"- skipped queries: {', '.join(report.bos.skipped_queries)}")
    if report.template_sharing is not None:
        lines += ["", f"Templates are shared by {report.template_sharing:.2f} individuals on average."]
    return "\n".join(lines) + "\n"


def write_report(report: MetricsReport, directory: PathLike) -> Path:
    """Write ``report.json`` and ``report.md``; returns the JSON path"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    json_path = directory / REPORT_JSON
    json_path.write_bytes(_dump(report))
    (directory / REPORT_MARKDOWN).write_text(render_markdown(report), encoding="utf-8")
    return json_path


def read_report(path: PathLike) -> MetricsReport:
    """Parse a report written by ``write_report``"""
    return MetricsReport.model_validate(orjson.loads(Path(path).read_bytes()))


def write_projection_csv(
    rows: Sequence[Tuple[str, str, float, float]],
    path: PathLike,
) -> Path:
    """Write ``recording_id,individual,pc1,pc2`` rows"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(["recording_id", "individual", "pc1", "pc2"])
        for recording_id, individual, pc1, pc2 in rows:
            writer.writerow([recording_id, individual, repr(float(pc1)), repr(float(pc2))])
    return path


def render_sweep_markdown(summary: SweepSummary) -> str:
    """Average row of every support size, mean +- std over seeds"""
    header = "| Support (min) | " + " | ".join(SWEEP_METRICS) + " | median # templates |"
    lines = [f"# Support-size sweep ({summary.mode} setup)", "", header, "|" + "---|" * (len(SWEEP_METRICS) + 2)]
    for entry in summary.entries:
        cells = []
        for metric in SWEEP_METRICS:
            cell = entry.average.get(metric)
            if cell is None or cell.mean is None:
                cells.append("-")
            else:
                cells.append(f"{cell.mean:.3f} ± {cell.std or 0.0:.3f}")
        lines.append(f"| {entry.support_minutes:g} | " + " | ".join(cells) + f" | {_cell(entry.median_templates)} |")
    return "\n".join(lines) + "\n"


def write_sweep_summary(summary: SweepSummary, directory: PathLike) -> Path:
    """Write ``sweep_summary.json`` and its Markdown table"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    json_path = directory / SWEEP_JSON
    json_path.write_bytes(_dump(summary))
    (directory / SWEEP_MARKDOWN).write_text(render_sweep_markdown(summary), encoding="utf-8")
    return json_path


def average_row(rows: Sequence[MetricsRow]) -> MetricsRow:
    """Mean of every numeric field over rows where it is defined"""
    def mean(field: str) -> Optional[float]:
        values = [getattr(row, field) for row in rows if getattr(row, field) is not None]
        return sum(values) / len(values) if values else None

    return MetricsRow(
        individual="average",
        detection_precision=mean("detection_precision"),
        detection_recall=mean("detection_recall"),
        micro_precision=mean("micro_precision"),
        weighted_precision=mean("weighted_precision"),
        weighted_recall=mean("weighted_recall"),
        n_templates=mean("n_templates"),
        n_gt_syllables=None,
        n_detections=sum(row.n_detections or 0 for row in rows),
        n_gt_events=sum(row.n_gt_events or 0 for row in rows),
    )
