"""
Report emission for finished runs.

Writes accuracy-curve, run-summary, sweep-summary, confusion-matrix and
prediction-correlation CSVs, SVG line charts, class statistic images as
binary PGM/PPM, and a markdown summary rendered from a jinja2 template.
"""

import html
from collections.abc import Sequence
from datetime import datetime
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import structlog
from jinja2 import Environment, FileSystemLoader, TemplateError, select_autoescape

from permubench.config import settings
from permubench.models.dataset import DatasetKind, LabeledDataset
from permubench.models.run_record import RunRecord

from .analysis import (
    REFERENCE_ACCURACY,
    REFERENCE_MEAN_CORRELATION,
    REFERENCE_PREDICTION_CORRELATION,
    UndefinedCorrelationError,
    per_class_accuracy_delta,
    prediction_correlation,
    spearman,
)
from .dataset_service import class_mean_std
from .harness import write_curve_csv

logger = structlog.get_logger("permubench.report")

TEMPLATE_DIR = Path(__file__).parent.parent / "templates" / "report"

COLORS = [
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#ff7f0e",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
]


class ReportError(Exception):
    """Raised when report files cannot be produced."""

    pass


def _to_bytes(grid: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(grid, 0.0, 1.0) * 255).astype(np.uint8)


def write_pnm(grid: np.ndarray, path: Path | str) -> Path:
    """
    Write an (H, W, 1) or (H, W, 3) grid with values in [0, 1] as binary
    PGM (P5) or PPM (P6) with max value 255.
    """
    path = Path(path)
    if grid.ndim != 3 or grid.shape[2] not in (1, 3):
        raise ReportError(f"PNM images need shape (H, W, 1) or (H, W, 3), got {grid.shape}")
    height, width, channels = grid.shape
    magic = "P5" if channels == 1 else "P6"
    header = f"{magic}\n{width} {height}\n255\n".encode("ascii")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header + _to_bytes(grid).tobytes())
    except OSError as e:
        raise ReportError(f"cannot write {path}: {e}") from e
    return path


def write_sample_grid(images: np.ndarray, path: Path | str, columns: int = 8, padding: int = 1) -> Path:
    """Mosaic of (N, H, W, C) images, row-major, separated by black padding."""
    if images.ndim != 4 or len(images) == 0:
        raise ReportError(f"sample grid needs a non-empty (N, H, W, C) batch, got {images.shape}")
    n, height, width, channels = images.shape
    columns = max(1, min(columns, n))
    rows = -(-n // columns)
    mosaic = np.zeros(
        (rows * (height + padding) + padding, columns * (width + padding) + padding, channels),
        dtype=np.float64,
    )
    for index in range(n):
        r, c = divmod(index, columns)
        top = padding + r * (height + padding)
        left = padding + c * (width + padding)
        mosaic[top : top + height, left : left + width, :] = images[index]
    return write_pnm(mosaic, path)


def write_line_chart_svg(
    path: Path | str,
    title: str,
    x_label: str,
    y_label: str,
    series: Sequence[tuple[str, Sequence[tuple[float, float]]]],
    y_range: tuple[float, float] = (0.0, 1.0),
) -> Path:
    """
    Self-contained SVG 1.1 line chart with axes, ticks and a legend.

    Every series becomes exactly one <polyline>; other shapes use <line>,
    <circle>, <rect> and <text>.
    """
    path = Path(path)
    width, height = 960, 560
    left, right, top, bottom = 80, 240, 60, 80
    plot_w = width - left - right
    plot_h = height - top - bottom

    xs = [x for _, points in series for x, _ in points]
    if not xs:
        raise ReportError("line chart needs at least one point")
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = y_range
    x_span = (x_max - x_min) or 1.0
    y_span = (y_max - y_min) or 1.0

    def px(x: float) -> float:
        return left + (x - x_min) / x_span * plot_w

    def py(y: float) -> float:
        return top + plot_h - (y - y_min) / y_span * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="32" text-anchor="middle" font-size="20" '
        f'font-family="sans-serif">{html.escape(title)}</text>',
    ]

    for i in range(6):
        value = y_min + y_span * i / 5
        y = py(value)
        parts.append(
            f'<line x1="{left}" y1="{y:.2f}" x2="{left + plot_w}" y2="{y:.2f}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="12" '
            f'font-family="sans-serif">{value:.2f}</text>'
        )
    for x in sorted(set(xs)):
        parts.append(
            f'<text x="{px(x):.2f}" y="{top + plot_h + 20}" text-anchor="middle" font-size="12" '
            f'font-family="sans-serif">{x:g}</text>'
        )

    parts.append(
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="#000000" stroke-width="2"/>'
    )
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="#000000" stroke-width="2"/>')
    parts.append(
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 24}" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{html.escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="20" y="{top + plot_h / 2:.1f}" text-anchor="middle" font-size="14" font-family="sans-serif" '
        f'transform="rotate(-90 20 {top + plot_h / 2:.1f})">{html.escape(y_label)}</text>'
    )

    legend_x = left + plot_w + 20
    for index, (label, points) in enumerate(series):
        color = COLORS[index % len(COLORS)]
        ordered = sorted(points)
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in ordered)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        for x, y in ordered:
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        ly = top + 10 + index * 24
        parts.append(
            f'<line x1="{legend_x}" y1="{ly}" x2="{legend_x + 24}" y2="{ly}" stroke="{color}" stroke-width="3"/>'
        )
        parts.append(
            f'<text x="{legend_x + 32}" y="{ly + 4}" font-size="13" font-family="sans-serif">{html.escape(label)}</text>'
        )
    parts.append("</svg>")

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    except OSError as e:
        raise ReportError(f"cannot write {path}: {e}") from e
    return path


class ReportService:
    """
    Service for turning run records into report files.

    Output goes to the directory passed to each call, or settings.report_dir.
    """

    def __init__(self) -> None:
        self.template_env = Environment(
            loader=FileSystemLoader(TEMPLATE_DIR),
            autoescape=select_autoescape(["html", "xml"]),
            trim_blocks=True,
            lstrip_blocks=True,
        )
        self.template_env.filters["percent"] = self._format_percent
        self.template_env.filters["signed_percent"] = self._format_signed_percent
        self.template_env.filters["coefficient"] = self._format_coefficient

    def emit_report(self, records: Sequence[RunRecord], out_dir: Path | str | None = None) -> list[Path]:
        """
        Write every report file for a set of run records.

        The first completed record with a confusion matrix is the baseline
        of the prediction-correlation tables.

        Args:
            records: Run records, completed or failed
            out_dir: Target directory, settings.report_dir by default

        Returns:
            Paths of the written files

        Raises:
            ReportError: If no records are given or the directory is not writable
        """
        if not records:
            raise ReportError("no run records to report")
        out = Path(out_dir if out_dir is not None else settings.report_dir)
        logger.info("Emitting report", records=len(records), out_dir=str(out))

        written: list[Path] = []
        try:
            out.mkdir(parents=True, exist_ok=True)
            completed = [r for r in records if r.completed]

            runs = self._runs_frame(records)
            runs.to_csv(out / "runs.csv", index=False, lineterminator="\n")
            written.append(out / "runs.csv")

            for record in completed:
                written.append(write_curve_csv(record, out / "curves" / f"{record.name}.csv"))
                if record.confusion is not None:
                    cm = record.confusion
                    frame = pd.DataFrame(cm.as_array(), index=list(cm.class_names), columns=list(cm.class_names))
                    target = out / "confusion" / f"{record.name}.csv"
                    target.parent.mkdir(parents=True, exist_ok=True)
                    frame.to_csv(target, index_label="true", lineterminator="\n")
                    written.append(target)

            if completed:
                written.append(
                    write_line_chart_svg(
                        out / "accuracy.svg",
                        "Test accuracy per epoch",
                        "epoch",
                        "test accuracy",
                        [(r.name, [(m.epoch, m.test_accuracy) for m in r.epochs]) for r in completed],
                    )
                )

            sweeps = self._sweep_sections(records, out, written)
            correlations, baseline = self._correlation_sections(completed, out, written)
        except OSError as e:
            raise ReportError(f"cannot write report to {out}: {e}") from e

        summary_path = out / "summary.md"
        context = self._template_context(records, sweeps, correlations, baseline)
        try:
            rendered = self.template_env.get_template("summary.md").render(**context)
            summary_path.write_text(rendered, encoding="utf-8")
        except (TemplateError, OSError) as e:
            raise ReportError(f"cannot render {summary_path}: {e}") from e
        written.append(summary_path)

        logger.info("Report written", files=len(written), out_dir=str(out))
        return written

    def write_class_statistics(self, dataset: LabeledDataset, out_dir: Path | str | None = None) -> list[Path]:
        """
        Per-class mean and standard deviation images.

        Means are written on the [0, 1] intensity scale; standard deviations
        are scaled by their largest value over all classes. One-channel data
        gives PGM files, three-channel data PPM files.
        """
        out = Path(out_dir if out_dir is not None else settings.report_dir)
        stats = class_mean_std(dataset)
        ext = "pgm" if dataset.image_shape[2] == 1 else "ppm"
        std_max = max(float(std.max()) for _, std in stats.values()) or 1.0
        written: list[Path] = []
        for k, (mean, std) in stats.items():
            written.append(write_pnm(mean, out / f"mean_{k:02d}.{ext}"))
            written.append(write_pnm(std / std_max, out / f"std_{k:02d}.{ext}"))
        logger.info("Class statistics written", classes=len(stats), out_dir=str(out))
        return written

    def _runs_frame(self, records: Sequence[RunRecord]) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "run": r.name,
                    "dataset": r.config.dataset.kind.value,
                    "model": r.config.model.value,
                    "randomization": r.permutation or r.config.randomization.describe(),
                    "channels": r.config.channels.value,
                    "status": r.status.value,
                    "peak_test_accuracy": r.peak_test_accuracy,
                    "final_test_accuracy": r.final_test_accuracy,
                    "error_field": r.error_field,
                }
                for r in records
            ]
        )

    def _sweep_sections(
        self, records: Sequence[RunRecord], out: Path, written: list[Path]
    ) -> list[dict[str, Any]]:
        sections: list[dict[str, Any]] = []
        axes = sorted({r.sweep_axis for r in records if r.sweep_axis is not None})
        for axis in axes:
            members = [r for r in records if r.sweep_axis == axis]
            frame = pd.DataFrame(
                [
                    {
                        "value": r.sweep_value,
                        "run": r.name,
                        "status": r.status.value,
                        "peak_test_accuracy": r.peak_test_accuracy,
                        "patches_per_side": r.metadata.get("patches_per_side"),
                    }
                    for r in members
                ]
            )
            target = out / f"sweep_{axis}.csv"
            frame.to_csv(target, index=False, lineterminator="\n")
            written.append(target)

            parameter = "patches per side" if axis == "patch_side" else axis
            points = [
                (
                    float(r.metadata["patches_per_side"] if axis == "patch_side" else r.sweep_value),  # type: ignore[arg-type]
                    float(r.peak_test_accuracy),  # type: ignore[arg-type]
                )
                for r in members
                if r.completed and axis in ("patch_side", "distance")
            ]
            trend = None
            if points:
                written.append(
                    write_line_chart_svg(
                        out / f"sweep_{axis}.svg",
                        f"Peak test accuracy over {parameter}",
                        parameter,
                        "peak test accuracy",
                        [(axis, points)],
                    )
                )
                if len(points) >= 2:
                    try:
                        trend = spearman([x for x, _ in points], [y for _, y in points])
                    except UndefinedCorrelationError:
                        logger.warning("Sweep trend undefined", axis=axis)
            sections.append(
                {
                    "axis": axis,
                    "parameter": parameter,
                    "trend": trend,
                    "rows": [
                        {"value": r.sweep_value, "run": r.name, "status": r.status.value, "peak": r.peak_test_accuracy}
                        for r in members
                    ],
                }
            )
        return sections

    def _correlation_sections(
        self, completed: Sequence[RunRecord], out: Path, written: list[Path]
    ) -> tuple[list[dict[str, Any]], str | None]:
        with_cm = [r for r in completed if r.confusion is not None]
        if len(with_cm) < 2:
            return [], None
        baseline = with_cm[0]
        assert baseline.confusion is not None
        rows: list[dict[str, Any]] = []
        sections: list[dict[str, Any]] = []
        for other in with_cm[1:]:
            assert other.confusion is not None
            if other.confusion.class_names != baseline.confusion.class_names:
                logger.warning("Skipping correlation with different class table", run=other.name)
                continue
            result = prediction_correlation(baseline.confusion, other.confusion)
            delta = per_class_accuracy_delta(baseline.confusion, other.confusion)
            reference = baseline.config.dataset.kind == DatasetKind.CIFAR10
            section_rows = []
            for j, name in enumerate(result.class_names):
                coefficient = result.coefficients[j]
                delta_j = None if np.isnan(delta[j]) else float(delta[j])
                rows.append(
                    {
                        "baseline": baseline.name,
                        "run": other.name,
                        "class": name,
                        "correlation": coefficient,
                        "accuracy_delta": delta_j,
                    }
                )
                ref = REFERENCE_PREDICTION_CORRELATION.get(name)
                section_rows.append(
                    {
                        "name": name,
                        "coefficient": coefficient,
                        "delta": delta_j,
                        "reference": f"{ref[0]:.3f} / {ref[1]:.3f}" if ref else "",
                    }
                )
            sections.append({"other": other.name, "rows": section_rows, "mean": result.mean, "reference": reference})
        if rows:
            target = out / "correlation.csv"
            pd.DataFrame(rows).to_csv(target, index=False, lineterminator="\n")
            written.append(target)
        return sections, baseline.name

    def _template_context(
        self,
        records: Sequence[RunRecord],
        sweeps: list[dict[str, Any]],
        correlations: list[dict[str, Any]],
        baseline: str | None,
    ) -> dict[str, Any]:
        kinds = sorted({r.config.dataset.kind for r in records}, key=lambda k: k.value)
        return {
            "creation_date": datetime.now().strftime("%Y-%m-%d %H:%M"),
            "records": records,
            "runs": [
                {
                    "name": r.name,
                    "dataset": r.config.dataset.kind.value,
                    "model": r.config.model.value,
                    "randomization": r.permutation or r.config.randomization.describe(),
                    "channels": r.config.channels.value,
                    "status": r.status.value,
                    "peak": r.peak_test_accuracy,
                    "final": r.final_test_accuracy,
                }
                for r in records
            ],
            "failures": [
                {"name": r.name, "field": r.error_field, "error": r.error} for r in records if not r.completed
            ],
            "sweeps": sweeps,
            "correlations": correlations,
            "baseline": baseline,
            "reference_mean": REFERENCE_MEAN_CORRELATION,
            "confusions": [
                {"name": r.name, "top": r.confusion.top_confusions(3)}
                for r in records
                if r.confusion is not None and r.confusion.top_confusions(3)
            ],
            "references": [(k.value, REFERENCE_ACCURACY[k]) for k in kinds],
        }

    def _format_percent(self, value: float | None) -> str:
        if value is None:
            return "n/a"
        return f"{value * 100:.2f}%"

    def _format_signed_percent(self, value: float | None) -> str:
        if value is None:
            return "n/a"
        return f"{value * 100:+.2f} pts"

    def _format_coefficient(self, value: float | None) -> str:
        if value is None:
            return "undefined"
        return f"{value:.3f}"
