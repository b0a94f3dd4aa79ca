"""Data ingestion, bundled reference tables, unit conversions, and reports.

Payload curves travel as CSV (`strain,force_n`, strain as a 0-1 fraction,
`#` comments). Reference measurement tables ship as versioned JSON resources
inside the package; their integrity is pinned by checksums. Plots are emitted
as minimal self-generated SVG so byte-level determinism stays testable.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

from .errors import DomainError, ParseError, ValidationError
from .pressure import G_DEFAULT
from .spring import PayloadCurve

DATASET_IDS = ("table1_payload", "table2_objects", "table3_submersion", "durability_constants")

CSV_HEADER = "strain,force_n"


@dataclass(frozen=True)
class ReferenceDataset:
    id: str
    version: int
    rows: tuple
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ReportSection:
    title: str
    metrics: dict  # name -> {"value": ..., "unit": ...}
    plot: str | None = None  # relative path


@dataclass(frozen=True)
class Report:
    sections: tuple
    format_version: int = 1

    def to_json(self):
        return {
            "format_version": self.format_version,
            "sections": [
                {"title": s.title, "metrics": s.metrics, "plot": s.plot}
                for s in self.sections
            ],
        }


def _dataset_bytes(dataset_id):
    if dataset_id not in DATASET_IDS:
        raise DomainError(f"unknown dataset {dataset_id!r}; choose from {DATASET_IDS}")
    return resources.files("twistgrip.data").joinpath(f"{dataset_id}.json").read_bytes()


def load_reference_dataset(dataset_id):
    """Load a bundled reference table by id."""
    doc = json.loads(_dataset_bytes(dataset_id))
    return ReferenceDataset(
        id=doc["id"],
        version=doc["version"],
        rows=tuple(doc["rows"]),
        meta=doc.get("meta", {}),
    )


def dataset_checksum(dataset_id):
    """SHA-256 of the bundled dataset file, hex-encoded."""
    return hashlib.sha256(_dataset_bytes(dataset_id)).hexdigest()


def read_payload_csv(path, strain_unit="fraction", skin_height=None):
    """Parse a payload curve CSV into a validated PayloadCurve.

    strain_unit is 'fraction' (strain already normalized) or 'absolute'
    (column holds deflection in meters; skin_height required to normalize).
    """
    if strain_unit not in ("fraction", "absolute"):
        raise DomainError(f"strain_unit must be 'fraction' or 'absolute', got {strain_unit!r}")
    if strain_unit == "absolute" and (skin_height is None or skin_height <= 0):
        raise DomainError("absolute strain unit requires a positive skin_height")

    strains, loads = [], []
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != CSV_HEADER:
                    raise ParseError(f"{path}:{lineno}: expected header {CSV_HEADER!r}, got {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
            try:
                strain = float(parts[0])
                load = float(parts[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
            strains.append(strain)
            loads.append(load)
    if not header_seen:
        raise ParseError(f"{path}: missing header {CSV_HEADER!r}")

    try:
        if strain_unit == "absolute":
            return PayloadCurve.from_absolute(strains, loads, skin_height, source=str(path))
        return PayloadCurve(strains=tuple(strains), loads=tuple(loads), source=str(path))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def write_payload_csv(curve, path):
    """Write a payload curve in the canonical CSV format (round-trip exact)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for strain, load in curve.samples:
            fh.write(f"{strain!r},{load!r}\n")


def payload_to_weight_ratio(max_payload_kgf, gripper_weight_kg):
    """Payload-to-weight ratio in percent: 100 * payload / weight."""
    if gripper_weight_kg <= 0:
        raise DomainError(f"gripper weight must be > 0, got {gripper_weight_kg}")
    if max_payload_kgf < 0:
        raise DomainError(f"payload must be >= 0, got {max_payload_kgf}")
    return 100.0 * max_payload_kgf / gripper_weight_kg


def newtons_kgf_convert(value, direction, g=G_DEFAULT):
    """Convert a force between newtons and kilogram-force (1 kgf = g N).

    direction is 'to_kgf' (N -> kgf) or 'to_n' (kgf -> N).
    """
    if direction == "to_kgf":
        return value / g
    if direction == "to_n":
        return value * g
    raise DomainError(f"direction must be 'to_kgf' or 'to_n', got {direction!r}")


def newtons_to_kgf(value, g=G_DEFAULT):
    return newtons_kgf_convert(value, "to_kgf", g=g)


def kgf_to_newtons(value, g=G_DEFAULT):
    return newtons_kgf_convert(value, "to_n", g=g)


_SVG_WIDTH = 640
_SVG_HEIGHT = 480
_SVG_MARGIN = 60
_SERIES_COLORS = ("#1f6fb4", "#d1495b", "#3a7d44", "#8d6a9f", "#c98a1b", "#4a4a4a")


def _fmt(x):
    return f"{x:.3f}"


def emit_plot(series, path, title="", x_label="", y_label=""):
    """Write a deterministic SVG line plot.

    series is a list of (xs, ys, label). The output depends only on the
    inputs (fixed canvas, fixed float formatting), so identical calls produce
    byte-identical files.
    """
    if not series:
        raise DomainError("emit_plot requires at least one series")
    all_x = [x for xs, _, _ in series for x in xs]
    all_y = [y for _, ys, _ in series for y in ys]
    if not all_x:
        raise DomainError("series must contain at least one point")
    x_min, x_max = min(all_x), max(all_x)
    y_min, y_max = min(all_y), max(all_y)
    x_span = (x_max - x_min) or 1.0
    y_span = (y_max - y_min) or 1.0
    inner_w = _SVG_WIDTH - 2 * _SVG_MARGIN
    inner_h = _SVG_HEIGHT - 2 * _SVG_MARGIN

    def to_px(x, y):
        px = _SVG_MARGIN + (x - x_min) / x_span * inner_w
        py = _SVG_HEIGHT - _SVG_MARGIN - (y - y_min) / y_span * inner_h
        return px, py

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_WIDTH}" height="{_SVG_HEIGHT}">',
        f'<rect width="{_SVG_WIDTH}" height="{_SVG_HEIGHT}" fill="white"/>',
        f'<line x1="{_SVG_MARGIN}" y1="{_SVG_HEIGHT - _SVG_MARGIN}" '
        f'x2="{_SVG_WIDTH - _SVG_MARGIN}" y2="{_SVG_HEIGHT - _SVG_MARGIN}" stroke="black"/>',
        f'<line x1="{_SVG_MARGIN}" y1="{_SVG_MARGIN}" '
        f'x2="{_SVG_MARGIN}" y2="{_SVG_HEIGHT - _SVG_MARGIN}" stroke="black"/>',
    ]
    if title:
        lines.append(
            f'<text x="{_SVG_WIDTH // 2}" y="30" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>'
        )
    if x_label:
        lines.append(
            f'<text x="{_SVG_WIDTH // 2}" y="{_SVG_HEIGHT - 15}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{x_label}</text>'
        )
    if y_label:
        lines.append(
            f'<text x="18" y="{_SVG_HEIGHT // 2}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 18 {_SVG_HEIGHT // 2})">{y_label}</text>'
        )
    for i, (xs, ys, label) in enumerate(series):
        color = _SERIES_COLORS[i % len(_SERIES_COLORS)]
        points = " ".join(
            f"{_fmt(px)},{_fmt(py)}" for px, py in (to_px(x, y) for x, y in zip(xs, ys))
        )
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        ly = _SVG_MARGIN + 16 * (i + 1)
        lines.append(
            f'<line x1="{_SVG_WIDTH - _SVG_MARGIN - 120}" y1="{ly - 4}" '
            f'x2="{_SVG_WIDTH - _SVG_MARGIN - 100}" y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>'
        )
        lines.append(
            f'<text x="{_SVG_WIDTH - _SVG_MARGIN - 94}" y="{ly}" '
            f'font-family="sans-serif" font-size="12">{label}</text>'
        )
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report_json(report, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
