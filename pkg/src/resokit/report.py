"""Report assembly: the per-resonator results table, session
comparisons, the JSON manifest and SVG plot artifacts.

The resonators table schema is versioned; emitted CSV files re-ingest
bit-exactly. Session comparisons match rows by exact label, never by
frequency proximity.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import PhysicsOverrides, config_hash
from .errors import SchemaError
from .extraction import AreaFitResult
from .fitting import Tolerances
from .notch import Trace
from .svgplot import Series, line_plot_svg
from .tls import PowerSweep, TlsFitParams, tls_tan_delta
from .traceio import atomic_write_text

__all__ = ["ReportRow", "SessionDelta", "ReportBundle", "compare_sessions",
           "emit_report", "read_report_rows", "write_report_rows",
           "RESONATOR_SCHEMA"]

RESONATOR_SCHEMA = "resonators-v1"
RESONATOR_COLUMNS = ("label", "freq_hz", "area_um2", "capacitance_f",
                     "q_ext_mag", "q_in_high_power", "q_in_single_photon",
                     "tan_delta")
DELTA_COLUMNS = ("label", "delta_freq_hz", "delta_q_in_high_power",
                 "delta_q_in_single_photon", "delta_tan_delta")


@dataclass(frozen=True)
class ReportRow:
    """One resonator in the fixed eight-column results table."""

    label: str
    freq_hz: float
    area_um2: float
    capacitance_f: float
    q_ext_mag: float
    q_in_high_power: float
    q_in_single_photon: float
    tan_delta: float


@dataclass(frozen=True)
class SessionDelta:
    """Differences between two sessions for one matched label."""

    label: str
    delta_freq_hz: float
    delta_q_in_high_power: float
    delta_q_in_single_photon: float
    delta_tan_delta: float


@dataclass
class ReportBundle:
    """Everything emit_report turns into files."""

    rows: list[ReportRow] = field(default_factory=list)
    deltas: list[SessionDelta] = field(default_factory=list)
    traces: list[tuple[str, Trace]] = field(default_factory=list)
    sweeps: list[tuple[str, PowerSweep, TlsFitParams | None]] = \
        field(default_factory=list)
    area_fit: tuple[list[tuple[float, float]], AreaFitResult, float] | None = None


def compare_sessions(rows_a, rows_b) -> list[SessionDelta]:
    """Per-label deltas (b minus a) over exactly matched labels."""
    by_label = {row.label: row for row in rows_b}
    deltas = []
    for row in rows_a:
        other = by_label.get(row.label)
        if other is None:
            continue
        deltas.append(SessionDelta(
            label=row.label,
            delta_freq_hz=other.freq_hz - row.freq_hz,
            delta_q_in_high_power=other.q_in_high_power - row.q_in_high_power,
            delta_q_in_single_photon=(other.q_in_single_photon
                                      - row.q_in_single_photon),
            delta_tan_delta=other.tan_delta - row.tan_delta))
    return deltas


def write_report_rows(rows, path: str) -> None:
    lines = [f"# schema = {RESONATOR_SCHEMA}", ",".join(RESONATOR_COLUMNS)]
    for row in rows:
        lines.append(",".join([row.label] + [repr(float(v)) for v in (
            row.freq_hz, row.area_um2, row.capacitance_f, row.q_ext_mag,
            row.q_in_high_power, row.q_in_single_photon, row.tan_delta)]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_report_rows(path: str) -> list[ReportRow]:
    header = None
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = tuple(c.strip() for c in line.split(","))
                if header != RESONATOR_COLUMNS:
                    raise SchemaError(f"unknown resonator table header {header!r}")
                continue
            parts = line.split(",")
            if len(parts) != len(RESONATOR_COLUMNS):
                raise SchemaError(f"expected {len(RESONATOR_COLUMNS)} columns")
            rows.append(ReportRow(parts[0], *[float(p) for p in parts[1:]]))
    if header is None:
        raise SchemaError("resonator table has no header")
    return rows


def _trace_plot(name: str, trace: Trace) -> str:
    mag_db = 20.0 * np.log10(np.maximum(np.abs(trace.s21), 1e-300))
    return line_plot_svg(
        [Series(x=list(trace.freqs_hz / 1e9), y=list(mag_db))],
        title=f"|S21| {name}", xlabel="frequency (GHz)", ylabel="|S21| (dB)")


def _sweep_plot(name: str, sweep: PowerSweep,
                params: TlsFitParams | None) -> str:
    ns = [p[0] for p in sweep.points]
    qs = [p[1] for p in sweep.points]
    series = [Series(x=ns, y=qs, label="data", markers=True)]
    if params is not None:
        grid = np.geomspace(ns[0], ns[-1], 200)
        model_q = 1.0 / tls_tan_delta(grid, params, sweep.resonator_freq,
                                      sweep.temperature)
        series.append(Series(x=list(grid), y=list(model_q), label="fit"))
    return line_plot_svg(series, title=f"Q_in vs photons {name}",
                         xlabel="photon number", ylabel="Q_in", logx=True)


def _area_plot(points, fit: AreaFitResult, inductance: float) -> str:
    areas = [p[0] for p in points]
    freqs = [p[1] / 1e9 for p in points]
    grid = np.linspace(min(areas), max(areas), 200)
    c_total = fit.cap_to_ground + fit.cap_per_area * grid
    model = 1.0 / (2.0 * math.pi * np.sqrt(inductance * c_total)) / 1e9
    return line_plot_svg(
        [Series(x=areas, y=freqs, label="data", markers=True),
         Series(x=list(grid), y=list(model), label="fit")],
        title="resonance frequency vs capacitor area",
        xlabel="area (um^2)", ylabel="frequency (GHz)")


def emit_report(bundle: ReportBundle, out_dir: str,
                physics: PhysicsOverrides = PhysicsOverrides(),
                tolerances: Tolerances = Tolerances(),
                inputs: list[str] | None = None,
                seed: int | None = None) -> list[str]:
    """Write the results table, manifest and plots into out_dir.

    Returns the list of written paths. Output is deterministic for
    fixed inputs: stable ordering, no timestamps, atomic writes.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    table_path = os.path.join(out_dir, "resonators.csv")
    write_report_rows(bundle.rows, table_path)
    written.append(table_path)

    if bundle.deltas:
        lines = [",".join(DELTA_COLUMNS)]
        for d in bundle.deltas:
            lines.append(",".join([d.label] + [repr(float(v)) for v in (
                d.delta_freq_hz, d.delta_q_in_high_power,
                d.delta_q_in_single_photon, d.delta_tan_delta)]))
        delta_path = os.path.join(out_dir, "comparison.csv")
        atomic_write_text(delta_path, "\n".join(lines) + "\n")
        written.append(delta_path)

    for name, trace in bundle.traces:
        path = os.path.join(out_dir, f"trace_{name}.svg")
        atomic_write_text(path, _trace_plot(name, trace))
        written.append(path)
    for name, sweep, params in bundle.sweeps:
        path = os.path.join(out_dir, f"qin_vs_photons_{name}.svg")
        atomic_write_text(path, _sweep_plot(name, sweep, params))
        written.append(path)
    if bundle.area_fit is not None:
        points, fit, inductance = bundle.area_fit
        path = os.path.join(out_dir, "freq_vs_area.svg")
        atomic_write_text(path, _area_plot(points, fit, inductance))
        written.append(path)

    manifest = {
        "toolkit": "resokit",
        "version": __version__,
        "schema": RESONATOR_SCHEMA,
        "config_hash": config_hash(physics, tolerances),
        "inputs": sorted(inputs or []),
        "seed": seed,
        "artifacts": sorted(os.path.basename(p) for p in written),
    }
    manifest_path = os.path.join(out_dir, "report.json")
    atomic_write_text(manifest_path,
                      json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(manifest_path)
    return written
