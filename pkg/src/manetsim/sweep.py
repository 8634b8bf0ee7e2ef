"""Paired sweeps over mobility or density, long-format CSV, summary tables."""

import csv
import math
import statistics
from typing import Iterable

from .metrics import MetricsReport
from .runner import run_scenario
from .scenario import Scenario, ScenarioError

SWEEP_AXES = ("pause_time", "node_count")

DROP_CAUSES = ("dead_node", "no_route", "queue_overflow", "link_break", "loop", "loop_avoided")

METRIC_FIELDS = (
    "throughput_kbps",
    "avg_e2e_delay_s",
    "pdr",
    "loss_ratio",
    "nrl",
    "network_energy_j",
    "routing_energy_j",
)


def report_row(sc: Scenario, report: MetricsReport, axis: str = "", axis_value="") -> dict:
    """One CSV row: every parameter (defaults included) plus every metric."""
    row = {"axis": axis, "axis_value": axis_value}
    row.update(sc.params_dict())
    row.update(
        {
            "sent": report.sent,
            "delivered": report.delivered,
            "in_flight": report.in_flight,
            "dropped_total": report.dropped,
            "throughput_kbps": report.throughput_kbps,
            "avg_e2e_delay_s": report.avg_e2e_delay,
            "pdr": report.pdr,
            "loss_ratio": report.loss_ratio,
            "nrl": report.nrl,
            "control_transmissions": report.control_transmissions,
            "data_transmissions": report.data_transmissions,
            "network_energy_j": report.network_energy_j,
            "routing_energy_j": report.routing_energy_j,
        }
    )
    for cause in DROP_CAUSES:
        row[f"drop_{cause}"] = report.drop_breakdown.get(cause, 0)
    for name in (
        "discovery_start",
        "discovery_retry",
        "discovery_fail",
        "repair_start",
        "repair_ok",
        "repair_fail",
        "failover",
        "replenish_start",
        "death",
    ):
        row[f"ev_{name}"] = report.protocol_events.get(name, 0)
    return row


def sweep(
    base: Scenario,
    axis: str,
    values: Iterable,
    seeds: Iterable[int],
    progress=None,
) -> list[dict]:
    """Run both protocols at every (value, seed) with paired seeds.

    All scenario variants are validated before any run starts, so a bad
    grid point aborts the sweep without partial output.
    """
    if axis not in SWEEP_AXES:
        raise ScenarioError(f"sweep axis must be one of {SWEEP_AXES}")
    values = list(values)
    seeds = list(seeds)
    if not values:
        raise ScenarioError("sweep values must be non-empty")
    if not seeds:
        raise ScenarioError("sweep seeds must be non-empty")

    grid = []
    for value in values:
        for seed in seeds:
            for protocol in ("aodv", "maodv"):
                sc = base.variant(master_seed=seed, protocol=protocol)
                if axis == "pause_time":
                    sc.mobility.pause_time = float(value)
                else:
                    sc.node_count = int(value)
                sc.validate()
                grid.append((value, seed, protocol, sc))

    rows = []
    for value, seed, protocol, sc in grid:
        result = run_scenario(sc)
        rows.append(report_row(sc, result.report, axis=axis, axis_value=value))
        if progress is not None:
            progress(value, seed, protocol, result.report)
    return rows


def write_rows(path: str, rows: list[dict]) -> None:
    if not rows:
        raise ScenarioError("no rows to write")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def read_rows(paths: Iterable[str]) -> list[dict]:
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            rows.extend(csv.DictReader(fh))
    return rows


def summarize(rows: list[dict]) -> list[dict]:
    """Per-metric mean and stddev grouped by (axis value, protocol)."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row.get("axis", ""), row.get("axis_value", ""), row["protocol"])
        groups.setdefault(key, []).append(row)

    out = []
    for (axis, value, protocol), members in sorted(
        groups.items(), key=lambda kv: (kv[0][0], _numeric(kv[0][1]), kv[0][2])
    ):
        for metric in METRIC_FIELDS:
            samples = [
                float(row[metric])
                for row in members
                if metric in row and row[metric] != ""
            ]
            samples = [s for s in samples if not math.isnan(s)]
            if samples:
                mean = statistics.fmean(samples)
                std = statistics.stdev(samples) if len(samples) > 1 else 0.0
            else:
                mean = math.nan
                std = math.nan
            out.append(
                {
                    "axis": axis,
                    "axis_value": value,
                    "protocol": protocol,
                    "metric": metric,
                    "mean": mean,
                    "stddev": std,
                    "n": len(samples),
                }
            )
    return out


def _numeric(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        return math.inf


def paired_means(rows: list[dict], metric: str) -> dict:
    """{axis_value: {protocol: mean}} for directional comparisons."""
    table: dict = {}
    for row in rows:
        value = _numeric(row.get("axis_value"))
        raw = row.get(metric, "")
        sample = float(raw) if raw != "" else math.nan
        if math.isnan(sample):
            continue
        table.setdefault(value, {}).setdefault(row["protocol"], []).append(sample)
    return {
        value: {proto: statistics.fmean(vals) for proto, vals in protos.items()}
        for value, protos in table.items()
    }
