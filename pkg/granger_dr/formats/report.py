"""YAML report documents.

Field order is fixed and floats are emitted in their shortest round-trip form,
so identical reports serialize to identical bytes. Wall-clock time is left out
unless asked for.
"""

import dataclasses
import logging

import yaml

from granger_dr.core.dml import DrSitReport, EdgeStatistics, FoldDiagnostics
from granger_dr.utils.errors import ParseError, SchemaVersionMismatch

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "item"):
        return value.item()
    return value


def _report_document(report, include_timing):
    document = {
        "target_index": int(report.target_index),
        "target_name": report.target_name,
        "variable_names": list(report.variable_names),
        "config": _plain(report.config),
        "edges": [_plain(dataclasses.asdict(edge)) for edge in report.edges],
        "fold_diagnostics": [_plain(dataclasses.asdict(d)) for d in report.fold_diagnostics],
    }
    if include_timing and report.elapsed_seconds is not None:
        document["elapsed_seconds"] = float(report.elapsed_seconds)
    return document


def dump_reports(reports, include_timing=False):
    document = {
        "schema_version": SCHEMA_VERSION,
        "reports": [_report_document(report, include_timing) for report in reports],
    }
    return yaml.safe_dump(document, sort_keys=False, default_flow_style=False, allow_unicode=True)


def write_reports(reports, path, include_timing=False):
    text = dump_reports(reports, include_timing)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.info(f"Report for {len(reports)} target(s) written to {path}")


def write_report(report, path, include_timing=False):
    write_reports([report], path, include_timing)


def _build(path, cls, fields):
    try:
        return cls(**fields)
    except TypeError as e:
        raise ParseError(path, None, f"malformed {cls.__name__}: {e}") from e


def _parse_report(path, entry):
    try:
        return DrSitReport(
            target_index=entry["target_index"],
            target_name=entry["target_name"],
            variable_names=tuple(entry["variable_names"]),
            edges=tuple(_build(path, EdgeStatistics, edge) for edge in entry["edges"]),
            config=entry["config"],
            fold_diagnostics=tuple(
                _build(path, FoldDiagnostics, d) for d in entry["fold_diagnostics"]
            ),
            elapsed_seconds=entry.get("elapsed_seconds"),
        )
    except (KeyError, TypeError) as e:
        raise ParseError(path, None, f"malformed report entry: missing {e}") from e


def read_reports(path):
    try:
        with open(path, encoding="utf-8") as handle:
            document = yaml.safe_load(handle)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ParseError(path, mark.line + 1 if mark else None, f"invalid YAML: {e}") from e

    if not isinstance(document, dict) or "schema_version" not in document:
        raise ParseError(path, 1, "not a report document (no schema_version)")
    if document["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            path,
            1,
            f"schema version {document['schema_version']} is not supported "
            f"(this reader handles {SCHEMA_VERSION})",
        )
    entries = document.get("reports")
    if not isinstance(entries, list):
        raise ParseError(path, None, "'reports' must be a list")
    return [_parse_report(path, entry) for entry in entries]


def read_report(path):
    reports = read_reports(path)
    if len(reports) != 1:
        raise ParseError(path, None, f"expected a single report, found {len(reports)}")
    return reports[0]
