"""JSON Lines persistence for respondent records."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional, Union

from acbckit.model import DesignError, Profile, RespondentRecord, SurveyDesign

RECORD_SCHEMA_VERSION = 1


class RecordError(DesignError):
    """Malformed record data; carries the 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def record_to_dict(record: RespondentRecord) -> dict:
    return {
        "schema": RECORD_SCHEMA_VERSION,
        "id": record.id,
        "population_tag": record.population_tag,
        "byo": record.byo.to_list(),
        "field": [p.to_list() for p in record.field],
        "winners": list(record.winners),
    }


def record_from_dict(
    data: dict, design: Optional[SurveyDesign] = None
) -> RespondentRecord:
    if not isinstance(data, dict):
        raise RecordError(f"expected an object, got {type(data).__name__}")
    schema = data.get("schema", RECORD_SCHEMA_VERSION)
    if schema != RECORD_SCHEMA_VERSION:
        raise RecordError(f"unsupported record schema {schema!r}")
    missing = [k for k in ("id", "population_tag", "byo", "field", "winners") if k not in data]
    if missing:
        raise RecordError(f"missing fields: {', '.join(missing)}")
    try:
        record = RespondentRecord(
            id=str(data["id"]),
            population_tag=str(data["population_tag"]),
            byo=Profile.from_list(data["byo"]),
            field=tuple(Profile.from_list(p) for p in data["field"]),
            winners=tuple(data["winners"]),
        )
    except (TypeError, ValueError) as exc:
        raise RecordError(str(exc)) from exc
    if design is not None:
        try:
            design.check_profile(record.byo)
            for profile in record.field:
                design.check_profile(profile)
        except DesignError as exc:
            raise RecordError(str(exc)) from exc
        if len(record.field) != design.field_size:
            raise RecordError(
                f"field has {len(record.field)} profiles, design needs {design.field_size}"
            )
        if len(record.winners) != design.choice_tasks:
            raise RecordError(
                f"{len(record.winners)} winners recorded, design needs {design.choice_tasks}"
            )
    return record


def read_records(
    path: Union[str, Path], design: Optional[SurveyDesign] = None
) -> list[RespondentRecord]:
    """Parse one record per non-blank line; errors name the offending line."""
    records = []
    seen_ids = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(f"invalid JSON: {exc}", line=lineno) from exc
            try:
                record = record_from_dict(data, design)
            except RecordError as exc:
                raise RecordError(str(exc), line=lineno) from exc
            except DesignError as exc:
                raise RecordError(str(exc), line=lineno) from exc
            if record.id in seen_ids:
                raise RecordError(f"duplicate respondent id {record.id!r}", line=lineno)
            seen_ids.add(record.id)
            records.append(record)
    return records


def write_records(
    path: Union[str, Path], records: Iterable[RespondentRecord]
) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record_to_dict(record)) + "\n")


def append_record(path: Union[str, Path], record: RespondentRecord) -> None:
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(json.dumps(record_to_dict(record)) + "\n")
