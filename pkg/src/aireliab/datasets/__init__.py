"""Ingestion, validation, and summaries for the AI-reliability dataset schemas."""

from .exposure import (
    ExposureSchedule,
    MileageRow,
    MonthRow,
    MonthTable,
    constant_exposure,
    derive_exposure,
    sum_schedules,
)
from .io import (
    SchemaError,
    SchemaViolationError,
    ValidationReport,
    dump,
    dumps,
    load,
    parse_records,
    validate,
)
from .repository import (
    DATA_ROOT_ENV,
    DatasetIndex,
    IndexEntry,
    load_index,
    read_description,
    resolve_data_root,
)
from .schemas import (
    DATASET_SCHEMAS,
    SCHEMAS,
    AdversarialCountRecord,
    CollisionRecord,
    DisengagementRecord,
    IncidentRecord,
    MixtureRecord,
    ModuleErrorRecord,
    Violation,
)
from .summary import summarize, term_frequency

__all__ = [
    "AdversarialCountRecord",
    "CollisionRecord",
    "DATASET_SCHEMAS",
    "DATA_ROOT_ENV",
    "DatasetIndex",
    "DisengagementRecord",
    "ExposureSchedule",
    "IncidentRecord",
    "IndexEntry",
    "MileageRow",
    "MixtureRecord",
    "ModuleErrorRecord",
    "MonthRow",
    "MonthTable",
    "SCHEMAS",
    "SchemaError",
    "SchemaViolationError",
    "ValidationReport",
    "Violation",
    "constant_exposure",
    "derive_exposure",
    "dump",
    "dumps",
    "load",
    "load_index",
    "parse_records",
    "read_description",
    "resolve_data_root",
    "sum_schedules",
    "summarize",
    "term_frequency",
    "validate",
]
