"""
File utilities for versioned CSV results and plain-text reports.

CSV layout: UTF-8, comma separated, first line `# schema=<name>/v<version>`,
second line the column headers, floats written with 9 significant digits.
"""
import csv
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

from sagnac.core.errors import OutputError, SchemaError
from sagnac.core.logging import get_logger

logger = get_logger(__name__)

SCHEMA_VERSION = 1

FRINGE_SCHEMA = "fringe"
FRINGE_COLUMNS = (
    "theta1_deg", "theta2_deg", "singles1", "singles2",
    "raw_coinc", "accidentals", "corrected", "duration_s",
)
CHSH_SCHEMA = "chsh"
CHSH_COLUMNS = (
    "label", "theta1_deg", "theta2_deg", "singles1", "singles2",
    "raw_coinc", "accidentals", "corrected", "duration_s",
)
SWEEP_SCHEMA = "sweep_aperture"
SWEEP_COLUMNS = (
    "divergence_mrad", "coherence", "fitted_V", "sigma_V",
    "flux_pairs_per_s_per_mw", "measured_flux_pairs_per_s_per_mw",
)


def format_value(value: Any) -> str:
    """Render one cell; floats get 9 significant digits."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def ensure_output_dir(directory: Path) -> Path:
    """
    Ensure the output directory exists and return its path.

    Raises:
        OutputError: If the directory cannot be created
    """
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {directory}: {e}") from e
    return directory


def write_csv(path: Path, schema: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Write a versioned CSV file.

    Returns:
        Path of the written file

    Raises:
        OutputError: If the file cannot be written
    """
    rows = list(rows)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(f"# schema={schema}/v{SCHEMA_VERSION}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(value) for value in row])
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e

    logger.info(
        f"Wrote {schema} table",
        extra={"extra_fields": {"path": str(path), "num_rows": len(rows)}}
    )
    return path


def read_csv(path: Path, schema: str, columns: Sequence[str]) -> List[Tuple[int, Dict[str, str]]]:
    """
    Read a versioned CSV file, checking schema name, version and headers.

    Returns:
        List of (line number, row dict) pairs, line numbers counted from 1

    Raises:
        OutputError: If the file cannot be read
        SchemaError: If the header line, version or columns do not match
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise OutputError(f"cannot read {path}: {e}") from e

    if not lines or not lines[0].startswith("# schema="):
        raise SchemaError("missing '# schema=' header line", row=1)
    name, _, version = lines[0][len("# schema="):].strip().partition("/v")
    if name != schema:
        raise SchemaError(f"expected schema '{schema}', found '{name}'", row=1)
    if version != str(SCHEMA_VERSION):
        raise SchemaError(f"unsupported {schema} schema version '{version}'", row=1)

    reader = csv.reader(lines[1:])
    header = next(reader, None)
    if header is None or tuple(header) != tuple(columns):
        raise SchemaError(f"expected columns {','.join(columns)}", row=2)

    rows = []
    for offset, cells in enumerate(reader, start=3):
        if not cells:
            continue
        if len(cells) != len(columns):
            raise SchemaError(f"expected {len(columns)} fields, found {len(cells)}", row=offset)
        rows.append((offset, dict(zip(columns, cells))))
    return rows


def parse_float(row: Dict[str, str], column: str, line: int) -> float:
    try:
        value = float(row[column])
    except ValueError:
        raise SchemaError(f"column '{column}' is not a number: {row[column]!r}", row=line) from None
    if math.isnan(value):
        raise SchemaError(f"column '{column}' is NaN", row=line)
    return value


def parse_count(row: Dict[str, str], column: str, line: int) -> int:
    value = parse_float(row, column, line)
    if value < 0 or value != int(value):
        raise SchemaError(f"column '{column}' must be a non-negative integer: {row[column]!r}", row=line)
    return int(value)


def render_report(entries: Sequence[Tuple[str, Any]]) -> str:
    return "".join(f"{key}={format_value(value)}\n" for key, value in entries)


def write_report(path: Path, entries: Sequence[Tuple[str, Any]]) -> str:
    """
    Write `key=value` lines and return the text.

    Raises:
        OutputError: If the file cannot be written
    """
    text = render_report(entries)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    return text
