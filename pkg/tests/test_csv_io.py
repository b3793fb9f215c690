import pytest

from sagnac.core.errors import SchemaError
from sagnac.services.experiment_service import load_fringe_csv
from sagnac.utils.csv_io import (
    FRINGE_COLUMNS,
    FRINGE_SCHEMA,
    format_value,
    read_csv,
    render_report,
    write_csv,
)


def fringe_rows(count: int = 8):
    for k in range(count):
        raw = 1000 + 100 * k
        yield [10.0 * k, 45.0, 100000, 100000, raw, 10.0, raw - 10.0, 40.0]


def test_format_uses_nine_significant_digits():
    assert format_value(1.0 / 3.0) == "0.333333333"
    assert format_value(123456789012.0) == "1.23456789e+11"
    assert format_value(7) == "7"
    assert format_value(True) == "true"


def test_written_file_starts_with_schema_line(tmp_path):
    path = write_csv(tmp_path / "f.csv", FRINGE_SCHEMA, FRINGE_COLUMNS, fringe_rows())
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# schema=fringe/v1"
    assert lines[1] == ",".join(FRINGE_COLUMNS)
    assert len(read_csv(path, FRINGE_SCHEMA, FRINGE_COLUMNS)) == 8


def test_fringe_table_reads_back(tmp_path):
    path = write_csv(tmp_path / "f.csv", FRINGE_SCHEMA, FRINGE_COLUMNS, fringe_rows())
    scan = load_fringe_csv(path)
    assert len(scan.points) == 8
    assert scan.points[3].coincidences_raw == 1300
    assert scan.points[3].accidental_estimate == 10.0


def test_unknown_schema_version_is_rejected(tmp_path):
    path = write_csv(tmp_path / "f.csv", FRINGE_SCHEMA, FRINGE_COLUMNS, fringe_rows())
    text = path.read_text(encoding="utf-8").replace("fringe/v1", "fringe/v2", 1)
    path.write_text(text, encoding="utf-8")
    with pytest.raises(SchemaError, match="version"):
        read_csv(path, FRINGE_SCHEMA, FRINGE_COLUMNS)


def test_wrong_schema_name_is_rejected(tmp_path):
    path = write_csv(tmp_path / "f.csv", "chsh", FRINGE_COLUMNS, fringe_rows())
    with pytest.raises(SchemaError):
        load_fringe_csv(path)


def test_malformed_row_is_named(tmp_path):
    rows = list(fringe_rows())
    rows[4][4] = "lots"
    path = write_csv(tmp_path / "f.csv", FRINGE_SCHEMA, FRINGE_COLUMNS, rows)
    with pytest.raises(SchemaError) as info:
        load_fringe_csv(path)
    assert info.value.row == 7
    assert "row 7" in str(info.value)


def test_short_row_is_named(tmp_path):
    path = write_csv(tmp_path / "f.csv", FRINGE_SCHEMA, FRINGE_COLUMNS, fringe_rows())
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[3] = "10,45,1"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError, match="row 4"):
        load_fringe_csv(path)


def test_inconsistent_corrected_column_is_rejected(tmp_path):
    rows = list(fringe_rows())
    rows[2][6] = 5.0
    path = write_csv(tmp_path / "f.csv", FRINGE_SCHEMA, FRINGE_COLUMNS, rows)
    with pytest.raises(SchemaError, match="row 5"):
        load_fringe_csv(path)


def test_mixed_theta2_is_rejected(tmp_path):
    rows = list(fringe_rows())
    rows[1][1] = 46.0
    path = write_csv(tmp_path / "f.csv", FRINGE_SCHEMA, FRINGE_COLUMNS, rows)
    with pytest.raises(SchemaError, match="row 4"):
        load_fringe_csv(path)


def test_too_few_points_is_a_schema_error(tmp_path):
    path = write_csv(tmp_path / "f.csv", FRINGE_SCHEMA, FRINGE_COLUMNS, fringe_rows(5))
    with pytest.raises(SchemaError):
        load_fringe_csv(path)


def test_render_report():
    assert render_report([("V", 0.968512345678), ("n", 36)]) == "V=0.968512346\nn=36\n"
