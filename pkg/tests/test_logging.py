import json
import logging

import pytest

from sagnac.core.logging import (
    DebugFormatter,
    JSONFormatter,
    bind_run_context,
    clear_run_context,
    setup_logging,
)


@pytest.fixture(autouse=True)
def fresh_context():
    clear_run_context()
    yield
    clear_run_context()
    setup_logging(debug=False)


def make_record(**attributes) -> logging.LogRecord:
    record = logging.LogRecord("sagnac.test", logging.INFO, __file__, 10, "Fringe fitted", None, None)
    record.__dict__.update(attributes)
    return record


def test_json_lines_carry_extra_fields_and_run_context():
    record = make_record(
        extra_fields={"visibility": 0.968, "num_points": 36},
        run_context={"command": "fringe", "seed": 7},
    )
    data = json.loads(JSONFormatter().format(record))
    assert data["message"] == "Fringe fitted"
    assert data["level"] == "INFO"
    assert data["module"] == "test_logging"
    assert data["visibility"] == 0.968
    assert data["run"] == {"command": "fringe", "seed": 7}
    assert data["timestamp"].endswith("Z")


def test_json_omits_empty_run_context():
    data = json.loads(JSONFormatter().format(make_record(run_context={})))
    assert "run" not in data


def test_debug_format_prefixes_command():
    line = DebugFormatter().format(make_record(run_context={"command": "chsh"}, extra_fields={"s": 2.78}))
    assert line.startswith("[chsh] ")
    assert line.endswith("s=2.78")


def test_handler_writes_to_stderr_with_bound_context(capsys):
    setup_logging(debug=False)
    bind_run_context(command="balance", seed=11)
    logging.getLogger("sagnac.test").info("Pump balance solved")
    captured = capsys.readouterr()
    assert captured.out == ""
    data = json.loads(captured.err.strip().splitlines()[-1])
    assert data["run"] == {"command": "balance", "seed": 11}
