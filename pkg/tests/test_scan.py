import numpy as np
import pytest

from ioncrystal.decoherence.scan import (
    SCAN_COLUMNS,
    log_temperatures,
    read_scan_csv,
    scan_rows,
    summary_stats,
    temperature_scan,
    write_scan_csv,
    write_scan_json,
)
from ioncrystal.lattice import standard_parameter_set


@pytest.fixture(scope="module")
def scan():
    return temperature_scan(standard_parameter_set(1), 12, 0.05, 1e-5, 1e-3, 7)


def test_log_spacing():
    T = log_temperatures(1e-5, 1e-3, 3)
    assert T == pytest.approx([1e-5, 1e-4, 1e-3])
    assert log_temperatures(1e-5, 1e-3, 1) == pytest.approx([1e-3])
    with pytest.raises(ValueError):
        log_temperatures(0.0, 1e-3, 3)


def test_csv_round_trip(tmp_path, scan):
    f = tmp_path / "scan.csv"
    write_scan_csv(scan, f)
    rows = read_scan_csv(f)
    assert tuple(rows[0]) == SCAN_COLUMNS
    for parsed, raw in zip(rows, scan_rows(scan)):
        assert np.allclose(list(parsed.values()), raw, rtol=1e-14, atol=0)
    write_scan_json(scan, tmp_path / "scan.json")
    assert (tmp_path / "scan.json").stat().st_size > 0


def test_scan_shape(scan):
    E = scan.errors
    assert np.all(np.diff(E) > 0)
    assert E[0] > 0 and E[0] < 1e-6  # low-temperature floor from the zero-point part of E2
    stats = summary_stats(scan)
    assert stats["loglog_slope_upper_decade"] == pytest.approx(2.0, abs=0.2)
    assert np.all(scan.errors_prime <= scan.errors)


def test_bad_gamma():
    with pytest.raises(ValueError):
        temperature_scan(standard_parameter_set(1), 6, -0.05, 1e-5, 1e-3, 3)
