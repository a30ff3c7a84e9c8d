import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vbrelax import fileio
from vbrelax.noise import NoisePoint, NoiseSpectrum
from vbrelax.synth import DecayCurve

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 1e6), finite, st.floats(0, 1e6)), min_size=1, max_size=20, unique_by=lambda r: r[0])
)
def test_decay_round_trip_exact(tmp_path_factory, rows):
    rows = sorted(rows)
    curve = DecayCurve(*map(np.array, zip(*rows)))
    path = tmp_path_factory.mktemp("d") / "c.csv"
    fileio.write_decay_csv(path, curve)
    back = fileio.read_decay_csv(path)
    assert back.tau.tobytes() == curve.tau.tobytes()
    assert back.signal.tobytes() == curve.signal.tobytes()
    assert back.sigma.tobytes() == curve.sigma.tobytes()


def test_spectrum_round_trip(tmp_path):
    sp = NoiseSpectrum([NoisePoint(150.1, 1 / 3, 0.1), NoisePoint(300.0, -2e5, 7.0)])
    fileio.write_spectrum_csv(tmp_path / "s.csv", sp)
    back = fileio.read_spectrum_csv(tmp_path / "s.csv")
    assert np.array_equal(back.values, sp.values) and np.array_equal(back.frequencies, sp.frequencies)


def test_header_is_exact(tmp_path):
    fileio.write_decay_csv(tmp_path / "c.csv", DecayCurve([0.0, 1.0], [1.0, 0.5], [0.1, 0.1]))
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "tau_us,signal,sigma"


@pytest.mark.parametrize(
    "text,row,col",
    [
        ("tau_us,signal,sigma\n0,1,0.1\n1,abc,0.1\n", 3, "signal"),
        ("tau_us,signal\n0,1\n", 1, "sigma"),
        ("tau_us,signal,sigma\n0,1\n", 2, "sigma"),
        ("tau_us,signal,sigma\n0,1,0.1\n2,1,0.1\n1,1,0.1\n", 4, "tau_us"),
        ("tau_us,signal,sigma\n0,1,-0.1\n", 2, "sigma"),
        ("tau_us,signal,sigma\n", 2, "tau_us"),
        ("tau_us,signal,sigma\n0,nan,0.1\n", 2, "signal"),
    ],
)
def test_malformed_csv_reports_location(tmp_path, text, row, col):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(fileio.CSVFormatError) as ei:
        fileio.read_decay_csv(p)
    assert (ei.value.row, ei.value.column) == (row, col)


def test_config_parsing(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# sample\nomega-khz = 35.1  # SQ\n\ngamma_khz=99.8\n")
    assert fileio.parse_config_file(p) == {"omega_khz": "35.1", "gamma_khz": "99.8"}
    p.write_text("omega_khz 35.1\n")
    with pytest.raises(fileio.ConfigError):
        fileio.parse_config_file(p)
    p.write_text("a = 1\na = 2\n")
    with pytest.raises(fileio.ConfigError):
        fileio.parse_config_file(p)


def test_report_hashes(tmp_path):
    data = tmp_path / "in.csv"
    data.write_text("t_kelvin,inv_t1_khz\n296,210.45\n")
    rep = fileio.build_report("fit templaw", [data], {"x": 1.0}, {"v": float("nan")}, "0.1.0", timestamp="T")
    assert rep["results"]["v"] is None
    fileio.write_report(tmp_path / "r.json", rep)
    back = fileio.read_report(tmp_path / "r.json")
    assert back == rep
    assert fileio.verify_report(back) == []
    data.write_text("t_kelvin,inv_t1_khz\n296,210.46\n")
    assert fileio.verify_report(back) == [str(data)]


def test_atomic_write_leaves_no_temp(tmp_path):
    fileio.atomic_write(tmp_path / "a.txt", "hello")
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]
