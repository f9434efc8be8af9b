import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlks import io
from nlks.diagnostics import DiagnosticsRecord
from nlks.spectral import GridField, GridSpec, SpectrumField

from conftest import REFERENCE_PARAMS


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


MINIMAL = {"n": 128, "dt": 0.05, "beta": 2, "delta": 0.5, "epsilon": 1, "t_end": 40}


def test_minimal_config(tmp_path):
    cfg = io.parse_config(write_json(tmp_path / "c.json", MINIMAL), env={})
    assert cfg.n == 128 and cfg.stepper.dt == 0.05 and cfg.t_end == 40.0
    assert cfg.params == REFERENCE_PARAMS
    assert cfg.cadence == 0.5 and cfg.mu == 1.0 and cfg.refine == 4
    assert cfg.stepper.contour_points == 32 and cfg.output_dir is None
    assert cfg.n_steps == 800 and cfg.sample_every == 10


def test_nested_and_physical_config(tmp_path):
    doc = {
        "grid": {"n": 64},
        "stepper": {"dt": 0.1, "contour_points": 64},
        "params": {"beta": 2, "gamma": 1, "L": 4 * math.pi},
        "run": {"t_end": 2, "cadence": 1},
        "diagnostics": {"mu": 2, "c_trilinear": 0.5, "transient_cut": 1, "refine": 2},
        "output": {"dir": "out"},
        "seed": 7,
    }
    cfg = io.parse_config(write_json(tmp_path / "c.json", doc), env={})
    assert cfg.params.delta == pytest.approx(0.5) and cfg.params.epsilon == pytest.approx(0.25)
    assert cfg.params.physical.gamma == 1
    assert cfg.stepper.contour_points == 64 and cfg.seed == 7 and cfg.output_dir == "out"


@pytest.mark.parametrize(
    "change, key",
    [
        ({"gamma": 1, "L": 6.0}, "params"),
        ({"gamma": 3, "L": 6.0, "delta": None, "epsilon": None}, "params.gamma"),
        ({"epsilon": 0}, "params.epsilon"),
        ({"n": 127}, "grid.n"),
        ({"n": None}, "grid.n"),
        ({"dt": -1}, "stepper.dt"),
        ({"cadence": 0.3}, "run.cadence"),
        ({"t_end": "forty"}, "run.t_end"),
        ({"colour": 1}, "colour"),
        ({"refine": 1.5}, "diagnostics.refine"),
        ({"contour_points": 4}, "stepper.contour_points"),
    ],
)
def test_config_errors_name_key(tmp_path, change, key):
    doc = dict(MINIMAL)
    for k, v in change.items():
        if v is None:
            doc.pop(k)
        else:
            doc[k] = v
    with pytest.raises(io.ConfigError) as info:
        io.parse_config(write_json(tmp_path / "c.json", doc), env={})
    assert info.value.key == key


def test_config_overrides_and_env(tmp_path):
    path = write_json(tmp_path / "c.json", MINIMAL)
    cfg = io.parse_config(path, ["run.t_end=1", "dt=0.025", "output.dir=x"], env={})
    assert cfg.t_end == 1.0 and cfg.stepper.dt == 0.025 and cfg.output_dir == "x"
    cfg = io.parse_config(path, env={io.OUTPUT_DIR_ENV: str(tmp_path / "env")})
    assert cfg.output_dir == str(tmp_path / "env")
    with pytest.raises(io.ConfigError):
        io.parse_config(path, ["novalue"], env={})


def test_config_duplicate_and_bad_json(tmp_path):
    with pytest.raises(io.ConfigError):
        io.config_from_mapping({**MINIMAL, "grid": {"n": 64}}, env={})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(io.ConfigError):
        io.parse_config(str(bad), env={})
    with pytest.raises(OSError):
        io.parse_config(str(tmp_path / "missing.json"), env={})


def _record(t, gevrey=1.5, overflow=False):
    return DiagnosticsRecord(
        t=t, l2_norm=0.1 + t, h1_norm=0.2, h2_norm=0.3, mean_residual=0.0,
        odd_residual=1e-17, energy_balance_residual=math.nan, sigma_theory=0.01,
        sigma_eff=0.01, gevrey_norm=gevrey, gevrey_overflow=overflow,
        analyticity_radius_estimate=2.5, peak_count_per_row=np.array([1, 3, 2]),
        i_mu_coverage=0.25, peak_bound_theoretical=36.25, running_sup_l2_after_transient=math.nan,
    )


def test_timeseries_format(tmp_path):
    path = tmp_path / "ts.csv"
    io.write_timeseries([_record(0.0)], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(io.TIMESERIES_COLUMNS)
    io.write_timeseries([_record(0.5 * k, overflow=k == 3) for k in range(81)], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 82
    assert lines[4].split(",")[8] == "inf"
    assert lines[1].split(",")[6] == "nan"
    assert lines[1].split(",")[10] == "3"
    with pytest.raises(ValueError):
        io.write_timeseries([], path)
    with pytest.raises(OSError) as info:
        io.write_timeseries([_record(0.0)], tmp_path / "nope" / "ts.csv")
    assert "nope" in str(info.value)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=5))
def test_timeseries_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("ts") / "ts.csv"
    recs = [_record(v, gevrey=v * 3) for v in values]
    io.write_timeseries(recs, path)
    back = io.read_timeseries(path)
    assert list(back["t"]) == [float(v) for v in values]
    assert list(back["gevrey_norm"]) == [v * 3 for v in values]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.sampled_from([8, 16, 32]))
def test_snapshot_round_trip(tmp_path_factory, seed, n):
    d = tmp_path_factory.mktemp("snap")
    g = GridField(GridSpec(n), np.random.default_rng(seed).standard_normal((n, n)) * 1e3)
    bin_path, json_path = io.write_snapshot(g, 1.25, d / "s.bin", params=REFERENCE_PARAMS)
    assert os.path.getsize(bin_path) == 8 * n * n
    back = io.read_snapshot(bin_path)
    assert back.values.tobytes() == g.values.tobytes()
    hdr = io.read_snapshot_header(json_path)
    assert hdr["n"] == n and hdr["t"] == 1.25 and hdr["endianness"] == "little"
    assert hdr["params"] == {"beta": 2.0, "delta": 0.5, "epsilon": 1.0}


def test_snapshot_errors(tmp_path):
    n = 16
    g = GridField(GridSpec(n), np.ones((n, n)))
    bin_path, json_path = io.write_snapshot(g, 0.0, tmp_path / "a.bin")
    data = open(bin_path, "rb").read()
    open(bin_path, "wb").write(data[:-1])
    with pytest.raises(io.SnapshotError, match="truncated"):
        io.read_snapshot(bin_path)
    # header claims n=8 for an n=16 payload
    open(bin_path, "wb").write(data)
    hdr = json.load(open(json_path))
    hdr["n"] = 8
    json.dump(hdr, open(json_path, "w"))
    with pytest.raises(io.SnapshotError, match="does not match"):
        io.read_snapshot(bin_path)
    hdr["n"], hdr["version"] = 16, 99
    json.dump(hdr, open(json_path, "w"))
    with pytest.raises(io.SnapshotError, match="version"):
        io.read_snapshot(bin_path)


def test_snapshot_from_spectrum(tmp_path):
    g = GridSpec(16)
    s = SpectrumField.from_modes(g, {(1, 0): 0.5})
    bin_path, _ = io.write_snapshot(s, 0.0, tmp_path / "c")
    assert bin_path.endswith("c.bin")
    x, _ = g.grid_points()
    assert np.max(np.abs(io.read_snapshot(bin_path).values - np.cos(x))) < 1e-15


def test_heatmap_zero_field(tmp_path):
    path = tmp_path / "z.pgm"
    io.render_heatmap(GridField(GridSpec(8), np.zeros((8, 8))), path)
    img, comment = io.read_pgm(path)
    assert img.shape == (8, 8) and np.all(img == 128)
    assert comment == "min=0.0 max=0.0"
    assert path.read_bytes().startswith(b"P5\n")


def test_heatmap_cos_x(tmp_path):
    g = GridSpec(16)
    x, _ = g.grid_points()
    path = tmp_path / "c.pgm"
    io.render_heatmap(GridField(g, np.cos(x)), path)
    img, _ = io.read_pgm(path)
    assert img.min() == 0 and img.max() == 255
    assert np.all(img == img[0])  # constant in y: identical image rows
    assert img[0, 0] == 255 and img[0, 8] == 0  # x = 0 and x = pi


def test_heatmap_orientation(tmp_path):
    g = GridSpec(8)
    v = np.zeros((8, 8))
    v[7, 7] = 1.0  # largest x, largest y
    io.render_heatmap(GridField(g, v), tmp_path / "o.pgm")
    img, _ = io.read_pgm(tmp_path / "o.pgm")
    assert img[0, 7] == 255  # top-right


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_heatmap_monotone(tmp_path_factory, seed):
    v = np.random.default_rng(seed).standard_normal((8, 8))
    p = tmp_path_factory.mktemp("h") / "m.pgm"
    io.render_heatmap(GridField(GridSpec(8), v), p)
    img, _ = io.read_pgm(p)
    flat_v = v.T[::-1, :].ravel()
    order = np.argsort(flat_v, kind="stable")
    assert np.all(np.diff(img.ravel()[order].astype(int)) >= 0)
