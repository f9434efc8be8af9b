"""Configuration parsing and the on-disk formats.

Files written here are deterministic: the time series uses shortest
round-trip float formatting, snapshot sidecars are sorted JSON, and heatmaps
are raw PGM, so two identical runs produce byte-identical output.
"""
import csv
import json
import math
import os

import numpy as np

from .etdrk4 import StepperConfig
from .params import PhysicalParams, ScaledParams, rescale
from .spectral import GridField, SpectrumField, _to_values

__all__ = [
    "ConfigError",
    "SnapshotError",
    "OUTPUT_DIR_ENV",
    "TIMESERIES_COLUMNS",
    "parse_config",
    "config_from_mapping",
    "write_timeseries",
    "read_timeseries",
    "write_snapshot",
    "read_snapshot",
    "read_snapshot_header",
    "render_heatmap",
    "read_pgm",
]

OUTPUT_DIR_ENV = "NLKS_OUTPUT_DIR"
SNAPSHOT_FORMAT = "nlks-snapshot"
SNAPSHOT_VERSION = 1

TIMESERIES_COLUMNS = (
    "t",
    "l2",
    "h1",
    "h2",
    "mean_residual",
    "odd_residual",
    "energy_residual",
    "gevrey_sigma",
    "gevrey_norm",
    "radius_estimate",
    "peak_count_max",
    "peak_bound",
)


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class SnapshotError(ValueError):
    pass


# ---------------------------------------------------------------- config

_SHORT = {
    "n": "grid.n",
    "dt": "stepper.dt",
    "contour_points": "stepper.contour_points",
    "contour_radius": "stepper.contour_radius",
    "beta": "params.beta",
    "delta": "params.delta",
    "epsilon": "params.epsilon",
    "gamma": "params.gamma",
    "L": "params.L",
    "t_end": "run.t_end",
    "cadence": "run.cadence",
    "mu": "diagnostics.mu",
    "c_trilinear": "diagnostics.c_trilinear",
    "transient_cut": "diagnostics.transient_cut",
    "refine": "diagnostics.refine",
    "output_dir": "output.dir",
    "snapshot_interval": "output.snapshot_interval",
}
_KNOWN = set(_SHORT.values()) | {"seed"}
_REQUIRED = ("grid.n", "stepper.dt", "run.t_end")
_SCALED = ("params.delta", "params.epsilon")
_PHYSICAL = ("params.gamma", "params.L")


def _flatten(obj, prefix, out):
    for key, value in obj.items():
        if not isinstance(key, str):
            raise ConfigError(str(key), "keys must be strings")
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            _flatten(value, dotted + ".", out)
            continue
        if not prefix:
            dotted = _SHORT.get(dotted, dotted)
        if dotted not in _KNOWN:
            raise ConfigError(dotted, "unknown key")
        if dotted in out:
            raise ConfigError(dotted, "given more than once")
        out[dotted] = value
    return out


def _number(flat, key, default=None):
    if key not in flat:
        if default is None:
            raise ConfigError(key, "missing required key")
        return default
    v = flat[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(key, f"must be finite, got {v!r}")
    return float(v)


def _integer(flat, key, default=None):
    if key not in flat:
        if default is None:
            raise ConfigError(key, "missing required key")
        return default
    v = flat[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(key, f"expected an integer, got {v!r}")
    return int(v)


def _guard(key_of, build):
    """Call ``build`` and re-raise ValueErrors under the key they concern."""
    try:
        return build()
    except ConfigError:
        raise
    except ValueError as exc:
        msg = str(exc)
        raise ConfigError(key_of(msg.split(" ", 1)[0]), msg) from None


def _params(flat):
    has_scaled = [k for k in _SCALED if k in flat]
    has_physical = [k for k in _PHYSICAL if k in flat]
    if has_scaled and has_physical:
        raise ConfigError("params", "give either {beta, delta, epsilon} or {beta, gamma, L}, not both")
    if not has_scaled and not has_physical:
        raise ConfigError("params", "missing parameter group")
    beta = _number(flat, "params.beta")
    if has_physical:
        gamma = _number(flat, "params.gamma")
        L = _number(flat, "params.L")
        phys = _guard(lambda w: f"params.{w}", lambda: PhysicalParams(beta, gamma, L))
        return rescale(phys)
    delta = _number(flat, "params.delta")
    eps = _number(flat, "params.epsilon")
    return _guard(lambda w: f"params.{w}", lambda: ScaledParams(beta, delta, eps))


_RUN_KEYS = {
    "grid": "grid.n",
    "t_end": "run.t_end",
    "cadence": "run.cadence",
    "mu": "diagnostics.mu",
    "c_trilinear": "diagnostics.c_trilinear",
    "refine": "diagnostics.refine",
    "snapshot_interval": "output.snapshot_interval",
    "params": "params",
}


def config_from_mapping(doc, overrides=(), env=None):
    """Build a RunConfig from an already loaded JSON document."""
    from .simulation import RunConfig

    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    flat = _flatten(doc, "", {})
    for item in overrides:
        key, value = _parse_override(item)
        flat.pop(key, None)
        flat.update(_flatten({key: value} if "." not in key else _nest(key, value), "", {}))
    env = os.environ if env is None else env
    if env.get(OUTPUT_DIR_ENV):
        flat["output.dir"] = env[OUTPUT_DIR_ENV]

    for key in _REQUIRED:
        if key not in flat:
            raise ConfigError(key, "missing required key")
    params = _params(flat)
    n = _integer(flat, "grid.n")
    stepper = _guard(
        lambda w: f"stepper.{w}",
        lambda: StepperConfig(
            _number(flat, "stepper.dt"),
            _integer(flat, "stepper.contour_points", 32),
            _number(flat, "stepper.contour_radius", 1.0),
        ),
    )
    out_dir = flat.get("output.dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("output.dir", f"expected a path string, got {out_dir!r}")
    t_end = _number(flat, "run.t_end")
    cadence = _number(flat, "run.cadence", 0.5)

    def build():
        return RunConfig(
            n=n,
            stepper=stepper,
            params=params,
            t_end=t_end,
            cadence=cadence,
            seed=_integer(flat, "seed", 0),
            output_dir=out_dir,
            mu=_number(flat, "diagnostics.mu", 1.0),
            c_trilinear=_number(flat, "diagnostics.c_trilinear", 1.0),
            transient_cut=_number(flat, "diagnostics.transient_cut", 20.0),
            refine=_integer(flat, "diagnostics.refine", 4),
            snapshot_interval=_number(flat, "output.snapshot_interval", 20.0),
        )

    def key_of(word):
        return _RUN_KEYS.get(word.rstrip(":"), "run")

    return _guard(key_of, build)


def _nest(key, value):
    head, _, rest = key.partition(".")
    return {head: _nest(rest, value) if rest else value}


def _parse_override(item):
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(item, "override must look like key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return _SHORT.get(key, key), value


def parse_config(path, overrides=(), env=None):
    """Read a JSON config file into a validated RunConfig.

    Keys may be nested (``{"grid": {"n": 128}}``), dotted (``"grid.n"``) or,
    for the common ones, bare (``"n"``).  ``overrides`` are ``key=value``
    strings whose values are parsed as JSON when possible.  The environment
    variable NLKS_OUTPUT_DIR replaces ``output.dir``.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"{path} is not valid JSON: {exc}") from None
    return config_from_mapping(doc, overrides, env)


# ------------------------------------------------------------ time series


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _row(rec):
    return [
        rec.t,
        rec.l2_norm,
        rec.h1_norm,
        rec.h2_norm,
        rec.mean_residual,
        rec.odd_residual,
        rec.energy_balance_residual,
        rec.sigma_eff,
        math.inf if rec.gevrey_overflow else rec.gevrey_norm,
        rec.analyticity_radius_estimate,
        rec.peak_count_max,
        rec.peak_bound_theoretical,
    ]


def write_timeseries(records, path):
    records = list(records)
    if not records:
        raise ValueError("write_timeseries needs at least one record")
    try:
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TIMESERIES_COLUMNS)
            for rec in records:
                w.writerow([_cell(v) for v in _row(rec)])
    except OSError as exc:
        raise OSError(f"cannot write time series {path}: {exc.strerror or exc}") from exc


def read_timeseries(path):
    """Return the CSV as a dict of column name -> float array."""
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TIMESERIES_COLUMNS:
        raise ValueError(f"{path}: unexpected header")
    body = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(
        len(rows) - 1, len(TIMESERIES_COLUMNS)
    )
    return {name: body[:, i] for i, name in enumerate(TIMESERIES_COLUMNS)}


# -------------------------------------------------------------- snapshots


def _paths(path):
    path = os.fspath(path)
    root, ext = os.path.splitext(path)
    stem = root if ext in (".bin", ".json") else path
    return stem + ".bin", stem + ".json"


def _grid_values(state):
    if isinstance(state, SpectrumField):
        return _to_values(state.coeffs, state.grid)
    if isinstance(state, GridField):
        return state.values
    return np.asarray(state, dtype=float)


def write_snapshot(state, t, path, params=None):
    """Write grid values as raw little-endian float64 plus a JSON sidecar.

    ``path`` names the payload (``*.bin``); the header goes next to it with a
    ``.json`` suffix.  Returns both paths.
    """
    values = np.ascontiguousarray(_grid_values(state), dtype="<f8")
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"snapshot needs a square field, got shape {values.shape}")
    bin_path, json_path = _paths(path)
    header = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "n": int(values.shape[0]),
        "t": float(t),
        "params": None if params is None else params.as_dict(),
        "endianness": "little",
        "dtype": "float64",
        "layout": "row-major, axis 0 = x",
    }
    try:
        with open(bin_path, "wb") as fh:
            fh.write(values.tobytes(order="C"))
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write snapshot {bin_path}: {exc.strerror or exc}") from exc
    return bin_path, json_path


def read_snapshot_header(path):
    _, json_path = _paths(path)
    try:
        with open(json_path, encoding="utf-8") as fh:
            header = json.load(fh)
    except OSError as exc:
        raise SnapshotError(f"{json_path}: cannot read header ({exc.strerror or exc})") from exc
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"{json_path}: malformed header ({exc})") from None
    if header.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"{json_path}: not an {SNAPSHOT_FORMAT} header")
    if header.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(
            f"{json_path}: version mismatch (file {header.get('version')!r}, reader {SNAPSHOT_VERSION})"
        )
    if header.get("endianness") != "little" or header.get("dtype") != "float64":
        raise SnapshotError(f"{json_path}: unsupported encoding")
    n = header.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n <= 0:
        raise SnapshotError(f"{json_path}: bad n {n!r}")
    return header


def read_snapshot(path):
    """Read a snapshot back as a GridField; the payload must hold 8 n^2 bytes."""
    from .spectral import GridSpec

    header = read_snapshot_header(path)
    bin_path, _ = _paths(path)
    n = header["n"]
    try:
        with open(bin_path, "rb") as fh:
            payload = fh.read()
    except OSError as exc:
        raise SnapshotError(f"{bin_path}: cannot read payload ({exc.strerror or exc})") from exc
    expected = 8 * n * n
    if len(payload) < expected:
        raise SnapshotError(f"{bin_path}: truncated payload ({len(payload)} of {expected} bytes)")
    if len(payload) > expected:
        raise SnapshotError(
            f"{bin_path}: payload of {len(payload)} bytes does not match header n={n}"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(n, n).astype(np.float64)
    return GridField(GridSpec(n), values)


# --------------------------------------------------------------- heatmap


def _gray(values):
    lo, hi = float(np.min(values)), float(np.max(values))
    if not hi > lo:
        return np.full(values.shape, 128, dtype=np.uint8), lo, hi
    g = np.rint((values - lo) * (255.0 / (hi - lo)))
    return np.clip(g, 0, 255).astype(np.uint8), lo, hi


def render_heatmap(state, path):
    """8-bit binary PGM, x to the right and y upward, min..max mapped to 0..255."""
    values = _grid_values(state)
    gray, lo, hi = _gray(values)
    image = np.ascontiguousarray(gray.T[::-1, :])
    n_rows, n_cols = image.shape
    head = f"P5\n# min={lo!r} max={hi!r}\n{n_cols} {n_rows}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(head + image.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write heatmap {path}: {exc.strerror or exc}") from exc


def read_pgm(path):
    """Parse a P5 file written by render_heatmap; returns (image, comment)."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, comment, pos = [], None, 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comment = data[pos + 1 : end].decode("ascii").strip()
            pos = end + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        tokens.append(data[pos:end].decode("ascii"))
        pos = end
    if tokens[0] != "P5":
        raise ValueError(f"{path}: not a binary PGM")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    pixels = np.frombuffer(data[pos + 1 : pos + 1 + width * height], dtype=np.uint8)
    if maxval != 255 or pixels.size != width * height:
        raise ValueError(f"{path}: malformed PGM")
    return pixels.reshape(height, width), comment
