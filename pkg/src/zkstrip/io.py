"""Configuration files, snapshot files and run outputs.

Configuration is TOML.  Every table and key is checked against the schema
below and unknown keys are rejected, so a typo never silently falls back to
a default::

    seed = 0
    out = "out"

    [grid]            # X, Nx, L, Ny, case
    [run]             # T, t0, delta, h, tol, max_iter, m, panels, snapshot_every, max_halvings
    [flux]            # name, a
    [initial]         # profile + its parameters, or snapshot = "path"
    [forcing]         # kind = zero | bump | sech2 | mode | snapshots (+ parameters)
    [diagnostics]     # alpha, plot_script
    [check.<name>]    # per-check parameters, see cli.CHECKS
    [sweep]           # h, delta, t0, grid lists

Snapshots are a one-line magic, one line of JSON header and the node values
as little-endian float64, x-major then y.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .basis import ConfigurationError, Field, Grid, SpectralField, from_spectral, to_spectral
from .nonlinearity import Nonlinearity, make_flux
from .profiles import PROFILES, make_forcing, make_profile
from .solver import RunConfig, Trajectory

__all__ = [
    "OUT_ENV",
    "SNAPSHOT_MAGIC",
    "ConfigFile",
    "load_config",
    "parse_config",
    "write_snapshot",
    "read_snapshot",
    "invariants_rows",
    "write_invariants",
    "write_summary",
    "write_plot_script",
    "resolve_out_dir",
]

#: environment variable overriding the configured output directory
OUT_ENV = "ZKSTRIP_OUT"
SNAPSHOT_MAGIC = b"#zkstrip-snapshot v1\n"
SNAPSHOT_VERSION = 1

_TOP = {"seed", "out", "grid", "run", "flux", "initial", "forcing", "diagnostics", "check", "sweep"}
_GRID = {"X", "Nx", "L", "Ny", "case"}
_RUN = {"T", "t0", "delta", "h", "tol", "max_iter", "m", "panels", "snapshot_every", "max_halvings"}
_FLUX = {"name", "a"}
_PROFILE_KEYS = {"amplitude", "x0", "width", "modes", "amps", "j", "l"}
_FORCING = {"kind", "omega", "paths", "times"} | _PROFILE_KEYS
_DIAG = {"alpha", "plot_script"}
_SWEEP = {"h", "delta", "t0", "grid", "couple_delta", "alpha"}
CHECK_KEYS = {
    "conservation": {"mass_tol", "energy_tol"},
    "interpolation": {"k", "m", "q", "alpha", "beta", "members", "c"},
    "weak-residual": {"count", "threshold"},
    "energy-identity": {"alpha", "beta", "threshold"},
    "dependence": {"alpha", "beta", "gradient", "epsilon", "shift", "c", "perturbation", "grid"},
    "smoothing": {"r"},
}


@dataclass
class ConfigFile:
    """A parsed configuration; ``raw`` keeps the file's content verbatim."""

    run: RunConfig
    flux: dict
    initial: dict
    forcing: dict
    diagnostics: dict
    checks: dict
    sweep: dict
    out: str
    seed: int
    raw: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path)

    @property
    def grid(self) -> Grid:
        return self.run.grid

    def make_flux(self) -> Nonlinearity:
        params = {k: v for k, v in self.flux.items() if k != "name"}
        return make_flux(self.flux.get("name", "zk"), **params)

    def initial_field(self, grid: Grid | None = None) -> Field:
        grid = self.grid if grid is None else grid
        spec = dict(self.initial)
        if "snapshot" in spec:
            field_, _ = read_snapshot(self.base_dir / spec["snapshot"])
            if not field_.grid.same_as(grid):
                raise ConfigurationError("initial snapshot grid differs from the configured grid")
            return field_
        name = spec.pop("profile", "zero")
        return make_profile(grid, name, **spec)

    def forcing_fn(self, grid: Grid | None = None):
        grid = self.grid if grid is None else grid
        spec = dict(self.forcing)
        if spec.get("kind") == "snapshots":
            return _snapshot_series(grid, [self.base_dir / p for p in spec.get("paths", [])], spec.get("times", []))
        return make_forcing(grid, spec or None)

    def check_params(self, name: str) -> dict:
        return dict(self.checks.get(name, {}))


def _reject_unknown(table: dict, allowed: set, where: str):
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigurationError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _table(doc: dict, name: str) -> dict:
    val = doc.get(name, {})
    if not isinstance(val, dict):
        raise ConfigurationError(f"[{name}] must be a table")
    return val


def parse_config(doc: dict, base_dir: Path | str = ".") -> ConfigFile:
    """Validate a TOML document (already parsed) and build the run description."""
    _reject_unknown(doc, _TOP, "top level")
    g = _table(doc, "grid")
    r = _table(doc, "run")
    fl = _table(doc, "flux")
    ini = _table(doc, "initial")
    frc = _table(doc, "forcing")
    diag = _table(doc, "diagnostics")
    chk = _table(doc, "check")
    sw = _table(doc, "sweep")
    _reject_unknown(g, _GRID, "[grid]")
    _reject_unknown(r, _RUN, "[run]")
    _reject_unknown(fl, _FLUX, "[flux]")
    _reject_unknown(frc, _FORCING, "[forcing]")
    _reject_unknown(diag, _DIAG, "[diagnostics]")
    _reject_unknown(sw, _SWEEP, "[sweep]")
    _reject_unknown(chk, set(CHECK_KEYS), "[check]")
    for name, params in chk.items():
        if not isinstance(params, dict):
            raise ConfigurationError(f"[check.{name}] must be a table")
        _reject_unknown(params, CHECK_KEYS[name], f"[check.{name}]")
    if "snapshot" in ini:
        _reject_unknown(ini, {"snapshot"}, "[initial]")
    else:
        _reject_unknown(ini, {"profile"} | _PROFILE_KEYS, "[initial]")
        if ini.get("profile", "zero") not in PROFILES:
            raise ConfigurationError(f"unknown profile {ini.get('profile')!r}")
    try:
        grid = Grid(float(g.get("X", 30.0)), int(g.get("Nx", 256)), float(g.get("L", 2.0 * math.pi)), int(g.get("Ny", 33)), g.get("case", "d"))
        h = r.get("h")
        run = RunConfig(
            grid,
            float(r.get("T", 1.0)),
            float(r.get("t0", 0.05)),
            delta=float(r.get("delta", 0.0)),
            h=None if h is None else float(h),
            tol=float(r.get("tol", 1e-10)),
            max_iter=int(r.get("max_iter", 60)),
            m=int(r.get("m", 4)),
            panels=int(r.get("panels", 1)),
            snapshot_every=int(r.get("snapshot_every", 1)),
            max_halvings=int(r.get("max_halvings", 6)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigurationError("seed must be a non-negative integer")
    cfg = ConfigFile(run, dict(fl), dict(ini), dict(frc), dict(diag), {k: dict(v) for k, v in chk.items()}, dict(sw), str(doc.get("out", "out")), seed, doc, Path(base_dir))
    cfg.make_flux()  # reject unknown flux names early
    return cfg


def load_config(path: str | os.PathLike) -> ConfigFile:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    return parse_config(doc, path.parent)


def resolve_out_dir(cfg: ConfigFile | None, cli_out: str | None) -> Path:
    """Command-line flag, then the environment override, then the config value."""
    if cli_out:
        return Path(cli_out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    return Path(cfg.out if cfg is not None else "out")


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------


def write_snapshot(path, field_: Field | SpectralField, time: float = 0.0, flux: str = "", delta: float = 0.0, h: float | None = None):
    if isinstance(field_, SpectralField):
        field_ = from_spectral(field_)
    g = field_.grid
    header = {
        "version": SNAPSHOT_VERSION,
        "grid": g.describe(),
        "shape": [g.Nx, g.Ny],
        "dtype": "<f8",
        "time": float(time),
        "flux": flux,
        "delta": float(delta),
        "h": None if h is None else float(h),
    }
    payload = np.ascontiguousarray(field_.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(payload)


def read_snapshot(path):
    """(Field, header) from a snapshot file; the format version is checked."""
    with open(path, "rb") as fh:
        magic = fh.readline()
        if not magic.startswith(b"#zkstrip-snapshot"):
            raise ConfigurationError(f"{path} is not a snapshot file")
        if magic != SNAPSHOT_MAGIC:
            raise ConfigurationError(f"{path}: unsupported snapshot version {magic.decode(errors='replace').strip()}")
        header = json.loads(fh.readline())
        payload = fh.read()
    if header.get("version") != SNAPSHOT_VERSION:
        raise ConfigurationError(f"{path}: header version {header.get('version')} not supported")
    gd = header["grid"]
    grid = Grid(gd["X"], gd["Nx"], gd["L"], gd["Ny"], gd["case"])
    nx, ny = header["shape"]
    if len(payload) != 8 * nx * ny:
        raise ConfigurationError(f"{path}: payload has {len(payload)} bytes, expected {8 * nx * ny}")
    values = np.frombuffer(payload, dtype="<f8").reshape(nx, ny).astype(np.float64)
    return Field(grid, values, {"time": header["time"]}), header


def _snapshot_series(grid: Grid, paths, times):
    if len(paths) != len(times) or not paths:
        raise ConfigurationError("forcing snapshots need equally long, non-empty 'paths' and 'times'")
    times = np.asarray(times, dtype=np.float64)
    if np.any(np.diff(times) <= 0):
        raise ConfigurationError("forcing snapshot times must increase")
    coeffs = []
    for p in paths:
        f, _ = read_snapshot(p)
        if not f.grid.same_as(grid):
            raise ConfigurationError(f"forcing snapshot {p} lives on a different grid")
        coeffs.append(to_spectral(f).coeffs)

    def forcing(t):
        # piecewise linear in time, constant outside the sampled range
        if t <= times[0]:
            return coeffs[0]
        if t >= times[-1]:
            return coeffs[-1]
        i = int(np.searchsorted(times, t, side="right")) - 1
        s = (t - times[i]) / (times[i + 1] - times[i])
        return (1.0 - s) * coeffs[i] + s * coeffs[i + 1]

    return forcing


# ---------------------------------------------------------------------------
# invariants table, summary, plot script
# ---------------------------------------------------------------------------

INVARIANT_COLUMNS = ("time", "mass", "energy", "h1_alpha_norm", "leakage", "slab_iterations")


def invariants_rows(traj: Trajectory, nl: Nonlinearity, alpha: float = 0.0) -> list:
    """One row per snapshot; ``slab_iterations`` sums the slabs since the previous snapshot."""
    from .diagnostics import energy, mass
    from .weights import hk_alpha_norm

    rows = []
    its = list(traj.iterations)
    per = traj.config.snapshot_every
    for i, (t, c) in enumerate(zip(traj.times, traj.coeffs)):
        sf = SpectralField(traj.grid, c)
        n_its = 0 if i == 0 else int(sum(its[(i - 1) * per : i * per]))
        rows.append(
            {
                "time": float(t),
                "mass": mass(sf),
                "energy": energy(sf, nl),
                "h1_alpha_norm": hk_alpha_norm(sf, 1, alpha),
                "leakage": float(traj.leakage[i]),
                "slab_iterations": n_its,
            }
        )
    return rows


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_invariants(path, rows: list):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(INVARIANT_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in INVARIANT_COLUMNS])
    Path(path).write_text(buf.getvalue())


def write_summary(path, summary: dict):
    """Machine-readable summary; keys sorted, no timestamps, so reruns are byte-identical."""
    Path(path).write_text(json.dumps(_plain(summary), indent=2, sort_keys=True) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return str(obj)


_PLOT_SCRIPT = '''"""Plot the invariants table written next to this script (needs matplotlib)."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
with open(here / "invariants.csv") as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["time"]) for r in rows]
fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
for ax, key in zip(axes.ravel(), ("mass", "energy", "h1_alpha_norm", "leakage")):
    vals = [float(r[key]) for r in rows]
    ref = vals[0] if vals[0] != 0 else 1.0
    ax.plot(t, [v / ref - 1.0 for v in vals] if key in ("mass", "energy") else vals, marker=".")
    ax.set_title(key + (" (relative drift)" if key in ("mass", "energy") else ""))
    ax.set_xlabel("t")
fig.tight_layout()
out = here / "invariants.png"
fig.savefig(out, dpi=120)
print(out)
if "--show" in sys.argv:
    plt.show()
'''


def write_plot_script(path):
    Path(path).write_text(_PLOT_SCRIPT)
