"""Plain-text experiment configuration.

Grammar (INI dialect, parsed by :mod:`configparser`)::

    [model]
    preset = A                  ; optional: free|A|B|C|D, overrides [ends.*]
    r0 = 2.0
    name = my-surface

    [ends.1]                    ; end index 1 -> line coordinate x > 0
    profile = euclidean         ; euclidean|hyperbolic|flat|conic:ALPHA|table:FILE
    q1_amplitude = 1.0          ; optional reference tail lambda0 + A r^-p
    q1_power = 0.8
    decay = 1.0, 1.0, 1.0       ; (sigma, tau, rho) decay constants

    [ends.2]
    profile = hyperbolic

    [potential]
    core = square: 1.5, 1.0     ; square barrier (v0, half_width), or 'none'
    table = file.csv            ; optional sampled core potential (r, V)

    [grid]
    rmax = 60.0
    dx = 0.01
    mmax = 0

    [run]
    lambda_grid = 0.3:1.0:8     ; lo:hi:count
    t_grid = 10, 20, 40, 80
    end = 1                     ; launch end for dynamics experiments
    mode = 0
    profile_center = 0.55       ; spectral window of the launched packet
    profile_width = 0.25
    dt = 0.05
    tol_s = 1e-6
    tol_f = 1e-4
    tol_w = 1e-3
    tol_adj = 1e-3

All sections except [model] are optional; missing keys take the defaults
shown by ``default_config()``.  Validation failures raise
:class:`ConfigError` carrying the section/key context.
"""

from __future__ import annotations

import configparser
import csv
import io
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .geometry import CutoffFamily, EndProfile, ManifoldModel, tail_q1
from .presets import by_name

__all__ = [
    "ConfigError",
    "GridConfig",
    "RunConfig",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "default_config",
    "thread_cap",
]

_PRESETS = ("free", "A", "B", "C", "D")
_PROFILES = ("euclidean", "hyperbolic", "flat", "conic", "table")


class ConfigError(ValueError):
    """Malformed configuration; message carries section/key context."""


@dataclass(frozen=True)
class GridConfig:
    rmax: float = 60.0
    dx: float = 0.01
    mmax: int = 0

    def validate(self) -> None:
        if self.rmax <= 0 or self.dx <= 0:
            raise ConfigError("[grid] rmax and dx must be positive")
        if self.rmax / self.dx > 5e6:
            raise ConfigError("[grid] more than 5e6 points requested")
        if self.mmax < 0:
            raise ConfigError("[grid] mmax must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    lambda_grid: Tuple[float, float, int] = (0.3, 1.0, 8)
    t_grid: Tuple[float, ...] = (10.0, 20.0, 40.0, 80.0)
    end: int = 1
    mode: int = 0
    profile_center: float = 0.55
    profile_width: float = 0.25
    dt: float = 0.05
    tol_s: float = 1e-6
    tol_f: float = 1e-4
    tol_w: float = 1e-3
    tol_adj: float = 1e-3

    def validate(self) -> None:
        lo, hi, n = self.lambda_grid
        if not (lo < hi and n >= 1):
            raise ConfigError("[run] lambda_grid must be lo:hi:count with lo < hi")
        if any(b <= a for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise ConfigError("[run] t_grid must be strictly increasing")
        if self.end not in (1, 2):
            raise ConfigError("[run] end must be 1 or 2")
        if self.profile_width <= 0:
            raise ConfigError("[run] profile_width must be positive")
        if self.dt <= 0:
            raise ConfigError("[run] dt must be positive")
        for k in ("tol_s", "tol_f", "tol_w", "tol_adj"):
            if getattr(self, k) <= 0:
                raise ConfigError(f"[run] {k} must be positive")

    @property
    def lambdas(self) -> np.ndarray:
        lo, hi, n = self.lambda_grid
        return np.linspace(lo, hi, n)


@dataclass
class ExperimentConfig:
    model: ManifoldModel
    grid: GridConfig = field(default_factory=GridConfig)
    run: RunConfig = field(default_factory=RunConfig)
    source: str = "<defaults>"


def default_config(preset: str = "A") -> ExperimentConfig:
    return ExperimentConfig(model=by_name(preset))


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def _get_float(sec, key: str, default: float) -> float:
    raw = sec.get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r} is not a number")


def _get_int(sec, key: str, default: int) -> int:
    raw = sec.get(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r} is not an integer")


def _get_floats(sec, key: str, default: Sequence[float]) -> Tuple[float, ...]:
    raw = sec.get(key)
    if raw is None:
        return tuple(default)
    try:
        return tuple(float(tok) for tok in raw.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r} is not a number list")


def _parse_lambda_grid(sec, key: str, default) -> Tuple[float, float, int]:
    raw = sec.get(key)
    if raw is None:
        return default
    parts = raw.split(":")
    if len(parts) != 3:
        raise ConfigError(f"[{sec.name}] {key} must be lo:hi:count, got {raw!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r} is not lo:hi:count")


def _read_table(path: str, base: str) -> Tuple[np.ndarray, np.ndarray]:
    full = path if os.path.isabs(path) else os.path.join(base, path)
    if not os.path.exists(full):
        raise ConfigError(f"table file not found: {full}")
    rows = []
    with open(full, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except (ValueError, IndexError):
                raise ConfigError(f"bad table row {rec!r} in {full}")
    if len(rows) < 4:
        raise ConfigError(f"table {full} needs at least 4 rows")
    arr = np.asarray(rows, dtype=float)
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise ConfigError(f"table {full}: first column must increase strictly")
    return arr[:, 0], arr[:, 1]


def _build_end(sec, r0: float, cutoffs: CutoffFamily, base: str) -> EndProfile:
    profile = sec.get("profile", "euclidean").strip()
    kind, _, arg = profile.partition(":")
    kind = kind.strip().lower()
    if kind not in _PROFILES:
        raise ConfigError(
            f"[{sec.name}] unknown profile {profile!r}; "
            f"choose from {', '.join(_PROFILES)}")

    kw = {"decay": _get_floats(sec, "decay", (1.0, 1.0, 1.0))}
    if len(kw["decay"]) != 3:
        raise ConfigError(f"[{sec.name}] decay needs three constants")

    amp = _get_float(sec, "q1_amplitude", 0.0)
    power = _get_float(sec, "q1_power", 1.0)
    lambda0 = {"euclidean": 0.0, "conic": 0.0, "flat": 0.0,
               "hyperbolic": 0.125, "table": 0.0}[kind]
    if amp != 0.0:
        if power <= 0:
            raise ConfigError(f"[{sec.name}] q1_power must be positive")
        q1 = tail_q1(amp, power, r0, cutoffs=cutoffs, lambda0=lambda0)
        kw.update(q1=q1, v_tail=q1)
    elif kind in ("euclidean", "conic", "flat"):
        zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
        kw["q1"] = zero

    if kind == "euclidean":
        return EndProfile.euclidean(**kw)
    if kind == "flat":
        return EndProfile.flat(**kw)
    if kind == "hyperbolic":
        return EndProfile.hyperbolic(**kw)
    if kind == "conic":
        try:
            alpha = float(arg)
        except ValueError:
            raise ConfigError(f"[{sec.name}] conic profile needs conic:ALPHA")
        if alpha <= 0:
            raise ConfigError(f"[{sec.name}] conic opening must be positive")
        return EndProfile.conic(alpha, **kw)
    # table
    r_nodes, f_nodes = _read_table(arg.strip(), base)
    return EndProfile.from_table(r_nodes, f_nodes, **kw)


def _build_potential(sec, r0: float, base: str):
    """Returns (v_core, breakpoints)."""
    core = sec.get("core", "none").strip()
    table = sec.get("table")
    if core.lower() in ("none", ""):
        v_sq, bps = None, ()
    else:
        kind, _, arg = core.partition(":")
        if kind.strip().lower() != "square":
            raise ConfigError(f"[potential] unknown core {core!r}")
        try:
            v0, half_width = (float(tok) for tok in arg.split(","))
        except ValueError:
            raise ConfigError("[potential] core = square: V0, HALF_WIDTH")
        if half_width <= 0 or half_width > r0 / 2.0:
            raise ConfigError(
                "[potential] square barrier must fit inside |x| <= r0/2")

        def v_sq(x, _v=v0, _a=half_width):
            x = np.asarray(x, dtype=float)
            return np.where(np.abs(x) <= _a, _v, 0.0)

        bps = (-half_width, half_width)

    if table is None:
        return v_sq, bps

    x_nodes, v_nodes = _read_table(table.strip(), base)
    if x_nodes[0] < -r0 / 2.0 or x_nodes[-1] > r0 / 2.0:
        raise ConfigError("[potential] sampled core must live inside |x| <= r0/2")

    def v_tab(x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, x_nodes, v_nodes, left=0.0, right=0.0)

    if v_sq is None:
        return v_tab, bps + (x_nodes[0], x_nodes[-1])
    return (lambda x: v_sq(x) + v_tab(x)), bps + (x_nodes[0], x_nodes[-1])


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def parse_config(text: str, base: str = ".") -> ExperimentConfig:
    """Parse config text into a validated :class:`ExperimentConfig`.

    ``base`` resolves relative table paths.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc

    if "model" not in cp:
        raise ConfigError("missing [model] section")
    msec = cp["model"]
    r0 = _get_float(msec, "r0", 2.0)
    if r0 < 2.0:
        raise ConfigError("[model] r0 must be >= 2")

    preset = msec.get("preset")
    if preset is not None:
        preset = preset.strip()
        if preset not in _PRESETS:
            raise ConfigError(
                f"[model] unknown preset {preset!r}; choose from {_PRESETS}")
        model = by_name(preset, r0=r0)
        if msec.get("name"):
            model.name = msec["name"].strip()
    else:
        cutoffs = CutoffFamily()
        ends = []
        for i in (1, 2):
            key = f"ends.{i}"
            if key not in cp:
                raise ConfigError(f"missing [{key}] section (or use a preset)")
            ends.append(_build_end(cp[key], r0, cutoffs, base))
        v_core, bps = (None, ())
        if "potential" in cp:
            v_core, bps = _build_potential(cp["potential"], r0, base)
        model = ManifoldModel(ends, r0=r0, cutoffs=cutoffs, v_core=v_core,
                              core_breakpoints=bps,
                              name=msec.get("name", "custom").strip())

    gsec = cp["grid"] if "grid" in cp else cp["DEFAULT"]
    grid = GridConfig(
        rmax=_get_float(gsec, "rmax", 60.0),
        dx=_get_float(gsec, "dx", 0.01),
        mmax=_get_int(gsec, "mmax", 0),
    )
    grid.validate()

    rsec = cp["run"] if "run" in cp else cp["DEFAULT"]
    run = RunConfig(
        lambda_grid=_parse_lambda_grid(rsec, "lambda_grid", (0.3, 1.0, 8)),
        t_grid=_get_floats(rsec, "t_grid", (10.0, 20.0, 40.0, 80.0)),
        end=_get_int(rsec, "end", 1),
        mode=_get_int(rsec, "mode", 0),
        profile_center=_get_float(rsec, "profile_center", 0.55),
        profile_width=_get_float(rsec, "profile_width", 0.25),
        dt=_get_float(rsec, "dt", 0.05),
        tol_s=_get_float(rsec, "tol_s", 1e-6),
        tol_f=_get_float(rsec, "tol_f", 1e-4),
        tol_w=_get_float(rsec, "tol_w", 1e-3),
        tol_adj=_get_float(rsec, "tol_adj", 1e-3),
    )
    run.validate()

    known = {"model", "potential", "grid", "run", "ends.1", "ends.2", "DEFAULT"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown config sections: {sorted(extra)}")

    return ExperimentConfig(model=model, grid=grid, run=run)


def load_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        cfg = parse_config(fh.read(), base=os.path.dirname(os.path.abspath(path)))
    cfg.source = path
    return cfg


def thread_cap() -> int:
    """Worker cap from ENDS_SCATTER_THREADS (default 1, minimum 1)."""
    raw = os.environ.get("ENDS_SCATTER_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
