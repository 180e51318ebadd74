"""
Run configuration: JSON files validated into frozen dataclasses.

Unknown keys are rejected so that a typo in a preset never silently falls
back to a default. Every error names the file and the dotted key path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .integrators import INIT_METHODS, Segment, validate_schedule

INITIAL_TYPES = ("sine_bump", "constant", "random")


@dataclass(frozen=True)
class InitialSpec:
    type: str
    amplitude: float = 0.0
    offset: float = 0.0
    seed: int | None = None


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    energy_every_steps: int = 100
    snapshot_times: tuple[float, ...] = ()


@dataclass(frozen=True)
class ConvergenceSpec:
    t_final: float
    dt_base: float
    k_max: int
    dt_ref: float | None = None


@dataclass(frozen=True)
class FitSpec:
    t_min: float
    t_max: float


@dataclass(frozen=True)
class RunConfig:
    X1: float
    X2: float
    N1: int
    N2: int
    epsilon: float
    delta: float
    schedule: tuple[Segment, ...]
    initial: InitialSpec
    kernel_image_range: int = 1
    A0: float = 2.0
    A1: float = 5.0
    dealias: bool = False
    init_method: str = "first_order_stabilized"
    init_A: float = 2.0
    output: OutputSpec = field(default_factory=OutputSpec)
    m0: float | None = None
    convergence: ConvergenceSpec | None = None
    fit: FitSpec | None = None

    @property
    def t_final(self) -> float:
        return self.schedule[-1].t_end


class _Section:
    """Typed, path-aware access to one JSON object; tracks consumed keys."""

    def __init__(self, data: Any, path: str, source: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: '{path or '<root>'}' must be an object")
        self.data = data
        self.path = path
        self.source = source
        self.used: set[str] = set()

    def _key(self, k):
        return f"{self.path}.{k}" if self.path else k

    def fail(self, k, msg):
        raise ConfigError(f"{self.source}: key '{self._key(k)}': {msg}")

    def has(self, k):
        return k in self.data and self.data[k] is not None

    def raw(self, k, default=...):
        self.used.add(k)
        if k not in self.data or self.data[k] is None:
            if default is ...:
                self.fail(k, "missing required field")
            return default
        return self.data[k]

    def number(self, k, default=..., positive=False, nonneg=False):
        v = self.raw(k, default)
        if v is default and default is not ...:
            return v
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(k, f"expected a number, got {type(v).__name__}")
        v = float(v)
        if not math.isfinite(v):
            self.fail(k, "must be finite")
        if positive and v <= 0:
            self.fail(k, f"must be positive, got {v}")
        if nonneg and v < 0:
            self.fail(k, f"must be non-negative, got {v}")
        return v

    def integer(self, k, default=..., minimum=None):
        v = self.raw(k, default)
        if v is default and default is not ...:
            return v
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(k, f"expected an integer, got {type(v).__name__}")
        if minimum is not None and v < minimum:
            self.fail(k, f"must be >= {minimum}, got {v}")
        return v

    def boolean(self, k, default=...):
        v = self.raw(k, default)
        if not isinstance(v, bool):
            self.fail(k, f"expected true/false, got {type(v).__name__}")
        return v

    def string(self, k, default=..., choices=None):
        v = self.raw(k, default)
        if not isinstance(v, str):
            self.fail(k, f"expected a string, got {type(v).__name__}")
        if choices is not None and v not in choices:
            self.fail(k, f"must be one of {list(choices)}, got {v!r}")
        return v

    def section(self, k, required=True):
        v = self.raw(k, ... if required else None)
        if v is None:
            return None
        return _Section(v, self._key(k), self.source)

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigError(f"{self.source}: unknown key '{self._key(extra[0])}'")


def config_from_dict(data: Any, source: str = "<config>") -> RunConfig:
    root = _Section(data, "", source)

    dom = root.section("domain")
    X1 = dom.number("X1", positive=True)
    X2 = dom.number("X2", positive=True)
    dom.finish()

    grd = root.section("grid")
    N1 = grd.integer("N1", minimum=4)
    N2 = grd.integer("N2", minimum=4)
    for k, n in (("N1", N1), ("N2", N2)):
        if n % 2:
            grd.fail(k, f"must be even, got {n}")
    grd.finish()

    mod = root.section("model")
    epsilon = mod.number("epsilon", positive=True)
    delta = mod.number("delta", positive=True)
    image_range = mod.integer("kernel_image_range", 1, minimum=0)
    mod.finish()

    sch = root.section("scheme", required=False) or _Section({}, "scheme", source)
    A0 = sch.number("A0", 2.0, nonneg=True)
    A1 = sch.number("A1", 5.0, nonneg=True)
    dealias = sch.boolean("dealias", False)
    init_method = sch.string("init_method", "first_order_stabilized", choices=INIT_METHODS)
    init_A = sch.number("init_A", 2.0, nonneg=True)
    sch.finish()

    raw_sched = root.raw("schedule")
    if not isinstance(raw_sched, list) or not raw_sched:
        root.fail("schedule", "expected a non-empty list of {t_end, dt}")
    segs = []
    for i, item in enumerate(raw_sched):
        s = _Section(item, f"schedule[{i}]", source)
        segs.append(Segment(s.number("t_end", positive=True), s.number("dt", positive=True)))
        s.finish()
    try:
        validate_schedule(segs)
    except ConfigError as e:
        raise ConfigError(f"{source}: key 'schedule': {e}") from None

    ini = root.section("initial")
    kind = ini.string("type", choices=INITIAL_TYPES)
    if kind == "constant":
        initial = InitialSpec(kind, offset=ini.number("offset"))
    elif kind == "sine_bump":
        initial = InitialSpec(kind, amplitude=ini.number("amplitude"), offset=ini.number("offset", 0.0))
    else:
        initial = InitialSpec(
            kind,
            amplitude=ini.number("amplitude", positive=True),
            offset=ini.number("offset", 0.0),
            seed=ini.integer("seed", minimum=0),
        )
    ini.finish()

    out = root.section("output", required=False) or _Section({}, "output", source)
    snaps = out.raw("snapshot_times", [])
    if not isinstance(snaps, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in snaps):
        out.fail("snapshot_times", "expected a list of numbers")
    snaps = tuple(float(v) for v in snaps)
    if any(b <= a for a, b in zip(snaps, snaps[1:])):
        out.fail("snapshot_times", "must be strictly increasing")
    if snaps and (snaps[0] < 0 or snaps[-1] > segs[-1].t_end):
        out.fail("snapshot_times", "must lie within [0, final schedule time]")
    output = OutputSpec(
        dir=out.string("dir", "out"),
        energy_every_steps=out.integer("energy_every_steps", 100, minimum=1),
        snapshot_times=snaps,
    )
    out.finish()

    m0 = root.number("m0", None, positive=True)

    conv = root.section("convergence", required=False)
    convergence = None
    if conv is not None:
        convergence = ConvergenceSpec(
            t_final=conv.number("t_final", positive=True),
            dt_base=conv.number("dt_base", positive=True),
            k_max=conv.integer("k_max", minimum=0),
            dt_ref=conv.number("dt_ref", None, positive=True),
        )
        conv.finish()

    fs = root.section("fit", required=False)
    fit = None
    if fs is not None:
        fit = FitSpec(fs.number("t_min", positive=True), fs.number("t_max", positive=True))
        if fit.t_max <= fit.t_min:
            fs.fail("t_max", "must exceed t_min")
        fs.finish()

    root.finish()
    return RunConfig(
        X1=X1, X2=X2, N1=N1, N2=N2,
        epsilon=epsilon, delta=delta, kernel_image_range=image_range,
        A0=A0, A1=A1, dealias=dealias, init_method=init_method, init_A=init_A,
        schedule=tuple(segs), initial=initial, output=output, m0=m0,
        convergence=convergence, fit=fit,
    )  # fmt: skip


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config ({e.strerror})") from None
    if not text.strip():
        raise ConfigError(f"{path}: empty config file")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    return config_from_dict(data, str(path))


def preset_path(name: str) -> Path:
    """Path of a shipped preset, e.g. ``preset_path("coarsen_512_d005.json")``."""
    p = Path(__file__).parent / "presets" / name
    if not p.exists():
        raise ConfigError(f"no shipped preset named {name!r}")
    return p
