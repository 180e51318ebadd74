"""
Experiment drivers: temporal self-convergence, coarsening runs and
power-law fits of the energy decay.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import InitialSpec, OutputSpec, RunConfig
from .energetics import EnergyParams, EnergyRecord, EnergyRecorder, M0Tracker
from .errors import ConfigError, DivergenceError, DomainError
from .integrators import SchemeParams, Segment, StepperState, run
from .kernel import Kernel, build_kernel
from .rng import XorShift64Star
from .spectral_grid import Grid

log = logging.getLogger(__name__)

# full-scale step-size ladder (dt = 0.1 after the last break) and its desk-scale
# counterpart with the same three step sizes and breaks pulled in by 100x
FULL_SCALE_BREAKS = ((1000.0, 0.001), (10000.0, 0.01))
DESK_BREAKS = ((10.0, 0.001), (100.0, 0.01))
TAIL_DT = 0.1
SNAPSHOT_TIMES = (1.0, 10.0, 60.0, 400.0, 2000.0, 10000.0)


def random_initial(grid: Grid, amplitude: float, seed: int) -> np.ndarray:
    """I.i.d. uniform values in ``[-amplitude, amplitude)``, filled row-major."""
    if not amplitude > 0:
        raise ConfigError(f"amplitude must be positive, got {amplitude}")
    u = XorShift64Star(seed).uniform(grid.N1 * grid.N2).reshape(grid.shape)
    return amplitude * (2.0 * u - 1.0)


def sine_bump(grid: Grid, amplitude: float = 0.5, offset: float = 0.1) -> np.ndarray:
    X, Y = grid.mesh()
    return amplitude * np.sin(np.pi * X / grid.X1) * np.sin(np.pi * Y / grid.X2) + offset


def initial_field(grid: Grid, spec: InitialSpec) -> np.ndarray:
    if spec.type == "constant":
        return np.full(grid.shape, spec.offset)
    if spec.type == "sine_bump":
        return sine_bump(grid, spec.amplitude, spec.offset)
    if spec.type == "random":
        return random_initial(grid, spec.amplitude, spec.seed) + spec.offset
    raise ConfigError(f"unknown initial type {spec.type!r}")


def schedule_for(t_final: float, breaks: Sequence[tuple[float, float]] = DESK_BREAKS, tail_dt: float = TAIL_DT):
    """Cut a step-size ladder at ``t_final``: each ``(t_break, dt)`` applies
    up to ``t_break``, ``tail_dt`` afterwards."""
    segs = []
    for t_break, dt in breaks:
        if t_final <= t_break:
            segs.append(Segment(t_final, dt))
            return segs
        segs.append(Segment(t_break, dt))
    segs.append(Segment(t_final, tail_dt))
    return segs


class SnapshotCollector:
    """Observer keeping copies of the solution at requested times."""

    def __init__(self, times: Sequence[float]):
        self.pending = sorted(times)
        self.snapshots: dict[float, tuple[float, np.ndarray]] = {}

    def __call__(self, st: StepperState):
        while self.pending and st.t >= self.pending[0] - 1e-9 * max(1.0, abs(self.pending[0])):
            self.snapshots[self.pending.pop(0)] = (st.t, st.phi_curr.copy())


@dataclass
class SimulationResult:
    grid: Grid
    kernel: Kernel
    records: list[EnergyRecord]
    snapshots: dict[float, tuple[float, np.ndarray]]
    final: StepperState | None
    m0_estimate: float | None = None


def setup(cfg: RunConfig) -> tuple[Grid, Kernel, SchemeParams]:
    grid = Grid(cfg.X1, cfg.X2, cfg.N1, cfg.N2)
    kernel = build_kernel(grid, cfg.delta, cfg.kernel_image_range)
    params = SchemeParams(
        epsilon=cfg.epsilon,
        A0=cfg.A0,
        A1=cfg.A1,
        dt=cfg.schedule[0].dt,
        dealias=cfg.dealias,
        init_method=cfg.init_method,
        init_A=cfg.init_A,
    )
    return grid, kernel, params


def simulate(cfg: RunConfig, *, every: int | None = None, m0: float | None = None, track_m0: bool = False):
    """Run ``cfg`` end to end, recording energies and snapshots.

    ``m0`` (or ``cfg.m0``) switches on the modified energy in the records.
    On divergence the partial records and snapshots are attached to the
    raised :class:`DivergenceError`.
    """
    grid, kernel, params = setup(cfg)
    m0 = m0 if m0 is not None else cfg.m0
    ep = None if m0 is None else EnergyParams(cfg.epsilon, m0, cfg.A0, cfg.A1)
    recorder = EnergyRecorder(kernel, cfg.epsilon, every or cfg.output.energy_every_steps, ep)
    snaps = SnapshotCollector(cfg.output.snapshot_times)
    observers = [recorder, snaps]
    tracker = None
    if track_m0:
        tracker = M0Tracker()
        observers.append(tracker)
    phi0 = initial_field(grid, cfg.initial)
    try:
        final = run(params, grid, kernel, cfg.schedule, phi0, observers)
    except DivergenceError as e:
        e.records = recorder.records
        e.snapshots = snaps.snapshots
        raise
    return SimulationResult(
        grid, kernel, recorder.records, snaps.snapshots, final, tracker.value if tracker else None
    )


def coarsening_run(cfg: RunConfig, **kwargs) -> SimulationResult:
    """Coarsening from random data; thin wrapper over :func:`simulate`."""
    return simulate(cfg, **kwargs)


def coarsening_config(
    N: int = 128,
    epsilon: float = 0.1,
    delta: float = 0.05,
    t_final: float = 2000.0,
    seed: int = 20220101,
    X: float = 2 * math.pi,
    schedule=None,
    every: int = 100,
    snapshot_times: Sequence[float] = (),
    m0: float | None = None,
) -> RunConfig:
    """Desk-scale coarsening setup with the standard constants ``A0=2, A1=5``."""
    return RunConfig(
        X1=X, X2=X, N1=N, N2=N,
        epsilon=epsilon, delta=delta,
        schedule=tuple(schedule or schedule_for(t_final)),
        initial=InitialSpec("random", amplitude=0.1, seed=seed),
        output=OutputSpec(energy_every_steps=every, snapshot_times=tuple(t for t in snapshot_times if t <= t_final)),
        m0=m0,
    )  # fmt: skip


# ----------------------------------------------------------------------
# power-law fit


@dataclass(frozen=True)
class PowerLawFit:
    m_e: float
    b_e: float
    window: tuple[float, float]
    residual: float
    n_points: int


def fit_power_law(series, t_min: float, t_max: float) -> PowerLawFit:
    """Least-squares line through ``(ln t, ln E)`` for ``t_min <= t <= t_max``.

    ``series`` is a sequence of :class:`EnergyRecord` or a ``(t, E)`` pair
    of arrays. Returns ``E(t) ~ b_e * t**m_e``.
    """
    if isinstance(series, tuple) and len(series) == 2:
        t, E = (np.asarray(a, dtype=float) for a in series)
    else:
        t = np.array([r.t for r in series], dtype=float)
        E = np.array([r.E for r in series], dtype=float)
    sel = (t >= t_min) & (t <= t_max) & (t > 0)
    if sel.sum() < 8:
        raise ConfigError(f"fit window [{t_min}, {t_max}] holds {int(sel.sum())} samples, need at least 8")
    if np.any(E[sel] <= 0):
        raise DomainError("energy must be positive inside the fit window")
    x, y = np.log(t[sel]), np.log(E[sel])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ [slope, intercept] - y) ** 2)))
    return PowerLawFit(float(slope), float(np.exp(intercept)), (t_min, t_max), res, int(sel.sum()))


def default_fit_window(t_final: float) -> tuple[float, float]:
    return 10.0, 0.8 * t_final


# ----------------------------------------------------------------------
# temporal convergence


@dataclass(frozen=True)
class ConvergenceConfig:
    X1: float = 1.0
    X2: float = 1.0
    N1: int = 128
    N2: int = 128
    epsilon: float = 0.1
    delta: float = 0.05
    A0: float = 2.0
    A1: float = 5.0
    dt_base: float = 0.005
    k_max: int = 4
    dt_ref: float | None = None
    t_final: float = 0.05
    initial: InitialSpec = InitialSpec("sine_bump", amplitude=0.5, offset=0.1)
    kernel_image_range: int = 1
    init_method: str = "first_order_stabilized"
    init_A: float = 2.0
    dealias: bool = False

    @property
    def dts(self) -> list[float]:
        return [self.dt_base * 2.0**-k for k in range(self.k_max + 1)]

    @property
    def reference_dt(self) -> float:
        return self.dt_ref if self.dt_ref is not None else self.dts[-1] / 8

    @classmethod
    def from_run_config(cls, cfg: RunConfig) -> "ConvergenceConfig":
        if cfg.convergence is None:
            raise ConfigError("config has no 'convergence' section")
        c = cfg.convergence
        return cls(
            X1=cfg.X1, X2=cfg.X2, N1=cfg.N1, N2=cfg.N2,
            epsilon=cfg.epsilon, delta=cfg.delta, A0=cfg.A0, A1=cfg.A1,
            dt_base=c.dt_base, k_max=c.k_max, dt_ref=c.dt_ref, t_final=c.t_final,
            initial=cfg.initial, kernel_image_range=cfg.kernel_image_range,
            init_method=cfg.init_method, init_A=cfg.init_A, dealias=cfg.dealias,
        )  # fmt: skip


@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    steps: int
    l2_error: float
    rate: float | None
    failed: bool = False


@dataclass
class ConvergenceResult:
    rows: list[ConvergenceRow]
    dt_ref: float
    notes: list[str] = field(default_factory=list)

    @property
    def slope(self) -> float:
        """Least-squares slope of ``ln(error)`` against ``ln(dt)`` over successful rows."""
        ok = [r for r in self.rows if not r.failed and r.l2_error > 0]
        if len(ok) < 2:
            return float("nan")
        x = np.log([r.dt for r in ok])
        y = np.log([r.l2_error for r in ok])
        return float(np.polyfit(x, y, 1)[0])

    @property
    def mean_rate(self) -> float:
        rates = [r.rate for r in self.rows if r.rate is not None and math.isfinite(r.rate)]
        return float(np.mean(rates)) if rates else float("nan")


def _final_state(params, grid, kernel, phi0, dt, t_final, notes):
    steps = max(1, round(t_final / dt))
    if abs(steps * dt - t_final) > 1e-12 * max(1.0, t_final):
        notes.append(f"dt={dt:g}: t_final {t_final:g} not a multiple; integrated to {steps * dt:.17g}")
    st = run(params, grid, kernel, [Segment(steps * dt, dt)], phi0)
    return st.phi_curr, steps


def convergence_study(cfg: ConvergenceConfig) -> ConvergenceResult:
    """Errors against a fine-step benchmark on the ladder ``dt_base * 2**-k``."""
    grid = Grid(cfg.X1, cfg.X2, cfg.N1, cfg.N2)
    kernel = build_kernel(grid, cfg.delta, cfg.kernel_image_range)
    dts = cfg.dts
    dt_ref = cfg.reference_dt
    if dt_ref > dts[-1] / 4:
        raise ConfigError(f"dt_ref={dt_ref} must be at most a quarter of the smallest step {dts[-1]}")
    params = SchemeParams(
        epsilon=cfg.epsilon, A0=cfg.A0, A1=cfg.A1, dt=dt_ref, dealias=cfg.dealias,
        init_method=cfg.init_method, init_A=cfg.init_A,
    )  # fmt: skip
    phi0 = initial_field(grid, cfg.initial)
    notes: list[str] = []
    ref, _ = _final_state(params, grid, kernel, phi0, dt_ref, cfg.t_final, notes)

    errors, steps = [], []
    for dt in dts:
        try:
            phi, n = _final_state(params, grid, kernel, phi0, dt, cfg.t_final, notes)
            errors.append(grid.norm(phi - ref))
        except DivergenceError as e:
            log.warning("run with dt=%g diverged: %s", dt, e)
            n = round(cfg.t_final / dt)
            errors.append(float("nan"))
        steps.append(n)

    rows = []
    for k, (dt, e, n) in enumerate(zip(dts, errors, steps)):
        rate = None
        if k > 0:
            prev = errors[k - 1]
            rate = math.log(prev / e) / math.log(dts[k - 1] / dt) if (prev > 0 and e > 0) else float("nan")
        rows.append(ConvergenceRow(dt, n, e, rate, failed=not math.isfinite(e)))
    return ConvergenceResult(rows, dt_ref, notes)
