"""
Linear stabilized time stepping for the nonlocal Cahn-Hilliard equation

    phi_t = Lap( phi**3 - phi + eps**2 L phi ).

The two-step scheme advances ``(phi^{n-1}, phi^n) -> phi^{n+1}`` via

    (phi^{n+1} - phi^n)/dt = Lap( 3/2 (phi^n)^3 - 1/2 (phi^{n-1})^3 - phib
                                  + A0 (phi^{n+1} - 2 phi^n + phi^{n-1})
                                  + A1 dt (phi^{n+1} - phi^n)
                                  + eps**2 L(3/4 phi^{n+1} + 1/4 phi^{n-1}) ),

    phib = 3/2 phi^n - 1/2 phi^{n-1},

which is diagonal in Fourier space: one forward/inverse FFT round per
step, no iteration. ``A1 = 0`` gives the single-stabilizer variant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.fft

from .errors import ConfigError, DivergenceError, ModelError, ShapeError
from .kernel import Kernel, gamma0, gamma0_positive
from .spectral_grid import Grid, fft_workers

INIT_METHODS = ("first_order_stabilized", "rk2")
BLOWUP_LINF = 1e6


class StabilityWarning(UserWarning):
    """Stabilization constants below the energy-stability thresholds."""


@dataclass(frozen=True)
class SchemeParams:
    epsilon: float
    A0: float = 2.0
    A1: float = 5.0
    dt: float = 1e-3
    dealias: bool = False
    init_method: str = "first_order_stabilized"
    init_A: float = 2.0

    def __post_init__(self):
        for name in ("epsilon", "dt"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive and finite, got {v}")
        for name in ("A0", "A1", "init_A"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be non-negative and finite, got {v}")
        if self.init_method not in INIT_METHODS:
            raise ConfigError(f"init_method must be one of {INIT_METHODS}, got {self.init_method!r}")

    def stability_warnings(self, m0: float) -> list[str]:
        """Messages for each violated lower bound ``A0 >= 3/2 M0^2``, ``A1 >= 19/4 M0^2``."""
        msgs = []
        if self.A0 < 1.5 * m0**2:
            msgs.append(f"A0={self.A0} < 3*M0^2/2={1.5 * m0**2:.4g}")
        if self.A1 < 4.75 * m0**2:
            msgs.append(f"A1={self.A1} < 19*M0^2/4={4.75 * m0**2:.4g}")
        for m in msgs:
            warnings.warn(m, StabilityWarning, stacklevel=2)
        return msgs


@dataclass(frozen=True)
class StepperState:
    """Two-level history of a run.

    ``kind`` tells how ``phi_curr`` was produced: ``"initial"``, ``"init"``
    (one-step initializer) or ``"cn2"`` (two-step scheme).
    """

    phi_prev: np.ndarray
    phi_curr: np.ndarray
    t: float
    n: int
    dt: float
    kind: str = "initial"


def _dealias_cube(grid: Grid, phi: np.ndarray) -> np.ndarray:
    """Pointwise cube with zero padding, truncated back to the grid.

    The 3/2 rule for quadratic products generalizes to padding by 2 for a
    cubic one: no product mode folds back onto a retained mode.
    """
    M1, M2 = 2 * grid.N1, 2 * grid.N2
    scale = (M1 * M2) / (grid.N1 * grid.N2)
    padded = scipy.fft.irfft2(_pad(grid, grid.rfft(phi), M1, M2), s=(M1, M2), workers=fft_workers()) * scale
    P = scipy.fft.rfft2(padded**3, workers=fft_workers()) / scale
    return grid.irfft(_truncate(grid, P))


def _pad(grid: Grid, F: np.ndarray, M1: int, M2: int) -> np.ndarray:
    n1, n2 = grid.N1, grid.N2
    out = np.zeros((M1, M2 // 2 + 1), dtype=complex)
    h = n1 // 2
    # Nyquist modes are dropped: their real-field pairing is ambiguous after padding
    out[:h, : n2 // 2] = F[:h, : n2 // 2]
    out[M1 - h + 1 :, : n2 // 2] = F[h + 1 :, : n2 // 2]
    return out


def _truncate(grid: Grid, P: np.ndarray) -> np.ndarray:
    n1, n2 = grid.N1, grid.N2
    M1 = P.shape[0]
    out = np.zeros(grid.lam.shape, dtype=complex)
    h = n1 // 2
    out[:h, : n2 // 2] = P[:h, : n2 // 2]
    out[h + 1 :, : n2 // 2] = P[M1 - h + 1 :, : n2 // 2]
    return out


def cube(grid: Grid, phi: np.ndarray, dealias: bool = False) -> np.ndarray:
    if not dealias:
        return phi * phi * phi
    return _dealias_cube(grid, phi)


def _check_finite(phi: np.ndarray, t: float):
    linf = float(np.max(np.abs(phi)))
    if not math.isfinite(linf) or linf > BLOWUP_LINF:
        raise DivergenceError(f"solution diverged after t={t:.6g} (|phi|_inf={linf:.3e})", t=t, linf=linf)


class Stepper:
    """Precomputed implicit operator of the two-step scheme for one ``dt``.

    The per-mode denominator is

        1/dt + lam*(A0 + A1*dt) + 3/4 * eps**2 * lam * sigma,

    positive for every mode and every ``dt > 0``.

    ``nonlinear=False`` drops the cubic term; it exists for testing the
    linear recurrence in closed form.
    """

    def __init__(self, params: SchemeParams, grid: Grid, kernel: Kernel, *, nonlinear: bool = True):
        if kernel.grid != grid:
            raise ShapeError(f"kernel grid {kernel.grid} does not match grid {grid}")
        if not gamma0_positive(kernel, params.epsilon):
            raise ModelError(
                f"gamma0 = eps^2 (J*1) - 1 = {gamma0(kernel, params.epsilon):.6g} must be positive "
                f"(condition (d) on the kernel; requires delta < 2*epsilon for the Gaussian family)"
            )
        self.params = params
        self.grid = grid
        self.kernel = kernel
        self.nonlinear = nonlinear

        p = params
        lam, sig, e2 = grid.lam, kernel.sigma, p.epsilon**2
        self.denom = 1.0 / p.dt + lam * (p.A0 + p.A1 * p.dt) + 0.75 * e2 * lam * sig
        self.init_denom = 1.0 / p.dt + lam * p.init_A + e2 * lam * sig

    def _cube(self, phi):
        if not self.nonlinear:
            return np.zeros_like(phi)
        return cube(self.grid, phi, self.params.dealias)

    def step(self, phi_prev: np.ndarray, phi_curr: np.ndarray, t: float = 0.0) -> np.ndarray:
        """One step of the two-step scheme; returns ``phi^{n+1}``."""
        g, p = self.grid, self.params
        pc, pp = g.check(phi_curr), g.check(phi_prev)
        # every term multiplied by lam in physical space, folded into one transform
        r = 1.5 * self._cube(pc) - 0.5 * self._cube(pp)
        r += (-1.5 - 2.0 * p.A0 - p.A1 * p.dt) * pc + (0.5 + p.A0) * pp
        R = g.rfft(r)
        Pc = g.rfft(pc)
        Pp = g.rfft(pp)
        lam = g.lam
        rhs = Pc / p.dt - lam * (R + 0.25 * p.epsilon**2 * self.kernel.sigma * Pp)
        out = rhs / self.denom
        out[0, 0] = Pc[0, 0]
        phi = g.irfft(out)
        _check_finite(phi, t)
        return phi

    def step_state(self, st: StepperState) -> StepperState:
        phi = self.step(st.phi_prev, st.phi_curr, st.t)
        return StepperState(st.phi_curr, phi, st.t + self.params.dt, st.n + 1, self.params.dt, "cn2")

    def init_step(self, phi0: np.ndarray, t: float = 0.0) -> np.ndarray:
        if self.params.init_method == "rk2":
            return step_init_rk2(self.params, self.grid, self.kernel, phi0, t=t, nonlinear=self.nonlinear)
        g, p = self.grid, self.params
        p0 = g.check(phi0)
        r = self._cube(p0) - (1.0 + p.init_A) * p0
        P0 = g.rfft(p0)
        out = (P0 / p.dt - g.lam * g.rfft(r)) / self.init_denom
        out[0, 0] = P0[0, 0]
        phi = g.irfft(out)
        _check_finite(phi, t)
        return phi

    def residual(self, phi_prev, phi_curr, phi_next) -> float:
        """l2 norm of the scheme's defect, assembled in physical space."""
        return residual(self, phi_prev, phi_curr, phi_next)


def build_stepper(params: SchemeParams, grid: Grid, kernel: Kernel) -> Stepper:
    return Stepper(params, grid, kernel)


def step_cn2(stepper: Stepper, st: StepperState) -> np.ndarray:
    return stepper.step(st.phi_prev, st.phi_curr, st.t)


def residual(stepper: Stepper, phi_prev, phi_curr, phi_next) -> float:
    """Defect of the two-step scheme for a given triple.

    Uses ``Grid.laplacian`` and ``Kernel.apply`` directly; shares nothing
    with the denominator table used by :meth:`Stepper.step`.
    """
    g, k, p = stepper.grid, stepper.kernel, stepper.params
    pp, pc, pn = (g.check(f) for f in (phi_prev, phi_curr, phi_next))
    cub = stepper._cube
    mu = (
        1.5 * cub(pc)
        - 0.5 * cub(pp)
        - (1.5 * pc - 0.5 * pp)
        + p.A0 * (pn - 2.0 * pc + pp)
        + p.A1 * p.dt * (pn - pc)
        + p.epsilon**2 * k.apply(0.75 * pn + 0.25 * pp)
    )
    return g.norm((pn - pc) / p.dt - g.laplacian(mu))


def step_init_first_order(params: SchemeParams, grid: Grid, kernel: Kernel, phi0: np.ndarray) -> np.ndarray:
    """First-order stabilized semi-implicit step: implicit nonlocal part,
    explicit cubic, stabilizer ``init_A * Lap(phi^1 - phi^0)``."""
    return Stepper(replace(params, init_method="first_order_stabilized"), grid, kernel).init_step(phi0)


def _rhs(grid: Grid, kernel: Kernel, eps: float, phi: np.ndarray, nonlinear: bool) -> np.ndarray:
    c = phi**3 if nonlinear else 0.0
    return grid.laplacian(c - phi + eps**2 * kernel.apply(phi))


def step_init_rk2(
    params: SchemeParams, grid: Grid, kernel: Kernel, phi0: np.ndarray, *, t: float = 0.0, nonlinear: bool = True
) -> np.ndarray:
    """Explicit Heun step. Stable only for small ``dt``; no safeguard beyond
    the divergence check."""
    if not gamma0_positive(kernel, params.epsilon):
        raise ModelError(f"gamma0 = {gamma0(kernel, params.epsilon):.6g} must be positive")
    dt, eps = params.dt, params.epsilon
    p0 = grid.check(phi0)
    k1 = _rhs(grid, kernel, eps, p0, nonlinear)
    mid = p0 + dt * k1
    _check_finite(mid, t)
    k2 = _rhs(grid, kernel, eps, mid, nonlinear)
    phi = p0 + 0.5 * dt * (k1 + k2)
    # the Laplacian output has zero mean up to round-off; pin the mean exactly
    phi += np.mean(p0) - np.mean(phi)
    _check_finite(phi, t)
    return phi


# ----------------------------------------------------------------------
# schedules and the run loop


@dataclass(frozen=True)
class Segment:
    t_end: float
    dt: float


def segment_steps(t_start: float, seg: Segment) -> int:
    """Number of steps of size ``seg.dt`` covering ``[t_start, seg.t_end]``."""
    n = round((seg.t_end - t_start) / seg.dt)
    if n < 1 or abs(n * seg.dt - (seg.t_end - t_start)) > 1e-9 * max(1.0, seg.t_end):
        raise ConfigError(
            f"schedule segment [{t_start}, {seg.t_end}] is not an integer number of steps dt={seg.dt}"
        )
    return n


def validate_schedule(schedule: Sequence) -> list[Segment]:
    segs = [s if isinstance(s, Segment) else Segment(*s) for s in schedule]
    if not segs:
        raise ConfigError("schedule must contain at least one segment")
    t = 0.0
    for s in segs:
        if not (math.isfinite(s.dt) and s.dt > 0):
            raise ConfigError(f"schedule: dt must be positive, got {s.dt}")
        if not (math.isfinite(s.t_end) and s.t_end > t):
            raise ConfigError(f"schedule: t_end values must be strictly increasing, got {s.t_end} after {t}")
        segment_steps(t, s)
        t = s.t_end
    return segs


Observer = Callable[[StepperState], None]


def run(
    params: SchemeParams,
    grid: Grid,
    kernel: Kernel,
    schedule: Sequence,
    phi0: np.ndarray,
    observers: Iterable[Observer] = (),
    *,
    nonlinear: bool = True,
) -> StepperState:
    """Integrate from ``t = 0`` through a piecewise-constant step schedule.

    ``schedule`` is a list of ``(t_end, dt)`` pairs. Each segment starts
    with one initializer step, since the two-step history is tied to a
    single ``dt``. Observers are called with the initial state and after
    every step; ``params.dt`` is ignored in favour of the schedule.
    """
    segs = validate_schedule(schedule)
    observers = list(observers)
    phi0 = np.array(grid.check(phi0), dtype=float)
    _check_finite(phi0, 0.0)
    st = StepperState(phi0, phi0, 0.0, 0, segs[0].dt, "initial")
    for obs in observers:
        obs(st)

    t_start = 0.0
    for seg in segs:
        stepper = Stepper(replace(params, dt=seg.dt), grid, kernel, nonlinear=nonlinear)
        n = segment_steps(t_start, seg)
        for k in range(n):
            t_new = seg.t_end if k == n - 1 else t_start + (k + 1) * seg.dt
            if k == 0:
                phi = stepper.init_step(st.phi_curr, st.t)
                kind = "init"
            else:
                phi = stepper.step(st.phi_prev, st.phi_curr, st.t)
                kind = "cn2"
            st = StepperState(st.phi_curr, phi, t_new, st.n + 1, seg.dt, kind)
            for obs in observers:
                obs(st)
        t_start = seg.t_end
    return st
