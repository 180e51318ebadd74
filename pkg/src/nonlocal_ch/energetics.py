"""Discrete energies, mass and per-step diagnostic records."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .integrators import StepperState
from .kernel import Kernel


@dataclass(frozen=True)
class EnergyParams:
    epsilon: float
    M0: float
    A0: float = 2.0
    A1: float = 5.0

    def __post_init__(self):
        if not (math.isfinite(self.M0) and self.M0 > 0):
            raise ConfigError(f"M0 must be positive, got {self.M0}")


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    mass: float
    E: float
    E_mod: float | None
    linf: float
    min: float
    max: float
    dt: float


def double_well(phi: np.ndarray) -> np.ndarray:
    return 0.25 * (phi * phi - 1.0) ** 2


def mass(grid, phi: np.ndarray) -> float:
    return grid.cell * float(np.sum(grid.check(phi)))


def energy(phi: np.ndarray, kernel: Kernel, epsilon: float) -> float:
    """``<F(phi), 1> + eps^2/2 <phi, L phi>`` with ``F = (phi^2 - 1)^2 / 4``."""
    g = kernel.grid
    phi = g.check(phi)
    bulk = g.cell * float(np.sum(double_well(phi)))
    return bulk + 0.5 * epsilon**2 * g.inner(phi, kernel.apply(phi))


def modified_energy(phi_next, phi_curr, phi_prev, kernel: Kernel, ep: EnergyParams, dt: float) -> float:
    """Modified energy of a consecutive triple ``(phi^{n+1}, phi^n, phi^{n-1})``.

    E(phi^{n+1}) + (27/8 M0^2 dt + A0/2 + 1/4 + eps^2 (J*1)/8) |d|^2
        - 1/4 <m^2 + m*b + b^2, d^2>

    with ``d = phi^{n+1} - phi^n``, ``m = (phi^{n+1} + phi^n)/2`` and
    ``b = 3/2 phi^n - 1/2 phi^{n-1}``.
    """
    g = kernel.grid
    pn, pc, pp = (g.check(f) for f in (phi_next, phi_curr, phi_prev))
    d = pn - pc
    d2 = g.inner(d, d)
    m = 0.5 * (pn + pc)
    b = 1.5 * pc - 0.5 * pp
    coef = 27.0 / 8.0 * ep.M0**2 * dt + 0.5 * ep.A0 + 0.25 + ep.epsilon**2 * kernel.j_star_one / 8.0
    cross = 0.25 * g.inner(m * m + m * b + b * b, d * d)
    return energy(pn, kernel, ep.epsilon) + coef * d2 - cross


def m0_term(phi: np.ndarray, phi_before: np.ndarray, dt: float) -> float:
    return float(np.max(np.abs(phi)) + np.max(np.abs(phi - phi_before)) / dt)


def estimate_m0(history: Sequence[np.ndarray], dt: float) -> float:
    """``1 + max_k (|phi^k|_inf + |(phi^k - phi^{k-1})/dt|_inf)`` over a stored trajectory."""
    if len(history) < 2:
        raise ConfigError("estimate_m0 needs at least two fields")
    return 1.0 + max(m0_term(history[k], history[k - 1], dt) for k in range(1, len(history)))


class M0Tracker:
    """Streaming version of :func:`estimate_m0` for use as a run observer.

    States produced by an initializer step are skipped unless ``include_init``.
    """

    def __init__(self, include_init: bool = True):
        self.include_init = include_init
        self.value = 1.0

    def __call__(self, st: StepperState):
        if st.kind == "initial" or (st.kind == "init" and not self.include_init):
            return
        self.value = max(self.value, 1.0 + m0_term(st.phi_curr, st.phi_prev, st.dt))


class EnergyRecorder:
    """Observer collecting :class:`EnergyRecord` rows every ``every`` steps.

    The modified energy is filled in when ``energy_params`` is given and the
    state came from a two-step update (its three-level history is then
    consistent); otherwise ``E_mod`` is ``None``.
    """

    def __init__(self, kernel: Kernel, epsilon: float, every: int = 1, energy_params: EnergyParams | None = None):
        if every < 1:
            raise ConfigError(f"every must be >= 1, got {every}")
        self.kernel = kernel
        self.epsilon = epsilon
        self.every = int(every)
        self.energy_params = energy_params
        self.records: list[EnergyRecord] = []
        self._older = None

    def __call__(self, st: StepperState):
        older, self._older = self._older, st.phi_prev
        if st.n % self.every:
            return
        self.records.append(self.record(st, older))

    def record(self, st: StepperState, older=None) -> EnergyRecord:
        phi = st.phi_curr
        e_mod = None
        if self.energy_params is not None and st.kind == "cn2" and older is not None:
            e_mod = modified_energy(phi, st.phi_prev, older, self.kernel, self.energy_params, st.dt)
        return EnergyRecord(
            t=st.t,
            mass=mass(self.kernel.grid, phi),
            E=energy(phi, self.kernel, self.epsilon),
            E_mod=e_mod,
            linf=float(np.max(np.abs(phi))),
            min=float(np.min(phi)),
            max=float(np.max(phi)),
            dt=st.dt,
        )
