"""
Periodized Gaussian interaction kernel and the discrete nonlocal operator.

The kernel

    J(x) = 4 / (pi * delta**4) * exp(-|x|**2 / delta**2)

is wrapped over the lattice of domain translates and sampled at the grid
nodes. Convolution ``(J * phi)_ij = h1*h2 * sum_pq J(x_i - x_p, y_j - y_q) phi_pq``
is diagonal in Fourier space, as is the nonlocal operator

    L phi = (J * 1) phi - J * phi,

whose symbol ``sigma = J*1 - |Omega| Jhat`` is cached at build time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .spectral_grid import Grid

GAMMA0_RTOL = 1e-12
SYMBOL_RTOL = 1e-10


class KernelSupportWarning(UserWarning):
    """Kernel width comparable to the domain; periodization is no longer benign."""


def gaussian_profile(s: np.ndarray, period: float, delta: float, images: int) -> np.ndarray:
    """1-D factor ``sum_p exp(-(s - p*period)**2 / delta**2)`` over ``|p| <= images``."""
    out = np.zeros_like(s, dtype=float)
    for p in range(-images, images + 1):
        out += np.exp(-((s - p * period) ** 2) / delta**2)
    return out


@dataclass(frozen=True, eq=False)
class Kernel:
    """Sampled kernel with cached convolution and nonlocal symbols.

    ``conv_symbol`` and ``sigma`` are real arrays in rfft layout such that
    ``rfft(J * phi) = conv_symbol * rfft(phi)`` and
    ``rfft(L phi) = sigma * rfft(phi)``.
    """

    grid: Grid
    delta: float
    image_range: int
    samples: np.ndarray
    j_star_one: float
    conv_symbol: np.ndarray
    sigma: np.ndarray

    def _check(self, phi):
        phi = np.asarray(phi)
        if phi.shape != self.grid.shape:
            raise ShapeError(f"field shape {phi.shape} does not match kernel grid {self.grid.shape}")
        return phi

    def convolve(self, phi: np.ndarray) -> np.ndarray:
        return self.grid.apply_symbol(self._check(phi), self.conv_symbol)

    def apply(self, phi: np.ndarray) -> np.ndarray:
        """Discrete nonlocal operator ``(J*1) phi - J*phi``."""
        return self.grid.apply_symbol(self._check(phi), self.sigma)

    def gamma0(self, epsilon: float) -> float:
        return gamma0(self, epsilon)

    @property
    def sigma_full(self) -> np.ndarray:
        """Symbol of the nonlocal operator on the full ``(N1, N2)`` mode table."""
        g = self.grid
        k = np.fft.fft2(_centered(self.samples, g)).real * g.cell
        out = self.j_star_one - k
        out[0, 0] = 0.0
        return out


def _centered(samples: np.ndarray, grid: Grid) -> np.ndarray:
    # move the origin node (index N/2 - 1) to index 0 so that K[m] = J(m*h)
    return np.roll(samples, (-(grid.N1 // 2 - 1), -(grid.N2 // 2 - 1)), axis=(0, 1))


def build_kernel(grid: Grid, delta: float, image_range: int = 1) -> Kernel:
    """Sample the periodized Gaussian ``J_delta`` on ``grid``.

    Parameters
    ----------
    grid : Grid
    delta : float
        Kernel width; ``J * 1 = 4 / delta**2`` in the continuum.
    image_range : int
        Number ``P`` of periodic images per direction, ``|p|, |q| <= P``.
    """
    if not (delta > 0 and math.isfinite(delta)):
        raise ValueError(f"delta must be positive and finite, got {delta}")
    if int(image_range) != image_range or image_range < 0:
        raise ValueError(f"image_range must be a non-negative integer, got {image_range}")
    image_range = int(image_range)
    if delta > min(grid.X1, grid.X2):
        warnings.warn(
            f"kernel width delta={delta} exceeds the domain half-width "
            f"{min(grid.X1, grid.X2)}; the kernel is not effectively supported in the domain",
            KernelSupportWarning,
            stacklevel=2,
        )

    gx = gaussian_profile(grid.x, 2 * grid.X1, delta, image_range)
    gy = gaussian_profile(grid.y, 2 * grid.X2, delta, image_range)
    samples = (4.0 / (math.pi * delta**4)) * gx[:, None] * gy[None, :]
    if not np.all(np.isfinite(samples)):
        raise FloatingPointError("non-finite kernel samples")
    samples.setflags(write=False)

    j1 = grid.cell * float(np.sum(samples))
    conv = grid.rfft(_centered(samples, grid)).real * grid.cell
    conv[0, 0] = j1
    sigma = j1 - conv
    for a in (conv, sigma):
        a.setflags(write=False)
    return Kernel(grid, float(delta), image_range, samples, j1, conv, sigma)


def convolve(kernel: Kernel, phi: np.ndarray) -> np.ndarray:
    return kernel.convolve(phi)


def nonlocal_apply(kernel: Kernel, phi: np.ndarray) -> np.ndarray:
    return kernel.apply(phi)


def gamma0(kernel: Kernel, epsilon: float) -> float:
    """``epsilon**2 * (J*1) - 1``; positivity is required of the model."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return epsilon**2 * kernel.j_star_one - 1.0


def gamma0_positive(kernel: Kernel, epsilon: float) -> bool:
    # values within round-off of zero count as a violation
    return gamma0(kernel, epsilon) > GAMMA0_RTOL * max(1.0, epsilon**2 * kernel.j_star_one)


@dataclass(frozen=True)
class KernelReport:
    delta: float
    j_star_one: float
    j_star_one_continuum: float
    gamma0: float | None
    condition_d: bool | None
    second_moment: float
    min_sample: float
    evenness_residual: float
    max_symbol_negativity: float
    symbol_ok: bool
    convolution_bound: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_conditions(kernel: Kernel, epsilon: float | None = None) -> KernelReport:
    """Measure the kernel against the nonnegativity, evenness, moment and
    positivity conditions. Nothing here raises; the report carries the
    numbers and flags.
    """
    g = kernel.grid
    X, Y = g.mesh()
    J = kernel.samples
    # node a maps to -x at index (N - 2 - a) mod N
    ia = (g.N1 - 2 - np.arange(g.N1)) % g.N1
    ja = (g.N2 - 2 - np.arange(g.N2)) % g.N2
    flipped = J[np.ix_(ia, ja)]
    neg = max(0.0, -float(np.min(kernel.sigma)))
    g0 = None if epsilon is None else gamma0(kernel, epsilon)
    return KernelReport(
        delta=kernel.delta,
        j_star_one=kernel.j_star_one,
        j_star_one_continuum=4.0 / kernel.delta**2,
        gamma0=g0,
        condition_d=None if epsilon is None else gamma0_positive(kernel, epsilon),
        second_moment=0.5 * g.cell * float(np.sum(J * (X**2 + Y**2))),
        min_sample=float(np.min(J)),
        evenness_residual=float(np.max(np.abs(J - flipped))),
        max_symbol_negativity=neg,
        symbol_ok=neg <= SYMBOL_RTOL * kernel.j_star_one,
        convolution_bound=convolution_bound(kernel),
    )


def convolution_bound(kernel: Kernel) -> float:
    """Constant ``C`` with ``|<J*phi, Lap psi>| <= a|phi|^2 + (C/a)|grad psi|^2``.

    Measured from the kernel's symbol: with ``m = max |conv_symbol| * sqrt(lam)``
    Cauchy-Schwarz and Young give ``C = m**2 / 4`` for band-limited ``psi``.
    """
    m = float(np.max(np.abs(kernel.conv_symbol) * np.sqrt(kernel.grid.lam)))
    return 0.25 * m * m


def convolution_bound_margin(kernel: Kernel, phi, psi, alpha: float) -> float:
    """Right-hand side minus left-hand side of the convolution/Laplacian bound."""
    g = kernel.grid
    lhs = abs(g.inner(kernel.convolve(phi), g.laplacian(psi)))
    gx, gy = g.gradient(psi)
    grad2 = g.inner(gx, gx) + g.inner(gy, gy)
    rhs = alpha * g.inner(phi, phi) + convolution_bound(kernel) / alpha * grad2
    return rhs - lhs
