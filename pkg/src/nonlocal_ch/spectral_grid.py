"""
Periodic Fourier collocation grid on a rectangle.

The domain is ``(-X1, X1) x (-X2, X2)`` sampled at the nodes

    x_i = -X1 + i*h1,  y_j = -X2 + j*h2,   i = 1..N1, j = 1..N2

so array index ``a`` along an axis holds node ``a + 1`` (the last node sits
on the right boundary, the origin is node ``N/2``). Real grid functions are
plain ``float64`` arrays of shape ``(N1, N2)``.

Conventions
-----------
Internal work uses unnormalized real FFTs (``scipy.fft.rfft2``); every
linear operator is a per-mode multiplier, so the normalization never
matters there. The coefficients exposed through :class:`SpectralField`
follow the expansion

    f_ij = sum_{k,l} fhat_kl exp(i*pi*(k*x_i/X1 + l*y_j/X2)),
    fhat_kl = 1/(N1*N2) sum_{i,j} f_ij exp(-i*pi*(k*x_i/X1 + l*y_j/X2)),

with k in (-N1/2, N1/2], l in (-N2/2, N2/2], stored in FFT order
(``coeffs[k % N1, l % N2]``).

First-derivative multipliers vanish on the Nyquist row/column so that
gradients of real fields stay real; even-order operators keep it.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import ConfigError, DomainError, ShapeError

THREADS_ENV = "NCH_NUM_THREADS"


def fft_workers() -> int:
    """Worker count for scipy.fft, from ``NCH_NUM_THREADS`` or the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def _signed_modes(n: int) -> np.ndarray:
    # (-n/2, n/2] in FFT order: 0, 1, ..., n/2, -n/2+1, ..., -1
    k = np.fft.fftfreq(n, d=1.0 / n)
    k[n // 2] = n // 2
    return k


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable periodic grid plus cached spectral multipliers.

    Attributes
    ----------
    X1, X2 : float
        Half-widths of the domain.
    N1, N2 : int
        Even node counts per direction.
    h1, h2 : float
        Mesh sizes ``2*X/N``.
    lam : ndarray
        Symbol of ``-Laplacian`` in rfft layout, shape ``(N1, N2//2 + 1)``.
    """

    X1: float
    X2: float
    N1: int
    N2: int
    h1: float = field(init=False)
    h2: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False)
    y: np.ndarray = field(init=False, repr=False)
    lam: np.ndarray = field(init=False, repr=False)
    ikx: np.ndarray = field(init=False, repr=False)
    iky: np.ndarray = field(init=False, repr=False)

    def _key(self):
        return (self.X1, self.X2, self.N1, self.N2)

    def __eq__(self, other):
        return isinstance(other, Grid) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __post_init__(self):
        for name in ("N1", "N2"):
            n = getattr(self, name)
            if int(n) != n or n < 4 or n % 2:
                raise ConfigError(f"{name} must be an even integer >= 4, got {n}")
            object.__setattr__(self, name, int(n))
        for name in ("X1", "X2"):
            X = getattr(self, name)
            if not np.isfinite(X) or X <= 0:
                raise ConfigError(f"{name} must be positive and finite, got {X}")
            object.__setattr__(self, name, float(X))

        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("h1", 2.0 * self.X1 / self.N1)
        set_("h2", 2.0 * self.X2 / self.N2)
        # (i - N/2)*h is exactly antisymmetric in floating point, -X + i*h is not
        set_("x", (np.arange(1, self.N1 + 1) - self.N1 // 2) * self.h1)
        set_("y", (np.arange(1, self.N2 + 1) - self.N2 // 2) * self.h2)

        xi1 = np.pi * _signed_modes(self.N1) / self.X1
        xi2 = np.pi * np.arange(self.N2 // 2 + 1) / self.X2
        set_("lam", xi1[:, None] ** 2 + xi2[None, :] ** 2)

        d1 = xi1.copy()
        d1[self.N1 // 2] = 0.0
        d2 = xi2.copy()
        d2[self.N2 // 2] = 0.0
        set_("ikx", np.broadcast_to(1j * d1[:, None], self.lam.shape))
        set_("iky", np.broadcast_to(1j * d2[None, :], self.lam.shape))
        for a in (self.x, self.y, self.lam):
            a.setflags(write=False)

    # ------------------------------------------------------------------
    # geometry

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N1, self.N2)

    @property
    def area(self) -> float:
        """Measure of the domain, ``|Omega| = 4*X1*X2``."""
        return 4.0 * self.X1 * self.X2

    @property
    def cell(self) -> float:
        return self.h1 * self.h2

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as two ``(N1, N2)`` arrays (``ij`` indexing)."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def lam_full(self) -> np.ndarray:
        """Symbol of ``-Laplacian`` on the full ``(N1, N2)`` mode table, FFT order."""
        xi1 = np.pi * _signed_modes(self.N1) / self.X1
        xi2 = np.pi * _signed_modes(self.N2) / self.X2
        return xi1[:, None] ** 2 + xi2[None, :] ** 2

    def eigenvalue(self, k: int, l: int) -> float:
        """Eigenvalue of ``-Laplacian`` for signed mode ``(k, l)``."""
        return self.lam_full[k % self.N1, l % self.N2]

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f)
        if f.shape != self.shape:
            raise ShapeError(f"field shape {f.shape} does not match grid {self.shape}")
        return f

    # ------------------------------------------------------------------
    # transforms (unnormalized, rfft layout)

    def rfft(self, f: np.ndarray) -> np.ndarray:
        return scipy.fft.rfft2(self.check(f), workers=fft_workers())

    def irfft(self, F: np.ndarray) -> np.ndarray:
        return scipy.fft.irfft2(F, s=self.shape, workers=fft_workers())

    def apply_symbol(self, f: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        """Apply a per-mode multiplier given in rfft layout."""
        return self.irfft(symbol * self.rfft(f))

    # ------------------------------------------------------------------
    # differential operators

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self.apply_symbol(f, -self.lam)

    def gradient(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        F = self.rfft(f)
        return self.irfft(self.ikx * F), self.irfft(self.iky * F)

    def divergence(self, g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
        return self.irfft(self.ikx * self.rfft(g1) + self.iky * self.rfft(g2))

    def inverse_laplacian(self, f: np.ndarray) -> np.ndarray:
        """Solve ``-Laplacian u = f`` for mean-zero ``f``; ``u`` has zero mean."""
        self._require_mean_zero(f)
        F = self.rfft(f)
        inv = np.zeros_like(self.lam)
        inv[self.lam > 0] = 1.0 / self.lam[self.lam > 0]
        return self.irfft(inv * F)

    def _require_mean_zero(self, f):
        f = self.check(f)
        m = float(np.mean(f))
        scale = float(np.max(np.abs(f))) if f.size else 0.0
        if abs(m) > 1e-12 * scale:
            raise DomainError(f"operator requires a mean-zero field, measured mean {m:.3e}")

    # ------------------------------------------------------------------
    # inner products and norms

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return self.cell * float(np.sum(self.check(f) * self.check(g)))

    def mean(self, f: np.ndarray) -> float:
        return float(np.mean(self.check(f)))

    def norm(self, f: np.ndarray, p=2) -> float:
        f = self.check(f)
        if p == 2:
            return float(np.sqrt(self.cell * np.sum(f * f)))
        if p == 4:
            return float((self.cell * np.sum(f**4)) ** 0.25)
        if p in (np.inf, "inf"):
            return float(np.max(np.abs(f)))
        raise ConfigError(f"unsupported norm order {p!r}; use 2, 4 or inf")

    def norm_hm1(self, f: np.ndarray) -> float:
        """Discrete ``H^-1`` norm of a mean-zero field (Parseval form)."""
        self._require_mean_zero(f)
        c = np.abs(scipy.fft.fft2(f, workers=fft_workers())) ** 2 / (self.N1 * self.N2) ** 2
        lam = self.lam_full
        nz = lam > 0
        return float(np.sqrt(self.area * np.sum(c[nz] / lam[nz])))


def make_grid(X1: float, X2: float, N1: int, N2: int) -> Grid:
    return Grid(X1, X2, N1, N2)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a grid function in the normalized convention."""

    grid: Grid
    coeffs: np.ndarray

    def coeff(self, k: int, l: int) -> complex:
        return complex(self.coeffs[k % self.grid.N1, l % self.grid.N2])


def _phase(n: int) -> np.ndarray:
    # node a+1 sits at x = -X + (a+1)h, so exp(-i pi k x/X) = (-1)^k exp(-2 pi i k/n) exp(-2 pi i k a/n)
    k = _signed_modes(n)
    return np.exp(1j * np.pi * k) * np.exp(-2j * np.pi * k / n)


def fft_forward(grid: Grid, f: np.ndarray) -> SpectralField:
    F = scipy.fft.fft2(grid.check(f), workers=fft_workers()) / (grid.N1 * grid.N2)
    F *= _phase(grid.N1)[:, None] * _phase(grid.N2)[None, :]
    return SpectralField(grid, F)


def fft_inverse(F: SpectralField) -> np.ndarray:
    g = F.grid
    if F.coeffs.shape != g.shape:
        raise ShapeError(f"coefficient shape {F.coeffs.shape} does not match grid {g.shape}")
    raw = F.coeffs / (_phase(g.N1)[:, None] * _phase(g.N2)[None, :])
    return np.real(scipy.fft.ifft2(raw, workers=fft_workers())) * (g.N1 * g.N2)
