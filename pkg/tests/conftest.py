import math

import numpy as np
import pytest

from nonlocal_ch.spectral_grid import Grid

ACCEPTANCE_RESULTS = {}


def gaussian(dx, dy, delta, X1, X2, images=2):
    """Periodized 2-D Gaussian kernel evaluated at coordinate differences."""
    out = 0.0
    for p in range(-images, images + 1):
        for q in range(-images, images + 1):
            out = out + np.exp(-((dx - 2 * X1 * p) ** 2 + (dy - 2 * X2 * q) ** 2) / delta**2)
    return 4.0 / (math.pi * delta**4) * out


def convolution_matrix(grid, delta):
    """Dense matrix C with (C phi)_ij = h1 h2 sum_pq J(x_i - x_p, y_j - y_q) phi_pq."""
    X, Y = grid.mesh()
    x, y = X.ravel(), Y.ravel()
    return grid.cell * gaussian(x[:, None] - x[None, :], y[:, None] - y[None, :], delta, grid.X1, grid.X2)


def brute_convolve(grid, delta, phi):
    n1, n2 = grid.shape
    out = np.zeros(grid.shape)
    for i in range(n1):
        for j in range(n2):
            w = gaussian(grid.x[i] - grid.x[:, None], grid.y[j] - grid.y[None, :], delta, grid.X1, grid.X2)
            out[i, j] = grid.cell * np.sum(w * phi)
    return out


def second_derivative_matrix(n, X):
    """Fourier collocation second-derivative matrix on n periodic nodes of (-X, X].

    Closed form for even n (Trefethen, Spectral Methods in MATLAB, ch. 3),
    rescaled from period 2*pi to period 2*X.
    """
    h = 2 * math.pi / n
    D = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                D[i, j] = -math.pi**2 / (3 * h**2) - 1.0 / 6
            else:
                D[i, j] = -((-1) ** (i - j)) / (2 * math.sin((i - j) * h / 2) ** 2)
    return D * (math.pi / X) ** 2


def laplacian_matrix(grid):
    D1 = second_derivative_matrix(grid.N1, grid.X1)
    D2 = second_derivative_matrix(grid.N2, grid.X2)
    return np.kron(D1, np.eye(grid.N2)) + np.kron(np.eye(grid.N1), D2)


def band_limited(grid, rng, mean_zero=False):
    """Random smooth-ish field with no Nyquist content."""
    F = rng.standard_normal(grid.lam.shape) + 1j * rng.standard_normal(grid.lam.shape)
    F[grid.N1 // 2, :] = 0
    F[:, -1] = 0
    if mean_zero:
        F[0, 0] = 0
    return grid.irfft(F)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_grid():
    return Grid(1.0, 1.0, 32, 32)


@pytest.fixture
def small_grid():
    return Grid(1.0, 1.0, 16, 16)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, msg = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {msg}")
