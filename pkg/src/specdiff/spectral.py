"""Periodograms and cross-periodograms at arbitrary frequencies.

All transforms use the 1-based phase convention

    d(lambda) = sum_{t=1}^{n} x_t exp(-i lambda t)

so that cross-periodograms of series with different lengths carry the
correct relative phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ComparisonInput, FourierGrid, TimeSeries

# direct summation builds an (n_freq, n) phase matrix; chunk it above this size
_DIRECT_CHUNK = 2_000_000


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, TimeSeries) else np.asarray(x, dtype=float)


def dft_direct(x, lam) -> np.ndarray:
    """Reference transform by direct summation at each frequency in ``lam``."""
    v = _values(x)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    t = np.arange(1, v.size + 1)
    out = np.empty(lam.size, dtype=complex)
    step = max(1, _DIRECT_CHUNK // max(v.size, 1))
    for s in range(0, lam.size, step):
        out[s:s + step] = np.exp(-1j * np.outer(lam[s:s + step], t)) @ v
    return out


def dft_on_grid(x, n1: int) -> np.ndarray:
    """Transform at 2*pi*k/n1, k = 1..floor(n1/2), via one zero-padded FFT.

    The series is padded to ``L = n1 * ceil(n / n1)``; bin ``k L / n1`` of the
    length-L FFT is then exactly frequency 2*pi*k/n1, whatever ``n`` is.
    """
    v = _values(x)
    c = -(-v.size // n1)
    L = n1 * c
    k = np.arange(1, n1 // 2 + 1)
    spec = np.fft.fft(v, n=L)[k * c]
    # fft uses t = 0..n-1; shift to t = 1..n
    return spec * np.exp(-2j * np.pi * k / n1)


def periodogram(x, lam) -> float | np.ndarray:
    """I(lambda) = |d(lambda)|^2 / (2 pi n) by direct summation."""
    v = _values(x)
    d = dft_direct(v, lam)
    out = np.abs(d) ** 2 / (2 * np.pi * v.size)
    return float(out[0]) if np.ndim(lam) == 0 else out


def periodogram_on_grid(x, grid: FourierGrid, method: str = "fft") -> np.ndarray:
    """Periodogram of ``x`` at the grid frequencies; ``x`` may be longer than ``grid.n1``."""
    v = _values(x)
    d = _grid_dft(v, grid, method)
    return np.abs(d) ** 2 / (2 * np.pi * v.size)


def cross_periodogram(x1, x2, lam) -> complex | np.ndarray:
    """I_12(lambda) = d_1(lambda) conj(d_2(lambda)) / (2 pi sqrt(n1 n2))."""
    v1, v2 = _values(x1), _values(x2)
    d1, d2 = dft_direct(v1, lam), dft_direct(v2, lam)
    out = d1 * np.conj(d2) / (2 * np.pi * np.sqrt(v1.size * v2.size))
    return complex(out[0]) if np.ndim(lam) == 0 else out


def _grid_dft(v: np.ndarray, grid: FourierGrid, method: str) -> np.ndarray:
    if method == "fft":
        return dft_on_grid(v, grid.n1)
    if method == "direct":
        return dft_direct(v, grid.frequencies)
    raise ValueError(f"unknown method {method!r}; use 'fft' or 'direct'")


def full_grid_periodogram(x) -> np.ndarray:
    """I at every own Fourier frequency 2*pi*k/n, k = 0..n-1."""
    v = _values(x)
    return np.abs(np.fft.fft(v)) ** 2 / (2 * np.pi * v.size)


def parseval_gap(x) -> float:
    """Relative gap between sum_k I(2 pi k / n) and sum_t x_t^2 / (2 pi)."""
    v = _values(x)
    lhs = full_grid_periodogram(v).sum()
    rhs = np.dot(v, v) / (2 * np.pi)
    return abs(lhs - rhs) / rhs


@dataclass(frozen=True, eq=False)
class GridPeriodograms:
    """Everything the estimators need from one comparison, on the short grid.

    ``i1``, ``i2`` are the auto-periodograms of the short and long series and
    ``i12`` the cross-periodogram I_12; I_21 is its conjugate.
    """

    n1: int
    n2: int
    i1: np.ndarray
    i2: np.ndarray
    i12: np.ndarray

    @property
    def i21(self) -> np.ndarray:
        return np.conj(self.i12)

    @classmethod
    def from_input(cls, inp: ComparisonInput, method: str = "fft") -> "GridPeriodograms":
        grid = inp.grid
        n1, n2 = inp.n1, inp.n2
        d1 = _grid_dft(inp.short.values, grid, method)
        d2 = _grid_dft(inp.long.values, grid, method)
        i1 = np.abs(d1) ** 2 / (2 * np.pi * n1)
        i2 = np.abs(d2) ** 2 / (2 * np.pi * n2)
        i12 = d1 * np.conj(d2) / (2 * np.pi * np.sqrt(n1 * n2))
        for a in (i1, i2, i12):
            a.setflags(write=False)
        return cls(n1, n2, i1, i2, i12)
