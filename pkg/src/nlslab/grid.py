"""Periodic grid, discrete Fourier transform conventions, and weighted norms.

Everything downstream is built on one fixed transform convention, chosen so
that continuum formulas transfer verbatim to the grid:

    u_hat(xi_k) = dx * sum_j u(x_j) exp(-i xi_k x_j),      xi_k = k * (2 pi / L)

with integer wavenumbers k in [-N/2, N/2).  Parseval then reads

    int |u|^2 dx  =  (1 / 2 pi) * dxi * sum_k |u_hat(xi_k)|^2

with dxi = 2 pi / L, and both sides equal ``mass``.  The free Schroedinger
flow i u_t = u_xx multiplies each coefficient by exp(i xi^2 t), so free waves
live on the parabola tau = xi^2 in space-time frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "Spectrum",
    "forward_transform",
    "inverse_transform",
    "mass",
    "l2_norm",
    "h_s_lambda_norm",
    "linear_propagate",
    "spectral_derivative",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, L) with N points, N a power of two."""

    n_points: int
    length: float

    def __post_init__(self):
        n, L = self.n_points, self.length
        if n <= 0 or (n & (n - 1)) != 0:
            raise ValueError(f"n_points must be a positive power of two, got {n}")
        if not (L > 0.0 and np.isfinite(L)):
            raise ValueError(f"length must be positive and finite, got {L}")

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def freq_step(self) -> float:
        return 2.0 * np.pi / self.length

    @property
    def x(self) -> np.ndarray:
        """Sample points x_j = j * dx."""
        return np.arange(self.n_points) * self.spacing

    @property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers k in FFT storage order."""
        return np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).astype(int)

    @property
    def xi(self) -> np.ndarray:
        """Frequencies xi_k = k * freq_step in FFT storage order."""
        return self.wavenumbers * self.freq_step

    @property
    def nyquist(self) -> float:
        """Largest represented |xi| (the k = -N/2 mode)."""
        return (self.n_points // 2) * self.freq_step


@dataclass(frozen=True)
class Field:
    """Complex-valued state u(x_j) on a periodic grid."""

    grid: Grid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n_points,):
            raise ValueError(
                f"samples shape {s.shape} does not match grid ({self.grid.n_points},)"
            )
        if not np.all(np.isfinite(s.view(float))):
            raise ValueError("field samples must be finite")
        object.__setattr__(self, "samples", _frozen(s))


@dataclass(frozen=True)
class Spectrum:
    """Fourier coefficients u_hat(xi_k), FFT storage order."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n_points,):
            raise ValueError(
                f"coeffs shape {c.shape} does not match grid ({self.grid.n_points},)"
            )
        if not np.all(np.isfinite(c.view(float))):
            raise ValueError("spectrum coefficients must be finite")
        object.__setattr__(self, "coeffs", _frozen(c))


def forward_transform(f: Field) -> Spectrum:
    """u_hat(xi_k) = dx * sum_j u(x_j) exp(-i xi_k x_j)."""
    return Spectrum(f.grid, np.fft.fft(f.samples) * f.grid.spacing)


def inverse_transform(s: Spectrum) -> Field:
    """Exact inverse of :func:`forward_transform`."""
    return Field(s.grid, np.fft.ifft(s.coeffs) / s.grid.spacing)


def mass(f: Field) -> float:
    """int |u|^2 dx, evaluated as dx * sum |u(x_j)|^2."""
    return float(f.grid.spacing * np.sum(np.abs(f.samples) ** 2))


def l2_norm(f: Field) -> float:
    return float(np.sqrt(mass(f)))


def spectral_mass(s: Spectrum) -> float:
    """(1 / 2 pi) * dxi * sum |u_hat|^2; equals ``mass`` by Parseval."""
    g = s.grid
    return float(g.freq_step / (2.0 * np.pi) * np.sum(np.abs(s.coeffs) ** 2))


def h_s_lambda_norm(f: Field, s: float, lam: float) -> float:
    """Weighted Sobolev norm sqrt( (1/2pi) int (lam^2 + xi^2)^s |u_hat|^2 dxi ).

    The squared norm carries the weight (lam^2 + xi^2)^s (not its square),
    so s = 0 reduces to sqrt(mass) for every lam.  Requires lam >= 1, which
    makes the norm nonincreasing in s.
    """
    if not lam >= 1.0:
        raise ValueError(f"lam must be >= 1, got {lam}")
    g = f.grid
    spec = forward_transform(f)
    weight = (lam**2 + g.xi**2) ** s
    total = g.freq_step / (2.0 * np.pi) * np.sum(weight * np.abs(spec.coeffs) ** 2)
    return float(np.sqrt(total))


def linear_propagate(s: Spectrum, t: float) -> Spectrum:
    """Free flow of i u_t = u_xx: multiply coefficients by exp(i xi^2 t).

    Unimodular, so |coeffs| and mass are preserved exactly.
    """
    return Spectrum(s.grid, s.coeffs * np.exp(1j * s.grid.xi**2 * t))


def spectral_derivative(f: Field, order: int = 1) -> Field:
    """d^n/dx^n computed through the transform."""
    g = f.grid
    return Field(g, np.fft.ifft((1j * g.xi) ** order * np.fft.fft(f.samples)))
