"""Littlewood-Paley projector banks, spatial window partitions, and the
dyadic energy / local-energy norms evaluated on trajectories.

The projector bank tiles frequency space with smooth bumps built from the
classic exp(-1/x) mollifier: a transition profile m with m = 1 on [-1, 1]
and support in [-2, 2] gives multipliers

    block lam = Lam:          m(xi / Lam)            (all |xi| <= Lam)
    block lam > Lam:          m(xi / lam) - m(2 xi / lam)

which telescope to exactly 1 on every represented wavenumber once the top
block reaches the grid cutoff.  Spatial windows chi_j are an exact partition
of unity on the torus, chi_j(x) = g(x/scale - j) / sum_j g(x/scale - j).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid, forward_transform, inverse_transform

__all__ = [
    "DyadicBank",
    "WindowFamily",
    "FrequencyEnvelope",
    "build_bank",
    "project",
    "build_windows",
    "windows_for_bank",
    "energy_norm",
    "local_energy_norm",
    "local_energy_matrix",
    "envelope_of",
]


def smooth_transition(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, exp(-1/t)-mollified between."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


def lp_profile(r: np.ndarray) -> np.ndarray:
    """m(r): 1 on |r| <= 1, 0 on |r| >= 2, smooth and even in between."""
    return smooth_transition(2.0 - np.abs(np.asarray(r, dtype=float)))


def bump(t: np.ndarray) -> np.ndarray:
    """Smooth bump supported in (-1, 1)."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True)
class DyadicBank:
    """Frequency partition of unity {P_lam} for dyadic lam >= Lam."""

    grid: Grid
    lam_min: float
    lams: tuple
    multipliers: np.ndarray = field(repr=False)  # shape (n_blocks, N)

    def __post_init__(self):
        m = np.asarray(self.multipliers, dtype=float)
        total = m.sum(axis=0)
        if np.max(np.abs(total - 1.0)) > 1e-14:
            raise ValueError("projector multipliers do not sum to 1")
        m.setflags(write=False)
        object.__setattr__(self, "multipliers", m)

    def index_of(self, lam: float) -> int:
        for i, v in enumerate(self.lams):
            if v == lam:
                return i
        raise ValueError(f"lam={lam} is not a block of this bank: {self.lams}")


def build_bank(grid: Grid, lam_min: float) -> DyadicBank:
    """Dyadic projector bank with lowest block covering all |xi| <= lam_min."""
    if not lam_min > 0:
        raise ValueError(f"lam_min must be positive, got {lam_min}")
    cutoff = grid.nyquist
    if not 2.0 * lam_min < cutoff:
        raise ValueError(
            f"lam_min={lam_min} too large for grid: need 2*lam_min < {cutoff}"
        )
    xi = grid.xi
    lams = [lam_min]
    while lams[-1] < cutoff:
        lams.append(2.0 * lams[-1])
    mults = [lp_profile(xi / lam_min)]
    for lam in lams[1:]:
        mults.append(lp_profile(xi / lam) - lp_profile(2.0 * xi / lam))
    return DyadicBank(grid, lam_min, tuple(lams), np.array(mults))


def project(bank: DyadicBank, lam: float, f: Field) -> Field:
    """P_lam f by spectral multiplication."""
    i = bank.index_of(lam)
    spec = forward_transform(f)
    return inverse_transform(
        type(spec)(bank.grid, spec.coeffs * bank.multipliers[i])
    )


@dataclass(frozen=True)
class WindowFamily:
    """Exact spatial partition of unity chi_j on the torus.

    ``scale`` is the window spacing; each chi_j is supported in an interval
    of width < 2*scale and chi_{j+1}(x) = chi_j(x - scale).
    """

    grid: Grid
    scale: float
    offsets: tuple
    windows: np.ndarray = field(repr=False)  # shape (n_windows, N)

    def __post_init__(self):
        w = np.asarray(self.windows, dtype=float)
        total = w.sum(axis=0)
        if np.max(np.abs(total - 1.0)) > 1e-12:
            raise ValueError("windows do not sum to 1 on the grid")
        w.setflags(write=False)
        object.__setattr__(self, "windows", w)

    @property
    def n_windows(self) -> int:
        return len(self.offsets)


def build_windows(grid: Grid, scale: float) -> WindowFamily:
    """Windows at (approximately) the requested spacing.

    The spacing is snapped to length / n so an integer number of windows
    tiles the torus; the snapped value is stored in the result.  Rejected if
    the requested scale falls below two grid spacings.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if scale < 2.0 * grid.spacing:
        raise ValueError(
            f"scale={scale} below resolution (2*dx = {2.0 * grid.spacing})"
        )
    n_win = max(2, int(round(grid.length / scale)))
    actual = grid.length / n_win
    if actual < 2.0 * grid.spacing:
        raise ValueError(f"snapped scale {actual} below resolution")
    x = grid.x
    # raw bumps g(x/scale - j), periodized over the torus
    raw = np.empty((n_win, grid.n_points))
    for j in range(n_win):
        t = x / actual - j
        # wrap into [-n_win/2, n_win/2) so each bump sees its nearest image
        t = (t + n_win / 2.0) % n_win - n_win / 2.0
        raw[j] = bump(t)
    total = raw.sum(axis=0)
    return WindowFamily(grid, actual, tuple(range(n_win)), raw / total)


def windows_for_bank(grid: Grid, bank: DyadicBank, s: float) -> dict:
    """One WindowFamily per block at the lam^(1+4s) spatial scale.

    At s = -1/4 every block gets unit-scale windows.
    """
    out = {}
    for lam in bank.lams:
        out[lam] = build_windows(grid, float(lam) ** (1.0 + 4.0 * s))
    return out


def energy_norm(traj, bank: DyadicBank, s: float) -> float:
    """sqrt( sum_lam lam^(2s) * max_t ||P_lam u(t)||_L2^2 ).

    Discrete form of the l2-L-infinity-H^s energy built on the bank.
    """
    states = traj.states
    if len(states) == 0:
        raise ValueError("trajectory is empty")
    g = bank.grid
    fs = g.freq_step / (2.0 * np.pi)
    best = np.zeros(len(bank.lams))
    for f in states:
        c2 = np.abs(forward_transform(f).coeffs) ** 2
        per_block = fs * (bank.multipliers**2 @ c2)
        best = np.maximum(best, per_block)
    lams = np.asarray(bank.lams)
    return float(np.sqrt(np.sum(lams ** (2.0 * s) * best)))


def local_energy_matrix(traj, bank: DyadicBank, windows: dict) -> np.ndarray:
    """Time-integrated window masses m[i][j] = ||chi_j d_x P_lam u||^2_{L2(dx dt)}.

    The x-derivative is applied spectrally inside each block; the time
    integral is the trapezoid rule over the trajectory samples.  Rows follow
    bank.lams; ragged window counts are padded with zeros.
    """
    if len(traj.states) < 2:
        raise ValueError("need at least 2 trajectory samples for a time integral")
    g = bank.grid
    times = np.asarray(traj.times, dtype=float)
    n_win_max = max(windows[lam].n_windows for lam in bank.lams)
    out = np.zeros((len(bank.lams), n_win_max))
    # trapezoid weights in time
    tw = np.empty(len(times))
    tw[0] = 0.5 * (times[1] - times[0])
    tw[-1] = 0.5 * (times[-1] - times[-2])
    tw[1:-1] = 0.5 * (times[2:] - times[:-2])
    for f, w_t in zip(traj.states, tw):
        coeffs = np.fft.fft(f.samples) * g.spacing
        dcoeffs = 1j * g.xi * coeffs
        for bi, lam in enumerate(bank.lams):
            block = np.fft.ifft(bank.multipliers[bi] * dcoeffs) / g.spacing
            fam = windows[lam]
            masses = g.spacing * (fam.windows**2 @ np.abs(block) ** 2)
            out[bi, : fam.n_windows] += w_t * masses
    return out


def local_energy_norm(traj, bank: DyadicBank, windows: dict, s: float) -> float:
    """sqrt( sum_lam lam^(-2s-2) * max_j ||chi_j^lam d_x P_lam u||^2_{L2(dx dt)} ).

    ``windows`` maps each block lam to its WindowFamily (scale lam^(1+4s));
    see :func:`windows_for_bank`.
    """
    m = local_energy_matrix(traj, bank, windows)
    lams = np.asarray(bank.lams)
    return float(np.sqrt(np.sum(lams ** (-2.0 * s - 2.0) * m.max(axis=1))))


@dataclass(frozen=True)
class FrequencyEnvelope:
    """Slowly varying dyadic majorant: weights(2 lam) / weights(lam) in [1/2, 2]."""

    lams: tuple
    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("envelope weights must be nonnegative")
        if len(w) > 1:
            with np.errstate(divide="ignore", invalid="ignore"):
                r = w[1:] / w[:-1]
            ok = (w[1:] == 0) & (w[:-1] == 0)
            bad = ~ok & ((r < 0.5 - 1e-12) | (r > 2.0 + 1e-12) | ~np.isfinite(r))
            if np.any(bad):
                raise ValueError("envelope is not slowly varying")

    def as_dict(self) -> dict:
        return dict(zip(self.lams, self.weights))


def envelope_of(f: Field, bank: DyadicBank, s: float) -> FrequencyEnvelope:
    """Minimal slowly-varying majorant of lam -> lam^s ||P_lam f||_L2."""
    g = bank.grid
    fs = g.freq_step / (2.0 * np.pi)
    c2 = np.abs(forward_transform(f).coeffs) ** 2
    lams = np.asarray(bank.lams)
    c = lams**s * np.sqrt(fs * (bank.multipliers**2 @ c2))
    n = len(c)
    idx = np.arange(n)
    # minimal majorant with ratio constraint: w_k = max_m c_m 2^{-|k-m|}
    w = np.max(c[None, :] * 0.5 ** np.abs(idx[:, None] - idx[None, :]), axis=1)
    return FrequencyEnvelope(tuple(lams), tuple(w))
