"""Fourier multiplier classes and the four-variable correction symbols.

The admissible one-variable multipliers a(xi) are spherically symmetric,
bounded below by (Lam^2 + xi^2)^(-1/2), with a(xi) (Lam^2 + xi^2)^(1/2)
nondecreasing in |xi| and finite-difference regularity ratios

    |d^n a / dxi^n| * (Lam^2 + xi^2)^(n/2) / a(xi)

bounded (validated numerically for n = 1, 2, never assumed).  On the
resonant hyperplane P4 = {xi0 + xi1 = xi2 + xi3} the quadratic phase
factors,

    xi0^2 + xi1^2 - xi2^2 - xi3^2
        = 2 (xi0 - xi2)(xi0 - xi3)
          - (xi0 + xi1 - xi2 - xi3)(xi0 - xi1 - xi2 - xi3),

so the cancellation symbol

    b4 = -(a(xi0) + a(xi1) - a(xi2) - a(xi3)) / (2 (xi0 - xi2)(xi0 - xi3))

has only removable singularities on P4; they are resolved here by divided
differences.  Off the hyperplane, per dyadic region, pairs (b4, c4) are
constructed so that

    d(xi0) + d(xi1) - d(xi2) - d(xi3)
        = b4 * (xi0^2 + xi1^2 - xi2^2 - xi3^2)
          + c4 * (xi0 + xi1 - xi2 - xi3)

holds identically, with size bounds |b4| <~ a(lam)/(alpha mu) and
|c4| <~ a(lam)/alpha recorded empirically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid

__all__ = [
    "SymbolSLam",
    "SymbolReport",
    "QuadSymbol",
    "WeightPair",
    "sobolev_symbol",
    "power_symbol",
    "constant_symbol",
    "validate_symbol",
    "odd_extension",
    "divided_difference",
    "b4_diagonal",
    "b4c4_offdiagonal",
    "quad_symbol",
    "fejer_weights",
    "quad_phase",
    "p4_linear",
]

# branch switch for removable singularities, relative to max(1, |xi0|)
_NEAR_SING = 1e-4
# below this relative separation a divided difference becomes a derivative
_COINCIDENT = 1e-7
# centered-difference step for derivative fallbacks
_DERIV_STEP = 1e-6


@dataclass(frozen=True)
class SymbolSLam:
    """Positive even multiplier with a low-frequency floor at lam.

    ``dfn``, when given, is the analytic derivative; divided differences at
    coincident arguments then avoid finite-difference cancellation noise.
    """

    lam: float
    fn: object
    name: str = "symbol"
    dfn: object = None

    def __post_init__(self):
        if not self.lam >= 1.0:
            raise ValueError(f"lam must be >= 1, got {self.lam}")

    def __call__(self, xi):
        return self.fn(np.asarray(xi, dtype=float))


def _resolve(d) -> tuple:
    """(value fn, derivative fn or None) for a symbol object or callable."""
    if hasattr(d, "fn"):
        return d.fn, getattr(d, "dfn", None)
    return d, getattr(d, "derivative", None)


def sobolev_symbol(lam: float, s: float) -> SymbolSLam:
    """a(xi) = (lam^2 + xi^2)^s; admissible for -1/2 <= s <= 0."""
    return SymbolSLam(
        lam,
        lambda xi: (lam**2 + xi**2) ** s,
        f"(lam^2+xi^2)^{s}",
        dfn=lambda xi: 2.0 * s * xi * (lam**2 + xi**2) ** (s - 1.0),
    )


def power_symbol(mu: float, eps: float) -> SymbolSLam:
    """a_mu(xi) = mu^(-1/2) (1 + xi^2 / mu^2)^(-1/4 - eps), eps > 0."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    p = -0.25 - eps
    return SymbolSLam(
        mu,
        lambda xi: mu ** (-0.5) * (1.0 + xi**2 / mu**2) ** p,
        f"a_mu(mu={mu}, eps={eps})",
        dfn=lambda xi: mu ** (-0.5) * p * (2.0 * xi / mu**2)
        * (1.0 + xi**2 / mu**2) ** (p - 1.0),
    )


def constant_symbol(value: float = 1.0, lam: float = 1.0) -> SymbolSLam:
    return SymbolSLam(lam, lambda xi: np.full_like(xi, value, dtype=float),
                      f"{value}", dfn=lambda xi: np.zeros_like(xi))


def symbol_with_derivative(fn, dfn, lam: float = 1.0,
                           name: str = "custom") -> SymbolSLam:
    """Wrap a plain callable (test hooks included) with its derivative."""
    return SymbolSLam(lam, fn, name, dfn=dfn)


@dataclass(frozen=True)
class SymbolReport:
    lam: float
    lower_bound_margin: float   # min of a(xi) (lam^2+xi^2)^(1/2); >= 1 required
    monotone_margin: float      # min increment of that product; >= ~0 required
    reg_ratio_1: float          # worst |a'| (lam^2+xi^2)^(1/2) / a
    reg_ratio_2: float          # worst |a''| (lam^2+xi^2) / a
    max_ratio: float

    @property
    def lower_bound_ok(self) -> bool:
        return self.lower_bound_margin >= 1.0 - 1e-9

    @property
    def monotone_ok(self) -> bool:
        return self.monotone_margin >= -1e-9

    @property
    def regularity_ok(self) -> bool:
        return max(self.reg_ratio_1, self.reg_ratio_2) <= self.max_ratio

    @property
    def passes(self) -> bool:
        return self.lower_bound_ok and self.monotone_ok and self.regularity_ok


def validate_symbol(a, lam: float, max_ratio: float = 50.0) -> SymbolReport:
    """Check the class conditions by sampling and finite differences.

    Report-only: returns worst ratios and margins, never raises.  Growth is
    allowed; only the lower bound or monotonicity of a(xi)(lam^2+xi^2)^(1/2)
    can fail a symbol.
    """
    fn = a if callable(a) else a.fn
    xi = np.concatenate(
        [[0.0], lam * 2.0 ** (np.arange(-12, 29) / 4.0)]
    )
    av = np.asarray(fn(xi), dtype=float)
    w = np.sqrt(lam**2 + xi**2)
    prod = av * w
    lower = float(np.min(prod))
    mono = float(np.min(np.diff(prod) / np.maximum(prod[:-1], 1e-300)))
    h = 1e-4 * w
    ap = np.asarray(fn(xi + h), dtype=float)
    am = np.asarray(fn(xi - h), dtype=float)
    d1 = (ap - am) / (2.0 * h)
    d2 = (ap - 2.0 * av + am) / h**2
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = float(np.max(np.abs(d1) * w / av))
        r2 = float(np.max(np.abs(d2) * w**2 / av))
    return SymbolReport(lam, lower, mono, r1, r2, max_ratio)


def _quintic_step(t):
    """Monotone quintic Hermite step: 0 -> 1 on [0, 1] with flat ends."""
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def odd_extension(a, lam: float):
    """Odd multiplier: a(xi) outside |xi| > lam, lam^-1 xi a(xi) inside
    |xi| < lam/2, monotone quintic Hermite blend between.

    Returns a SymbolSLam-like callable (odd, so not itself in the class).
    """
    fn = a if callable(a) else a.fn

    def tilde(xi):
        xi = np.asarray(xi, dtype=float)
        x = np.abs(xi)
        av = np.asarray(fn(x), dtype=float)
        inner = x * av / lam
        w = _quintic_step((x - 0.5 * lam) / (0.5 * lam))
        mag = inner + w * (av - inner)
        mag = np.where(x > lam, av, mag)
        return np.sign(xi) * mag

    return tilde


def divided_difference(d, xi, eta):
    """q(xi, eta) = (d(xi) - d(eta)) / (xi - eta), with the coincidence limit
    d'(xi) taken analytically when the symbol carries a derivative, else by
    a centered difference at step 1e-6 * max(1, |xi|)."""
    fn, dfn = _resolve(d)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xi, eta = np.broadcast_arrays(xi, eta)
    scale = np.maximum(1.0, np.maximum(np.abs(xi), np.abs(eta)))
    diff = xi - eta
    near = np.abs(diff) < _COINCIDENT * scale
    safe = np.where(near, 1.0, diff)
    q = (np.asarray(fn(xi), dtype=float) - np.asarray(fn(eta), dtype=float)) / safe
    if np.any(near):
        mid = 0.5 * (xi + eta)
        if dfn is not None:
            dq = np.asarray(dfn(mid), dtype=float)
        else:
            h = _DERIV_STEP * np.maximum(1.0, np.abs(mid))
            dq = (np.asarray(fn(mid + h), dtype=float)
                  - np.asarray(fn(mid - h), dtype=float)) / (2.0 * h)
        q = np.where(near, dq, q)
    if q.ndim == 0:
        return float(q)
    return q


def quad_phase(xi0, xi1, xi2, xi3):
    """xi0^2 + xi1^2 - xi2^2 - xi3^2."""
    return xi0**2 + xi1**2 - xi2**2 - xi3**2


def p4_linear(xi0, xi1, xi2, xi3):
    """xi0 + xi1 - xi2 - xi3 (vanishes on the resonant hyperplane)."""
    return xi0 + xi1 - xi2 - xi3


def b4_diagonal(a, xi0, xi1, xi2):
    """Cancellation symbol on P4 (xi3 := xi0 + xi1 - xi2):

        b4 = -(a0 + a1 - a2 - a3) / (2 (xi0 - xi2)(xi0 - xi3))

    The singularities at xi0 = xi2 or xi0 = xi3 are removable; near them the
    value is computed from nested divided differences of a.
    """
    fn, _ = _resolve(a)
    xi0 = np.asarray(xi0, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    xi0, xi1, xi2 = np.broadcast_arrays(xi0, xi1, xi2)
    scalar_in = xi0.ndim == 0
    if scalar_in:
        xi0, xi1, xi2 = (np.atleast_1d(v) for v in (xi0, xi1, xi2))
    xi3 = xi0 + xi1 - xi2
    h = xi0 - xi2            # equals xi3 - xi1 on P4
    g = xi0 - xi3            # equals xi2 - xi1 on P4
    scale = np.maximum(1.0, np.abs(xi0))
    near = (np.abs(h) < _NEAR_SING * scale) | (np.abs(g) < _NEAR_SING * scale)

    a0 = np.asarray(fn(xi0), dtype=float)
    a1 = np.asarray(fn(xi1), dtype=float)
    a2 = np.asarray(fn(xi2), dtype=float)
    a3 = np.asarray(fn(xi3), dtype=float)
    denom = 2.0 * h * g
    safe = np.where(near, 1.0, denom)
    result = -(a0 + a1 - a2 - a3) / safe

    if np.any(near):
        # r(x) = q(x, x - hn) is smooth in x; b4 = -dd(r; xi0, xi3) / 2,
        # evaluated only on the near-singular subset
        x0n, x3n = xi0[near], xi3[near]
        hn, gn = h[near], g[near]
        sn = scale[near]

        def r(x):
            return np.asarray(divided_difference(a, x, x - hn))

        tiny = np.abs(gn) < _COINCIDENT * sn
        gg = np.where(tiny, 1.0, gn)
        dd_r = (r(x0n) - r(x3n)) / gg
        if np.any(tiny):
            mid = 0.5 * (x0n + x3n)
            step = _DERIV_STEP * np.maximum(1.0, np.abs(mid))
            dr = (r(mid + step) - r(mid - step)) / (2.0 * step)
            dd_r = np.where(tiny, dr, dd_r)
        result = np.array(result)
        result[near] = -0.5 * dd_r
    if scalar_in:
        return float(result[0])
    return result


def _dyadic_size(x):
    return np.max(np.abs(np.asarray(x, dtype=float)))


def _comparable(p, q, slack=2.5):
    p, q = abs(p), abs(q)
    lo, hi = min(p, q), max(p, q)
    return hi <= slack * max(lo, 1e-300)


def _check_region(case: str, xi0, xi1, xi2, xi3) -> tuple:
    """Infer (lam, alpha, mu) and verify the case's dyadic pattern."""
    l0, l1, l2, l3 = (float(np.max(np.abs(np.asarray(v)))) for v in (xi0, xi1, xi2, xi3))
    if not _comparable(l1, l3):
        raise ValueError(f"xi1, xi3 must be comparable (got {l1:.3g}, {l3:.3g})")
    mu = max(l1, l3)
    lam, alpha = l0, l2
    if case == "a_region":
        if not (4.0 * lam <= alpha and alpha <= 2.5 * mu):
            raise ValueError(
                f"case (a) needs lam << alpha <= mu, got ({lam:.3g}, {alpha:.3g}, {mu:.3g})"
            )
    elif case == "b_region":
        if not (_comparable(lam, alpha) and 4.0 * max(lam, alpha) <= mu):
            raise ValueError(
                f"case (b) needs lam ~ alpha << mu, got ({lam:.3g}, {alpha:.3g}, {mu:.3g})"
            )
    elif case == "c_region":
        if not (_comparable(lam, mu) and _comparable(alpha, mu)):
            raise ValueError(
                f"case (c) needs lam ~ alpha ~ mu, got ({lam:.3g}, {alpha:.3g}, {mu:.3g})"
            )
    else:
        raise ValueError(f"unknown case {case!r}")
    return lam, alpha, mu


def b4c4_offdiagonal(d, case: str, point) -> tuple:
    """Off-hyperplane (b4, c4) pair for one dyadic case.

    case is one of 'a_region' (lam << alpha <= mu), 'b_region'
    (lam ~ alpha << mu), 'c_region' (lam ~ alpha ~ mu), with the frequency
    pattern xi0 ~ lam, xi2 ~ alpha, xi1, xi3 ~ mu.  The decomposition
    identity d0 + d1 - d2 - d3 = b4 * quad + c4 * lin holds exactly for each
    case formula, on and off the hyperplane.
    """
    fn, _ = _resolve(d)
    xi0, xi1, xi2, xi3 = (np.asarray(v, dtype=float) for v in point)
    _check_region(case, xi0, xi1, xi2, xi3)
    xi0, xi1, xi2, xi3 = np.broadcast_arrays(xi0, xi1, xi2, xi3)
    s1 = xi0 - xi1 - xi2 - xi3

    if case == "a_region":
        delta = (np.asarray(fn(xi0)) + np.asarray(fn(xi1))
                 - np.asarray(fn(xi2)) - np.asarray(fn(xi3)))
        b4 = delta / (2.0 * (xi0 - xi2) * (xi0 - xi3))
        c4 = b4 * s1
    elif case == "b_region":
        # two-term divided-difference split; each term pairs with its own
        # factorization of the quadratic phase
        t1 = divided_difference(d, xi0, xi2) / (2.0 * (xi0 - xi3))
        t2 = divided_difference(d, xi3, xi1) / (2.0 * (xi3 - xi0))
        b4 = t1 + t2
        c4 = t1 * s1 + t2 * (xi3 - xi0 - xi1 - xi2)
    else:
        # lam ~ alpha ~ mu: everything reduces to the smooth divided
        # difference q; b4 is a second divided difference along the diagonal
        w = xi2 + xi3 - xi1
        delta = xi3 - xi1
        scale = np.maximum(1.0, np.abs(xi1))
        near = np.abs(delta) < _COINCIDENT * scale
        q_hi = divided_difference(d, xi2 + delta, xi1 + delta)
        q_lo = divided_difference(d, xi2, xi1)
        safe = np.where(near, 1.0, delta)
        b4 = (np.asarray(q_hi) - np.asarray(q_lo)) / (2.0 * safe)
        if np.any(near):
            step = _DERIV_STEP * scale
            q_p = divided_difference(d, xi2 + step, xi1 + step)
            q_m = divided_difference(d, xi2 - step, xi1 - step)
            b4 = np.where(near, (np.asarray(q_p) - np.asarray(q_m)) / (4.0 * step), b4)
        c4 = divided_difference(d, xi0, w) + b4 * (xi1 - xi0 - xi2 - xi3)

    if np.ndim(b4) == 0:
        return float(b4), float(c4)
    return b4, c4


@dataclass(frozen=True)
class QuadSymbol:
    """A (b4, c4) evaluator pair for one dyadic region of one symbol."""

    base: object
    case: str
    lam: float
    alpha: float
    mu: float

    def b4(self, xi0, xi1, xi2, xi3):
        return b4c4_offdiagonal(self.base, self.case, (xi0, xi1, xi2, xi3))[0]

    def c4(self, xi0, xi1, xi2, xi3):
        return b4c4_offdiagonal(self.base, self.case, (xi0, xi1, xi2, xi3))[1]

    def sample_points(self, rng: np.random.Generator, n: int) -> tuple:
        """Random points in this region's dyadic annuli (signs mixed)."""
        def annulus(size, m):
            mag = size * (1.0 + rng.random(m))
            sign = rng.choice([-1.0, 1.0], m)
            return sign * mag

        xi0 = annulus(self.lam, n)
        xi2 = annulus(self.alpha, n)
        xi1 = annulus(self.mu, n)
        xi3 = annulus(self.mu, n)
        return xi0, xi1, xi2, xi3

    def decomposition_residual(self, points) -> float:
        """max |d-sum - b4*quad - c4*lin| over the given points, scaled."""
        xi0, xi1, xi2, xi3 = (np.asarray(v, dtype=float) for v in points)
        fn = self.base if callable(self.base) else self.base.fn
        b4, c4 = b4c4_offdiagonal(self.base, self.case, points)
        lhs = (np.asarray(fn(xi0)) + np.asarray(fn(xi1))
               - np.asarray(fn(xi2)) - np.asarray(fn(xi3)))
        rhs = b4 * quad_phase(xi0, xi1, xi2, xi3) + c4 * p4_linear(xi0, xi1, xi2, xi3)
        scale = np.maximum(1.0, np.abs(lhs))
        return float(np.max(np.abs(lhs - rhs) / scale))


def quad_symbol(d, case: str, lam: float, alpha: float, mu: float) -> QuadSymbol:
    return QuadSymbol(d, case, lam, alpha, mu)


@dataclass(frozen=True)
class WeightPair:
    """Fejer window psi >= 0 with band-limited spectrum, and the odd weight
    phi whose derivative is psi^2 flattened by its torus mean.

    On the line the antiderivative of psi^2 is bounded and odd; on the torus
    a nonnegative function with positive mean has no periodic antiderivative,
    so phi' = psi^2 - mean_sq instead, with mean_sq = (1/L) int psi^2 dx
    recorded on the object.
    """

    grid: Grid
    scale: float
    band: float
    psi: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    mean_sq: float = 0.0

    def __post_init__(self):
        for name in ("psi", "phi"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def fejer_weights(grid: Grid, scale: float) -> WeightPair:
    """Periodized Fejer kernel at the requested spatial scale plus its odd
    integrated weight.

    The kernel is evaluated in closed form as a square, so psi >= 0 holds
    exactly in floating point; its spectrum is the triangle of height 1 and
    half-width 1/scale (snapped to the grid's frequency step).
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    fs = grid.freq_step
    K = int(round(1.0 / (scale * fs)))
    if K < 1:
        raise ValueError(f"scale={scale} too coarse: bandwidth below one bin")
    if K > grid.n_points // 4:
        raise ValueError(
            f"scale={scale} below resolution: need band K <= N/4 = {grid.n_points // 4}"
        )
    theta = fs * (grid.x - grid.length / 2.0)
    half = 0.5 * theta
    s = np.sin(half)
    num = np.sin(K * half)
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = np.where(np.abs(s) > 1e-12, num / np.where(s == 0, 1.0, s), float(K))
    psi = (fs / (2.0 * np.pi)) / K * quot**2

    v = psi**2
    mean_sq = float(np.mean(v))
    vc = np.fft.fft(v - mean_sq)
    xi = grid.xi.copy()
    xi[0] = 1.0
    phi_hat = vc / (1j * xi)
    phi_hat[0] = 0.0
    phi = np.real(np.fft.ifft(phi_hat))
    n = grid.n_points
    phi = phi - phi[n // 2]
    # exact odd symmetry about the center index
    idx = (n // 2 - (np.arange(n) - n // 2)) % n
    phi = 0.5 * (phi - phi[idx])
    return WeightPair(grid, 1.0 / (K * fs), K * fs, psi, phi, mean_sq)
