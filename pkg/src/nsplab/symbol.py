"""Fourier symbol of the linearized Navier-Stokes-Poisson operator.

The linear system for the density perturbation ``n`` and momentum ``m``

    n_t + div m = 0
    m_t + c^2 grad n + debye^-2 grad (-Lap)^-1 n - mu Lap m - (mu + nu) grad div m = 0

becomes ``U_t = A(xi) U`` mode by mode.  This module builds ``A(xi)``, its
eigenvalues and an independent scaling-and-squaring matrix exponential used
to cross-check the closed-form Green kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OSCILLATORY = "oscillatory"
DEGENERATE = "degenerate"
OVERDAMPED = "overdamped"

DEGENERATE_RTOL = 1e-8


class OriginExcludedError(ValueError):
    """Raised when a quantity singular at xi = 0 is requested there."""

    def __init__(self, what: str = "symbol"):
        super().__init__(f"origin excluded: {what} is singular at |xi| = 0")


@dataclass(frozen=True)
class FluidParams:
    """Physical constants of the (nondimensional) NSP system.

    ``poisson_enabled=False`` drops the ``debye**-2`` coupling and gives the
    compressible Navier-Stokes comparison system.
    """

    mu: float = 1.0
    nu_second: float = 0.0
    debye: float = 1.0
    rho_bar: float = 1.0
    sound_speed: float = 1.0
    gamma: float = 2.0
    poisson_enabled: bool = True

    def __post_init__(self):
        checks = [
            (self.mu > 0, "mu must be > 0"),
            ((2.0 / 3.0) * self.mu + self.nu_second >= 0, "(2/3)mu + nu must be ≥ 0"),
            (self.debye > 0, "debye must be > 0"),
            (self.rho_bar > 0, "rho_bar must be > 0"),
            (self.sound_speed > 0, "sound_speed must be > 0"),
            (self.gamma > 1, "gamma must be > 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(message)
        for name in ("mu", "nu_second", "debye", "rho_bar", "sound_speed", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def theta_half(self) -> float:
        """Damping rate of the acoustic/plasma pair, ``mu + nu/2``."""
        return self.mu + 0.5 * self.nu_second

    @property
    def theta_full(self) -> float:
        """Longitudinal viscosity ``2 mu + nu``."""
        return 2.0 * self.mu + self.nu_second

    @property
    def kappa(self) -> float:
        """Electric coupling ``debye**-2``; zero when the Poisson term is off."""
        return self.debye ** -2 if self.poisson_enabled else 0.0

    @property
    def c2(self) -> float:
        return self.sound_speed ** 2

    def without_poisson(self) -> "FluidParams":
        return FluidParams(self.mu, self.nu_second, self.debye, self.rho_bar,
                           self.sound_speed, self.gamma, poisson_enabled=False)


@dataclass(frozen=True)
class EigenTriple:
    r: float
    lambda0: float
    lambda_plus: complex
    lambda_minus: complex
    discriminant: float
    b: float | None
    regime: str


def discriminant(params: FluidParams, r):
    r2 = np.asarray(r, dtype=float) ** 2
    return 4.0 * (params.c2 * r2 + params.kappa) - params.theta_full ** 2 * r2 * r2


def regime_of(params: FluidParams, r, disc=None):
    r = np.asarray(r, dtype=float)
    if disc is None:
        disc = discriminant(params, r)
    scale = np.maximum(1.0, params.theta_full ** 2 * r ** 4)
    return np.where(np.abs(disc) < DEGENERATE_RTOL * scale, DEGENERATE,
                    np.where(disc > 0, OSCILLATORY, OVERDAMPED))


def degenerate_radius(params: FluidParams) -> float:
    """Radius where the discriminant vanishes (the two roots collide)."""
    th2 = params.theta_full ** 2
    c2 = params.c2
    r2 = (4 * c2 + math.sqrt(16 * c2 * c2 + 16 * th2 * params.kappa)) / (2 * th2)
    return math.sqrt(r2)


def root_pair(params: FluidParams, r):
    """Vectorized ``(lam_bar, delta, lam_hi, lam_lo)`` for the longitudinal pair.

    ``lam_bar`` is the mean of the two roots and ``delta`` the half gap,
    chosen with ``Re(delta) >= 0`` so ``lam_hi = lam_bar + delta`` is the
    root with the larger real part.  In the overdamped regime the slow root
    is recovered from the product of the roots to avoid cancellation.
    """
    r = np.asarray(r, dtype=float)
    r2 = r * r
    disc = discriminant(params, r)
    lam_bar = -params.theta_half * r2 + 0j
    delta = 0.5 * np.sqrt(-disc + 0j)
    lam_lo = lam_bar - delta
    product = params.c2 * r2 + params.kappa
    with np.errstate(divide="ignore", invalid="ignore"):
        slow = np.where(lam_lo != 0, product / lam_lo, 0.0)
    lam_hi = np.where(disc < 0, slow, lam_bar + delta)
    return lam_bar, delta, lam_hi, lam_lo


def assemble_symbol(params: FluidParams, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    r2 = float(xi @ xi)
    if r2 == 0.0:
        raise OriginExcludedError("A(xi)")
    a = np.zeros((4, 4), dtype=complex)
    a[0, 1:] = -1j * xi
    a[1:, 0] = -1j * xi * (params.c2 + params.kappa / r2)
    a[1:, 1:] = -params.mu * r2 * np.eye(3) - (params.mu + params.nu_second) * np.outer(xi, xi)
    return a


def eigen_decompose(params: FluidParams, r: float) -> EigenTriple:
    if r < 0:
        raise ValueError("r must be >= 0")
    disc = float(discriminant(params, r))
    regime = str(regime_of(params, r, disc))
    lam_bar, delta, lam_hi, lam_lo = (complex(v) for v in root_pair(params, r))
    if regime == OVERDAMPED:
        # fast branch carries the plus label
        plus, minus = lam_lo, lam_hi
    else:
        plus, minus = lam_bar + delta, lam_bar - delta
    b = oscillation_frequency(params, r)
    return EigenTriple(r=float(r), lambda0=-params.mu * r * r, lambda_plus=plus,
                       lambda_minus=minus, discriminant=disc, b=b, regime=regime)


def oscillation_frequency(params: FluidParams, r: float) -> float | None:
    """Imaginary part of the upper root, or ``None`` when overdamped."""
    disc = float(discriminant(params, r))
    if str(regime_of(params, r, disc)) == OVERDAMPED:
        return None
    return 0.5 * math.sqrt(max(disc, 0.0))


def characteristic_residual(params: FluidParams, r: float, lam: complex) -> float:
    """Normalized residual of the quartic ``det(A - lam I)`` at ``lam``.

    The polynomial is ``(lam + mu r^2)^2 (lam^2 + (2mu+nu) r^2 lam + c^2 r^2 + k)``,
    evaluated in factored form and divided by ``max(1, sum_{j>=1} |c_j| |lam|^j)``.
    """
    if r <= 0:
        raise ValueError("r must be > 0")
    r2 = r * r
    a = params.mu * r2
    beta = params.theta_full * r2
    gamma = params.c2 * r2 + params.kappa
    value = (lam + a) ** 2 * (lam * lam + beta * lam + gamma)
    # (lam^2 + 2a lam + a^2)(lam^2 + beta lam + gamma)
    coeffs = [
        1.0,
        beta + 2 * a,
        gamma + 2 * a * beta + a * a,
        2 * a * gamma + a * a * beta,
    ]
    mag = abs(lam)
    scale = sum(abs(cj) * mag ** (4 - j) for j, cj in enumerate(coeffs))
    return abs(value) / max(1.0, scale)


def matrix_exp_oracle(a, t: float = 1.0, tol: float = 1e-16) -> np.ndarray:
    """``exp(t a)`` by diagonal balancing, scaling and squaring of a Taylor series.

    The scaled matrix has 1-norm <= 1/2 and the series is summed until the
    next term falls below ``tol`` relative to the partial sum, which keeps the
    relative truncation error below 1e-12 after squaring for the 4x4 symbols
    used here.  Deliberately independent of the closed-form Green kernel.
    """
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("square matrix required")
    if t < 0:
        raise ValueError("t must be >= 0")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite entries")
    n = a.shape[0]
    x = t * a
    d = _balance(x)
    x = (x * d[None, :]) / d[:, None]
    norm = np.abs(x).sum(axis=0).max()
    s = 0 if norm <= 0.5 else int(math.ceil(math.log2(norm / 0.5)))
    x = x / 2.0 ** s
    result = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, 60):
        term = term @ x / k
        result = result + term
        if np.abs(term).max() <= tol * np.abs(result).max():
            break
    for _ in range(s):
        result = result @ result
    return (result / d[None, :]) * d[:, None]


def _balance(x: np.ndarray, sweeps: int = 8) -> np.ndarray:
    """Power-of-two diagonal scaling equalizing row and column norms."""
    n = x.shape[0]
    d = np.ones(n)
    y = np.abs(x)
    for _ in range(sweeps):
        converged = True
        for i in range(n):
            c = sum(y[j, i] * d[i] / d[j] for j in range(n) if j != i)
            r = sum(y[i, j] * d[j] / d[i] for j in range(n) if j != i)
            if c == 0 or r == 0:
                continue
            f = 2.0 ** round(0.5 * math.log2(r / c))
            if f != 1.0:
                d[i] *= f
                converged = False
        if converged:
            break
    return d
