"""Pseudo-spectral solver for the nonlinear system on a periodic box.

Unknowns are the density perturbation ``n = rho - 1`` and the momentum
``m``.  The linear part is integrated exactly per Fourier mode with the
closed-form kernel; the flux divergence ``Q = -div F`` is treated with
exponential time differencing (ETD1 or the two-stage ETD2RK scheme).
Spectral arrays use numpy's unnormalized ``fftn`` layout, indexed ``[x, y, z]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import fft as sfft

from .green import mode_scalars
from .symbol import FluidParams

SERIES_SWITCH = 1e-2
SERIES_TERMS = 10


class VacuumError(ArithmeticError):
    """Density ``1 + n`` reached zero or below on the grid."""


class InstabilityError(ArithmeticError):
    pass


class MeanDensityError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    L: float = 40.0
    N: int = 32
    dealias_fraction: float = 2.0 / 3.0
    workers: int = 1

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("box length must be > 0")
        if self.N < 4 or self.N > 128 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two in [4, 128]")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must be in (0, 1]")

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / self.L

    @property
    def dx(self) -> float:
        return self.L / self.N

    def index(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, 1.0 / self.N)

    def wavevectors(self):
        """``(kx, ky, kz)`` broadcastable to ``(N, N, N)``."""
        k1 = self.dk * self.index()
        return k1[:, None, None], k1[None, :, None], k1[None, None, :]

    def k_squared(self) -> np.ndarray:
        kx, ky, kz = self.wavevectors()
        return kx * kx + ky * ky + kz * kz

    def dealias_mask(self) -> np.ndarray:
        keep = np.abs(self.index()) <= self.dealias_fraction * self.N / 2.0
        return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]

    def coordinates(self):
        x = self.dx * np.arange(self.N)
        return x[:, None, None], x[None, :, None], x[None, None, :]

    def fft(self, f, axes=(-3, -2, -1)):
        return sfft.fftn(f, axes=axes, workers=self.workers)

    def ifft(self, f, axes=(-3, -2, -1)):
        return sfft.ifftn(f, axes=axes, workers=self.workers)

    def integral_sq(self, f_hat) -> float:
        """``int |f|^2 dx`` from unnormalized spectral coefficients."""
        return float(self.L ** 3 / self.N ** 6 * np.sum(np.abs(f_hat) ** 2))


@dataclass
class SimState:
    n_hat: np.ndarray
    m_hat: np.ndarray
    t: float = 0.0
    phi_hat: np.ndarray | None = field(default=None, repr=False)
    e_hat: np.ndarray | None = field(default=None, repr=False)

    def copy(self) -> "SimState":
        return SimState(self.n_hat.copy(), self.m_hat.copy(), self.t)


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 0.05
    scheme: str = "ETD2"
    t_end: float = 1.0
    snapshot_stride: int = 10

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.scheme not in ("ETD1", "ETD2"):
            raise ValueError("scheme must be ETD1 or ETD2")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


def conjugate_asymmetry(f_hat) -> float:
    """``max |f[k] - conj(f[-k])|``; zero for real physical fields."""
    f = np.asarray(f_hat)
    axes = tuple(range(f.ndim - 3, f.ndim))
    mirrored = np.roll(np.flip(f, axis=axes), 1, axis=axes)
    return float(np.abs(f - np.conj(mirrored)).max()) if f.size else 0.0


def poisson_solve(n_hat, grid: GridSpec, params: FluidParams):
    """``(Phi_hat, E_hat)`` with ``Phi = k (-Lap)^-1 n`` and ``E = grad Phi``."""
    n_hat = np.asarray(n_hat)
    scale = max(1.0, float(np.abs(n_hat).max()))
    if abs(n_hat[0, 0, 0]) > 1e-12 * scale:
        raise MeanDensityError("density perturbation must have zero mean")
    k2 = grid.k_squared()
    k2[0, 0, 0] = 1.0
    phi = params.kappa * n_hat / k2
    phi[0, 0, 0] = 0.0
    kx, ky, kz = grid.wavevectors()
    e_hat = np.stack([1j * kx * phi, 1j * ky * phi, 1j * kz * phi])
    return phi, e_hat


def pressure(params: FluidParams, rho):
    """``p(rho) = c^2 rho^gamma / gamma`` so that ``p'(1) = c^2``."""
    return params.c2 * rho ** params.gamma / params.gamma


def nonlinear_rhs(state: SimState, params: FluidParams, grid: GridSpec) -> np.ndarray:
    """Spectral momentum source ``Q_hat = -i k . F_hat`` of the flux tensor ``F``.

    ``F`` collects the electric stress ``-E(x)E/k + |E|^2/(2k) I``, the pressure
    remainder ``(p(1+n) - p(1) - c^2 n) I``, convection ``m (x) m / (1+n)`` and
    the viscous correction ``mu grad w + (mu+nu)(div w) I`` with
    ``w = n m / (1+n)``.  Products are formed on the dealiased grid.
    """
    if params.rho_bar != 1.0:
        raise ValueError("the simulator is nondimensionalized with rho_bar = 1")
    mask = grid.dealias_mask()
    n_hat = state.n_hat * mask
    m_hat = state.m_hat * mask
    n = grid.ifft(n_hat).real
    m = grid.ifft(m_hat).real
    rho = 1.0 + n
    if np.any(rho <= 0):
        raise VacuumError(f"vacuum/negativity: min(1 + n) = {rho.min():.3g} at t = {state.t:g}")
    inv_rho = 1.0 / rho

    flux = np.einsum("i...,j...->ij...", m, m) * inv_rho
    remainder = pressure(params, rho) - pressure(params, 1.0) - params.c2 * n
    for i in range(3):
        flux[i, i] += remainder
    if params.poisson_enabled:
        _, e_hat = poisson_solve(n_hat, grid, params)
        e = grid.ifft(e_hat).real
        kap = params.kappa
        flux -= np.einsum("i...,j...->ij...", e, e) / kap
        half_e2 = 0.5 * np.sum(e * e, axis=0) / kap
        for i in range(3):
            flux[i, i] += half_e2

    kx, ky, kz = grid.wavevectors()
    kvec = (kx, ky, kz)
    flux_hat = grid.fft(flux) * mask
    q_hat = np.empty((3,) + n_hat.shape, dtype=complex)
    for i in range(3):
        q_hat[i] = -1j * sum(kvec[j] * flux_hat[i, j] for j in range(3))

    w_hat = grid.fft(n * m * inv_rho) * mask
    k_dot_w = kx * w_hat[0] + ky * w_hat[1] + kz * w_hat[2]
    k2 = grid.k_squared()
    mu, lam = params.mu, params.mu + params.nu_second
    for i in range(3):
        q_hat[i] += mu * k2 * w_hat[i] + lam * kvec[i] * k_dot_w
    return q_hat * mask


# -- exponential integrator --------------------------------------------------

def _matmul2(a, b):
    return np.einsum("...ij,...jk->...ik", a, b)


def _matvec2(a, v):
    return np.einsum("...ij,...j->...i", a, v)


class LinearPropagator:
    """Per-mode ``G``, ``Phi1 = int_0^h G`` and the ETD2 weight ``Phi2`` for one ``dt``.

    Modes ``k != 0`` are split into the longitudinal pair ``(n, k_hat . m)``
    with a 2x2 generator and the transverse part with rate ``-mu |k|^2``.
    """

    def __init__(self, grid: GridSpec, params: FluidParams, dt: float):
        self.grid, self.params, self.dt = grid, params, dt
        k2 = grid.k_squared()
        r = np.sqrt(k2)
        self.origin = r == 0
        r_safe = np.where(self.origin, 1.0, r)
        self.r = r_safe
        kx, ky, kz = grid.wavevectors()
        self.khat = np.stack(np.broadcast_arrays(kx / r_safe, ky / r_safe, kz / r_safe))
        self.khat[:, self.origin] = 0.0

        h = dt
        ms = mode_scalars(params, r_safe, h)
        s = params.c2 + params.kappa / (r_safe * r_safe)
        a = np.zeros(r.shape + (2, 2), dtype=complex)
        a[..., 0, 1] = -1j * r_safe
        a[..., 1, 0] = -1j * r_safe * s
        a[..., 1, 1] = -params.theta_full * k2
        g = np.empty_like(a)
        g[..., 0, 0] = ms.g_nn
        g[..., 0, 1] = -1j * r_safe * ms.d_quot
        g[..., 1, 0] = 1j * r_safe * ms.coupling_mn
        g[..., 1, 1] = ms.h_long
        self.G = g

        # G - I without cancellation: cosh(z) - 1 = 2 sinh(z/2)^2
        lam_bar = -params.theta_half * k2
        disc = 4.0 * (params.c2 * k2 + params.kappa) - params.theta_full ** 2 * k2 * k2
        delta = 0.5 * np.sqrt(-disc + 0j)
        c_minus_1 = np.expm1(lam_bar * h) + np.exp(lam_bar * h) * 2.0 * np.sinh(0.5 * delta * h) ** 2
        big = np.abs(delta * h) > 1.0
        c_full = 0.5 * (ms.g_nn + ms.h_long)
        c_minus_1 = np.where(big, c_full - 1.0, c_minus_1)
        g_minus_i = g.copy()
        g_minus_i[..., 0, 0] = c_minus_1 - lam_bar * ms.d_quot
        g_minus_i[..., 1, 1] = c_minus_1 + lam_bar * ms.d_quot

        det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        inv = np.empty_like(a)
        inv[..., 0, 0] = a[..., 1, 1] / det
        inv[..., 1, 1] = a[..., 0, 0] / det
        inv[..., 0, 1] = -a[..., 0, 1] / det
        inv[..., 1, 0] = -a[..., 1, 0] / det
        eye = np.eye(2)
        phi1 = _matmul2(inv, g_minus_i)
        phi2 = _matmul2(inv, phi1 - h * eye) / h

        norm = np.abs(a).sum(axis=-2).max(axis=-1) * h
        small = norm < SERIES_SWITCH
        if np.any(small):
            ah = a[small] * h
            term = np.broadcast_to(eye, ah.shape).astype(complex)
            s1 = np.zeros_like(ah)
            s2 = np.zeros_like(ah)
            fact1, fact2 = 1.0, 2.0
            for j in range(SERIES_TERMS):
                s1 += term / fact1
                s2 += term / fact2
                term = _matmul2(term, ah)
                fact1 *= j + 2
                fact2 *= j + 3
            phi1[small] = h * s1
            phi2[small] = h * s2
        self.phi1 = phi1
        self.phi2 = phi2

        z = -params.mu * k2 * h
        z_safe = np.where(z == 0, 1.0, z)
        self.e_t = np.exp(z)
        t1 = h * np.expm1(z) / z_safe
        t2 = h * (np.expm1(z) - z) / (z_safe * z_safe)
        zs = np.abs(z) < SERIES_SWITCH
        if np.any(zs):
            zz = z[zs]
            acc1 = np.zeros_like(zz)
            acc2 = np.zeros_like(zz)
            p, f1, f2 = np.ones_like(zz), 1.0, 2.0
            for j in range(SERIES_TERMS):
                acc1 += p / f1
                acc2 += p / f2
                p = p * zz
                f1 *= j + 2
                f2 *= j + 3
            t1[zs] = h * acc1
            t2[zs] = h * acc2
        self.t_phi1 = t1
        self.t_phi2 = t2

    def split(self, m_hat):
        q = np.sum(self.khat * m_hat, axis=0)
        return q, m_hat - self.khat * q

    def join(self, q, m_t):
        return self.khat * q + m_t

    def _apply(self, op, t_op, n_hat, m_hat):
        q, m_t = self.split(m_hat)
        v = _matvec2(op, np.stack([n_hat, q], axis=-1))
        return v[..., 0], self.join(v[..., 1], t_op * m_t)

    def propagate(self, n_hat, m_hat):
        n_new, m_new = self._apply(self.G, self.e_t, n_hat, m_hat)
        n_new[self.origin] = 0.0
        m_new[:, self.origin] = m_hat[:, self.origin]
        return n_new, m_new

    def _source(self, op, t_op, scalar, q_hat):
        zero = np.zeros(q_hat.shape[1:], dtype=complex)
        n_out, m_out = self._apply(op, t_op, zero, q_hat)
        n_out[self.origin] = 0.0
        m_out[:, self.origin] = scalar * q_hat[:, self.origin]
        return n_out, m_out

    def phi1_source(self, q_hat):
        return self._source(self.phi1, self.t_phi1, self.dt, q_hat)

    def phi2_source(self, q_hat):
        return self._source(self.phi2, self.t_phi2, 0.5 * self.dt, q_hat)


def etd_step(state: SimState, params: FluidParams, grid: GridSpec, dt: float,
             scheme: str = "ETD2", propagator: LinearPropagator | None = None,
             nonlinear: bool = True, forcing: Callable | None = None) -> SimState:
    """Advance one step; ``forcing(t)`` adds an extra spectral momentum source."""
    prop = propagator if propagator is not None else LinearPropagator(grid, params, dt)
    if prop.dt != dt:
        raise ValueError("propagator built for a different dt")

    def source(st: SimState):
        q = nonlinear_rhs(st, params, grid) if nonlinear else np.zeros_like(st.m_hat)
        if forcing is not None:
            q = q + forcing(st.t)
        return q

    n_lin, m_lin = prop.propagate(state.n_hat, state.m_hat)
    if not nonlinear and forcing is None:
        return SimState(n_lin, m_lin, state.t + dt)
    q0 = source(state)
    dn, dm = prop.phi1_source(q0)
    a = SimState(n_lin + dn, m_lin + dm, state.t + dt)
    if scheme == "ETD1":
        return a
    if scheme != "ETD2":
        raise ValueError("scheme must be ETD1 or ETD2")
    q1 = source(a)
    cn, cm = prop.phi2_source(q1 - q0)
    return SimState(a.n_hat + cn, a.m_hat + cm, state.t + dt)


# -- diagnostics and driver --------------------------------------------------

def energy_diagnostic(state: SimState, params: FluidParams, grid: GridSpec) -> float:
    """``int (c^2 n^2 + |m|^2 + |E|^2 / k) dx``, the quadratic energy of the linear flow."""
    total = params.c2 * grid.integral_sq(state.n_hat) + grid.integral_sq(state.m_hat)
    if params.poisson_enabled:
        _, e_hat = poisson_solve(state.n_hat, grid, params)
        total += grid.integral_sq(e_hat) / params.kappa
    return total


def discrete_mass(state: SimState, grid: GridSpec) -> float:
    """``int n dx`` on the grid."""
    return float(state.n_hat[0, 0, 0].real * grid.dx ** 3)


def default_initial(grid: GridSpec, epsilon: float, width: float = 2.0) -> SimState:
    """Zero-mean Gaussian density bump plus a divergence-free swirl, amplitude ``epsilon``."""
    x, y, z = grid.coordinates()
    c = grid.L / 2.0
    r2 = (x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2
    bump = np.exp(-r2 / (2.0 * width ** 2))
    n = epsilon * (bump - bump.mean())
    swirl = np.zeros((3,) + bump.shape)
    swirl[0] = -(y - c) / width * bump
    swirl[1] = (x - c) / width * bump
    m = epsilon * swirl
    mask = grid.dealias_mask()
    n_hat = grid.fft(n) * mask
    n_hat[0, 0, 0] = 0.0
    return SimState(n_hat, grid.fft(m) * mask, 0.0)


@dataclass
class SimResult:
    t: np.ndarray
    norm_n: np.ndarray
    norm_m: np.ndarray
    norm_e: np.ndarray
    energy: np.ndarray
    mass: np.ndarray
    max_asymmetry: float
    snapshots: list
    final: SimState

    def rows(self):
        return [
            {"t": t, "norm_n_l2": a, "norm_m_l2": b, "norm_e_l2": c, "energy": e, "mass": m}
            for t, a, b, c, e, m in zip(self.t, self.norm_n, self.norm_m, self.norm_e,
                                        self.energy, self.mass)
        ]


def run_simulation(grid: GridSpec, params: FluidParams, stepper: StepperConfig,
                   epsilon: float = 1e-4, initial: SimState | None = None,
                   nonlinear: bool = True, forcing: Callable | None = None) -> SimResult:
    """Integrate to ``stepper.t_end``, recording diagnostics every ``snapshot_stride`` steps."""
    state = initial.copy() if initial is not None else default_initial(grid, epsilon)
    prop = LinearPropagator(grid, params, stepper.dt)
    ts, nn, mm, ee, en, ms = [], [], [], [], [], []
    snaps = []
    asym = 0.0

    def record(st):
        _, e_hat = poisson_solve(st.n_hat, grid, params)
        st.e_hat = e_hat
        ts.append(st.t)
        nn.append(math.sqrt(grid.integral_sq(st.n_hat)))
        mm.append(math.sqrt(grid.integral_sq(st.m_hat)))
        ee.append(math.sqrt(grid.integral_sq(e_hat)))
        en.append(energy_diagnostic(st, params, grid))
        ms.append(discrete_mass(st, grid))
        snaps.append(st)

    record(state)
    initial_size = max(nn[0], mm[0])
    for step in range(1, stepper.steps + 1):
        state = etd_step(state, params, grid, stepper.dt, stepper.scheme, prop,
                         nonlinear=nonlinear, forcing=forcing)
        state.t = step * stepper.dt
        rho_min = 1.0 + grid.ifft(state.n_hat).real.min()
        if rho_min <= 0.5:
            raise VacuumError(f"vacuum/negativity: min(1 + n) = {rho_min:.3g} at t = {state.t:g}")
        asym = max(asym, conjugate_asymmetry(state.n_hat), conjugate_asymmetry(state.m_hat))
        size = max(math.sqrt(grid.integral_sq(state.n_hat)), math.sqrt(grid.integral_sq(state.m_hat)))
        if not math.isfinite(size) or (initial_size > 0 and size > 10.0 * initial_size):
            raise InstabilityError(f"norm grew to {size:.3g} (initial {initial_size:.3g}) "
                                   f"at t = {state.t:g}")
        if step % stepper.snapshot_stride == 0 or step == stepper.steps:
            record(state)
    return SimResult(np.array(ts), np.array(nn), np.array(mm), np.array(ee), np.array(en),
                     np.array(ms), asym, snaps, state)
