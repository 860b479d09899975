"""Closed-form Fourier-space Green kernel ``G(xi, t) = exp(t A(xi))``.

Every entry of the kernel is built from five scalars of ``(r, t)``:

    g_nn         density response to density
    d_quot       (e^{l+ t} - e^{l- t}) / (l+ - l-)
    h_long       longitudinal momentum response to momentum
    e_transverse e^{-mu r^2 t}
    coupling_mn  -(c^2 + k r^-2) d_quot

They are evaluated through the midpoint form ``lam_bar +- delta`` so that the
oscillatory, degenerate and overdamped regimes share one stable code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symbol import (
    FluidParams,
    OriginExcludedError,
    degenerate_radius,
    discriminant,
    root_pair,
)

SERIES_SWITCH = 1e-4


@dataclass(frozen=True)
class ModeScalars:
    g_nn: np.ndarray
    d_quot: np.ndarray
    h_long: np.ndarray
    e_transverse: np.ndarray
    coupling_mn: np.ndarray | None


@dataclass(frozen=True)
class CutoffSplit:
    """Smooth low/high frequency split: ``chi = 1`` below ``R_cut``, 0 above ``R_cut + 1``."""

    R_cut: float

    def chi(self, r):
        r = np.asarray(r, dtype=float)
        s = np.clip(r - self.R_cut, 0.0, 1.0)
        out = np.zeros_like(s)
        inside = s < 1.0
        si = s[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
        return out


def _sinhc_series(z):
    z2 = z * z
    return 1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0 * (1.0 + z2 / 72.0)))


def hyperbolic_parts(lam_bar, delta, lam_hi, t):
    """Return ``(e^{lb t} cosh(dt), e^{lb t} sinh(dt)/d)``, stable for any regime.

    ``lam_hi`` must equal ``lam_bar + delta`` with ``Re(delta) >= 0`` (it is
    passed separately so callers can supply a cancellation-free value).
    """
    t = np.asarray(t, dtype=float)
    lam_bar, delta, lam_hi, t = np.broadcast_arrays(lam_bar, delta, lam_hi, t)
    z = delta * t
    small = np.abs(z) < SERIES_SWITCH
    cosh_part = np.empty(z.shape, dtype=complex)
    sinh_part = np.empty(z.shape, dtype=complex)

    if np.any(small):
        base = np.exp(lam_bar[small] * t[small])
        zs = z[small]
        cosh_part[small] = base * np.cosh(zs)
        sinh_part[small] = base * t[small] * _sinhc_series(zs)
    big = ~small
    if np.any(big):
        lead = np.exp(lam_hi[big] * t[big])
        decay = np.exp(-2.0 * z[big])
        cosh_part[big] = 0.5 * lead * (1.0 + decay)
        sinh_part[big] = lead * (-np.expm1(-2.0 * z[big])) / (2.0 * delta[big])
    return cosh_part, sinh_part


def mode_scalars(params: FluidParams, r, t, with_coupling: bool = True) -> ModeScalars:
    """Kernel scalars on a broadcast grid of radial wavenumbers and times."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    if np.any(r < 0):
        raise ValueError("r must be >= 0")
    lam_bar, delta, lam_hi, _ = root_pair(params, r)
    cosh_part, sinh_part = hyperbolic_parts(lam_bar, delta, lam_hi, t)
    lam_bar = np.broadcast_to(lam_bar, cosh_part.shape)
    g_nn = cosh_part - lam_bar * sinh_part
    h_long = cosh_part + lam_bar * sinh_part
    r_b, t_b = np.broadcast_arrays(r, t)
    e_t = np.exp(-params.mu * r_b * r_b * t_b)
    coupling = None
    if with_coupling:
        if np.any(r_b == 0):
            raise OriginExcludedError("coupling_mn")
        coupling = -(params.c2 + params.kappa / (r_b * r_b)) * sinh_part
    return ModeScalars(g_nn=g_nn, d_quot=sinh_part, h_long=h_long,
                       e_transverse=e_t, coupling_mn=coupling)


def green_matrix(params: FluidParams, xi, t: float) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    r = float(np.sqrt(xi @ xi))
    if r == 0.0:
        raise OriginExcludedError("G(xi, t)")
    ms = mode_scalars(params, r, t)
    khat = xi / r
    proj = np.outer(khat, khat)
    g = np.zeros((4, 4), dtype=complex)
    g[0, 0] = ms.g_nn
    g[0, 1:] = -1j * xi * ms.d_quot
    g[1:, 0] = 1j * xi * ms.coupling_mn
    g[1:, 1:] = ms.e_transverse * (np.eye(3) - proj) + ms.h_long * proj
    return g


def apply_green_mode(params: FluidParams, xi, t: float, n0: complex, m0):
    """Propagate one Fourier mode; returns ``(n_hat, m_hat, E_hat)``.

    ``E_hat = i xi n_hat / |xi|^2`` is the transform of ``grad (-Lap)^-1 n``.
    """
    xi = np.asarray(xi, dtype=float)
    r2 = float(xi @ xi)
    if r2 == 0.0:
        raise OriginExcludedError("G(xi, t)")
    u = np.concatenate([[complex(n0)], np.asarray(m0, dtype=complex)])
    out = green_matrix(params, xi, t) @ u
    n_hat = out[0]
    e_hat = 1j * xi * n_hat / r2
    return n_hat, out[1:], e_hat


# -- asymptotic approximants -------------------------------------------------

def b_taylor(params: FluidParams, r):
    """Two-term small-r expansion ``1/debye + (debye c^2 / 2) r^2``."""
    r = np.asarray(r, dtype=float)
    return 1.0 / params.debye + 0.5 * params.debye * params.c2 * r * r


def b_taylor_error(params: FluidParams, r):
    """``|b(r) - b_taylor(r)|`` via the rationalized difference (no cancellation)."""
    if not params.poisson_enabled:
        raise ValueError("the plasma-frequency expansion needs the Poisson coupling")
    r = np.asarray(r, dtype=float)
    r4 = r ** 4
    b = 0.5 * np.sqrt(np.maximum(discriminant(params, r), 0.0))
    b0 = b_taylor(params, r)
    # b^2 - b0^2 = -(theta^2 + debye^2 c^4) r^4 / 4
    diff = -(params.theta_full ** 2 + params.debye ** 2 * params.c2 ** 2) * r4 / 4.0
    return np.abs(diff / (b + b0))


def high_freq_leading(params: FluidParams, r):
    """Leading orders ``(lambda0, lambda_fast, lambda_slow)`` for r >> 1."""
    r = np.asarray(r, dtype=float)
    th = params.theta_full
    return (-params.mu * r * r, -th * r * r + params.c2 / th, -params.c2 / th + 0 * r)


def asymptotic_check(params: FluidParams, r_grid, t: float):
    """Error table of the low- and high-frequency approximants.

    Low-frequency forms use ``cos(b t)``, ``sin(b t)/b`` with the Taylor
    frequency; rows outside the regime where an approximant is meaningful
    are flagged rather than skipped.
    """
    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0) or np.any(np.diff(r) < 0):
        raise ValueError("r_grid must be positive and sorted")
    r_deg = degenerate_radius(params)
    ms = mode_scalars(params, r, t)
    th = params.theta_half
    bt = b_taylor(params, r)
    env = np.exp(-th * r * r * t)
    cos_bt = np.cos(bt * t)
    sinc_bt = np.sin(bt * t) / bt
    approx_g = env * (cos_bt + th * sinc_bt * r * r)
    approx_h = env * (cos_bt - th * sinc_bt * r * r)
    approx_d = env * sinc_bt

    lam_bar, delta, lam_hi, lam_lo = root_pair(params, r)
    lead0, lead_fast, lead_slow = high_freq_leading(params, r)
    overdamped = discriminant(params, r) < 0
    fast = np.where(overdamped, lam_lo, np.nan)
    slow = np.where(overdamped, lam_hi, np.nan)

    rows = []
    for i, ri in enumerate(r):
        low_ok = ri <= 0.1 * r_deg
        high_ok = ri >= 10.0 * r_deg
        flag = "low" if low_ok else ("high" if high_ok else "outside asymptotic regime")
        rows.append({
            "r": float(ri),
            "regime": flag,
            "err_g_nn": float(abs(ms.g_nn[i] - approx_g[i])),
            "err_h_long": float(abs(ms.h_long[i] - approx_h[i])),
            "err_d_quot": float(abs(ms.d_quot[i] - approx_d[i])),
            "err_b": float(b_taylor_error(params, ri)) if params.poisson_enabled else float("nan"),
            "err_lambda0": float(abs(-params.mu * ri * ri - lead0[i])),
            "err_lambda_plus": float(abs(fast[i] - lead_fast[i])),
            "err_lambda_minus": float(abs(slow[i] - lead_slow[i])),
        })
    return rows


def high_freq_envelope(params: FluidParams, R_cut: float, t_grid, samples: int = 400):
    """Fit ``sup_{R_cut <= r <= 10 R_cut} |kernel| <= C exp(-R0 t)``.

    Returns ``(C, R0, envelope)``; raises if the fitted rate is not positive.
    """
    if R_cut <= 0:
        raise ValueError("R_cut must be > 0")
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be nonnegative and increasing")
    r = np.geomspace(R_cut, 10.0 * R_cut, samples)
    ms = mode_scalars(params, r[None, :], t[:, None], with_coupling=False)
    stack = np.stack([np.abs(ms.g_nn), np.abs(ms.h_long), np.abs(ms.d_quot), ms.e_transverse])
    envelope = stack.max(axis=0).max(axis=1)
    slope, _ = np.polyfit(t, np.log(envelope), 1)
    R0 = -slope
    if not R0 > 0:
        raise ArithmeticError(f"envelope does not decay (fitted R0 = {R0:.3g})")
    C = float(np.max(envelope * np.exp(R0 * t)))
    return C, float(R0), envelope


def asymptotic_slopes(params: FluidParams, low=(1e-3, 1e-1), high=(10.0, 1e3), points: int = 25):
    """Log-log slopes of the approximant residuals.

    ``b_slope`` fits ``|b - b_taylor|`` on the low band (expected 4);
    ``high_slope`` is the larger of the fast/slow eigenvalue residual slopes
    on the high band (expected -2).
    """
    r_low = np.geomspace(*low, points)
    r_high = np.geomspace(*high, points)
    out = {}
    if params.poisson_enabled:
        err_b = b_taylor_error(params, r_low)
        out["b_slope"] = float(np.polyfit(np.log(r_low), np.log(err_b), 1)[0])
    _, _, lam_hi, lam_lo = root_pair(params, r_high)
    _, lead_fast, lead_slow = high_freq_leading(params, r_high)
    slopes = []
    for err in (np.abs(lam_lo.real - lead_fast), np.abs(lam_hi.real - lead_slow)):
        slopes.append(float(np.polyfit(np.log(r_high), np.log(err), 1)[0]))
    out["high_fast_slope"], out["high_slow_slope"] = slopes
    out["high_slope"] = max(slopes)
    return out


def oracle_discrepancy(params: FluidParams, radii, times, direction=(1.0, 2.0, 2.0)):
    """Max entrywise ``|G(xi, t) - expm(t A(xi))|`` over a grid of radii and times."""
    from .symbol import assemble_symbol, matrix_exp_oracle

    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    worst = 0.0
    where = None
    for r in np.asarray(radii, dtype=float):
        a = assemble_symbol(params, r * d)
        for t in np.asarray(times, dtype=float):
            err = float(np.abs(green_matrix(params, r * d, t) - matrix_exp_oracle(a, t)).max())
            if err > worst:
                worst, where = err, (float(r), float(t))
    return worst, where


def acceptance_oracle_grid(params: FluidParams, count: int = 20):
    """Log grid in ``|xi|`` on [1e-2, 10], times on [0, 20], plus 5 radii near ``r_deg``."""
    radii = np.geomspace(1e-2, 10.0, count)
    times = np.concatenate([[0.0], np.geomspace(1e-2, 20.0, count - 1)])
    r_deg = degenerate_radius(params)
    near = r_deg + np.array([-1e-3, -1e-5, 0.0, 1e-5, 1e-3]) * 0.9
    return np.concatenate([radii, near]), times
