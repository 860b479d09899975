"""Decay-rate experiments driven by the exact linear semigroup.

Radial initial data ``n0(r)``, a longitudinal momentum ``m0 = -i xi g0(r)``
and an optional transverse momentum magnitude ``tau0(r)`` are propagated
with the closed-form kernel.  Norms are computed by Plancherel (L^2) or
by inverse radial transforms (L^4, L^inf), then fitted against
``log(1 + t)``.  Momentum norms of the plasma system oscillate with period
``debye * pi``; fits average each sample over one such block first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats
from scipy.optimize import minimize_scalar

from .green import CutoffSplit, mode_scalars
from .radial import (
    Gaussian,
    GridTooCoarseError,
    QuadratureSpec,
    RadialProfile,
    TruncationError,
    inverse_radial_longitudinal,
    inverse_radial_scalar,
    physical_lp_norm,
    spectral_l2_norm,
)
from .symbol import FluidParams, degenerate_radius, root_pair

FIELDS = ("n", "m", "E")
BLOCK_POINTS = 8
MIN_FIT_SAMPLES = 12
DECAY_EXPONENT = 50.0  # kernel mass below e^-50 is dropped


class PreconditionError(ValueError):
    pass


def _p_label(p) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


@dataclass(frozen=True)
class InitialData:
    """Radial initial data; any entry may be ``None`` (zero)."""

    n0: Callable | None = field(default_factory=lambda: Gaussian(1.0, 1.0))
    m0_long: Callable | None = None
    m0_trans: Callable | None = None
    floor: tuple | None = None

    def components(self):
        return [f for f in (self.n0, self.m0_long, self.m0_trans) if f is not None]


@dataclass(frozen=True)
class ExperimentConfig:
    params: FluidParams = field(default_factory=FluidParams)
    initial: InitialData = field(default_factory=InitialData)
    t_min: float = 1e2
    t_max: float = 1e4
    points_per_two_decades: int = 60
    derivative_orders: tuple = (0,)
    norms: tuple = (("n", 2), ("m", 2), ("E", 2))
    averaging: bool = True
    averaging_window: float = 1.0
    base_panels: int = 24
    points_per_panel: int = 16

    def __post_init__(self):
        if not self.t_min > 0:
            raise ValueError("t_min must be > 0")
        if not self.t_max > self.t_min:
            raise ValueError("t_max must exceed t_min")
        if self.points_per_two_decades < 2:
            raise ValueError("points_per_two_decades must be >= 2")
        if self.averaging_window <= 0:
            raise ValueError("averaging_window must be > 0")
        for k in self.derivative_orders:
            if k < 0:
                raise ValueError("derivative order must be >= 0")
        for fld, p in self.norms:
            if fld not in FIELDS:
                raise ValueError(f"unknown field {fld!r}")
            if not p >= 2:
                raise ValueError("p must be in [2, inf]")
            if not math.isinf(p) and p != 2 and self.initial.m0_trans is not None and fld == "m":
                raise ValueError("transverse momentum is supported for L^2 only")
            if math.isinf(p) and self.initial.m0_trans is not None and fld == "m":
                raise ValueError("transverse momentum is supported for L^2 only")
        if not self.initial.components():
            raise ValueError("initial data is identically zero")
        if self.initial.floor is not None:
            if self.initial.n0 is None:
                raise ValueError("floor certificate needs a density profile")
            c0, r0 = self.initial.floor
            r = np.linspace(r0 / 400.0, r0, 400)
            if np.abs(self.initial.n0(r)).min() < c0:
                raise ValueError(f"|n0| >= {c0} fails on r <= {r0}")

    def time_grid(self) -> np.ndarray:
        decades = math.log10(self.t_max / self.t_min)
        count = max(MIN_FIT_SAMPLES, int(round(self.points_per_two_decades * decades / 2.0)) + 1)
        return np.geomspace(self.t_min, self.t_max, count)

    @property
    def period(self) -> float:
        return self.averaging_window * self.params.debye * math.pi

    def with_params(self, params: FluidParams) -> "ExperimentConfig":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw["params"] = params
        return ExperimentConfig(**kw)


def canonical_config(**overrides) -> ExperimentConfig:
    """mu=1, nu=0, c=1, debye=1, n0 = e^{-r^2}, m0 = 0, floor on r <= 1."""
    init = InitialData(n0=Gaussian(1.0, 1.0), floor=(math.exp(-1.0), 1.0))
    kw = dict(params=FluidParams(), initial=init)
    kw.update(overrides)
    return ExperimentConfig(**kw)


@dataclass
class NormSeries:
    field: str
    p: float
    k: int
    t: np.ndarray
    values: np.ndarray
    block_samples: np.ndarray | None = None
    period: float | None = None

    @property
    def label(self) -> str:
        return f"{self.field}_L{_p_label(self.p)}_k{self.k}"

    def averaged(self) -> np.ndarray:
        if self.block_samples is None:
            raise ValueError("series carries no block samples")
        return self.block_samples.mean(axis=1)

    @classmethod
    def from_function(cls, func: Callable, t, period: float | None = None,
                      field: str = "synthetic", p: float = 2, k: int = 0) -> "NormSeries":
        t = np.asarray(t, dtype=float)
        blocks = None
        if period is not None:
            blocks = func(block_times(t, period))
        return cls(field, p, k, t, func(t), blocks, period)


def block_times(t, period: float) -> np.ndarray:
    """Midpoints of 8 equal sub-intervals of ``[t - period/2, t + period/2]``."""
    offsets = (np.arange(BLOCK_POINTS) + 0.5) / BLOCK_POINTS - 0.5
    return np.asarray(t, dtype=float)[:, None] + period * offsets[None, :]


@dataclass
class DecayFit:
    exponent: float
    intercept: float
    stderr: float
    window: tuple
    period_averaged: bool
    samples_used: int
    max_residual: float
    field: str = ""
    p: float = 2
    k: int = 0

    def as_dict(self) -> dict:
        return {
            "field": self.field, "p": _p_label(self.p), "k": self.k,
            "exponent": self.exponent, "intercept": self.intercept,
            "stderr": self.stderr, "window": list(self.window),
            "period_averaged": self.period_averaged,
            "samples_used": self.samples_used, "max_residual": self.max_residual,
        }


def fit_decay(series: NormSeries, window=None, averaging: bool = True) -> DecayFit:
    """Least-squares slope of ``log(norm)`` against ``log(1 + t)``."""
    t = np.asarray(series.t, dtype=float)
    y = series.averaged() if averaging else np.asarray(series.values, dtype=float)
    lo, hi = window if window is not None else (t.min(), t.max())
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    if sel.sum() < MIN_FIT_SAMPLES:
        raise ValueError(f"need >= {MIN_FIT_SAMPLES} samples in window, got {int(sel.sum())}")
    ys = y[sel]
    if np.any(~(ys > 0)):
        raise ValueError("norms must be positive to fit a power law")
    x = np.log1p(t[sel])
    ly = np.log(ys)
    res = stats.linregress(x, ly)
    resid = ly - (res.intercept + res.slope * x)
    return DecayFit(float(res.slope), float(res.intercept), float(res.stderr),
                    (float(lo), float(hi)), bool(averaging), int(sel.sum()),
                    float(np.abs(resid).max()), series.field, series.p, series.k)


# -- norm evolution ----------------------------------------------------------

def _data_extent(funcs, k_max: int) -> float:
    r = np.linspace(0.0, 200.0, 40001)[1:]
    mag = np.zeros_like(r)
    for f in funcs:
        mag = np.maximum(mag, np.abs(f(r)))
    weighted = mag * r ** (k_max + 2) * np.maximum(1.0, r) ** 2
    top = weighted.max()
    if not top > 0:
        raise ValueError("initial data vanishes")
    above = np.nonzero(weighted > 1e-18 * top)[0]
    return max(1.0, 1.05 * float(r[above[-1]]))


class _Propagator:
    """Evolved spectral profiles of (n, m, E) at a fixed time."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.params = config.params
        init = config.initial
        self.k_max = max(config.derivative_orders)
        self.r_data = _data_extent(init.components(), self.k_max)
        self.theta = min(self.params.theta_half, self.params.mu)
        self.r_deg = degenerate_radius(self.params)
        r = self.r_deg * np.geomspace(1.0, 1e4, 2000)
        lam_slow = root_pair(self.params, r)[2].real
        # slowest decay rate past r_deg; the slow root tends to -c^2/(2mu+nu)
        self.slow_rate = float(min(np.abs(lam_slow).min(),
                                   self.params.c2 / self.params.theta_full,
                                   self.params.mu * self.r_deg ** 2))

    def radius(self, t: float) -> float:
        """Truncation radius: the data extent, or where the kernel drops below e^-50.

        Inside the oscillatory band the kernel is bounded by
        ``exp(-theta r^2 t)``; past the degenerate radius by
        ``exp(-slow_rate t)``, so the shorter radius is safe once both are small.
        """
        r_decay = math.sqrt(DECAY_EXPONENT / (self.theta * max(t, 1e-300)))
        if r_decay < self.r_deg and self.slow_rate * t >= DECAY_EXPONENT:
            return min(self.r_data, r_decay)
        return self.r_data

    def phase_rate(self, t: float, radius: float) -> float:
        """Largest ``t |d Im(lambda)/dr|`` where the evolved data is not negligible."""
        r = np.linspace(0.0, radius, 4001)[1:]
        _, _, lam_hi, _ = root_pair(self.params, r)
        b = np.abs(lam_hi.imag)
        slope = np.abs(np.gradient(b, r))
        weight = np.exp(-self.params.theta_half * r * r * t)
        live = weight > 1e-18
        return float(t * slope[live].max()) if live.any() else 0.0

    def s_extent(self, t: float, radius: float) -> float:
        spread = 8.0 * math.sqrt(1.0 + t) * math.sqrt(
            (self.params.theta_full ** 2 + (self.params.debye * self.params.c2) ** 2)
            / self.theta)
        return 1.5 * self.phase_rate(t, radius) + spread + 12.0

    def spec(self, t: float, s_max: float = 0.0) -> QuadratureSpec:
        radius = self.radius(t)
        rate = self.phase_rate(t, radius) + s_max
        panels = max(self.config.base_panels, int(math.ceil(radius * rate / math.pi)))
        return QuadratureSpec(panels, self.config.points_per_panel, radius)

    def fields(self, r, t):
        """``(n_hat, g, tau)`` with ``m_hat = -i xi g + transverse`` at radii ``r``."""
        init = self.config.initial
        ms = mode_scalars(self.params, r, t, with_coupling=True)
        n_hat = np.zeros(np.shape(r), dtype=complex)
        g = np.zeros(np.shape(r), dtype=complex)
        r2 = np.asarray(r) ** 2
        if init.n0 is not None:
            n0 = init.n0(r)
            n_hat = n_hat + ms.g_nn * n0
            g = g - ms.coupling_mn * n0
        if init.m0_long is not None:
            g0 = init.m0_long(r)
            n_hat = n_hat - r2 * ms.d_quot * g0
            g = g + ms.h_long * g0
        tau = None
        if init.m0_trans is not None:
            tau = ms.e_transverse * init.m0_trans(r)
        return n_hat, g, tau

    def profiles(self, t: float, spec: QuadratureSpec):
        """Spectral magnitude-carrying profiles for each field."""
        radius = spec.radius

        def n_of(r):
            return self.fields(r, t)[0]

        def m_mag(r):
            _, g, tau = self.fields(r, t)
            out = np.abs(g) * np.asarray(r)
            if tau is not None:
                out = np.sqrt(out ** 2 + np.abs(tau) ** 2)
            return out

        def e_mag(r):
            return np.abs(self.fields(r, t)[0]) / np.asarray(r)

        def g_of(r):
            return self.fields(r, t)[1]

        def e_long(r):
            return -self.fields(r, t)[0] / np.asarray(r) ** 2

        out = {}
        for name, func in (("n", n_of), ("m", m_mag), ("E", e_mag),
                           ("m_long", g_of), ("E_long", e_long)):
            prof = RadialProfile.sample(func, spec)
            out[name] = prof
        return out

    def physical(self, fld: str, t: float, spec_l2: QuadratureSpec, powers=(math.inf,)):
        """Physical radial samples ``(s, |f(s)|, A)``.

        Longitudinal fields with ``g ~ r^-2`` at the origin carry a far field
        ``A / s^2``.  The range grows until the samples either decay to
        negligible levels (``A = 0``) or settle onto that far field, whose
        contribution beyond the last sample is then added analytically.
        """
        radius = spec_l2.radius
        s_max = self.s_extent(t, radius)
        for _ in range(8):
            spec = self.spec(t, s_max)
            profs = self.profiles(t, spec)
            count = max(801, int(math.ceil(4.0 * s_max * radius / math.pi)) | 1)
            s = np.linspace(0.0, s_max, count)
            if fld == "n":
                f = inverse_radial_scalar(profs["n"], s)
            elif fld == "m":
                f = inverse_radial_longitudinal(profs["m_long"], s)
            else:
                f = inverse_radial_longitudinal(profs["E_long"], s)
            a = np.abs(f)
            amp = _far_field(s, a, powers)
            if amp is not None:
                return s, a, amp
            s_max *= 2.0
        raise GridTooCoarseError("physical field does not decay within the sampled range")

    def norms_at(self, t: float):
        cfg = self.config
        spec = self.spec(t)
        profs = self.profiles(t, spec)
        out = {}
        phys_cache = {}
        powers = {}
        for fld, p in cfg.norms:
            powers.setdefault(fld, []).append(p)
        for fld, p in cfg.norms:
            for k in cfg.derivative_orders:
                try:
                    if p == 2:
                        val = spectral_l2_norm(profs[fld], weight_power=k)
                    else:
                        if k != 0:
                            raise ValueError("derivatives are supported for L^2 only")
                        if fld not in phys_cache:
                            phys_cache[fld] = self.physical(fld, t, spec, powers[fld])
                        s, a, amp = phys_cache[fld]
                        val = physical_lp_norm(s, a, p)
                        if amp and not math.isinf(p):
                            val = (val ** p + _tail_integral(amp, s[-1], p)) ** (1.0 / p)
                except (TruncationError, GridTooCoarseError) as exc:
                    raise type(exc)(f"t={t:.6g}, field={fld}: {exc}") from exc
                out[(fld, p, k)] = val
        return out


def _far_field(s, a, powers, rtol: float = 1e-6, flat_tol: float = 1e-3):
    """Amplitude ``A`` of an ``A / s^2`` tail beyond the last sample, or ``None``.

    Returns 0 when the tail is negligible for every requested power and
    ``None`` when the samples neither decay enough nor follow ``1/s^2``.
    """
    top = a.max()
    if top == 0:
        return 0.0
    cut = int(0.9 * s.size)
    if np.argmax(a) >= cut:
        return None
    amp = a[cut:] * s[cut:] ** 2
    edge_amp = float(amp[-1])
    negligible = True
    body_scale = float(np.sum(a ** 2 * s * s) * (s[1] - s[0]))
    for p in powers:
        if math.isinf(p):
            continue
        body = float(np.sum(a ** p * s * s) * (s[1] - s[0]))
        if _tail_integral(edge_amp, s[-1], p) > rtol * body:
            negligible = False
    if negligible and body_scale > 0:
        return 0.0
    if np.ptp(amp) <= flat_tol * edge_amp:
        return edge_amp
    return None


def _tail_integral(amp: float, s_end: float, p: float) -> float:
    """``4 pi int_{s_end}^inf (amp / s^2)^p s^2 ds``."""
    return 4.0 * math.pi * amp ** p * s_end ** (3.0 - 2.0 * p) / (2.0 * p - 3.0)


def evolve_norm_series(config: ExperimentConfig, times=None) -> dict:
    """Norm series keyed by ``(field, p, k)``; block samples when averaging is on."""
    prop = _Propagator(config)
    t = config.time_grid() if times is None else np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be >= 0")
    keys = [(f, p, k) for f, p in config.norms for k in config.derivative_orders]
    values = {key: np.empty(t.size) for key in keys}
    blocks = {key: np.empty((t.size, BLOCK_POINTS)) for key in keys} if config.averaging else None
    sample_times = block_times(t, config.period) if config.averaging else None
    for i, ti in enumerate(t):
        point = prop.norms_at(float(ti))
        for key in keys:
            values[key][i] = point[key]
        if config.averaging:
            for j, tj in enumerate(sample_times[i]):
                sub = prop.norms_at(float(max(tj, 0.0)))
                for key in keys:
                    blocks[key][i, j] = sub[key]
    return {
        key: NormSeries(key[0], key[1], key[2], t, values[key],
                        blocks[key] if blocks is not None else None,
                        config.period if config.averaging else None)
        for key in keys
    }


def fit_all(config: ExperimentConfig, series: dict | None = None, window=None) -> list:
    series = evolve_norm_series(config) if series is None else series
    return [fit_decay(s, window, averaging=config.averaging) for s in series.values()]


def compare_ns(config: ExperimentConfig, window=None) -> dict:
    """Fitted exponents with the Poisson coupling on and off, all else equal."""
    on = config.with_params(FluidParams(**{**_param_kwargs(config.params), "poisson_enabled": True}))
    off_params = config.params.without_poisson()
    off = ExperimentConfig(**{**{f: getattr(config, f) for f in config.__dataclass_fields__},
                              "params": off_params, "averaging": False})
    fits_on = fit_all(on, window=window)
    fits_off = fit_all(off, window=window)
    pick = lambda fits, fld: next(f for f in fits if f.field == fld and f.p == 2 and f.k == 0)
    report = {"nsp": fits_on, "ns": fits_off}
    fields = {fld for fld, p in config.norms if p == 2}
    for fld in ("n", "m"):
        if fld in fields:
            report[f"nsp_{fld}_exponent"] = pick(fits_on, fld).exponent
            report[f"ns_{fld}_exponent"] = pick(fits_off, fld).exponent
    return report


def _param_kwargs(params: FluidParams) -> dict:
    return {f: getattr(params, f) for f in params.__dataclass_fields__}


# -- low-frequency kernel scalings -------------------------------------------

KERNEL_PIECES = {
    # name: (radial power a, description)
    "N": (0, "density from density"),
    "N_frak": (1, "density from momentum"),
    "M": (0, "momentum from momentum"),
    "M_frak": (-1, "momentum from density"),
    "L": (-1, "field from density"),
    "L_frak": (0, "field from momentum"),
}


def expected_kernel_slope(piece: str, p: float, alpha: int) -> float:
    a = KERNEL_PIECES[piece][0]
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    return -1.5 * (1.0 - inv_p) - 0.5 * (alpha + a)


def _exact_piece(params: FluidParams, piece: str, r, t):
    ms = mode_scalars(params, r, t)
    if piece == "N":
        return np.abs(ms.g_nn)
    if piece == "N_frak":
        return r * np.abs(ms.d_quot)
    if piece == "M":
        return np.sqrt(2.0 * np.abs(ms.e_transverse) ** 2 + np.abs(ms.h_long) ** 2)
    if piece == "M_frak":
        return r * np.abs(ms.coupling_mn)
    if piece == "L":
        return np.abs(ms.g_nn) / r
    return np.abs(ms.d_quot)


def kernel_lq_norm(params: FluidParams, piece: str, p: float, alpha: int, t: float,
                   mode: str = "model", R_cut: float | None = None) -> float:
    """Spectral ``L^q`` norm, ``1/p + 1/q = 1``, of ``chi |xi|^alpha |piece|``."""
    if piece not in KERNEL_PIECES:
        raise ValueError(f"unknown kernel piece {piece!r}")
    if not p >= 2:
        raise ValueError("p must be in [2, inf]")
    q = 1.0 if math.isinf(p) else p / (p - 1.0)
    r_deg = degenerate_radius(params)
    cut = CutoffSplit(0.5 * r_deg if R_cut is None else R_cut)
    r_top = min(cut.R_cut + 1.0, math.sqrt(DECAY_EXPONENT / (params.theta_half * max(t, 1e-12))))
    spec = QuadratureSpec(64, 16, r_top)
    r, w = spec.rule()
    if mode == "model":
        a = KERNEL_PIECES[piece][0]
        mag = r ** a * np.exp(-params.theta_half * r * r * t)
    elif mode == "exact":
        mag = _exact_piece(params, piece, r, t)
    else:
        raise ValueError("mode must be 'model' or 'exact'")
    integrand = (cut.chi(r) * r ** alpha * mag) ** q * r * r
    return float((4.0 * math.pi * np.sum(w * integrand)) ** (1.0 / q))


def spectral_kernel_lq_slope(params: FluidParams, piece: str, p: float, alpha: int = 0,
                             mode: str = "model", t_min: float = 1e2, t_max: float = 1e4,
                             points: int = 61) -> DecayFit:
    t = np.geomspace(t_min, t_max, points)
    func = np.vectorize(lambda tt: kernel_lq_norm(params, piece, p, alpha, float(tt), mode))
    period = params.debye * math.pi if mode == "exact" else None
    series = NormSeries.from_function(func, t, period, field=piece, p=p, k=alpha)
    return fit_decay(series, averaging=period is not None)


# -- lower-bound machinery ---------------------------------------------------

def lower_bound_radius(params: FluidParams) -> float:
    """Threshold ``sqrt(7 pi) / (c sqrt(debye))``; the truncation R must exceed it."""
    return math.sqrt(7.0 * math.pi) / (params.sound_speed * math.sqrt(params.debye))


def F_min_analytic(params: FluidParams) -> float:
    c, lam, th = params.sound_speed, params.debye, params.theta_full
    pre = (math.sqrt(3.0 * math.pi) - math.sqrt(2.0 * math.pi)) / (2.0 * c * math.sqrt(lam))
    return pre * math.exp(-7.0 * math.pi * th / (4.0 * c * c * lam)) * math.sin(math.pi / 8) ** 2


def F_of_t(params: FluidParams, R: float, t, tol: float = 1e-13):
    """``int_0^R e^{-(2mu+nu) r^2} sin^2(t/debye + debye c^2 r^2 / 2) dr``.

    Composite Gauss-Legendre, doubling panels until two levels agree to ``tol``.
    """
    if not R > 0:
        raise ValueError("R must be > 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    lam, c2, th = params.debye, params.c2, params.theta_full
    panels = 16 + int(math.ceil(R * lam * c2 * R / math.pi))

    def integrate(npan):
        r, w = QuadratureSpec(npan, 16, R).rule()
        phase = t[..., None] / lam + 0.5 * lam * c2 * r * r
        return np.sum(w * np.exp(-th * r * r) * np.sin(phase) ** 2, axis=-1)

    prev = integrate(panels)
    for _ in range(8):
        panels *= 2
        cur = integrate(panels)
        if np.all(np.abs(cur - prev) <= tol * np.maximum(1.0, np.abs(cur))):
            return cur if cur.ndim else float(cur)
        prev = cur
    raise ArithmeticError("F(t) quadrature did not converge")


@dataclass
class LowerBoundReport:
    params: FluidParams
    R: float
    t_samples: np.ndarray
    F_samples: np.ndarray
    F_min_numeric: float
    F_min_analytic: float
    periodicity_defect: float
    ratio_band: tuple
    ratio_t: np.ndarray
    ratio_values: np.ndarray

    @property
    def passed(self) -> bool:
        lo, hi = self.ratio_band
        return (self.F_min_numeric >= self.F_min_analytic
                and self.periodicity_defect <= 1e-8
                and lo > 0 and hi / lo <= 1e2)

    def as_dict(self) -> dict:
        return {
            "R": self.R,
            "F_min_numeric": self.F_min_numeric,
            "F_min_analytic": self.F_min_analytic,
            "F_min_verdict": bool(self.F_min_numeric >= self.F_min_analytic),
            "periodicity_defect": self.periodicity_defect,
            "ratio_band": list(self.ratio_band),
            "passed": self.passed,
        }


def verify_lower_bound(params: FluidParams, R: float, config: ExperimentConfig | None = None,
                       samples: int = 400) -> LowerBoundReport:
    threshold = lower_bound_radius(params)
    if not R > threshold:
        raise PreconditionError(
            f"precondition R > √(7π)/(c√λ) = {threshold:.6g} violated (R = {R:g})")
    if samples < 400:
        raise ValueError("need >= 400 samples of F")
    period = params.debye * math.pi
    t = np.linspace(0.0, 2.0 * period, samples, endpoint=False)
    F = F_of_t(params, R, t)
    i = int(np.argmin(F))
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, samples - 1)]
    refined = minimize_scalar(lambda x: float(F_of_t(params, R, x)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
    F_min = min(float(F[i]), float(refined.fun))
    defect = float(np.abs(F_of_t(params, R, t + period) - F).max())

    if config is None:
        config = canonical_config(params=params, norms=(("m", 2),), averaging=False)
    else:
        config = ExperimentConfig(**{**{f: getattr(config, f) for f in config.__dataclass_fields__},
                                     "params": params, "norms": (("m", 2),),
                                     "derivative_orders": (0,), "averaging": False})
    if config.initial.floor is None:
        raise PreconditionError("lower bound needs a floor certificate |n0| >= c0 on r <= r0")
    series = evolve_norm_series(config)[("m", 2, 0)]
    ratio = series.values * (1.0 + series.t) ** 0.25
    return LowerBoundReport(params, float(R), t, F, F_min, F_min_analytic(params), defect,
                            (float(ratio.min()), float(ratio.max())), series.t, ratio)
