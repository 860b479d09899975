import math

import numpy as np
import pytest

from nsplab.green import green_matrix
from nsplab.nonlinear import (
    GridSpec,
    InstabilityError,
    LinearPropagator,
    MeanDensityError,
    SimState,
    StepperConfig,
    VacuumError,
    conjugate_asymmetry,
    default_initial,
    discrete_mass,
    energy_diagnostic,
    etd_step,
    nonlinear_rhs,
    poisson_solve,
    pressure,
    run_simulation,
)
from nsplab.symbol import FluidParams

CANON = FluidParams()
BOX = GridSpec(L=2 * math.pi, N=16)


def _state(grid, n, m, t=0.0):
    return SimState(grid.fft(n) * grid.dealias_mask(), grid.fft(m) * grid.dealias_mask(), t)


def test_grid_validation():
    for n in (2, 12, 256):
        with pytest.raises(ValueError):
            GridSpec(N=n)
    with pytest.raises(ValueError):
        GridSpec(L=-1.0)
    with pytest.raises(ValueError):
        StepperConfig(dt=0.0)
    with pytest.raises(ValueError):
        StepperConfig(scheme="RK4")


def test_poisson_single_mode():
    x, y, z = BOX.coordinates()
    n = np.cos(2 * x) + 0 * y + 0 * z
    phi_hat, e_hat = poisson_solve(BOX.fft(n), BOX, FluidParams(debye=0.5))
    phi = BOX.ifft(phi_hat).real
    e = BOX.ifft(e_hat).real
    kappa = 4.0
    assert np.abs(phi - kappa * n / 4).max() < 1e-13
    assert np.abs(e[0] + kappa * np.sin(2 * x) / 2).max() < 1e-13
    assert np.abs(e[1]).max() < 1e-15 and np.abs(e[2]).max() < 1e-15


def test_poisson_rejects_mean():
    n_hat = np.zeros((16, 16, 16), dtype=complex)
    n_hat[0, 0, 0] = 1.0
    with pytest.raises(MeanDensityError):
        poisson_solve(n_hat, BOX, CANON)


def test_pressure_remainder_quadratic_for_gamma_two():
    p = FluidParams(gamma=2.0, sound_speed=1.5)
    n = np.linspace(-0.5, 0.5, 11)
    rem = pressure(p, 1 + n) - pressure(p, 1.0) - p.c2 * n
    assert np.abs(rem - p.c2 * n * n / 2).max() < 1e-15


def test_convection_matches_direct_convolution():
    grid = GridSpec(L=5.0, N=8)
    rng = np.random.default_rng(3)
    mask = grid.dealias_mask()
    m_hat = grid.fft(rng.standard_normal((3, 8, 8, 8))) * mask
    state = SimState(np.zeros((8, 8, 8), dtype=complex), m_hat)
    got = nonlinear_rhs(state, FluidParams(poisson_enabled=False), grid)

    idx = grid.index().astype(int)
    kept = [(a, b, c) for a in idx for b in idx for c in idx
            if mask[a % 8, b % 8, c % 8]]
    want = np.zeros_like(got)
    for k in kept:
        flux = np.zeros((3, 3), dtype=complex)
        for p in kept:
            q = tuple(k[i] - p[i] for i in range(3))
            if not mask[q[0] % 8, q[1] % 8, q[2] % 8] or max(abs(v) for v in q) > 4:
                continue
            mp = m_hat[:, p[0] % 8, p[1] % 8, p[2] % 8]
            mq = m_hat[:, q[0] % 8, q[1] % 8, q[2] % 8]
            flux += np.outer(mp, mq) / 8 ** 3
        kv = grid.dk * np.array(k)
        want[:, k[0] % 8, k[1] % 8, k[2] % 8] = -1j * flux @ kv
    assert np.abs(got - want).max() <= 1e-12 * np.abs(want).max()


def test_rhs_is_dealiased():
    grid = GridSpec(L=10.0, N=16)
    state = default_initial(grid, 0.1)
    q = nonlinear_rhs(state, CANON, grid)
    assert np.all(q[:, ~grid.dealias_mask()] == 0)
    noisy = state.copy()
    noisy.n_hat[7, 0, 0] = 5.0
    assert np.array_equal(nonlinear_rhs(noisy, CANON, grid), q)


def test_linear_step_matches_kernel():
    grid = GridSpec(L=20.0, N=16)
    rng = np.random.default_rng(0)
    state = _state(grid, rng.standard_normal((16, 16, 16)), rng.standard_normal((3, 16, 16, 16)))
    state.n_hat[0, 0, 0] = 0.0
    dt = 0.4
    out = etd_step(state, CANON, grid, dt, nonlinear=False)
    kx, ky, kz = grid.wavevectors()
    worst = 0.0
    for idx in [(1, 0, 0), (2, 3, 0), (5, -4, 1), (0, 0, 5)]:
        xi = np.array([kx[idx[0], 0, 0], ky[0, idx[1], 0], kz[0, 0, idx[2]]])
        g = green_matrix(CANON, xi, dt)
        u0 = np.concatenate([[state.n_hat[idx]], state.m_hat[(slice(None),) + idx]])
        u1 = np.concatenate([[out.n_hat[idx]], out.m_hat[(slice(None),) + idx]])
        worst = max(worst, np.abs(g @ u0 - u1).max() / np.abs(u0).max())
    assert worst <= 1e-10


def test_linear_evolution_independent_of_dt():
    grid = GridSpec(L=20.0, N=16)
    state = default_initial(grid, 1.0)
    results = []
    for dt in (0.05, 0.25):
        st = state
        prop = LinearPropagator(grid, CANON, dt)
        for _ in range(int(round(1.0 / dt))):
            st = etd_step(st, CANON, grid, dt, propagator=prop, nonlinear=False)
        results.append(st)
    assert np.abs(results[0].n_hat - results[1].n_hat).max() < 1e-10 * np.abs(state.n_hat).max()
    assert np.abs(results[0].m_hat - results[1].m_hat).max() < 1e-10 * np.abs(state.m_hat).max()


def test_propagator_dt_mismatch():
    grid = GridSpec(L=20.0, N=8)
    with pytest.raises(ValueError):
        etd_step(default_initial(grid, 1e-3), CANON, grid, 0.1,
                 propagator=LinearPropagator(grid, CANON, 0.2))


class Manufactured:
    """Smooth exact solution kept on the retained modes; momentum forcing closes it."""

    amp = 0.1

    def __init__(self, grid, params):
        self.grid, self.params = grid, params
        self.x, self.y, self.z = grid.coordinates()
        kx, ky, kz = grid.wavevectors()
        self.k = np.stack(np.broadcast_arrays(kx, ky, kz))
        k2 = grid.k_squared()
        self.r = np.sqrt(np.where(k2 == 0, 1.0, k2))
        self.khat = self.k / self.r
        self.khat[:, k2 == 0] = 0.0
        self.k2 = k2

    def fields(self, t):
        a, x, z = self.amp, self.x, self.z
        zero = 0 * self.y
        n = a * np.sin(x) * math.sin(t) + zero + 0 * z
        m = np.stack([a * np.cos(x) * math.cos(t) + zero + 0 * z,
                      a * np.sin(z) * math.cos(t) + zero + 0 * x,
                      zero + 0 * x + 0 * z])
        dm = np.stack([-a * np.cos(x) * math.sin(t) + zero + 0 * z,
                       -a * np.sin(z) * math.sin(t) + zero + 0 * x,
                       zero + 0 * x + 0 * z])
        return n, m, dm

    def state(self, t):
        n, m, _ = self.fields(t)
        return _state(self.grid, n, m, t)

    def forcing(self, t):
        p, g = self.params, self.grid
        st = self.state(t)
        _, _, dm = self.fields(t)
        q = np.sum(self.khat * st.m_hat, axis=0)
        m_t = st.m_hat - self.khat * q
        s = p.c2 + p.kappa / (self.r * self.r)
        lin = self.khat * (-1j * self.r * s * st.n_hat - p.theta_full * self.k2 * q) \
            - p.mu * self.k2 * m_t
        return g.fft(dm) * g.dealias_mask() - lin - nonlinear_rhs(st, p, g)


def _manufactured_error(scheme, dt, t_end=1.0):
    mf = Manufactured(BOX, CANON)
    st = mf.state(0.0)
    prop = LinearPropagator(BOX, CANON, dt)
    steps = int(round(t_end / dt))
    for j in range(steps):
        st = etd_step(st, CANON, BOX, dt, scheme, prop, forcing=mf.forcing)
        st.t = (j + 1) * dt
    ref = mf.state(t_end)
    return math.sqrt(BOX.integral_sq(st.n_hat - ref.n_hat) + BOX.integral_sq(st.m_hat - ref.m_hat))


def test_manufactured_solution_is_exact_at_start():
    mf = Manufactured(BOX, CANON)
    n, _, _ = mf.fields(0.7)
    assert np.abs(BOX.ifft(mf.state(0.7).n_hat).real - n).max() < 1e-15


def test_etd2_second_order():
    errs = [_manufactured_error("ETD2", dt) for dt in (0.1, 0.05, 0.025)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(1.8 <= o <= 2.2 for o in orders), orders


def test_etd1_first_order():
    errs = [_manufactured_error("ETD1", dt) for dt in (0.05, 0.025)]
    assert 0.8 <= math.log2(errs[0] / errs[1]) <= 1.2


@pytest.fixture(scope="module")
def short_run():
    grid = GridSpec(L=20.0, N=16)
    return grid, run_simulation(grid, CANON, StepperConfig(dt=0.1, t_end=3.0, snapshot_stride=5),
                                epsilon=1e-2)


def test_mass_conserved(short_run):
    _, res = short_run
    assert np.abs(res.mass).max() <= 1e-12


def test_fields_remain_real(short_run):
    _, res = short_run
    assert res.max_asymmetry <= 1e-10 * np.abs(res.final.m_hat).max()


def test_energy_nonincreasing(short_run):
    _, res = short_run
    assert np.all(np.diff(res.energy) <= 1e-12 * res.energy[0])
    assert res.t[-1] == pytest.approx(3.0)
    assert len(res.rows()) == res.t.size


def test_zero_data_stays_zero():
    grid = GridSpec(L=20.0, N=8)
    res = run_simulation(grid, CANON, StepperConfig(dt=0.1, t_end=0.5), epsilon=0.0)
    assert np.all(res.final.n_hat == 0) and np.all(res.final.m_hat == 0)


def test_nonlinear_deviation_quadratic_in_amplitude():
    grid = GridSpec(L=20.0, N=16)
    stepper = StepperConfig(dt=0.1, t_end=1.0)
    dev = []
    for eps in (2e-2, 1e-2):
        nl = run_simulation(grid, CANON, stepper, epsilon=eps).final
        lin = run_simulation(grid, CANON, stepper, epsilon=eps, nonlinear=False).final
        dev.append(math.sqrt(grid.integral_sq(nl.n_hat - lin.n_hat)
                             + grid.integral_sq(nl.m_hat - lin.m_hat)))
    assert abs(dev[0] / dev[1] - 4.0) <= 0.4


def test_single_transverse_mode_heat_decay():
    grid = GridSpec(L=2 * math.pi, N=16)
    x, y, z = grid.coordinates()
    m = np.zeros((3, 16, 16, 16))
    m[1] = 0.3 * np.cos(2 * x) + 0 * y + 0 * z
    st = _state(grid, np.zeros((16, 16, 16)), m)
    res = run_simulation(grid, CANON, StepperConfig(dt=0.05, t_end=0.5, snapshot_stride=2),
                         initial=st)
    want = res.energy[0] * np.exp(-2 * CANON.mu * 4 * res.t)
    assert np.abs(res.energy / want - 1).max() < 1e-12


def test_vacuum_detected():
    grid = GridSpec(L=2 * math.pi, N=8)
    x, y, z = grid.coordinates()
    deep = _state(grid, -1.5 * np.cos(x) + 0 * y + 0 * z, np.zeros((3, 8, 8, 8)))
    with pytest.raises(VacuumError, match="vacuum/negativity"):
        nonlinear_rhs(deep, CANON, grid)
    shallow = _state(grid, -0.8 * np.cos(x) + 0 * y + 0 * z, np.zeros((3, 8, 8, 8)))
    with pytest.raises((VacuumError, InstabilityError)):
        run_simulation(grid, CANON, StepperConfig(dt=0.01, t_end=0.05), initial=shallow)


def test_energy_and_mass_helpers():
    grid = GridSpec(L=2 * math.pi, N=8)
    x, y, z = grid.coordinates()
    st = _state(grid, np.cos(x) + 0 * y + 0 * z, np.zeros((3, 8, 8, 8)))
    vol = (2 * math.pi) ** 3
    # c^2 |n|^2 + |E|^2/k with E = -k sin(x): both halves of the volume
    assert energy_diagnostic(st, CANON, grid) == pytest.approx(vol / 2 * (CANON.c2 + CANON.kappa))
    assert discrete_mass(st, grid) == pytest.approx(0.0, abs=1e-12)
    assert conjugate_asymmetry(st.n_hat) < 1e-14
