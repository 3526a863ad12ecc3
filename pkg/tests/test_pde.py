import math

import numpy as np
import pytest
import scipy.integrate as si

from pmelab import (
    ConfigurationError,
    DomainShape,
    EstimationError,
    InitialDatum,
    ProblemParams,
    SolverConfig,
    compute_geometry,
    build_grid,
    estimate_blowup_time,
    integrate,
    make_initial_field,
    run,
    spatial_rhs,
    step,
)
from pmelab.pde import (
    Field,
    Sample,
    SimulationSeries,
    VERDICT_BLOWUP,
    VERDICT_DT_FLOOR,
    VERDICT_GLOBAL,
    _LineStepper,
)


def params(**kw):
    base = dict(a=1.0, b=1.0, c=1.0, k=1.0, m=2.5, p=2.0, q=1.6)
    base.update(kw)
    return ProblemParams(**base)


@pytest.fixture(scope="module")
def ball():
    return compute_geometry(DomainShape.ball(1.0))


@pytest.fixture(scope="module")
def interval():
    return compute_geometry(DomainShape.interval(1.0))


class TestSpatialRhs:
    def test_uniform_field_reduces_to_scalar_ode(self, ball):
        grid = build_grid(ball, 64)
        U = 2.0
        f = Field(grid, np.full(65, U))
        rhs = spatial_rhs(f, params(k=0.0), 0.0)
        vol = float(grid.cell_weights.sum())
        expected = vol * U**2 - U**1.6
        assert np.ptp(rhs) == 0.0  # uniformity is preserved exactly
        assert rhs[0] == pytest.approx(expected, rel=5e-14)

    def test_radial_laplacian_second_order(self, ball):
        p0 = params(a=0.0, b=0.0, c=0.0, k=0.0)
        m = p0.m

        def lap_exact(r):
            u = 1 + r * r
            return 6 * m * u ** (m - 1) + 4 * m * (m - 1) * r * r * u ** (m - 2)

        errs = []
        for res in (64, 128, 256):
            grid = build_grid(ball, res)
            f = Field(grid, 1 + grid.nodes**2)
            rhs = spatial_rhs(f, p0, 0.0)
            errs.append(np.abs(rhs[1:-1] - lap_exact(grid.nodes[1:-1])).max())
        assert math.log2(errs[0] / errs[1]) > 1.9
        assert math.log2(errs[1] / errs[2]) > 1.9

    def test_gradient_damping_term_on_interval(self, interval):
        # u = e^x, a=b=0, k=0, m just above 1: interior rhs ~ Delta u^m - c e^x/4,
        # and |grad sqrt(u)|^2 = u_x^2/(4u) = e^x/4 exactly
        c = 2.0
        p0 = ProblemParams(a=0.0, b=0.0, c=c, k=0.0, m=1.000001, p=2.0, q=2.0)
        errs = []
        for res in (64, 128, 256):
            grid = build_grid(interval, res)
            x = grid.nodes
            f = Field(grid, np.exp(x))
            rhs = spatial_rhs(f, p0, 0.0)
            m = p0.m
            lap = m**2 * np.exp(m * x)[1:-1]  # (e^{mx})'' = m^2 e^{mx}
            expected = lap - c * np.exp(x[1:-1]) / 4.0
            errs.append(np.abs(rhs[1:-1] - expected).max())
        assert errs[-1] < 5e-4
        assert math.log2(errs[0] / errs[2]) > 3.6  # two refinements, order ~2

    def test_rectangle_uniform_field(self):
        geom = compute_geometry(DomainShape.rectangle(1.0, 2.0))
        grid = build_grid(geom, 24)
        U = 1.5
        f = Field(grid, np.full((25, 25), U))
        rhs = spatial_rhs(f, params(k=0.0), 0.0)
        expected = geom.volume * U**2 - U**1.6
        assert np.allclose(rhs, expected, rtol=1e-12)


class TestStep:
    def test_uniform_step_matches_scalar_midpoint(self, ball):
        grid = build_grid(ball, 32)
        U0 = 2.0
        p0 = params(k=0.0)
        cfg = SolverConfig(resolution=32, t_horizon=1.0)
        f0 = Field(grid, np.full(33, U0))
        f1 = step(f0, p0, cfg)
        dt = f1.time
        vol = float(grid.cell_weights.sum())

        def rhs(u):
            return vol * u**2 - u**1.6

        u_mid = U0 + 0.5 * dt * rhs(U0)
        expected = U0 + dt * rhs(u_mid)
        assert np.ptp(f1.values) == 0.0
        assert f1.values[0] == pytest.approx(expected, rel=1e-13)

    def test_dt_scales_with_sup_power(self, ball):
        grid = build_grid(ball, 32)
        p0 = params(a=0.0, b=0.0, c=0.0, k=0.0, m=2.5)
        cfg = SolverConfig(resolution=32, t_horizon=1.0)
        dts = []
        for U in (1.0, 4.0):
            f = step(Field(grid, np.full(33, U)), p0, cfg)
            dts.append(f.time)
        assert dts[0] / dts[1] == pytest.approx(4.0 ** (p0.m - 1.0), rel=1e-12)


class TestInitialData:
    def test_gaussian_projection_meets_compatibility(self, ball):
        grid = build_grid(ball, 128)
        beta = params().blowup_flux_exponent
        datum = InitialDatum(kind="gaussian-bump", amplitude=6.0, width=0.4, offset=0.5)
        field, resid = make_initial_field(datum, grid, 1.0, beta)
        assert resid < datum.compat_tol
        assert field.values.min() > 0

    def test_zero_flux_projection_flattens_boundary(self, ball):
        grid = build_grid(ball, 64)
        datum = InitialDatum(kind="gaussian-bump", amplitude=2.0, width=0.5, offset=0.5)
        field, resid = make_initial_field(datum, grid, 0.0, 0.0)
        assert resid < 1e-8
        h = grid.spacing[0]
        deriv = (3 * field.values[-1] - 4 * field.values[-2] + field.values[-3]) / (2 * h)
        assert abs(deriv) < 1e-8

    def test_interval_both_ends(self, interval):
        grid = build_grid(interval, 64)
        datum = InitialDatum(kind="polynomial-radial", amplitude=1.0, width=2.0, offset=0.5)
        field, resid = make_initial_field(datum, grid, 0.5, 1.2)
        assert resid < datum.compat_tol

    def test_rectangle_projection(self):
        geom = compute_geometry(DomainShape.rectangle(1.0, 1.0))
        grid = build_grid(geom, 48)
        datum = InitialDatum(kind="gaussian-bump", amplitude=2.0, width=0.6, offset=0.4)
        field, resid = make_initial_field(datum, grid, 0.5, 1.2)
        assert resid < datum.compat_tol
        assert field.values.min() > 0

    def test_custom_table_interpolates(self, ball):
        grid = build_grid(ball, 32)
        datum = InitialDatum(kind="custom-table", table=((0.0, 2.0), (1.0, 1.0)),
                             compat_tol=1e-6)
        field, resid = make_initial_field(datum, grid, 0.0, 0.0)
        assert field.values.min() > 0

    def test_nonpositive_datum_rejected(self, ball):
        grid = build_grid(ball, 32)
        # (1 - (r/1)^2)^2 vanishes at the boundary: not strictly positive
        datum = InitialDatum(kind="polynomial-radial", amplitude=1.0, width=1.0, offset=0.0)
        with pytest.raises(ConfigurationError):
            make_initial_field(datum, grid, 0.0, 0.0)


class TestRun:
    def test_mass_conservation_pure_pme(self, ball):
        p0 = ProblemParams(a=0.0, b=0.0, c=0.0, k=0.0, m=2.0, p=2.0, q=2.0)
        grid = build_grid(ball, 64)
        datum = InitialDatum(kind="gaussian-bump", amplitude=2.0, width=0.5, offset=0.5)
        field, _ = make_initial_field(datum, grid, 0.0, 0.0)
        mass0 = integrate(grid, field.values, 1.0)
        stepper = _LineStepper(field, p0, SolverConfig(resolution=64, t_horizon=0.05), 0.0)
        stepper.advance(10**7, 0.05)
        mass1 = float(np.sum(grid.cell_weights * stepper.u))
        assert abs(mass1 - mass0) / mass0 < 1e-8

    def test_uniform_decay_matches_adaptive_oracle(self, ball):
        p0 = ProblemParams(a=1.0, b=1.0, c=1.0, k=0.0, m=1.5, p=2.0, q=3.0)
        cfg = SolverConfig(resolution=64, t_horizon=1.0, output_stride=100)
        series = run(InitialDatum(kind="constant", amplitude=2.0), p0, ball, cfg)
        assert series.verdict == VERDICT_GLOBAL
        vol = float(build_grid(ball, 64).cell_weights.sum())
        sol = si.solve_ivp(
            lambda t, y: [vol * y[0] ** 2 - y[0] ** 3], (0.0, 1.0), [2.0],
            rtol=1e-12, atol=1e-14, dense_output=True, method="DOP853",
        )
        checkpoints = series.samples[1 :: max(1, len(series.samples) // 20)][:20]
        assert len(checkpoints) >= 15
        for s in checkpoints:
            exact = float(sol.sol(s.t)[0])
            assert abs(s.sup_u - exact) / exact < 1e-4

    def test_uniform_blowup_matches_ode_quadrature(self, ball):
        p0 = ProblemParams(a=1.0, b=1.0, c=1.0, k=0.0, m=2.1, p=3.0, q=1.6)
        cfg = SolverConfig(resolution=48, t_horizon=5.0, output_stride=25)
        series = run(InitialDatum(kind="constant", amplitude=5.0), p0, ball, cfg)
        assert series.verdict == VERDICT_BLOWUP
        vol = compute_geometry(DomainShape.ball(1.0)).volume
        t_star, _ = si.quad(
            lambda u: 1.0 / (vol * u**3 - u**1.6), 5.0, math.inf,
            epsabs=1e-14, epsrel=1e-12,
        )
        assert series.t_star_est == pytest.approx(t_star, rel=0.01)

    def test_blowup_run_reports_uncertainty(self, ball):
        p0 = ProblemParams(a=1.0, b=1.0, c=1.0, k=1.0, m=2.1, p=3.0, q=1.6)
        cfg = SolverConfig(resolution=96, t_horizon=10.0, output_stride=25)
        datum = InitialDatum(kind="gaussian-bump", amplitude=6.0, width=0.4, offset=0.5)
        series = run(datum, p0, ball, cfg)
        assert series.verdict == VERDICT_BLOWUP
        assert series.t_star_est >= series.samples[-1].t
        assert series.t_star_uncertainty < 1e-3 * series.t_star_est
        ts = [s.t for s in series.samples]
        assert all(t2 > t1 for t1, t2 in zip(ts, ts[1:]))

    def test_flux_increase_never_delays_blowup(self, ball):
        p0 = dict(a=1.0, b=1.0, c=1.0, m=2.1, p=3.0, q=1.6)
        cfg = SolverConfig(resolution=48, t_horizon=10.0, output_stride=25)
        datum = InitialDatum(kind="gaussian-bump", amplitude=6.0, width=0.4, offset=0.5)
        stars = []
        for k in (0.5, 1.0, 2.0):
            series = run(datum, ProblemParams(k=k, **p0), ball, cfg)
            assert series.verdict == VERDICT_BLOWUP
            stars.append(series.t_star_est)
        assert stars[0] >= stars[1] >= stars[2]

    def test_dt_floor_without_growth_verdict(self, ball):
        # gradient damping dominates a deep dip: the 20% cap collapses dt
        # below the floor before any growth
        p0 = ProblemParams(a=0.0, b=0.0, c=1e12, k=0.0, m=6.0, p=2.0, q=2.0)
        cfg = SolverConfig(resolution=32, t_horizon=1.0, dt_floor=1e-8, output_stride=10)
        datum = InitialDatum(kind="gaussian-bump", amplitude=-0.999e-3, width=0.3,
                             offset=1e-3)
        series = run(datum, p0, ball, cfg)
        assert series.verdict in (VERDICT_DT_FLOOR, "positivity-lost")

    def test_spatial_self_convergence(self, ball):
        p0 = ProblemParams(a=0.0, b=0.0, c=0.0, k=0.0, m=2.0, p=2.0, q=2.0)
        datum = InitialDatum(kind="gaussian-bump", amplitude=2.0, width=0.5, offset=0.5)
        t_end = 0.01
        fields = {}
        for res in (32, 64, 128, 256):
            grid = build_grid(ball, res)
            f0, _ = make_initial_field(datum, grid, 0.0, 0.0)
            st = _LineStepper(f0, p0, SolverConfig(resolution=res, t_horizon=t_end), 0.0)
            status, _ = st.advance(10**8, t_end)
            fields[res] = st.u
        errs = []
        for res in (32, 64, 128):
            stride = 256 // res
            errs.append(np.abs(fields[res] - fields[256][::stride]).max())
        order1 = math.log2(errs[0] / errs[1])
        order2 = math.log2(errs[1] / errs[2])
        assert order1 > 1.9
        assert order2 > 1.7  # last level loses a little sharpness to the reference

    def test_rectangle_smoke_run(self):
        geom = compute_geometry(DomainShape.rectangle(1.0, 1.0))
        p0 = ProblemParams(a=1.0, b=1.0, c=1.0, k=0.0, m=1.5, p=2.0, q=3.0)
        cfg = SolverConfig(resolution=24, t_horizon=0.01, output_stride=20)
        datum = InitialDatum(kind="gaussian-bump", amplitude=1.0, width=0.6, offset=0.5)
        series = run(datum, p0, geom, cfg)
        assert series.verdict == VERDICT_GLOBAL
        assert all(s.phi > 0 and s.psi > 0 for s in series.samples)

    def test_flux_outside_regime_rejected(self, ball):
        p0 = params(m=3.0)  # not covered, k > 0
        cfg = SolverConfig(resolution=32, t_horizon=0.1)
        with pytest.raises(ConfigurationError):
            run(InitialDatum(kind="constant", amplitude=1.0), p0, ball, cfg)


def synthetic_series(ts, phis, verdict=VERDICT_BLOWUP):
    samples = [Sample(t=float(t), sup_u=1.0, phi=float(p), psi=1.0, dt=0.0)
               for t, p in zip(ts, phis)]
    return SimulationSeries(samples=samples, verdict=verdict)


class TestBlowupEstimator:
    def test_exact_power_law(self):
        ts = np.linspace(0.0, 0.499, 240)
        phis = (0.5 - ts) ** (-2.0)
        t_star, unc = estimate_blowup_time(synthetic_series(ts, phis))
        assert abs(t_star - 0.5) < 1e-4
        assert unc < 1e-4

    def test_noisy_power_law(self):
        rng = np.random.default_rng(42)
        ts = np.linspace(0.0, 0.499, 240)
        phis = (0.5 - ts) ** (-2.0) * (1.0 + 0.001 * rng.standard_normal(ts.size))
        t_star, _ = estimate_blowup_time(synthetic_series(ts, phis))
        assert abs(t_star - 0.5) < 1e-3

    def test_bounded_series_rejected(self):
        ts = np.linspace(0.0, 1.0, 50)
        phis = 2e3 + 10.0 * ts  # above the floor but no blow-up signature
        with pytest.raises(EstimationError):
            estimate_blowup_time(synthetic_series(ts, phis))

    def test_insufficient_samples_rejected(self):
        ts = np.linspace(0.0, 1.0, 5)
        phis = np.full(5, 10.0)
        with pytest.raises(EstimationError):
            estimate_blowup_time(synthetic_series(ts, phis))

    def test_wrong_verdict_rejected(self):
        ts = np.linspace(0.0, 0.499, 100)
        phis = (0.5 - ts) ** (-2.0)
        with pytest.raises(EstimationError):
            estimate_blowup_time(synthetic_series(ts, phis, verdict=VERDICT_GLOBAL))
