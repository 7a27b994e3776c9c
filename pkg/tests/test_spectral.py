import math

import numpy as np
import pytest
from scipy.integrate import quad

from fracwave.errors import DomainError, GridError, PreconditionError
from fracwave.fraccalc import TimeGrid, TimeSeries, caputo_array, rl_integral_array
from fracwave.mlfunc import ml_one
from fracwave.spectral import (
    BoxDomain,
    InitialData,
    SpaceTimeField,
    change_of_variables,
    gradient,
    laplacian,
    mode_residual,
    mode_solve,
    odd_reflection,
    periodic_odd_extension,
    read_field_binary,
    read_field_csv,
    sine_analyze,
    solve_div_rhs,
    solve_with_ic,
    solve_zero_ic,
    space_axes,
    write_field_binary,
    write_field_csv,
)

UNIT = BoxDomain.unit(1)


class TestDomain:
    def test_eigenvalues_scale_with_length(self):
        lam = BoxDomain((-1.0,), (1.0,)).eigenvalues(3)
        np.testing.assert_allclose(lam, (np.arange(1, 4) * math.pi / 2) ** 2)

    def test_tensor_eigenvalues(self):
        lam = BoxDomain.unit(2, a=2.0).eigenvalues(2)
        assert lam[1, 0] == pytest.approx(2 * 5 * math.pi**2)

    def test_rejects_bad_boxes(self):
        with pytest.raises(DomainError):
            BoxDomain((0.0,), (0.0,))
        with pytest.raises(DomainError):
            BoxDomain((0.0,), (1.0,), a=-1.0)
        with pytest.raises(DomainError):
            BoxDomain((0.0, 0.0), (1.0, 1.0), matrix=[[1.0, 2.0], [2.0, 1.0]])

    def test_general_matrix_needs_rotation(self):
        dom = BoxDomain((0.0, 0.0), (1.0, 1.0), matrix=[[2.0, 0.5], [0.5, 1.0]])
        with pytest.raises(DomainError):
            dom.eigenvalues(2)


class TestAnalyze:
    def test_single_mode(self):
        grid = TimeGrid(0.0, 1.0, 10)
        spec = sine_analyze(lambda t, x: np.sin(math.pi * x) * (1 + t), UNIT, 4, grid)
        np.testing.assert_allclose(spec.mode(1).values, 1 + grid.nodes, atol=1e-13)
        assert np.max(np.abs(spec.coefficients[:, 1:])) < 1e-13

    def test_zero(self):
        grid = TimeGrid(0.0, 1.0, 4)
        assert not np.any(sine_analyze(lambda t, x: 0 * x + 0 * t, UNIT, 5, grid).coefficients)

    def test_parabola_coefficients(self):
        grid = TimeGrid(0.0, 1.0, 2)
        spec = sine_analyze(lambda t, x: x * (1 - x) + 0 * t, UNIT, 6, grid, n_points=4000)
        n = np.arange(1, 7)
        exact = np.where(n % 2 == 1, 8 / (math.pi * n) ** 3, 0.0)
        np.testing.assert_allclose(spec.coefficients[0], exact, atol=1e-8)
        # independent oracle: adaptive quadrature of the sine integral
        for k in (1, 3):
            ref = 2 * quad(lambda x: x * (1 - x) * math.sin(k * math.pi * x), 0, 1)[0]
            assert spec.coefficients[0, k - 1] == pytest.approx(ref, rel=1e-6)

    def test_aliasing_rejected(self):
        with pytest.raises(GridError):
            sine_analyze(lambda t, x: x + t, UNIT, 8, TimeGrid(0.0, 1.0, 2), n_points=8)


class TestModeSolve:
    @pytest.mark.parametrize("alpha", [1.25, 1.5, 1.75])
    def test_constant_forcing(self, alpha):
        lam = 3.0
        grid = TimeGrid(0.0, 2.0, 2000)
        phi = mode_solve(alpha, lam, TimeSeries(grid, np.ones(grid.size)))
        exact = (1 - ml_one(alpha, -lam * grid.nodes**alpha)) / lam
        assert np.max(np.abs(phi.values - exact)) < 1e-8

    def test_zero_forcing(self):
        grid = TimeGrid(0.0, 1.0, 50)
        assert not np.any(mode_solve(1.5, 2.0, TimeSeries(grid, np.zeros(51))).values)

    def test_residual_decreases(self, rng):
        c = rng.normal(size=3)

        def f(t):
            return t**2 * (c[0] + c[1] * np.sin(2 * t) + c[2] * np.cos(5 * t))

        res = []
        for n in (100, 200, 400):
            grid = TimeGrid(0.0, 1.0, n)
            fn = TimeSeries(grid, f(grid.nodes))
            res.append(mode_residual(1.5, 4.0, mode_solve(1.5, 4.0, fn), fn))
        assert res[0] > res[1] > res[2]

    def test_requires_start_at_zero(self):
        with pytest.raises(GridError):
            mode_solve(1.5, 1.0, TimeSeries(TimeGrid(1.0, 2.0, 10), np.ones(11)))


class TestZeroIC:
    @pytest.mark.parametrize("alpha", [1.25, 1.5, 1.75])
    def test_manufactured(self, alpha):
        def f(t, x):
            return (2 * t ** (2 - alpha) / math.gamma(3 - alpha) + math.pi**2 * t**2) * np.sin(math.pi * x)

        grid = TimeGrid.from_step(1.0, 1e-3)
        u = solve_zero_ic(alpha, f, UNIT, 1, grid, n_points=32)
        t, x = np.meshgrid(grid.nodes, u.axes[0], indexing="ij")
        exact = t**2 * np.sin(math.pi * x)
        assert np.max(np.abs(u.values - exact)) / np.max(np.abs(exact)) < 1e-3

    def test_constant_forcing_closed_form(self):
        alpha = 1.5
        grid = TimeGrid(0.0, 1.0, 1000)
        u = solve_zero_ic(alpha, lambda t, x: np.sin(math.pi * x) + 0 * t, UNIT, 3, grid, n_points=32)
        profile = (1 - ml_one(alpha, -math.pi**2 * grid.nodes**alpha)) / math.pi**2
        exact = np.outer(profile, np.sin(math.pi * u.axes[0]))
        assert np.max(np.abs(u.values - exact)) < 1e-9

    def test_zero_forcing(self):
        u = solve_zero_ic(1.5, lambda t, x: 0 * t * x, UNIT, 4, TimeGrid(0.0, 1.0, 20))
        assert not np.any(u.values)

    def test_dirichlet_and_initial_data(self, rng):
        c = rng.normal(size=4)

        def f(t, x):
            return np.exp(t) * (c[0] * x * (1 - x) + c[1] * np.sin(3 * x) * x * (1 - x))

        grid = TimeGrid(0.0, 1.0, 200)
        u = solve_zero_ic(1.5, f, UNIT, 8, grid)
        assert u.boundary_max() == 0.0
        assert np.all(u.values[0] == 0.0)

    def test_linearity(self):
        grid = TimeGrid(0.0, 1.0, 100)
        dom = BoxDomain.unit(2)

        def f1(t, x, y):
            return t * x * (1 - x) * y

        def f2(t, x, y):
            return np.cos(t) * np.sin(2 * x) * y * (1 - y)

        u1 = solve_zero_ic(1.5, f1, dom, 6, grid)
        u2 = solve_zero_ic(1.5, f2, dom, 6, grid)
        u12 = solve_zero_ic(1.5, lambda t, x, y: f1(t, x, y) + f2(t, x, y), dom, 6, grid)
        assert np.max(np.abs(u12.values - u1.values - u2.values)) < 1e-12

    def test_mode_decoupling(self):
        grid = TimeGrid(0.0, 1.0, 100)
        u = solve_zero_ic(1.5, lambda t, x: t * np.sin(2 * math.pi * x), UNIT, 6, grid)
        spec = u.meta["spectrum"]
        others = np.delete(spec, 1, axis=1)
        assert np.max(np.abs(others)) < 1e-10
        assert np.max(np.abs(spec[:, 1])) > 1e-3

    def test_residual_decreases_under_refinement(self):
        alpha = 1.5

        def f(t, x):
            return t**2 * np.sin(math.pi * x) + t**3 * np.sin(2 * math.pi * x)

        res = []
        for n in (50, 100, 200):
            grid = TimeGrid(0.0, 1.0, n)
            u = solve_zero_ic(alpha, f, UNIT, 2, grid, n_points=n)
            t, x = np.meshgrid(grid.nodes, u.axes[0], indexing="ij")
            r = caputo_array(u.values, alpha, grid.dt, check=False) - laplacian(u) - f(t, x)
            res.append(np.max(np.abs(r[2:-2, 1:-1])))
        assert res[0] > res[1] > res[2]


class TestWithIC:
    @pytest.mark.parametrize("alpha", [1.25, 1.5, 1.75])
    def test_eigen_initial_value(self, alpha):
        grid = TimeGrid(0.0, 1.0, 200)
        u = solve_with_ic(alpha, InitialData(u0=lambda x: np.sin(math.pi * x)), UNIT, 4, grid, n_points=32)
        exact = np.outer(ml_one(alpha, -math.pi**2 * grid.nodes**alpha), np.sin(math.pi * u.axes[0]))
        assert np.max(np.abs(u.values - exact)) < 1e-12

    def test_initial_traces(self):
        grid = TimeGrid(0.0, 0.01, 1000)
        u = solve_with_ic(1.5, InitialData(u0=lambda x: np.sin(math.pi * x)), UNIT, 4, grid, n_points=32)
        np.testing.assert_allclose(u.values[0], np.sin(math.pi * u.axes[0]), atol=1e-14)
        v = solve_with_ic(1.5, InitialData(u1=lambda x: np.sin(2 * math.pi * x)), UNIT, 4, grid, n_points=32)
        slope = (v.values[1] - v.values[0]) / grid.dt
        np.testing.assert_allclose(slope, np.sin(2 * math.pi * v.axes[0]), atol=1e-6)

    def test_residual_of_shifted_field(self):
        alpha = 1.5
        res = []
        for n in (50, 100, 200):
            grid = TimeGrid(0.0, 1.0, n)
            u = solve_with_ic(alpha, InitialData(u0=lambda x: np.sin(math.pi * x)), UNIT, 1, grid, n_points=n)
            shifted = u.values - u.values[0]
            r = caputo_array(shifted, alpha, grid.dt, check=False) - laplacian(u)
            res.append(np.max(np.abs(r[2:-2, 1:-1])))
        assert res[0] > res[1] > res[2]

    def test_zero_data_matches_zero_ic(self):
        grid = TimeGrid(0.0, 1.0, 100)

        def f(t, x):
            return t * x * (1 - x)

        a = solve_with_ic(1.5, InitialData(), UNIT, 6, grid, f=f)
        b = solve_zero_ic(1.5, f, UNIT, 6, grid)
        assert np.max(np.abs(a.values - b.values)) < 1e-14

    def test_incompatible_boundary(self):
        with pytest.raises(PreconditionError):
            solve_with_ic(1.5, InitialData(u0=lambda x: 1 + 0 * x), UNIT, 4, TimeGrid(0.0, 1.0, 10))

    def test_near_wave_limit(self):
        # close to alpha = 2 the free mode approaches cos(pi t)
        alpha = 1.99
        grid = TimeGrid(0.0, 1.0, 100)
        u = solve_with_ic(alpha, InitialData(u0=lambda x: np.sin(math.pi * x)), UNIT, 1, grid, n_points=16)
        profile = u.meta["spectrum"][:, 0]
        assert np.max(np.abs(profile - np.cos(math.pi * grid.nodes))) < 0.05


class TestDivergenceForm:
    def test_zero(self):
        u = solve_div_rhs(1.5, [lambda t, x: 0 * t * x], UNIT, 4, TimeGrid(0.0, 1.0, 10))
        assert not np.any(u.values) and u.bc == "none"

    def test_single_mode_derivative(self):
        alpha = 1.5
        grid = TimeGrid(0.0, 1.0, 200)
        h = grid.nodes**2
        u = solve_div_rhs(alpha, [lambda t, x: np.sin(math.pi * x) * t**2], UNIT, 3, grid, n_points=256)
        phi = mode_solve(alpha, math.pi**2, TimeSeries(grid, h)).values
        expected = math.pi * np.outer(phi, np.cos(math.pi * u.axes[0]))
        assert np.max(np.abs(u.values - expected)) < 1e-12
        v = solve_zero_ic(alpha, lambda t, x: np.sin(math.pi * x) * t**2, UNIT, 3, grid, n_points=256)
        fd = gradient(v)[0]
        assert np.max(np.abs(fd - u.values)[:, 1:-1]) < 1e-4 * np.max(np.abs(u.values))

    def test_weak_form(self):
        alpha = 1.5
        T = 1.0
        res = []
        for n in (64, 128):
            grid = TimeGrid(0.0, T, n)

            def g(t, x):
                return t**2 * np.sin(math.pi * x) * (1 + x)

            u = solve_div_rhs(alpha, [g], UNIT, 16, grid, n_points=n)
            t, x = np.meshgrid(grid.nodes, u.axes[0], indexing="ij")
            iu = rl_integral_array(u.values, 2 - alpha, grid.dt)
            du = gradient(u)[0]
            gv = g(t, x)
            worst = 0.0
            # test functions vanish with first derivative at t = T and at x = 0, 1
            for k in range(5):
                phi = (T - t) ** 2 * x * (1 - x) * x**k
                phi_tt = 2 * x * (1 - x) * x**k + 0 * t
                dphi = (T - t) ** 2 * np.gradient(x * (1 - x) * x**k, u.axes[0], axis=1, edge_order=2)
                integrand = iu * phi_tt + du * dphi + gv * dphi
                val = np.trapezoid(np.trapezoid(integrand, u.axes[0], axis=1), grid.nodes)
                worst = max(worst, abs(val))
            res.append(worst)
        assert res[1] < res[0]
        assert res[1] < 1e-2


class TestExtensions:
    def _field(self, n=40):
        grid = TimeGrid(0.0, 1.0, 3)
        x = np.linspace(0.0, 1.0, n + 1)
        vals = np.outer(1 + grid.nodes, np.sin(math.pi * x))
        vals[:, [0, -1]] = 0.0
        return SpaceTimeField(grid, (x,), vals, 1.5)

    def test_odd_reflection(self):
        u = self._field()
        ext = odd_reflection(u)
        x = ext.axes[0]
        np.testing.assert_allclose(ext.values, np.outer(1 + u.grid.nodes, np.sin(math.pi * np.abs(x)) * np.sign(x)),
                                   atol=1e-14)
        assert ext.bc == "reflected"

    def test_odd_reflection_norm_doubles(self):
        u = self._field()
        ext = odd_reflection(u)
        half = np.trapezoid(np.abs(u.values[-1]) ** 3, u.axes[0])
        full = np.trapezoid(np.abs(ext.values[-1]) ** 3, ext.axes[0])
        assert full == pytest.approx(2 * half, rel=1e-12)

    def test_reflection_of_zero(self):
        u = self._field().with_values(np.zeros((4, 41)))
        assert not np.any(odd_reflection(u).values)

    def test_reflection_needs_trace(self):
        u = self._field()
        bad = u.with_values(u.values + 1.0)
        with pytest.raises(PreconditionError):
            odd_reflection(bad)

    def test_periodic_extension(self):
        grid = TimeGrid(0.0, 1.0, 2)
        x = np.linspace(-1.0, 1.0, 41)
        vals = np.outer(np.ones(3), np.sin(math.pi * x))
        vals[:, [0, -1]] = 0.0
        w = SpaceTimeField(grid, (x,), vals, 1.5)
        ext = periodic_odd_extension(w, periods=2)
        xe = ext.axes[0]
        np.testing.assert_allclose(ext.values[0], np.sin(math.pi * xe), atol=1e-12)
        i15 = np.argmin(np.abs(xe - 1.5))
        i05 = np.argmin(np.abs(x - 0.5))
        assert ext.values[0, i15] == pytest.approx(-w.values[0, i05], abs=1e-14)
        step = np.argmin(np.abs(xe - (xe[0] + 4.0)))
        np.testing.assert_allclose(ext.values[0, :-step], ext.values[0, step:], atol=1e-14)

    def test_periodic_extension_needs_trace(self):
        grid = TimeGrid(0.0, 1.0, 2)
        x = np.linspace(-1.0, 1.0, 11)
        w = SpaceTimeField(grid, (x,), np.ones((3, 11)), 1.5)
        with pytest.raises(PreconditionError):
            periodic_odd_extension(w)

    def test_halfline_matches_whole_line(self):
        alpha = 1.5
        grid = TimeGrid(0.0, 1.0, 100)

        def f(t, x):
            return t * (np.sin(math.pi * x) + 0.5 * np.sin(3 * math.pi * x))

        half = solve_zero_ic(alpha, f, UNIT, 4, grid, n_points=32)
        whole = solve_zero_ic(alpha, f, BoxDomain((-1.0,), (1.0,)), 8, grid, n_points=64)
        assert np.max(np.abs(whole.values[:, 32:] - half.values)) < 1e-12


class TestChangeOfVariables:
    def test_identity(self):
        cv = change_of_variables(np.eye(2))
        np.testing.assert_allclose(cv.sqrt, np.eye(2), atol=1e-15)

    def test_diagonal(self):
        cv = change_of_variables(np.diag([4.0, 1.0]), delta=0.25)
        np.testing.assert_allclose(cv.sqrt, np.diag([2.0, 1.0]), atol=1e-14)
        assert cv.ball_inclusion([0.1, 1.0, 3.0])

    def test_random_spd(self, rng):
        for _ in range(10):
            b = rng.normal(size=(3, 3))
            a = b @ b.T + 0.5 * np.eye(3)
            cv = change_of_variables(a)
            assert np.linalg.norm(cv.sqrt @ cv.sqrt - a) <= 1e-10
            assert np.linalg.norm(cv.sqrt @ cv.inv_sqrt - np.eye(3)) <= 1e-10
            assert cv.ball_inclusion([0.5, 2.0])

    def test_pull_back_is_isotropic(self):
        a = np.array([[2.0, 0.5], [0.5, 1.0]])
        cv = change_of_variables(a)
        y = np.array([0.3, -0.2])
        x = cv.to_x(y)
        g = cv.pull_back(lambda t, x1, x2: x1 + 2 * x2)
        assert g(0.0, *y) == pytest.approx(x[0] + 2 * x[1])

    def test_non_spd(self):
        with pytest.raises(DomainError):
            change_of_variables([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(DomainError):
            change_of_variables(np.diag([4.0, 1.0]), delta=0.5)


class TestFieldIO:
    def _field(self):
        grid = TimeGrid(0.0, 0.5, 5)
        axes = space_axes(BoxDomain.unit(2), (3, 4))
        vals = np.random.default_rng(3).normal(size=(6, 4, 5))
        return SpaceTimeField(grid, axes, vals, 1.4, "none")

    def test_csv_roundtrip(self, tmp_path):
        u = self._field()
        path = write_field_csv(u, tmp_path / "field.csv", header_comment="config_sha256=abc")
        lines = path.read_text().splitlines()
        assert lines[0] == "# config_sha256=abc" and lines[1] == "t,x1,x2,value"
        back = read_field_csv(path, 1.4, "none")
        np.testing.assert_array_equal(back.values, u.values)
        np.testing.assert_array_equal(back.axes[1], u.axes[1])

    def test_binary_roundtrip(self, tmp_path):
        u = self._field()
        back = read_field_binary(write_field_binary(u, tmp_path / "field.bin"))
        np.testing.assert_array_equal(back.values, u.values)
        assert back.alpha == 1.4 and back.bc == "none"
        assert back.grid == u.grid

    def test_binary_layout(self, tmp_path):
        u = self._field()
        raw = write_field_binary(u, tmp_path / "f.bin").read_bytes()
        assert raw[:8] == b"FWFIELD1"
        assert int.from_bytes(raw[8:12], "little") == 2
        expected = 8 + 8 + 8 + 28 + 8 * (4 + 5) + 8 * u.values.size
        assert len(raw) == expected

    def test_not_a_dump(self, tmp_path):
        p = tmp_path / "junk.bin"
        p.write_bytes(b"hello world, not a field")
        with pytest.raises(GridError):
            read_field_binary(p)

    def test_field_validation(self):
        grid = TimeGrid(0.0, 1.0, 2)
        with pytest.raises(GridError):
            SpaceTimeField(grid, (np.linspace(0, 1, 5),), np.zeros((3, 4)), 1.5)
        with pytest.raises(DomainError):
            SpaceTimeField(grid, (np.linspace(0, 1, 5),), np.full((3, 5), np.nan), 1.5)

