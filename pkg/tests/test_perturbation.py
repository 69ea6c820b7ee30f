import numpy as np
import pytest

from stashuttle import (Perturbation, PhysicalParams, Polynomial5,
                        excess_energy_exact, first_order_freq,
                        static_closed_form, trajectory_from_coeffs)
from stashuttle.perturbation import (eta_ratio, fourier_dynamical,
                                     fourier_static_freq, fourier_static_pos,
                                     second_order_energy_freq,
                                     second_order_energy_pos)

TWO_PI = 2 * np.pi


def endpoint_constrained_coeffs(params, seed, n=6):
    """Random sine-series coefficients satisfying the two endpoint constraints."""
    rng = np.random.default_rng(seed)
    js = np.arange(1, n + 1)
    rows = np.vstack([params.duration**2 / (js * np.pi), (1 - (-1.0) ** js) / js])
    rhs = np.array([params.distance, 0.0])
    free = rng.normal(0.0, params.distance / params.duration**2, n)
    correction, *_ = np.linalg.lstsq(rows, rhs - rows @ free, rcond=None)
    return free + correction


class TestFirstOrder:
    def test_zero_perturbation(self, params):
        sol = first_order_freq(params, Polynomial5(params), lambda t: np.zeros_like(t))
        T = params.duration
        assert sol.rho1(T) == 0.0 == sol.qc1(T)

    def test_initial_conditions(self, params):
        pert = Perturbation.frequency_sine(TWO_PI * 6e6, 0.01)
        sol = first_order_freq(params, Polynomial5(params), pert)
        assert sol.rho1(0.0) == sol.rho1_dot(0.0) == 0.0
        assert sol.qc1(0.0) == sol.qc1_dot(0.0) == 0.0

    def test_constant_perturbation_closed_form(self, params):
        # rho1(t) = -(1 - cos(2 w0 t))/2 for f = 1
        sol = first_order_freq(params, Polynomial5(params),
                               lambda t: np.ones_like(np.asarray(t, dtype=float)))
        w0 = params.omega0
        for t in (0.3e-6, 0.77e-6, 1.9e-6):
            want = -0.5 * (1.0 - np.cos(2 * w0 * t))
            assert sol.rho1(t) == pytest.approx(want, abs=1e-9)

    def test_static_part_matches_closed_form(self, params):
        # endpoint values must reproduce the sinusoid closed form when wT = k*pi
        for k in (7, 18, 31):
            omega = k * np.pi / params.duration
            pert = Perturbation.frequency_sine(omega, 0.01)
            report = second_order_energy_freq(params, Polynomial5(params), pert)
            want = static_closed_form(params, omega)
            assert report.static_quanta == pytest.approx(want, rel=1e-9, abs=1e-15)


class TestSecondOrderFrequency:
    def test_zero_perturbation(self, params):
        report = second_order_energy_freq(params, Polynomial5(params),
                                          lambda t: np.zeros_like(t))
        assert report.static_quanta == 0.0 == report.dynamical_quanta

    def test_resonance_locations_coarse(self, params):
        # dynamical peak near w0, static peak near 2*w0
        proto = Polynomial5(params)
        grid = np.linspace(0.2, 3.8, 120) * params.omega0
        stat, dyn = [], []
        for omega in grid:
            pert = Perturbation.frequency_sine(omega, 0.01)
            r = second_order_energy_freq(params, proto, pert)
            stat.append(r.static_quanta)
            dyn.append(r.dynamical_quanta)
        window = TWO_PI / params.duration
        assert abs(grid[int(np.argmax(dyn))] - params.omega0) < 1.5 * window
        assert abs(grid[int(np.argmax(stat))] - 2 * params.omega0) < 1.5 * window

    def test_commensurate_static_vanishes(self, params):
        # omega*T = 24*pi with omega0*T = 16*pi: even/even vanishing condition
        omega = 24 * np.pi / params.duration
        pert = Perturbation.frequency_sine(omega, 0.01)
        report = second_order_energy_freq(params, Polynomial5(params), pert)
        assert report.static_quanta < 1e-12

    def test_total_is_sum_and_nonnegative(self, params):
        rng = np.random.default_rng(3)
        proto = Polynomial5(params)
        for omega in rng.uniform(0.3, 3.5, 10) * params.omega0:
            r = second_order_energy_freq(params, proto,
                                         Perturbation.frequency_sine(omega, 0.01))
            assert r.static_quanta >= 0.0 and r.dynamical_quanta >= 0.0
            assert r.total_quanta == r.static_quanta + r.dynamical_quanta


class TestSecondOrderPosition:
    def test_zero_perturbation(self, params):
        report = second_order_energy_pos(params, Polynomial5(params),
                                         lambda t: np.zeros_like(t))
        assert report.total_quanta == 0.0

    def test_protocol_independence(self, params):
        pert = Perturbation.position_sine(TWO_PI * 5e6, 0.01)
        base = second_order_energy_pos(params, Polynomial5(params), pert)
        for seed in (0, 1):
            other = trajectory_from_coeffs(params,
                                           endpoint_constrained_coeffs(params, seed))
            r = second_order_energy_pos(params, other, pert)
            assert r.static_quanta == pytest.approx(base.static_quanta, rel=1e-12)

    def test_matches_fourier_form(self, params):
        for k in (9, 24):
            omega = k * np.pi / params.duration
            pert = Perturbation.position_sine(omega, 0.01)
            report = second_order_energy_pos(params, Polynomial5(params), pert)
            want = fourier_static_pos(params, pert)
            assert report.static_quanta == pytest.approx(want, rel=1e-9)

    def test_purely_static(self, params):
        pert = Perturbation.position_sine(TWO_PI * 3e6, 0.01)
        report = second_order_energy_pos(params, Polynomial5(params), pert)
        assert report.dynamical_quanta == 0.0


class TestFourierForms:
    def test_dynamical_zero_perturbation(self, params):
        assert fourier_dynamical(params, Polynomial5(params),
                                 lambda t: np.zeros_like(t)) == 0.0

    def test_dynamical_equals_time_integral(self, params):
        proto = Polynomial5(params)
        rng = np.random.default_rng(11)
        for k in rng.integers(3, 35, 8):
            omega = int(k) * np.pi / params.duration
            pert = Perturbation.frequency_sine(omega, 0.01)
            fd = fourier_dynamical(params, proto, pert)
            ti = second_order_energy_freq(params, proto, pert).dynamical_quanta
            assert abs(fd - ti) <= 1e-9 * max(fd, ti, 1e-15)

    def test_dynamical_callable_route_agrees(self, params):
        # generic quadrature route (raw callable) against the sine-split route
        proto = Polynomial5(params)
        omega = TWO_PI * 5.5e6
        pert = Perturbation.frequency_sine(omega, 0.01)
        direct = fourier_dynamical(params, proto, lambda t: np.sin(omega * t))
        split = fourier_dynamical(params, proto, pert)
        assert direct == pytest.approx(split, rel=1e-9)

    def test_dynamical_suppressed_on_even_commensurate_grid(self, params):
        # on the omega0*T = 8*pi commensurate grid the acceleration transform
        # reduces to its 1/K^3 projections, so grid points away from the
        # |K| = 1 resonance are strongly suppressed (but not exactly zero)
        p = PhysicalParams(params.mass, params.omega0, params.distance, 1e-6)
        omega = 6 * TWO_PI / p.duration  # omega*T = 12*pi -> K = -2 and 10
        off_resonant = fourier_dynamical(p, Polynomial5(p),
                                         Perturbation.frequency_sine(omega, 0.01))
        resonant = fourier_dynamical(p, Polynomial5(p),
                                     Perturbation.frequency_sine(
                                         p.omega0 + TWO_PI / p.duration, 0.01))
        assert off_resonant < 0.02 * resonant

    def test_static_freq_precondition(self, params):
        omega = 10.5 * np.pi / params.duration  # f(T) != 0
        with pytest.raises(ValueError, match="f\\(T\\)=0"):
            fourier_static_freq(params, Perturbation.frequency_sine(omega, 0.01))

    def test_static_freq_matches_closed_form(self, params):
        rng = np.random.default_rng(5)
        for k in rng.integers(1, 40, 12):
            omega = int(k) * np.pi / params.duration
            if abs(omega - 2 * params.omega0) < 0.05 * params.omega0:
                continue
            got = fourier_static_freq(params, Perturbation.frequency_sine(omega, 0.01))
            want = static_closed_form(params, omega)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-18)

    def test_static_freq_parametric_peak(self, params):
        # response at the parametric point dominates its commensurate neighbours
        T = params.duration
        at = lambda k: fourier_static_freq(
            params, Perturbation.frequency_sine(k * np.pi / T, 0.01))
        k_par = round(2 * params.omega0 * T / np.pi)  # 32: omega = 2*w0
        assert at(k_par) > 10 * max(at(k_par - 3), at(k_par + 3))

    def test_static_pos_peak_near_trap_frequency(self, params):
        T = params.duration
        ks = np.arange(2, 40, 2)
        values = [fourier_static_pos(params,
                                     Perturbation.position_sine(k * np.pi / T, 0.01))
                  for k in ks]
        k_best = ks[int(np.argmax(values))]
        assert abs(k_best * np.pi / T - params.omega0) <= 2 * TWO_PI / T


class TestEtaRatio:
    def test_reference_value(self, params):
        # direct arithmetic: 2*hbar/(m*w0*d^2)
        want = 2 * params.hbar / (params.mass * params.omega0 * params.distance**2)
        assert eta_ratio(params) == pytest.approx(want, rel=1e-15)
        assert eta_ratio(params) == pytest.approx(2.31e-8, rel=0.01)

    def test_level_scaling(self, params):
        for n in range(4):
            assert eta_ratio(params, n + 1) / eta_ratio(params, n) == \
                pytest.approx((2 * n + 3) / (2 * n + 1), rel=1e-12)

    def test_distance_scaling(self, params):
        import dataclasses
        doubled = dataclasses.replace(params, distance=2 * params.distance)
        assert eta_ratio(doubled) == pytest.approx(eta_ratio(params) / 4, rel=1e-12)


class TestPerturbativeConsistency:
    def test_residual_shrinks_linearly_in_amplitude(self, params):
        proto = Polynomial5(params)
        for omega in (TWO_PI * 2.6e6, TWO_PI * 5.3e6, TWO_PI * 6.9e6):
            errors = []
            for lam in (1e-3, 3e-3, 1e-2):
                pert = Perturbation.frequency_sine(omega, lam)
                exact = excess_energy_exact(params, proto, pert, n_steps=20000).value
                second = lam**2 * second_order_energy_freq(params, proto, pert).total_quanta
                errors.append(abs(exact - second) / second)
            assert errors[0] < errors[1] < errors[2]
            # roughly linear: scaling by 10 in amplitude moves the residual
            # by 10 within a factor of ~4
            assert errors[2] / errors[0] == pytest.approx(10.0, rel=3.0)
