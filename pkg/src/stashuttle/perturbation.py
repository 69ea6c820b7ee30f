"""Second-order excitation energy for frequency and position perturbations.

Three equivalent routes are implemented deliberately: the time-integral form
built from the first-order auxiliary solutions, the compact Fourier-transform
forms, and (in `analysis`) the closed form for a plain sinusoid.  Their mutual
agreement is the main internal consistency check of the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (Perturbation, PerturbationKind, PhysicalParams, Protocol,
                    FourierSineProtocol, eval_perturbation)
from .quadrature import (adaptive_quad, oscillation_panels, sine_phase_integral)

RTOL = 1e-10  # relative tolerance of every quadrature in this module


def _as_function(f):
    """Accept either a Perturbation or a plain callable of time."""
    if isinstance(f, Perturbation):
        return (lambda t: eval_perturbation(f, t)), f
    return f, None


@dataclass(frozen=True)
class ExcitationReport:
    """Static/dynamical split of the second-order excitation, in quanta.

    Values are normalized per squared perturbation amplitude unless
    `per_amplitude_sq` is False.
    """

    static_quanta: float
    dynamical_quanta: float
    method: str               # "time_integral" | "fourier" | "closed_form" | "exact_ode"
    order: str = "second"
    per_amplitude_sq: bool = True
    level: int = 0

    @property
    def total_quanta(self) -> float:
        return self.static_quanta + self.dynamical_quanta


class FirstOrderSolution:
    """First-order responses of the width factor and the classical trajectory.

    Evaluators integrate the formal convolution solutions

        rho1(t) = -w0 * int_0^t f(t') sin[2 w0 (t-t')] dt'
        qc1(t)  = (2/w0) * int_0^t f(t') q0''(t') sin[w0 (t-t')] dt'

    (and the cosine kernels for the derivatives) by adaptive Gauss-Legendre
    quadrature at 1e-10 relative tolerance.
    """

    def __init__(self, params: PhysicalParams, proto: Protocol, f):
        self.params = params
        self.proto = proto
        self._f, _ = _as_function(f)

    def _conv(self, t: float, kernel, freq: float, weight) -> float:
        if t == 0.0:
            return 0.0
        f, proto = self._f, self.proto
        panels = oscillation_panels((freq + 2.0 * self.params.omega0) * t)

        def integrand(tp):
            return weight(tp) * kernel(freq * (t - tp))

        return float(np.real(adaptive_quad(integrand, 0.0, t, RTOL, panels)))

    def rho1(self, t: float) -> float:
        w0 = self.params.omega0
        return -w0 * self._conv(t, np.sin, 2.0 * w0, self._f)

    def rho1_dot(self, t: float) -> float:
        w0 = self.params.omega0
        return -2.0 * w0**2 * self._conv(t, np.cos, 2.0 * w0, self._f)

    def _weight_q(self, tp):
        return self._f(tp) * self.proto.acceleration(tp)

    def qc1(self, t: float) -> float:
        w0 = self.params.omega0
        return 2.0 / w0 * self._conv(t, np.sin, w0, self._weight_q)

    def qc1_dot(self, t: float) -> float:
        return 2.0 * self._conv(t, np.cos, self.params.omega0, self._weight_q)


def first_order_freq(params: PhysicalParams, proto: Protocol, f) -> FirstOrderSolution:
    """First-order solution for a trap-frequency perturbation f(t)."""
    return FirstOrderSolution(params, proto, f)


def second_order_energy_freq(params: PhysicalParams, proto: Protocol, f,
                             n: int = 0) -> ExcitationReport:
    """Second-order excitation for Omega(t) = omega0*(1 + amplitude*f(t)).

    Reported per squared amplitude, split into the trajectory-dependent
    (dynamical) and trajectory-independent (static) parts.
    """
    sol = first_order_freq(params, proto, f)
    T = params.duration
    w0, m = params.omega0, params.mass
    fT = float(np.asarray(sol._f(T), dtype=float))
    q1, q1d = sol.qc1(T), sol.qc1_dot(T)
    r1, r1d = sol.rho1(T), sol.rho1_dot(T)
    dyn = 0.5 * m * w0**2 * (q1**2 + (q1d / w0)**2)
    stat = 0.25 * params.hbar * w0 * (2 * n + 1) * ((2.0 * r1 + fT)**2 + (r1d / w0)**2)
    eq = params.energy_quantum
    return ExcitationReport(stat / eq, dyn / eq, method="time_integral", level=n)


def second_order_energy_pos(params: PhysicalParams, proto: Protocol, h,
                            n: int = 0) -> ExcitationReport:
    """Second-order excitation for a trap-position error Q = Q0 + amplitude*d*h(t).

    The width factor is untouched at first order, so the excitation is purely
    static: it does not depend on the ideal trajectory at all (the protocol
    argument is kept for interface symmetry).
    """
    del proto  # position response is protocol-independent
    hf, _ = _as_function(h)
    T, w0, m, d = params.duration, params.omega0, params.mass, params.distance
    panels = oscillation_panels(3.0 * w0 * T)

    def kern_sin(tp):
        return hf(tp) * np.sin(w0 * (T - tp))

    def kern_cos(tp):
        return hf(tp) * np.cos(w0 * (T - tp))

    q1 = d * w0 * float(np.real(adaptive_quad(kern_sin, 0.0, T, RTOL, panels)))
    q1d = d * w0**2 * float(np.real(adaptive_quad(kern_cos, 0.0, T, RTOL, panels)))
    hT = float(np.asarray(hf(T), dtype=float))
    stat = 0.5 * m * w0**2 * ((q1 - d * hT)**2 + (q1d / w0)**2)
    eq = params.energy_quantum
    return ExcitationReport(stat / eq, 0.0, method="time_integral", level=n)


def accel_ft(proto: Protocol, nu: float, rtol: float = RTOL) -> complex:
    """Fourier transform of the protocol acceleration at angular frequency nu.

    Uses the exact antiderivative for sine-series protocols and adaptive
    quadrature otherwise.
    """
    T = proto.params.duration
    if isinstance(proto, FourierSineProtocol):
        total = 0.0 + 0.0j
        for idx, a in enumerate(proto.coefficients, start=1):
            total += a * sine_phase_integral(idx * np.pi / T, 0.0, nu, T)
        return total
    panels = oscillation_panels(abs(nu) * T)

    def integrand(t):
        return proto.acceleration(t) * np.exp(-1j * nu * t)

    return complex(adaptive_quad(integrand, 0.0, T, rtol, panels))


def fourier_dynamical(params: PhysicalParams, proto: Protocol, f) -> float:
    """Dynamical excitation from the acceleration transform, quanta per amplitude^2.

    Evaluates 2*m*|int f(t) q0''(t) exp(-i*w0*t) dt|^2.  Sine-kind
    perturbations split into transforms at omega0 -/+ omega; callables are
    integrated directly.
    """
    fn, pert = _as_function(f)
    T, w0 = params.duration, params.omega0
    if pert is not None and pert.kind in (PerturbationKind.FREQUENCY_SINE,
                                          PerturbationKind.FREQUENCY_SUM):
        total = 0.0 + 0.0j
        for omega, phase, weight in pert.components:
            total += weight * (np.exp(1j * phase) * accel_ft(proto, w0 - omega)
                               - np.exp(-1j * phase) * accel_ft(proto, w0 + omega)) / 2j
    else:
        max_omega = w0 + max((c[0] for c in getattr(pert, "components", ())), default=w0)

        def integrand(t):
            return fn(t) * proto.acceleration(t) * np.exp(-1j * w0 * t)

        total = adaptive_quad(integrand, 0.0, T, RTOL,
                              oscillation_panels(max_omega * T))
    return 2.0 * params.mass * abs(total)**2 / params.energy_quantum


def _transform_of_perturbation(fn, pert, freq: float, T: float) -> complex:
    """int_0^T f(t) exp(-i*freq*t) dt with the closed form for sine kinds."""
    if pert is not None and pert.kind in (PerturbationKind.FREQUENCY_SINE,
                                          PerturbationKind.FREQUENCY_SUM,
                                          PerturbationKind.POSITION_SINE):
        return sum(weight * sine_phase_integral(omega, phase, freq, T)
                   for omega, phase, weight in pert.components)
    panels = oscillation_panels(2.0 * freq * T)

    def integrand(t):
        return fn(t) * np.exp(-1j * freq * t)

    return complex(adaptive_quad(integrand, 0.0, T, RTOL, panels))


def fourier_static_freq(params: PhysicalParams, f, n: int = 0) -> float:
    """Static excitation from the Fourier form at 2*omega0, quanta per amplitude^2.

    Requires no perturbation at the final time (f(T) = 0 within 1e-10); the
    time-integral form in `second_order_energy_freq` stays valid otherwise.
    """
    fn, pert = _as_function(f)
    T, w0 = params.duration, params.omega0
    fT = float(np.asarray(fn(T), dtype=float))
    if abs(fT) > 1e-10:
        raise ValueError(
            f"fourier_static_freq requires f(T)=0 (got {fT:.3e}); "
            "use the time-integral form for nonvanishing endpoint perturbations")
    transform = _transform_of_perturbation(fn, pert, 2.0 * w0, T)
    return w0**2 * (2 * n + 1) * abs(transform)**2


def fourier_static_pos(params: PhysicalParams, h, n: int = 0) -> float:
    """Static excitation of a position error from its transform at omega0."""
    hn, pert = _as_function(h)
    T, w0 = params.duration, params.omega0
    hT = float(np.asarray(hn(T), dtype=float))
    if abs(hT) > 1e-10:
        raise ValueError(f"fourier_static_pos requires h(T)=0 (got {hT:.3e})")
    transform = _transform_of_perturbation(hn, pert, w0, T)
    energy = 0.5 * params.mass * w0**4 * params.distance**2 * abs(transform)**2
    return energy / params.energy_quantum


def eta_ratio(params: PhysicalParams, n: int = 0) -> float:
    """Prefactor ratio of frequency-error to position-error static excitation.

    Much smaller than 1 for trapped-ion parameters, which is why faithful
    trap-position control matters more than frequency control.
    """
    return 2.0 * params.hbar * (2 * n + 1) / (params.mass * params.omega0 * params.distance**2)
