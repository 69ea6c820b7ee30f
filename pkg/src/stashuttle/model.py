"""Domain types: trap parameters, perturbation functions, shuttling protocols.

Units are strict SI throughout (kg, m, s, rad/s, J); unit conversion happens
only at the CLI boundary.  All types are immutable after construction and all
evaluators are pure, so instances can be shared freely across threads.
"""

from __future__ import annotations

import enum
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline

HBAR = 1.054571817e-34  # J*s

AMPLITUDE_CAP = 0.2       # hard cap on the dimensionless perturbation amplitude
AMPLITUDE_WARN = 0.05     # above this, second-order theory degrades noticeably


@dataclass(frozen=True)
class PhysicalParams:
    """Trap and transport parameters: mass, angular trap frequency, distance, duration.

    Construction is permissive so `validate` can report violations on degenerate
    inputs; numerical routines assume a params object that `validate` accepts.
    """

    mass: float          # kg
    omega0: float        # rad/s, unperturbed angular trap frequency
    distance: float      # m, transport distance
    duration: float      # s, transport time
    hbar: float = HBAR   # J*s

    @property
    def energy_quantum(self) -> float:
        """One motional quantum, hbar*omega0, in joules."""
        return self.hbar * self.omega0

    def to_quanta(self, energy_joules: float) -> float:
        return energy_joules / self.energy_quantum


class PerturbationKind(enum.Enum):
    FREQUENCY_SINE = "frequency_sine"
    FREQUENCY_SUM = "frequency_sum"
    FREQUENCY_TABULATED = "frequency_tabulated"
    POSITION_SINE = "position_sine"
    POSITION_TABULATED = "position_tabulated"


_FREQUENCY_KINDS = {
    PerturbationKind.FREQUENCY_SINE,
    PerturbationKind.FREQUENCY_SUM,
    PerturbationKind.FREQUENCY_TABULATED,
}


@dataclass(frozen=True)
class Perturbation:
    """Dimensionless perturbation of the trap frequency or the trap position.

    Frequency kinds describe f(t) in Omega(t) = Omega0*(1 + amplitude*f(t));
    position kinds describe h(t) in Q(t) = Q0(t) + amplitude*d*h(t).
    `components` holds (angular frequency rad/s, phase rad, weight) triples for
    the sine kinds; tabulated kinds carry uniform samples over [0, duration].
    """

    kind: PerturbationKind
    amplitude: float
    components: tuple[tuple[float, float, float], ...] = ()
    samples: tuple[float, ...] = ()
    duration: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.amplitude <= AMPLITUDE_CAP:
            raise ValueError(
                f"perturbation amplitude {self.amplitude} outside [0, {AMPLITUDE_CAP}]; "
                "second-order theory is meaningless beyond a few percent")
        if self.amplitude > AMPLITUDE_WARN:
            warnings.warn(
                f"amplitude {self.amplitude} > {AMPLITUDE_WARN}: perturbative accuracy degraded",
                stacklevel=3)
        if self.kind is PerturbationKind.FREQUENCY_SINE:
            if len(self.components) != 1 or self.components[0][1] != 0.0 \
                    or self.components[0][2] != 1.0:
                raise ValueError("frequency_sine takes exactly one component, phase 0, weight 1")
        if self.kind in (PerturbationKind.FREQUENCY_TABULATED,
                         PerturbationKind.POSITION_TABULATED):
            if len(self.samples) < 2:
                raise ValueError("tabulated perturbation needs at least 2 samples")
            if self.duration is None or self.duration <= 0:
                raise ValueError("tabulated perturbation needs a positive duration")

    # -- constructors -------------------------------------------------------

    @classmethod
    def frequency_sine(cls, omega: float, amplitude: float) -> "Perturbation":
        return cls(PerturbationKind.FREQUENCY_SINE, amplitude, ((omega, 0.0, 1.0),))

    @classmethod
    def frequency_sum(cls, components, amplitude: float) -> "Perturbation":
        return cls(PerturbationKind.FREQUENCY_SUM, amplitude,
                   tuple((float(w), float(p), float(c)) for w, p, c in components))

    @classmethod
    def frequency_tabulated(cls, samples, amplitude: float, duration: float) -> "Perturbation":
        return cls(PerturbationKind.FREQUENCY_TABULATED, amplitude, (),
                   tuple(float(v) for v in samples), duration)

    @classmethod
    def position_sine(cls, omega: float, amplitude: float) -> "Perturbation":
        return cls(PerturbationKind.POSITION_SINE, amplitude, ((omega, 0.0, 1.0),))

    @classmethod
    def position_tabulated(cls, samples, amplitude: float, duration: float) -> "Perturbation":
        return cls(PerturbationKind.POSITION_TABULATED, amplitude, (),
                   tuple(float(v) for v in samples), duration)

    @property
    def is_frequency(self) -> bool:
        return self.kind in _FREQUENCY_KINDS

    @property
    def is_position(self) -> bool:
        return not self.is_frequency


def eval_perturbation(pert: Perturbation, t):
    """Evaluate f(t) (frequency kinds) or h(t) (position kinds); pure and vectorized."""
    t = np.asarray(t, dtype=float)
    if pert.kind in (PerturbationKind.FREQUENCY_TABULATED,
                     PerturbationKind.POSITION_TABULATED):
        T = pert.duration
        slack = 1e-12 * T
        if np.any(t < -slack) or np.any(t > T + slack):
            raise ValueError(f"tabulated perturbation defined on [0, {T}]; got t outside range")
        grid = np.linspace(0.0, T, len(pert.samples))
        out = np.interp(np.clip(t, 0.0, T), grid, np.asarray(pert.samples))
    else:
        out = np.zeros_like(t)
        for omega, phase, weight in pert.components:
            out = out + weight * np.sin(omega * t + phase)
    return out if out.ndim else float(out)


# -- validation ------------------------------------------------------------

@dataclass(frozen=True)
class ValidationIssue:
    severity: str   # "error" | "warning"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    @property
    def warnings(self) -> tuple[ValidationIssue, ...]:
        return tuple(i for i in self.issues if i.severity == "warning")

    @property
    def errors(self) -> tuple[ValidationIssue, ...]:
        return tuple(i for i in self.issues if i.severity == "error")


def validate(params: PhysicalParams, pert: Perturbation | None = None) -> ValidationReport:
    """Collect every invariant violation instead of raising on the first one."""
    issues: list[ValidationIssue] = []

    def err(msg):
        issues.append(ValidationIssue("error", msg))

    def warn(msg):
        issues.append(ValidationIssue("warning", msg))

    for name in ("mass", "omega0", "distance", "duration"):
        value = getattr(params, name)
        if not np.isfinite(value) or value <= 0:
            err(f"{name} > 0 violated (got {value})")
    product = params.omega0 * params.duration
    if not np.isfinite(product) or product == 0:
        err(f"omega0*duration must be finite and nonzero (got {product})")

    if pert is not None:
        if pert.amplitude > AMPLITUDE_WARN:
            warn(f"amplitude {pert.amplitude} > {AMPLITUDE_WARN}: perturbative accuracy degraded")
        if pert.duration is not None and np.isfinite(params.duration) \
                and abs(pert.duration - params.duration) > 1e-12 * params.duration:
            err("tabulated perturbation duration does not match params.duration")
    return ValidationReport(tuple(issues))


# -- shuttling protocols ----------------------------------------------------

class ProtocolKind(enum.Enum):
    POLYNOMIAL5 = "polynomial5"
    FOURIER_SINE = "fourier_sine"
    AUX_FUNCTION = "aux_function"
    OCT_EXTREMAL = "oct_extremal"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class BoundaryReport:
    position_start: float
    velocity_start: float
    acceleration_start: float
    position_end: float      # q(T) - d
    velocity_end: float
    acceleration_end: float
    ok: bool


class Protocol(ABC):
    """Ideal classical trajectory q(t) carried through the transport.

    Subclasses provide position/velocity/acceleration evaluators valid on
    [0, duration], vectorized over numpy arrays.
    """

    kind: ProtocolKind

    def __init__(self, params: PhysicalParams):
        self.params = params

    @abstractmethod
    def position(self, t):
        ...

    @abstractmethod
    def velocity(self, t):
        ...

    @abstractmethod
    def acceleration(self, t):
        ...

    def boundary_report(self, rtol: float = 1e-10) -> BoundaryReport:
        """Residuals of the six transport boundary conditions, scaled checks included."""
        p = self.params
        d, T = p.distance, p.duration
        res = (float(self.position(0.0)), float(self.velocity(0.0)),
               float(self.acceleration(0.0)),
               float(self.position(T)) - d, float(self.velocity(T)),
               float(self.acceleration(T)))
        scales = (d, d / T, d / T**2, d, d / T, d / T**2)
        checks = [abs(r) <= rtol * s for r, s in zip(res, scales)]
        if self.kind is ProtocolKind.OCT_EXTREMAL:
            # extremal controls jump at the endpoints; acceleration is exempt
            checks[2] = checks[5] = True
        return BoundaryReport(*res, ok=all(checks))

    @property
    def endpoint_compliant(self) -> bool:
        return self.boundary_report().ok


class Polynomial5(Protocol):
    """Lowest-order polynomial satisfying all six rest-to-rest boundary conditions."""

    kind = ProtocolKind.POLYNOMIAL5

    def position(self, t):
        s = np.asarray(t, dtype=float) / self.params.duration
        return self.params.distance * (10 * s**3 - 15 * s**4 + 6 * s**5)

    def velocity(self, t):
        p = self.params
        s = np.asarray(t, dtype=float) / p.duration
        return p.distance / p.duration * (30 * s**2 - 60 * s**3 + 30 * s**4)

    def acceleration(self, t):
        p = self.params
        s = np.asarray(t, dtype=float) / p.duration
        return p.distance / p.duration**2 * (60 * s - 180 * s**2 + 120 * s**3)


class FourierSineProtocol(Protocol):
    """Trajectory whose acceleration is a finite sine series over the transport window.

    With acceleration sum_j a_j sin(j*pi*t/T), position and velocity follow by
    integration from rest at t=0; the endpoint conditions at t=T hold iff the
    coefficients satisfy the two linear endpoint constraints.
    """

    kind = ProtocolKind.FOURIER_SINE

    def __init__(self, params: PhysicalParams, coefficients):
        super().__init__(params)
        self.coefficients = np.asarray(coefficients, dtype=float)
        if self.coefficients.size == 0:
            raise ValueError("need at least one coefficient")
        self._j = np.arange(1, self.coefficients.size + 1)

    def acceleration(self, t):
        T = self.params.duration
        t = np.asarray(t, dtype=float)
        arg = np.multiply.outer(self._j * np.pi / T, t)
        return np.tensordot(self.coefficients, np.sin(arg), axes=1)

    def velocity(self, t):
        T = self.params.duration
        t = np.asarray(t, dtype=float)
        arg = np.multiply.outer(self._j * np.pi / T, t)
        coef = self.coefficients * T / (self._j * np.pi)
        return np.tensordot(coef, 1.0 - np.cos(arg), axes=1)

    def position(self, t):
        T = self.params.duration
        t = np.asarray(t, dtype=float)
        jpi = self._j * np.pi
        arg = np.multiply.outer(jpi / T, t)
        coef = self.coefficients * T / jpi**2
        terms = np.multiply.outer(jpi, t) - T * np.sin(arg)
        return np.tensordot(coef, terms, axes=1)


class PolynomialTrajectory(Protocol):
    """Polynomial trajectory in the centered reduced time v = t/T - 1/2.

    The centered basis keeps coefficient magnitudes small for the high-degree
    polynomials produced by the auxiliary-function designer, so the endpoint
    conditions survive in floating point.  `accel_poly` is dimensionless;
    q''(t) = amplitude * accel_poly(v).
    """

    def __init__(self, params: PhysicalParams, accel_poly: Polynomial,
                 amplitude: float, kind: ProtocolKind = ProtocolKind.AUX_FUNCTION):
        super().__init__(params)
        self.kind = kind
        self._accel = accel_poly
        vel = accel_poly.integ()
        self._vel = vel - vel(-0.5)
        pos = self._vel.integ()
        self._pos = pos - pos(-0.5)
        self.amplitude = amplitude

    def _v(self, t):
        return np.asarray(t, dtype=float) / self.params.duration - 0.5

    def position(self, t):
        return self.amplitude * self.params.duration**2 * self._pos(self._v(t))

    def velocity(self, t):
        return self.amplitude * self.params.duration * self._vel(self._v(t))

    def acceleration(self, t):
        return self.amplitude * self._accel(self._v(t))


class TabulatedProtocol(Protocol):
    """Cubic-spline trajectory through uniform position samples on [0, T]."""

    kind = ProtocolKind.TABULATED

    def __init__(self, params: PhysicalParams, positions):
        super().__init__(params)
        positions = np.asarray(positions, dtype=float)
        if positions.size < 4:
            raise ValueError("tabulated protocol needs at least 4 samples")
        times = np.linspace(0.0, params.duration, positions.size)
        self._spline = CubicSpline(times, positions)
        self._dspline = self._spline.derivative()
        self._ddspline = self._dspline.derivative()

    def position(self, t):
        return self._spline(np.asarray(t, dtype=float))

    def velocity(self, t):
        return self._dspline(np.asarray(t, dtype=float))

    def acceleration(self, t):
        return self._ddspline(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class EnergyQuanta:
    """Energy in units of hbar*omega0 for a transport starting in eigenstate `level`."""

    value: float
    level: int = 0
