"""
Kronecker and CL projections for catalog systems, and the averages they control

The factor structure of each catalog system is known in closed form:
  Rotation, ProductRotation  discrete spectrum, both projections are the identity
  Doubling                   mixing, both factors are trivial (projection = integral)
  SkewProduct                Kronecker factor is the base rotation (average over y),
                             CL factor is the whole system
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.fft

from .cube_averages import cube3_fast, cube3_naive, cube7_fast
from .dynamics import (
    Observable,
    Point,
    SystemKind,
    SystemSpec,
    default_start_point,
    frac_multiple,
    generate_orbit,
    next_pow2,
    samples_of,
)
from .errors import NoFactorDataError, ParameterError

logger = logging.getLogger(__name__)

Rule = Callable[[Observable], Observable]


class Factor(str, Enum):
    KRONECKER = 'Kronecker'
    CL = 'CL'


def identity_rule(obs: Observable) -> Observable:
    return obs


def integral_rule(obs: Observable) -> Observable:
    """Projection onto the trivial factor: the constant integral"""
    return Observable.constant(obs.integral())


def y_average_rule(obs: Observable) -> Observable:
    """Conditional expectation onto the x coordinate: drop every term with a y-mode"""
    return replace(obs, terms=tuple(t for t in obs.terms if t.l == 0))


class FactorRules(NamedTuple):
    kronecker: Rule
    cl: Rule


@dataclass(frozen=True)
class FactorTable:
    rules: dict = field(
        default_factory=lambda: {
            SystemKind.ROTATION: FactorRules(identity_rule, identity_rule),
            SystemKind.DOUBLING: FactorRules(integral_rule, integral_rule),
            SystemKind.SKEW_PRODUCT: FactorRules(y_average_rule, identity_rule),
            SystemKind.PRODUCT_ROTATION: FactorRules(identity_rule, identity_rule),
        }
    )

    def rule(self, kind: SystemKind, factor: Factor) -> Rule:
        try:
            rules = self.rules[SystemKind(kind)]
        except KeyError:
            raise NoFactorDataError(f"no factor data for {SystemKind(kind).value}") from None
        return rules.kronecker if Factor(factor) is Factor.KRONECKER else rules.cl


FACTOR_TABLE = FactorTable()


def project(system: SystemSpec, obs: Observable, factor: Factor) -> Observable:
    """Symbolic projection of obs onto the Kronecker or CL factor of system"""
    return FACTOR_TABLE.rule(system.kind, factor)(obs)


def eigenfunction_identity_check(f1, f2, theta: float, f3value: complex, N: int) -> tuple[complex, complex]:
    """Cube average with an eigenfunction third term against its factored form

    f3 is the eigenfunction with f3(T^s x0) = f3value e^{2 pi i s theta}, so
    M_N(f1, f2, f3) = f3value (1/N sum f1_n e^{2 pi i n theta}) (1/N sum f2_m e^{2 pi i m theta})
    """
    if not (0.0 <= theta < 1.0):
        raise ParameterError(f"theta must lie in [0, 1), got {theta}")
    a = samples_of(f1, 'f1', N)
    b = samples_of(f2, 'f2', N)
    phases = np.exp(2j * np.pi * frac_multiple(np.arange(2 * N - 1), theta))
    f3 = complex(f3value) * phases
    lhs = cube3_naive(a, b, f3, N)
    rhs = complex(f3value) * (np.sum(a[:N] * phases[:N]) / N) * (np.sum(b[:N] * phases[:N]) / N)
    return lhs, complex(rhs)


def correlation_energy(a: np.ndarray, b: np.ndarray, N: int) -> float:
    """(1/N) sum_{n<N} |(1/N) sum_{m<N} a_m b_{n+m}|^2 through one transform of length >= 3N - 2"""
    return float(correlation_energy_rows(a[None, :N], b[None, : 2 * N - 1], N)[0])


def correlation_energy_rows(a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    size = next_pow2(3 * N - 2)
    fa = scipy.fft.fft(np.conj(a[:, :N]), n=size, axis=1)
    fb = scipy.fft.fft(b[:, : 2 * N - 1], n=size, axis=1)
    # sum_m a_m b_{n+m} at lag n
    lagged = scipy.fft.ifft(fb * np.conj(fa), axis=1)[:, :N] / N
    return np.mean(np.abs(lagged) ** 2, axis=1)


def _orbit_samples(system: SystemSpec, obs: Observable, x0: Point, L: int) -> np.ndarray:
    return generate_orbit(system, obs, x0, L).samples


def eq1_compare(
    system: SystemSpec, obs1: Observable, obs2: Observable, N: int, x0: Point = None
) -> tuple[float, float]:
    """(1/N) sum_n |(1/N) sum_m f1(T^m x) f2(T^(n+m) x)|^2 for raw and Kronecker-projected observables"""
    if x0 is None:
        x0 = default_start_point(system)
    projected = [project(system, obs, Factor.KRONECKER) for obs in (obs1, obs2)]

    def side(first: Observable, second: Observable) -> float:
        a = _orbit_samples(system, first, x0, N)
        b = _orbit_samples(system, second, x0, 2 * N - 1)
        return correlation_energy(a, b, N)

    raw = side(obs1, obs2)
    proj = side(*projected)
    logger.debug(f"eq1 N={N}: raw={raw:.6g} projected={proj:.6g}")
    return raw, proj


def _eq10_side(system: SystemSpec, observables: Sequence[Observable], x0: Point, N: int) -> float:
    L = 3 * N - 2
    f4, f5, f6, f7 = (_orbit_samples(system, obs, x0, L) for obs in observables)
    index = np.arange(N)
    span = np.arange(2 * N - 1)
    # for each p: a_p(m) = f4(m) f6(p+m), b_p(s) = f5(s) f7(p+s)
    a_rows = f4[None, :N] * f6[index[:, None] + index[None, :]]
    b_rows = f5[None, : 2 * N - 1] * f7[index[:, None] + span[None, :]]
    return float(np.mean(correlation_energy_rows(a_rows, b_rows, N)))


def eq10_compare(
    system: SystemSpec,
    obs4: Observable,
    obs5: Observable,
    obs6: Observable,
    obs7: Observable,
    N: int,
    x0: Point = None,
) -> tuple[float, float]:
    """(1/N^2) sum_{n,p} |(1/N) sum_m f4(m) f5(n+m) f6(p+m) f7(p+n+m)|^2 for raw and CL-projected observables"""
    if x0 is None:
        x0 = default_start_point(system)
    raw_obs = (obs4, obs5, obs6, obs7)
    projected = tuple(project(system, obs, Factor.CL) for obs in raw_obs)
    raw = _eq10_side(system, raw_obs, x0, N)
    proj = _eq10_side(system, projected, x0, N)
    logger.debug(f"eq10 N={N}: raw={raw:.6g} projected={proj:.6g}")
    return raw, proj


# cube dimension -> factor that controls the cube average
CHARACTERISTIC_FACTORS = {2: Factor.KRONECKER, 3: Factor.CL}
_CUBE_FAST = {2: cube3_fast, 3: cube7_fast}


def _cube_side(system: SystemSpec, observables: Sequence[Observable], x0: Point, N: int, k: int) -> complex:
    L = k * (N - 1) + 1
    samples = [_orbit_samples(system, obs, x0, L) for obs in observables]
    return complex(_CUBE_FAST[k](*samples, N))


def characteristic_compare(
    system: SystemSpec,
    observables: Sequence[Observable],
    N: int,
    k: int = 2,
    x0: Point = None,
) -> tuple[complex, complex]:
    """Cube average of the raw observables against the average of their factor projections

    k=2 averages three functions and projects onto the Kronecker factor; k=3
    averages seven and projects onto the CL factor. The two values agree in the
    limit N -> infinity.

    Args:
        system: catalog system with factor data
        observables: 2^k - 1 observables, one per cube vertex
        N: horizon
        k: cube dimension, 2 or 3
        x0: start point, the system's default when None

    Returns:
        (raw, projected) cube averages
    """
    if k not in CHARACTERISTIC_FACTORS:
        raise ParameterError(f"characteristic factors are known for k=2 and k=3, got k={k}")
    if len(observables) != 2**k - 1:
        raise ParameterError(f"k={k} needs {2**k - 1} observables, got {len(observables)}")
    if x0 is None:
        x0 = default_start_point(system)
    factor = CHARACTERISTIC_FACTORS[k]
    projected = [project(system, obs, factor) for obs in observables]
    raw = _cube_side(system, observables, x0, N, k)
    proj = _cube_side(system, projected, x0, N, k)
    logger.debug(f"characteristic k={k} N={N}: raw={raw:.6g} projected={proj:.6g}")
    return raw, proj
