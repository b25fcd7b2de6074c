"""
Catalog dynamical systems, observables and orbit generation

Every sample sequence used by the averaging and spectral code comes from
generate_orbit: a_n = f(T^n x0) for a catalog system T and a trigonometric
polynomial observable f.
"""

import csv
import io
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, NamedTuple, Optional, Sequence, Union

import numpy as np
import requests

from .errors import (
    EmptyOrbitError,
    InsufficientDataError,
    OrbitLengthError,
    ParameterError,
)

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1

# splitmix64 constants
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULT_1 = 0xBF58476D1CE4E5B9
MIX_MULT_2 = 0x94D049BB133111EB

# Dekker splitter for 53-bit doubles
_SPLITTER = 134217729.0

# Remote sequence download
REQUEST_TIMEOUT_SECONDS = 30.0
MAX_RETRIES = 3
RETRY_BACKOFF_BASE = 2.0


class SystemKind(str, Enum):
    ROTATION = 'Rotation'
    DOUBLING = 'Doubling'
    SKEW_PRODUCT = 'SkewProduct'
    PRODUCT_ROTATION = 'ProductRotation'
    EXTERNAL_SEQUENCE = 'ExternalSequence'

    @property
    def dimension(self) -> int:
        if self in (SystemKind.SKEW_PRODUCT, SystemKind.PRODUCT_ROTATION):
            return 2
        return 1


@dataclass(frozen=True)
class SystemSpec:
    """Catalog entry describing a measure preserving transformation

    Rotation:         x -> x + alpha
    Doubling:         x -> 2x, start point drawn from the seed bit stream
    SkewProduct:      (x, y) -> (x + alpha, x + y)
    ProductRotation:  (x, y) -> (x + alpha, y + theta)
    ExternalSequence: samples read from the CSV at `path`
    """

    kind: SystemKind
    alpha: float = 0.0
    theta: float = 0.0
    seed: int = 0
    path: Optional[str] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kind', SystemKind(self.kind))
        except ValueError:
            raise ParameterError(f"unknown system kind: {self.kind!r}") from None

        for name in ('alpha', 'theta'):
            value = getattr(self, name)
            if not (0.0 <= value < 1.0):
                raise ParameterError(f"{name} must lie in [0, 1), got {value}")
        if not (0 <= int(self.seed) <= MASK64):
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, 'seed', int(self.seed))

        if self.kind is SystemKind.EXTERNAL_SEQUENCE:
            if not self.path:
                raise ParameterError("ExternalSequence requires a path")
            if self.alpha or self.theta:
                raise ParameterError("ExternalSequence carries no dynamical parameters")

    @property
    def dimension(self) -> int:
        return self.kind.dimension

    def to_dict(self) -> dict[str, Any]:
        return {
            'kind': self.kind.value,
            'alpha': self.alpha,
            'theta': self.theta,
            'seed': self.seed,
            'path': self.path,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'SystemSpec':
        return cls(
            kind=data['kind'],
            alpha=float(data.get('alpha', 0.0)),
            theta=float(data.get('theta', 0.0)),
            seed=int(data.get('seed', 0)),
            path=data.get('path'),
        )


class Term(NamedTuple):
    """One character c * e^{2 pi i (k x + l y)}"""

    k: int
    l: int
    c: complex


@dataclass(frozen=True)
class Observable:
    """Finite trigonometric polynomial plus an optional interval indicator in x

    Terms are kept in canonical form (merged, zero coefficients dropped, sorted
    by mode) so that two observables describing the same function compare equal.
    """

    terms: tuple[Term, ...] = ()
    indicator: Optional[tuple[float, float]] = None
    mean_zero: bool = False

    def __post_init__(self):
        merged: dict[tuple[int, int], complex] = {}
        for term in self.terms:
            k, l, c = (int(term[0]), int(term[1]), complex(term[2]))
            merged[(k, l)] = merged.get((k, l), 0j) + c
        canonical = tuple(
            Term(k, l, c) for (k, l), c in sorted(merged.items()) if c != 0
        )
        object.__setattr__(self, 'terms', canonical)

        if self.indicator is not None:
            a, b = (float(self.indicator[0]), float(self.indicator[1]))
            if not (0.0 <= a < b <= 1.0):
                raise ParameterError(
                    f"indicator interval must satisfy 0 <= a < b <= 1, got [{a}, {b})"
                )
            object.__setattr__(self, 'indicator', (a, b))

    @classmethod
    def constant(cls, value: complex) -> 'Observable':
        return cls(terms=(Term(0, 0, complex(value)),))

    @classmethod
    def character(cls, k: int, l: int = 0, c: complex = 1.0) -> 'Observable':
        """e^{2 pi i (k x + l y)} scaled by c"""
        return cls(terms=(Term(k, l, complex(c)),))

    @classmethod
    def cosine(cls, k: int = 1, mean_zero: bool = False) -> 'Observable':
        """cos(2 pi k x) as two conjugate characters"""
        return cls(terms=(Term(k, 0, 0.5), Term(-k, 0, 0.5)), mean_zero=mean_zero)

    @classmethod
    def interval(cls, a: float, b: float, mean_zero: bool = False) -> 'Observable':
        return cls(indicator=(a, b), mean_zero=mean_zero)

    @property
    def is_one_dimensional(self) -> bool:
        return all(term.l == 0 for term in self.terms)

    def raw_integral(self) -> complex:
        """Integral of the observable before any mean-zero correction"""
        total = 0j
        for term in self.terms:
            if term.k == 0 and term.l == 0:
                total += term.c
        if self.indicator is not None:
            total += self.indicator[1] - self.indicator[0]
        return total

    def integral(self) -> complex:
        if self.mean_zero:
            return 0j
        return self.raw_integral()

    def evaluate(self, x: np.ndarray, y: Optional[np.ndarray] = None) -> np.ndarray:
        """Evaluate at points (x, y) in the unit square; y is ignored when None"""
        x = np.asarray(x, dtype=np.float64)
        values = np.zeros(x.shape, dtype=np.complex128)
        for term in self.terms:
            phase = np.mod(term.k * x, 1.0)
            if term.l != 0:
                if y is None:
                    raise ParameterError(
                        f"term with y-mode {term.l} evaluated on a one-dimensional system"
                    )
                phase = phase + np.mod(term.l * np.asarray(y, dtype=np.float64), 1.0)
            values += term.c * np.exp(2j * np.pi * phase)
        if self.indicator is not None:
            a, b = self.indicator
            values += ((x >= a) & (x < b)).astype(np.float64)
        if self.mean_zero:
            values -= self.raw_integral()
        return values

    def to_dict(self) -> dict[str, Any]:
        return {
            'terms': [[t.k, t.l, t.c.real, t.c.imag] for t in self.terms],
            'indicator': list(self.indicator) if self.indicator is not None else None,
            'mean_zero': self.mean_zero,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'Observable':
        terms = []
        for entry in data.get('terms', []):
            if len(entry) == 3:
                k, l, re = entry
                im = 0.0
            else:
                k, l, re, im = entry
            terms.append(Term(int(k), int(l), complex(float(re), float(im))))
        indicator = data.get('indicator')
        return cls(
            terms=tuple(terms),
            indicator=tuple(indicator) if indicator is not None else None,
            mean_zero=bool(data.get('mean_zero', False)),
        )


def observable_integral(obs: Observable) -> complex:
    """Exact symbolic integral of an observable against Lebesgue measure"""
    return obs.integral()


Point = Union[None, float, Sequence[float]]


@dataclass(frozen=True)
class OrbitMeta:
    system: Optional[SystemSpec]
    observable: Optional[Observable]
    x0: Optional[tuple[float, ...]]
    length: int

    def describe(self) -> str:
        if self.system is None:
            return f'samples[L={self.length}]'
        return f'{self.system.kind.value}(alpha={self.system.alpha}, seed={self.system.seed})[L={self.length}]'


@dataclass(frozen=True, eq=False)
class Orbit:
    """Immutable sample sequence a_n = f(T^n x0), n = 0..L-1"""

    samples: np.ndarray
    sup_norm: float
    meta: OrbitMeta = field(default=None)

    @classmethod
    def from_samples(cls, samples, meta: Optional[OrbitMeta] = None) -> 'Orbit':
        data = np.array(samples, dtype=np.complex128).reshape(-1)
        if data.size == 0:
            raise EmptyOrbitError("an orbit needs at least one sample")
        data.setflags(write=False)
        if meta is None:
            meta = OrbitMeta(system=None, observable=None, x0=None, length=data.size)
        return cls(samples=data, sup_norm=float(np.max(np.abs(data))), meta=meta)

    def __len__(self) -> int:
        return self.samples.size

    def write_csv(self, path: str) -> None:
        with open(path, 'w', newline='') as fh:
            fh.write('n,re,im\n')
            for n, value in enumerate(self.samples):
                fh.write(f'{n},{value.real:.16e},{value.imag:.16e}\n')
        logger.info(f"Wrote {len(self)} orbit samples to {path}")


def samples_of(seq, role: str, needed: int) -> np.ndarray:
    """Complex samples of an Orbit or array, checked against a minimum length"""
    data = seq.samples if isinstance(seq, Orbit) else np.asarray(seq, dtype=np.complex128)
    if data.size < needed:
        raise OrbitLengthError(role, needed, data.size)
    return data


def sup_norm_of(seq) -> float:
    if isinstance(seq, Orbit):
        return seq.sup_norm
    data = np.asarray(seq, dtype=np.complex128)
    return float(np.max(np.abs(data))) if data.size else 0.0


# -- precision helpers -------------------------------------------------------


def _split(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_product(a: np.ndarray, b: float) -> tuple[np.ndarray, np.ndarray]:
    """p + err == a * b exactly (Dekker)"""
    p = a * b
    a_hi, a_lo = _split(a)
    b_hi, b_lo = _split(np.float64(b))
    err = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, err


def _wrap_unit(x: np.ndarray) -> np.ndarray:
    x = x - np.floor(x)
    x[x >= 1.0] -= 1.0
    return x


def frac_multiple(n: np.ndarray, alpha: float, offset: float = 0.0) -> np.ndarray:
    """frac(offset + n * alpha) with the product carried in double-double

    n must hold integers below 2**53.
    """
    n = np.asarray(n, dtype=np.float64)
    p, err = _two_product(n, alpha)
    head = p - np.floor(p)
    return _wrap_unit((head + err) + offset)


# -- splitmix64 bit stream -----------------------------------------------------


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX_MULT_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MULT_2) & MASK64
    return z ^ (z >> 31)


def trial_seed(master: int, index: int) -> int:
    """Seed of trial `index` derived from the master seed by the splitmix64 counter"""
    return _mix64((int(master) + (int(index) + 1) * GOLDEN_GAMMA) & MASK64)


def bit_stream_words(seed: int, count: int) -> np.ndarray:
    """First `count` 64-bit words of the splitmix64 stream for `seed`

    state_i = seed + (i + 1) * 0x9E3779B97F4A7C15 (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    word_i = z ^ (z >> 31)
    """
    counter = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over='ignore'):
        z = np.uint64(int(seed) & MASK64) + counter * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_MULT_1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_MULT_2)
        return z ^ (z >> np.uint64(31))


def doubling_windows(seed: int, length: int) -> np.ndarray:
    """64-bit windows of the seed bit stream starting at bits 0..length-1

    Bit 0 of the stream is the most significant bit of word 0, so window n+1 is
    window n shifted left by one with the next stream bit appended.
    """
    words = bit_stream_words(seed, length // 64 + 2)
    n = np.arange(length, dtype=np.uint64)
    q = n >> np.uint64(6)
    r = n & np.uint64(63)
    head = words[q] << r
    tail = words[q + np.uint64(1)] >> ((np.uint64(64) - r) & np.uint64(63))
    tail = np.where(r == 0, np.uint64(0), tail)
    return head | tail


def doubling_points(seed: int, length: int) -> np.ndarray:
    """Orbit points of the doubling map read from the top 53 bits of each window"""
    windows = doubling_windows(seed, length)
    return (windows >> np.uint64(11)).astype(np.float64) * 2.0**-53


# -- orbit points --------------------------------------------------------------


def _coerce_point(system: SystemSpec, x0: Point) -> Optional[tuple[float, ...]]:
    kind = system.kind
    if kind in (SystemKind.DOUBLING, SystemKind.EXTERNAL_SEQUENCE):
        return None
    if x0 is None:
        raise ParameterError(f"{kind.value} requires a start point")
    coords = (float(x0),) if np.isscalar(x0) else tuple(float(v) for v in x0)
    if len(coords) != system.dimension:
        raise ParameterError(
            f"{kind.value} expects a {system.dimension}-dimensional start point, got {len(coords)}"
        )
    for value in coords:
        if not (0.0 <= value < 1.0):
            raise ParameterError(f"start point coordinates must lie in [0, 1), got {value}")
    return coords


def orbit_points(
    system: SystemSpec, x0: Point, length: int
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Points T^n x0 for n < length, as (x, y) with y None on one-dimensional systems"""
    coords = _coerce_point(system, x0)
    n = np.arange(length, dtype=np.float64)
    kind = system.kind

    if kind is SystemKind.ROTATION:
        return frac_multiple(n, system.alpha, coords[0]), None
    if kind is SystemKind.DOUBLING:
        return doubling_points(system.seed, length), None
    if kind is SystemKind.PRODUCT_ROTATION:
        x = frac_multiple(n, system.alpha, coords[0])
        y = frac_multiple(n, system.theta, coords[1])
        return x, y
    if kind is SystemKind.SKEW_PRODUCT:
        x0_, y0_ = coords
        x = frac_multiple(n, system.alpha, x0_)
        # y_n = y0 + n x0 + n(n-1)/2 alpha
        linear = frac_multiple(n, x0_)
        quadratic = frac_multiple(n * (n - 1) / 2, system.alpha)
        y = _wrap_unit((linear + quadratic) + y0_)
        return x, y
    raise ParameterError(f"{kind.value} has no orbit points")


# -- external sequences --------------------------------------------------------


def _fetch_text(
    url: str,
    timeout: float = REQUEST_TIMEOUT_SECONDS,
    max_retries: int = MAX_RETRIES,
    backoff_base: float = RETRY_BACKOFF_BASE,
) -> str:
    """GET a remote CSV with retry on server and connection errors"""
    with requests.Session() as session:
        for attempt in range(max_retries):
            try:
                response = session.get(url, timeout=timeout)

                if response.status_code == 200:
                    return response.content.decode('utf-8')

                elif response.status_code >= 500:
                    logger.warning(
                        f"Server error {response.status_code} on attempt {attempt + 1}/{max_retries}: "
                        f"{response.text[:200]}"
                    )

                else:
                    raise InsufficientDataError(
                        f"could not fetch {url}: HTTP {response.status_code}"
                    )

            except requests.exceptions.RequestException as e:
                logger.error(
                    f"Request failed on attempt {attempt + 1}/{max_retries}: {e}"
                )

            if attempt < max_retries - 1:
                sleep_time = backoff_base**attempt
                logger.info(f"Retrying in {sleep_time}s...")
                time.sleep(sleep_time)

    raise InsufficientDataError(f"could not fetch {url} after {max_retries} attempts")


def _read_text(path: str) -> str:
    if path.startswith(('http://', 'https://')):
        return _fetch_text(path)
    with open(path, newline='', encoding='utf-8') as fh:
        return fh.read()


def load_external_sequence(path: str, length: int) -> np.ndarray:
    """First `length` samples of a headered CSV with `re` and `im` columns

    Lines starting with '#' are skipped, so cubelab orbit reports load directly.
    """
    try:
        text = _read_text(path)
    except UnicodeDecodeError as e:
        raise InsufficientDataError(
            f"{path}: not valid UTF-8 text ({e.reason} at byte {e.start})"
        ) from e
    reader = (
        row for row in csv.reader(io.StringIO(text))
        if not (row and row[0].startswith('#'))
    )
    try:
        header = [name.strip().lower() for name in next(reader)]
    except StopIteration:
        raise InsufficientDataError(f"{path}: empty file, header row required") from None
    if 're' not in header or 'im' not in header:
        raise InsufficientDataError(
            f"{path}: header must name 're' and 'im' columns, got {header}"
        )
    re_col, im_col = header.index('re'), header.index('im')

    values = []
    for line, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            values.append(complex(float(row[re_col]), float(row[im_col])))
        except (ValueError, IndexError):
            raise InsufficientDataError(f"{path}: malformed row {line}: {row}") from None
        if len(values) == length:
            break

    if len(values) < length:
        raise InsufficientDataError(
            f"{path}: {len(values)} samples available, {length} requested"
        )
    return np.array(values, dtype=np.complex128)


def generate_orbit(system: SystemSpec, obs: Observable, x0: Point, L: int) -> Orbit:
    """Evaluate a_n = obs(T^n x0) for n < L

    Args:
        system: catalog system
        obs: observable; y-modes are only allowed on two-dimensional systems
        x0: start point (ignored for Doubling and ExternalSequence)
        L: orbit length

    Returns:
        Immutable Orbit carrying its generating metadata
    """
    if L < 1:
        raise EmptyOrbitError(f"orbit length must be positive, got {L}")

    if system.kind is SystemKind.EXTERNAL_SEQUENCE:
        samples = load_external_sequence(system.path, L)
        coords = None
    else:
        if system.dimension == 1 and not obs.is_one_dimensional:
            raise ParameterError(
                f"observable has y-modes but {system.kind.value} is one-dimensional"
            )
        coords = _coerce_point(system, x0)
        x, y = orbit_points(system, x0, L)
        samples = obs.evaluate(x, y)

    logger.debug(f"Generated {system.kind.value} orbit of length {L}")
    meta = OrbitMeta(system=system, observable=obs, x0=coords, length=L)
    return Orbit.from_samples(samples, meta=meta)


def next_pow2(n: int) -> int:
    """Smallest power of two >= n"""
    return 1 << max(0, int(n) - 1).bit_length()


def default_start_point(system: SystemSpec) -> Point:
    """Origin of the system's phase space, or None where the start point is unused"""
    if system.kind in (SystemKind.DOUBLING, SystemKind.EXTERNAL_SEQUENCE):
        return None
    if system.dimension == 2:
        return (0.0, 0.0)
    return 0.0
