"""
Cube averages of 3 and 7 functions, naive and FFT-accelerated

The 2^k - 1 functions of a cube average are numbered j = 1..2^k-1; bit l-1 of
j selects index i_l, and f_j is evaluated at T^(sum of selected indices) x.
For k = 2 this is (a, b, c) = (f1, f2, f3) with
    M_N = (1/N^2) sum_{n,m<N} a_n b_m c_{n+m}
and for k = 3 the roles (m, n, p) = (i_1, i_2, i_3) give the seven-function
average f1(m) f2(n) f3(m+n) f4(p) f5(m+p) f6(n+p) f7(m+n+p).

Both engines here are shared by cube_general.
"""

import logging
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
import scipy.fft

from .dynamics import Orbit, next_pow2, samples_of, sup_norm_of
from .errors import NumericTaskError, ParameterError, WindowError
from .thread import run_ordered

logger = logging.getLogger(__name__)

# largest term slab materialized at once by the naive engine
NAIVE_BLOCK_TERMS = 1 << 22
# largest batch of transform rows (in complex samples) held by the fast engine
FAST_BLOCK_SAMPLES = 1 << 21
# horizons at or below this also run the naive engine inside trace
NAIVE_CROSSOVER = 32
SELF_CHECK_RTOL = 1e-8


def subset_axes(j: int) -> list[int]:
    """Zero-based index positions selected by function number j"""
    return [l for l in range(j.bit_length()) if j >> l & 1]


def role_lengths(k: int, N: int) -> list[int]:
    """Minimum orbit length of f_1..f_{2^k-1} for horizon N"""
    return [len(subset_axes(j)) * (N - 1) + 1 for j in range(1, 2**k)]


def role_names(k: int) -> list[str]:
    if k == 2:
        return ['a', 'b', 'c']
    return [f'f{j}' for j in range(1, 2**k)]


def cube_samples(functions: Sequence, k: int, N: int) -> list[np.ndarray]:
    """Validate a full set of 2^k - 1 functions and return their samples"""
    if k < 2:
        raise ParameterError(f"cube averages need k >= 2, got {k}")
    if N < 1:
        raise ParameterError(f"horizon N must be positive, got {N}")
    if len(functions) != 2**k - 1:
        raise ParameterError(
            f"k={k} needs {2**k - 1} functions, got {len(functions)}"
        )
    return [
        samples_of(f, name, needed)
        for f, name, needed in zip(functions, role_names(k), role_lengths(k, N))
    ]


def symmetric_product(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Complex product that is bitwise commutative under broadcasting"""
    re = x.real * y.real - x.imag * y.imag
    im = x.real * y.imag + x.imag * y.real
    out = np.empty(np.broadcast(re, im).shape, dtype=np.complex128)
    out.real = re
    out.imag = im
    return out


def _term_tensor(
    funcs: list[np.ndarray], k: int, N: int, first: np.ndarray, second: np.ndarray
) -> np.ndarray:
    axes = [first, second] + [np.arange(N)] * (k - 2)
    grids = [
        ax.reshape([-1 if d == l else 1 for d in range(k)]) for l, ax in enumerate(axes)
    ]
    terms = symmetric_product(funcs[0][grids[0]], funcs[1][grids[1]])
    for j in range(3, 2**k):
        index = sum(grids[l] for l in subset_axes(j))
        terms = terms * funcs[j - 1][index]
    return terms


def naive_cube_sum(funcs: list[np.ndarray], k: int, N: int) -> complex:
    """Direct evaluation of every term of the cube average

    Terms are folded with their (i_1, i_2)-transpose before a pairwise sum, so
    exchanging the roles of f1 and f2 reproduces the value bit-for-bit when k = 2.
    """
    full = np.arange(N)
    rows_per_block = max(1, NAIVE_BLOCK_TERMS // N ** (k - 1))
    partials = []
    for start in range(0, N, rows_per_block):
        rows = full[start : start + rows_per_block]
        slab = _term_tensor(funcs, k, N, rows, full)
        mirrored = _term_tensor(funcs, k, N, full, rows).swapaxes(0, 1)
        partials.append(np.sum((slab + mirrored).ravel()))
    total = np.sum(np.array(partials, dtype=np.complex128))
    return complex(total / (2 * float(N) ** k))


def _outer_combos(k: int, N: int, start: int, stop: int) -> np.ndarray:
    """Values of (i_3..i_k) for flat combination numbers start..stop-1"""
    if k == 2:
        return np.zeros((1, 0), dtype=np.int64)
    flat = np.arange(start, stop)
    return np.stack(np.unravel_index(flat, (N,) * (k - 2)), axis=1)


def fast_cube_sum(funcs: list[np.ndarray], k: int, N: int) -> complex:
    """Cube average with the (i_1, i_2) double sum collapsed to a convolution

    For each fixed (i_3..i_k) the functions split into four groups: those
    depending on i_1 only (u), on i_2 only (v), on both (w, evaluated at
    s = i_1 + i_2) and on neither (a scalar factor). The inner sum is
    sum_s (u * v)_s w_s with the linear convolution taken by a zero-padded
    transform of length next_pow2(2N - 1).
    """
    size = next_pow2(2 * N - 1)
    span = 2 * N - 1
    n_combos = N ** (k - 2)
    rows_per_block = max(1, FAST_BLOCK_SAMPLES // size)
    i12 = np.arange(N)
    s = np.arange(span)
    logger.debug(f"fast cube k={k} N={N}: transform size {size}, {n_combos} outer rows")

    partials = []
    for start in range(0, n_combos, rows_per_block):
        combos = _outer_combos(k, N, start, min(n_combos, start + rows_per_block))
        rows = combos.shape[0]
        u = np.ones((rows, N), dtype=np.complex128)
        v = np.ones((rows, N), dtype=np.complex128)
        w = np.ones((rows, span), dtype=np.complex128)
        outer = np.ones(rows, dtype=np.complex128)
        for j in range(1, 2**k):
            axes = subset_axes(j)
            shift = np.zeros(rows, dtype=np.int64)
            for l in axes:
                if l >= 2:
                    shift = shift + combos[:, l - 2]
            f = funcs[j - 1]
            has1, has2 = 0 in axes, 1 in axes
            if has1 and has2:
                w *= f[s[None, :] + shift[:, None]]
            elif has1:
                u *= f[i12[None, :] + shift[:, None]]
            elif has2:
                v *= f[i12[None, :] + shift[:, None]]
            else:
                outer *= f[shift]
        spectrum = symmetric_product(
            scipy.fft.fft(u, n=size, axis=1), scipy.fft.fft(v, n=size, axis=1)
        )
        # unnormalized inverse; the 1/size factor is applied once below
        conv = scipy.fft.ifft(spectrum, axis=1, norm='forward')[:, :span]
        inner = np.sum(conv * w, axis=1)
        partials.append(np.sum(outer * inner))
    total = np.sum(np.array(partials, dtype=np.complex128))
    return complex(total / (size * float(N) ** k))


def cube3_naive(a, b, c, N: int) -> complex:
    """(1/N^2) sum_{n,m<N} a_n b_m c_{n+m}, every term formed explicitly"""
    return naive_cube_sum(cube_samples([a, b, c], 2, N), 2, N)


def cube3_fast(a, b, c, N: int) -> complex:
    """Same average as cube3_naive through the identity sum_s (a*b)_s c_s"""
    return fast_cube_sum(cube_samples([a, b, c], 2, N), 2, N)


def cube7_naive(f1, f2, f3, f4, f5, f6, f7, N: int) -> complex:
    """(1/N^3) sum_{m,n,p<N} f1(m) f2(n) f3(m+n) f4(p) f5(m+p) f6(n+p) f7(m+n+p)"""
    funcs = cube_samples([f1, f2, f3, f4, f5, f6, f7], 3, N)
    return naive_cube_sum(funcs, 3, N)


def cube7_fast(f1, f2, f3, f4, f5, f6, f7, N: int) -> complex:
    """Seven-function average, one convolution per p over
    u_p(m) = f1(m) f5(m+p), v_p(n) = f2(n) f6(n+p), w_p(s) = f3(s) f7(s+p),
    weighted by f4(p)
    """
    funcs = cube_samples([f1, f2, f3, f4, f5, f6, f7], 3, N)
    return fast_cube_sum(funcs, 3, N)


def windowed_cube3(a, b, c, M: int, N: int, method: str = 'naive') -> complex:
    """Average of a_n b_m c_{n+m} over n, m in [M, N]

    Normalized by the number of terms (N - M + 1)^2, so constant inputs
    average to exactly their product.
    """
    if M < 0:
        raise ParameterError(f"window start M must be nonnegative, got {M}")
    if M >= N:
        raise WindowError(f"window needs M < N, got M={M}, N={N}")
    a_ = samples_of(a, 'a', N + 1)
    b_ = samples_of(b, 'b', N + 1)
    c_ = samples_of(c, 'c', 2 * N + 1)
    width = N - M + 1
    funcs = [a_[M : N + 1], b_[M : N + 1], c_[2 * M : 2 * N + 1]]
    if method == 'fast':
        return fast_cube_sum(funcs, 2, width)
    return naive_cube_sum(funcs, 2, width)


def _describe(seq) -> str:
    if isinstance(seq, Orbit):
        return seq.meta.describe()
    return f'samples[L={len(seq)}]'


@dataclass(frozen=True, eq=False)
class AverageTrace:
    """Cube average values along increasing horizons"""

    horizons: np.ndarray
    values: np.ndarray
    method: str
    inputs: tuple[str, ...]

    def __post_init__(self):
        horizons = np.asarray(self.horizons, dtype=np.int64)
        if horizons.size and (horizons[0] < 1 or np.any(np.diff(horizons) <= 0)):
            raise ParameterError("trace horizons must be positive and strictly increasing")
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != horizons.shape:
            raise ParameterError("trace needs one value per horizon")
        object.__setattr__(self, 'horizons', horizons)
        object.__setattr__(self, 'values', values)

    def rows(self) -> list[dict[str, Any]]:
        return [
            {'N': int(n), 're': v.real, 'im': v.imag, 'abs': abs(v)}
            for n, v in zip(self.horizons, self.values)
        ]

    def is_decaying(self) -> bool:
        """Last |value| below the first and a negative log-log slope"""
        magnitudes = np.abs(self.values)
        if magnitudes.size < 2 or magnitudes[-1] >= magnitudes[0]:
            return False
        if np.any(magnitudes == 0):
            return True
        slope = np.polyfit(np.log(self.horizons), np.log(magnitudes), 1)[0]
        return bool(slope < 0)

    def write_csv(self, path: str) -> None:
        with open(path, 'w', newline='') as fh:
            fh.write('N,re,im,abs\n')
            for row in self.rows():
                fh.write(f"{row['N']},{row['re']:.16e},{row['im']:.16e},{row['abs']:.16e}\n")
        logger.info(f"Wrote trace of {len(self.horizons)} horizons to {path}")


def _evaluate_horizon(funcs: list[np.ndarray], k: int, N: int, bound: float) -> complex:
    value = fast_cube_sum(funcs, k, N)
    if N <= NAIVE_CROSSOVER:
        reference = naive_cube_sum(funcs, k, N)
        tolerance = SELF_CHECK_RTOL * max(abs(reference), 1e-4 * bound)
        if abs(value - reference) > tolerance:
            raise NumericTaskError(
                f"fast and naive cube averages disagree at N={N}: "
                f"{value!r} vs {reference!r}"
            )
        logger.debug(f"self-check passed at N={N}")
    return value


def trace(k: int, orbits: Sequence, horizons: Sequence[int], threads: int = 1) -> AverageTrace:
    """Cube average of 2^k - 1 orbits at each horizon

    Values come from the fast engine; horizons up to NAIVE_CROSSOVER are
    cross-checked against the naive engine.
    """
    horizons = [int(n) for n in horizons]
    if not horizons:
        raise ParameterError("trace needs at least one horizon")
    funcs = cube_samples(orbits, k, max(horizons))
    bound = float(np.prod([sup_norm_of(f) for f in orbits]))
    logger.info(f"Tracing k={k} cube average over {len(horizons)} horizons")

    values = run_ordered(
        [lambda n=n: _evaluate_horizon(funcs, k, n, bound) for n in horizons],
        threads=threads,
    )
    result = AverageTrace(
        horizons=np.array(horizons),
        values=np.array(values),
        method='fast',
        inputs=tuple(_describe(f) for f in orbits),
    )
    if not result.is_decaying():
        logger.debug(f"k={k} trace does not show a decaying trend")
    return result
