"""
Wiener-Wintner statistic, correlations, seminorm estimators and explicit bounds

Correlations use the convention (1/N) sum_{n<N} a_n conj(a_{n+h}) throughout,
so real observables reduce to the usual self-correlation.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft

from .cube_averages import cube3_fast, cube7_fast, cube_samples
from .dynamics import Orbit, next_pow2, samples_of, sup_norm_of
from .errors import ParameterError

logger = logging.getLogger(__name__)

DEFAULT_OVERSAMPLE = 8
LEMMA2_CONSTANT = 4.0
# complex samples held by one batch of transform rows
BLOCK_SAMPLES = 1 << 21


@dataclass(frozen=True)
class WWStatistic:
    """sup_t |(1/N) sum_{n<N} a_n e^{2 pi i n t}| over a power-of-two grid"""

    value: float
    N: int
    oversample: int
    argmax_t: float


@dataclass(frozen=True)
class SeminormEstimate:
    """Finite (N, H) estimate of an order 2 or order 3 seminorm

    For order 3, H is the outer averaging length and H_inner the order 2
    length used for every product a * conj(shift(a, h)).
    """

    order: int
    value: float
    N: int
    H: int
    H_inner: Optional[int] = None
    orbit_meta: str = ''


def _describe(seq) -> str:
    if isinstance(seq, Orbit):
        return seq.meta.describe()
    return f'samples[L={len(seq)}]'


def _check_oversample(oversample: int) -> None:
    if oversample < 2 or oversample & (oversample - 1):
        raise ParameterError(f"oversample must be a power of two >= 2, got {oversample}")


def grid_sup(
    rows: np.ndarray, oversample: int, scale: Optional[float] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Grid maximum of |(1/scale) sum_n x_n e^{2 pi i n t}| for every row

    The grid is t = j / G with G = oversample * next_pow2(row length), so each
    doubling of oversample refines the previous grid. Returns the maxima and
    their grid locations.
    """
    _check_oversample(oversample)
    rows = np.atleast_2d(rows)
    width = rows.shape[1]
    size = oversample * next_pow2(width)
    scale = float(width if scale is None else scale)
    values = np.empty(rows.shape[0])
    where = np.empty(rows.shape[0])
    batch = max(1, BLOCK_SAMPLES // size)
    for start in range(0, rows.shape[0], batch):
        chunk = rows[start : start + batch]
        # unnormalized inverse transform: sum_n x_n e^{+2 pi i n j / size}
        spectrum = np.abs(scipy.fft.ifft(chunk, n=size, axis=1, norm='forward'))
        peak = np.argmax(spectrum, axis=1)
        values[start : start + batch] = spectrum[np.arange(chunk.shape[0]), peak] / scale
        where[start : start + batch] = peak / size
    return values, where


def ww_sup(a, N: int, oversample: int = DEFAULT_OVERSAMPLE) -> WWStatistic:
    data = samples_of(a, 'a', N)
    values, where = grid_sup(data[:N], oversample)
    return WWStatistic(value=float(values[0]), N=N, oversample=oversample, argmax_t=float(where[0]))


def correlation(a, h: int, N: int) -> complex:
    """(1/N) sum_{n<N} a_n conj(a_{n+h})"""
    if h < 0:
        raise ParameterError(f"shift h must be nonnegative, got {h}")
    data = samples_of(a, 'a', N + h)
    return complex(np.sum(data[:N] * np.conj(data[h : h + N])) / N)


def correlation_rows(rows: np.ndarray, N: int, count: int) -> np.ndarray:
    """Correlations for h = 0..count-1 of every row, by zero-padded transforms

    Each row needs N + count - 1 samples. Returns an array of shape
    (rows, count) holding (1/N) sum_{n<N} x_n conj(x_{n+h}).
    """
    rows = np.atleast_2d(rows)
    span = N + count - 1
    size = next_pow2(span)
    out = np.empty((rows.shape[0], count), dtype=np.complex128)
    batch = max(1, BLOCK_SAMPLES // size)
    for start in range(0, rows.shape[0], batch):
        chunk = rows[start : start + batch, :span]
        full = scipy.fft.fft(chunk, n=size, axis=1)
        head = scipy.fft.fft(chunk[:, :N], n=size, axis=1)
        # r_h = sum_n x_{n+h} conj(x_n); no wrap since n + h < span <= size
        r = scipy.fft.ifft(full * np.conj(head), axis=1)[:, :count]
        out[start : start + batch] = np.conj(r) / N
    return out


def seminorm2(a, N: int, H: int) -> SeminormEstimate:
    """[(1/H) sum_{h<H} |correlation(a, h, N)|^2]^(1/4)"""
    if N < 1 or H < 1:
        raise ParameterError(f"seminorm2 needs N, H >= 1, got N={N}, H={H}")
    data = samples_of(a, 'a', N + H)
    corr = correlation_rows(data, N, H)[0]
    value = float(np.mean(np.abs(corr) ** 2)) ** 0.25
    logger.debug(f"seminorm2 N={N} H={H}: {value:.6f}")
    return SeminormEstimate(order=2, value=value, N=N, H=H, orbit_meta=_describe(a))


def seminorm3(a, N: int, H_outer: int, H_inner: int) -> SeminormEstimate:
    """[(1/H_outer) sum_{h<H_outer} seminorm2(a conj(shift(a, h)), N, H_inner)^4]^(1/8)"""
    if N < 1 or H_outer < 1 or H_inner < 1:
        raise ParameterError(
            f"seminorm3 needs N, H_outer, H_inner >= 1, got {N}, {H_outer}, {H_inner}"
        )
    data = samples_of(a, 'a', N + H_inner + H_outer)
    span = N + H_inner - 1
    size = next_pow2(span)
    batch = max(1, BLOCK_SAMPLES // size)
    fourth_powers = np.empty(H_outer)
    for start in range(0, H_outer, batch):
        shifts = np.arange(start, min(H_outer, start + batch))
        products = data[None, :span] * np.conj(data[shifts[:, None] + np.arange(span)[None, :]])
        corr = correlation_rows(products, N, H_inner)
        fourth_powers[shifts] = np.mean(np.abs(corr) ** 2, axis=1)
    value = float(np.mean(fourth_powers)) ** 0.125
    logger.debug(f"seminorm3 N={N} H={H_outer}/{H_inner}: {value:.6f}")
    return SeminormEstimate(
        order=3, value=value, N=N, H=H_outer, H_inner=H_inner, orbit_meta=_describe(a)
    )


def vdc_bound(u, N: int, H: int) -> tuple[float, float]:
    """Both sides of the van der Corput inequality

    lhs = |(1/N) sum_{n<N} u_n|^2
    rhs = (N+H)/(N^2 (H+1)) sum_{n<N} |u_n|^2
          + 2(N+H)/(N^2 (H+1)) sum_{h=1}^{H} (1 - h/(H+1)) |sum_{n<N-h} u_n conj(u_{n+h})|
    """
    if H < 1 or H >= N:
        raise ParameterError(f"van der Corput needs 1 <= H < N, got H={H}, N={N}")
    x = samples_of(u, 'u', N)[:N]
    lhs = abs(np.sum(x) / N) ** 2
    factor = (N + H) / (N * N * (H + 1))
    shifted = sum(
        (1.0 - h / (H + 1)) * abs(np.vdot(x[h:], x[: N - h])) for h in range(1, H + 1)
    )
    rhs = factor * float(np.sum(np.abs(x) ** 2)) + 2.0 * factor * shifted
    return float(lhs), float(rhs)


def lemma2_check(a, N: int, H: int) -> tuple[float, float]:
    """(ww_sup(a, N, 8)^2, C (1/H + (1/H) sum_{h=1}^{H} |correlation(a, h, N)|)) with C = 4"""
    if H < 1:
        raise ParameterError(f"H must be positive, got {H}")
    data = samples_of(a, 'a', N + H)
    lhs = ww_sup(data, N, DEFAULT_OVERSAMPLE).value ** 2
    corr = correlation_rows(data, N, H + 1)[0, 1:]
    rhs = LEMMA2_CONSTANT * (1.0 / H + float(np.sum(np.abs(corr))) / H)
    if lhs > rhs:
        logger.warning(f"lemma2 diagnostic exceeded at N={N}, H={H}: {lhs:.4g} > {rhs:.4g}")
    return float(lhs), float(rhs)


def lemma3_quantity(a, b, N: int, oversample: int = DEFAULT_OVERSAMPLE) -> float:
    """(1/N) sum_{n<N} sup_t |(1/N) sum_{m<N} a_m b_{n+m} e^{2 pi i m t}|^2"""
    x = samples_of(a, 'a', N)[:N]
    y = samples_of(b, 'b', 2 * N - 1)
    index = np.arange(N)
    rows = x[None, :] * y[index[:, None] + index[None, :]]
    sups, _ = grid_sup(rows, oversample)
    return float(np.mean(sups**2))


def _correlation_energy(x: np.ndarray, y: np.ndarray, N: int) -> float:
    """(1/N) sum_{n<N} |(1/N) sum_{m<N} x_m y_{n+m}|^2"""
    index = np.arange(N)
    inner = (y[index[:, None] + index[None, :]] @ x) / N
    return float(np.mean(np.abs(inner) ** 2))


def cube3_chain_bound(a, b, c, N: int, oversample: int = 2) -> tuple[float, float, float]:
    """|M_N(a, b, c)|^2 <= stage1 <= stage2

    stage1 = |a|_inf^2 (1/N) sum_n |(1/N) sum_m b_m c_{n+m}|^2
    stage2 = |a|_inf^2 mean(|b|^2) max_t |(1/N) sum_{s<2N-1} c_s e^{2 pi i s t}|^2
    The grid of stage2 has at least 4N - 2 points, enough for the discrete
    Parseval step to hold exactly.
    """
    a_, b_, c_ = cube_samples([a, b, c], 2, N)
    lhs = abs(cube3_fast(a_, b_, c_, N)) ** 2
    sup_a = sup_norm_of(a_[:N]) ** 2
    stage1 = sup_a * _correlation_energy(b_[:N], c_, N)
    c_sup, _ = grid_sup(c_[: 2 * N - 1], oversample, scale=N)
    stage2 = sup_a * float(np.mean(np.abs(b_[:N]) ** 2)) * float(c_sup[0]) ** 2
    return float(lhs), float(stage1), float(stage2)


def cube7_chain_bound(f1, f2, f3, f4, f5, f6, f7, N: int, oversample: int = 2) -> tuple[float, float, float]:
    """|M_N(f1..f7)|^2 <= stage1 <= stage2

    stage1 = prod_{1,2,3} |f_j|^2 (1/N^2) sum_{m,n} |(1/N) sum_p f4(p) f5(m+p) f6(n+p) f7(m+n+p)|^2
    stage2 = prod_{1,2,3,4,6} |f_j|^2 (1/N) sum_n max_t |(1/N) sum_{s<2N-1} f5(s) f7(n+s) e^{2 pi i s t}|^2
    """
    funcs = cube_samples([f1, f2, f3, f4, f5, f6, f7], 3, N)
    lhs = abs(cube7_fast(*funcs, N)) ** 2
    sup = [sup_norm_of(f[:length]) ** 2 for f, length in zip(funcs, _role_spans(N))]

    index = np.arange(N)
    span = 2 * N - 1
    energy = 0.0
    for n in range(N):
        b = funcs[3][:N] * funcs[5][n + index]
        c = funcs[4][:span] * funcs[6][n + np.arange(span)]
        energy += _correlation_energy(b, c, N)
    stage1 = sup[0] * sup[1] * sup[2] * energy / N

    c_rows = funcs[4][None, :span] * funcs[6][index[:, None] + np.arange(span)[None, :]]
    c_sups, _ = grid_sup(c_rows, oversample, scale=N)
    stage2 = sup[0] * sup[1] * sup[2] * sup[3] * sup[5] * float(np.mean(c_sups**2))
    return float(lhs), float(stage1), float(stage2)


def _role_spans(N: int) -> list[int]:
    return [N, N, 2 * N - 1, N, 2 * N - 1, 2 * N - 1, 3 * N - 2]
