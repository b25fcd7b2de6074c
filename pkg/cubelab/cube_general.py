"""
General cube averages of 2^k - 1 functions

Function j (1 <= j < 2^k) is evaluated at T^(sum of i_l over the set bits l-1
of j). With this numbering j = 1..7 reproduces the seven-function order
f1(m) f2(n) f3(m+n) f4(p) f5(m+p) f6(n+p) f7(m+n+p).

The functions with j >= 2^(k-1) all depend on i_k; their product is the S
block. Among them the ones with bit 0 clear do not depend on i_1 and form the
A block; the remaining ones are the A block shifted by i_1.
"""

import logging
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from .cube_averages import (
    cube_samples,
    fast_cube_sum,
    naive_cube_sum,
    role_lengths,
    subset_axes,
)
from .dynamics import samples_of, sup_norm_of
from .errors import CostGuardError, ParameterError
from .spectral import DEFAULT_OVERSAMPLE, grid_sup

logger = logging.getLogger(__name__)

NAIVE_TERM_BUDGET = 10**9
NAIVE_MAX_K = 4
ROW_BLOCK_SAMPLES = 1 << 21


@dataclass(frozen=True)
class CubeSpec:
    k: int
    functions: tuple

    def __post_init__(self):
        if self.k < 2:
            raise ParameterError(f"cube averages need k >= 2, got {self.k}")
        if len(self.functions) != 2**self.k - 1:
            raise ParameterError(
                f"k={self.k} needs {2**self.k - 1} functions, got {len(self.functions)}"
            )
        object.__setattr__(self, 'functions', tuple(self.functions))

    def samples(self, N: int) -> list[np.ndarray]:
        return cube_samples(self.functions, self.k, N)

    def bound(self) -> float:
        """Product of sup norms, an upper bound for |M_N| at every N"""
        return float(np.prod([sup_norm_of(f) for f in self.functions]))


def cubek_naive(
    spec: CubeSpec, N: int, force: bool = False, budget: int = NAIVE_TERM_BUDGET
) -> complex:
    """(1/N^k) sum over i_1..i_k < N of prod_j f_j, every term formed explicitly

    Refuses k > 4 or more than `budget` primitive multiplications unless forced.
    """
    terms = float(N) ** spec.k * (2**spec.k - 1)
    if not force:
        if spec.k > NAIVE_MAX_K:
            raise CostGuardError(f"naive evaluation is limited to k <= {NAIVE_MAX_K}, got k={spec.k}")
        if terms > budget:
            raise CostGuardError(
                f"naive evaluation needs {terms:.3g} terms, above the budget of {budget:.3g}"
            )
    return naive_cube_sum(spec.samples(N), spec.k, N)


def cubek_fast(spec: CubeSpec, N: int) -> complex:
    """Cube average with the (i_1, i_2) double sum collapsed to one convolution per (i_3..i_k)"""
    return fast_cube_sum(spec.samples(N), spec.k, N)


def permuted_spec(spec: CubeSpec, order: Sequence[int]) -> CubeSpec:
    """Relabel index i_l as i_{order[l]} and renumber the functions to match

    The average is invariant under this relabeling.
    """
    if sorted(order) != list(range(spec.k)):
        raise ParameterError(f"not a permutation of 0..{spec.k - 1}: {order}")
    functions = [None] * (2**spec.k - 1)
    for j, f in enumerate(spec.functions, start=1):
        image = sum(1 << order[l] for l in subset_axes(j))
        functions[image - 1] = f
    return CubeSpec(k=spec.k, functions=tuple(functions))


def index_permutations(k: int):
    return permutations(range(k))


def s_block_indices(k: int) -> list[int]:
    return list(range(2 ** (k - 1), 2**k))


def a_block_indices(k: int) -> list[int]:
    """Function numbers of the S block that do not depend on i_1"""
    return [j for j in s_block_indices(k) if not j & 1]


def a_block_orbits(spec: CubeSpec) -> tuple:
    return tuple(spec.functions[j - 1] for j in a_block_indices(spec.k))


def _outer_combos(depth: int, N: int, start: int, stop: int) -> np.ndarray:
    if depth == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.stack(np.unravel_index(np.arange(start, stop), (N,) * depth), axis=1)


def _block_rows(
    funcs: list[np.ndarray],
    subsets: list[list[int]],
    combos: np.ndarray,
    inner_axis: int,
    N: int,
) -> np.ndarray:
    """Rows over the inner index of a product of shifted functions

    combos[:, l] is the value of index l for every l != inner_axis, packed in
    increasing order of l.
    """
    outer_axes = [l for l in range(combos.shape[1] + 1) if l != inner_axis]
    inner = np.arange(N)
    rows = np.ones((combos.shape[0], N), dtype=np.complex128)
    for f, axes in zip(funcs, subsets):
        shift = np.zeros(combos.shape[0], dtype=np.int64)
        for position, l in enumerate(outer_axes):
            if l in axes:
                shift = shift + combos[:, position]
        rows *= f[shift[:, None] + inner[None, :]]
    return rows


def lemma4_quantity(a_funcs: Sequence, k: int, N: int, oversample: int = DEFAULT_OVERSAMPLE) -> float:
    """Uniformity statistic of the A block

    (1/N^(k-2)) sum_{i_2..i_(k-1)} sup_t |(1/N) sum_{i_k} A(i_2..i_k) e^{2 pi i i_k t}|^2

    a_funcs are the 2^(k-2) A-block functions in increasing function number.
    For k = 3 this is the two-function statistic of spectral.lemma3_quantity.
    """
    if k < 3:
        raise ParameterError(f"the A-block statistic needs k >= 3, got {k}")
    numbers = a_block_indices(k)
    if len(a_funcs) != len(numbers):
        raise ParameterError(f"k={k} needs {len(numbers)} A-block functions, got {len(a_funcs)}")
    lengths = role_lengths(k, N)
    funcs = [
        samples_of(f, f'f{j}', lengths[j - 1]) for f, j in zip(a_funcs, numbers)
    ]
    # drop index i_1, which no A-block function uses; i_k becomes the last axis
    subsets = [[l - 1 for l in subset_axes(j)] for j in numbers]
    depth = k - 2
    total_rows = N**depth
    batch = max(1, ROW_BLOCK_SAMPLES // (oversample * N))
    total = 0.0
    for start in range(0, total_rows, batch):
        combos = _outer_combos(depth, N, start, min(total_rows, start + batch))
        rows = _block_rows(funcs, subsets, combos, depth, N)
        sups, _ = grid_sup(rows, oversample)
        total += float(np.sum(sups**2))
    value = total / total_rows
    logger.debug(f"A-block statistic k={k} N={N}: {value:.6g}")
    return value


def s_block_bound(spec: CubeSpec, N: int) -> tuple[float, float]:
    """Both sides of the Cauchy-Schwarz bound through the S block

    lhs = |M_N|^2
    rhs = prod_{j < 2^(k-1)} |f_j|_inf^2 (1/N^(k-1)) sum_{i_1..i_(k-1)} |(1/N) sum_{i_k} S|^2
    """
    k = spec.k
    funcs = spec.samples(N)
    lhs = abs(fast_cube_sum(funcs, k, N)) ** 2
    lengths = role_lengths(k, N)
    outer_bound = float(
        np.prod([sup_norm_of(funcs[j - 1][: lengths[j - 1]]) ** 2 for j in range(1, 2 ** (k - 1))])
    )
    numbers = s_block_indices(k)
    s_funcs = [funcs[j - 1] for j in numbers]
    subsets = [subset_axes(j) for j in numbers]
    depth = k - 1
    total_rows = N**depth
    batch = max(1, ROW_BLOCK_SAMPLES // N)
    energy = 0.0
    for start in range(0, total_rows, batch):
        combos = _outer_combos(depth, N, start, min(total_rows, start + batch))
        rows = _block_rows(s_funcs, subsets, combos, depth, N)
        energy += float(np.sum(np.abs(np.mean(rows, axis=1)) ** 2))
    rhs = outer_bound * energy / total_rows
    return float(lhs), float(rhs)
