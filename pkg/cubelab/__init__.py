"""
cubelab - finite-N laboratory for multiple ergodic averages along cubes

This package evaluates the 3-, 7- and 2^k-1-function cube averages of explicit
dynamical systems with paired naive and FFT-accelerated kernels, and checks the
uniformity bounds that control them as finite-sample properties.

Main components:
- generate_orbit: orbits of catalog systems through trigonometric observables
- cube3_fast / cube7_fast / cubek_fast: convolution-based cube averages
- ww_sup, seminorm2, seminorm3, vdc_bound: spectral statistics and bounds
- project: Kronecker and CL projections for catalog systems
- ExperimentConfig / run: configuration and experiment runner
"""

from .config import ExperimentConfig, load_config
from .cube_averages import (
    AverageTrace,
    cube3_fast,
    cube3_naive,
    cube7_fast,
    cube7_naive,
    trace,
    windowed_cube3,
)
from .cube_general import CubeSpec, cubek_fast, cubek_naive, lemma4_quantity
from .dynamics import (
    Observable,
    Orbit,
    SystemKind,
    SystemSpec,
    generate_orbit,
    observable_integral,
)
from .factors import (
    Factor,
    characteristic_compare,
    eigenfunction_identity_check,
    eq1_compare,
    eq10_compare,
    project,
)
from .harness import ExperimentRunner, run
from .report import Report
from .spectral import (
    SeminormEstimate,
    WWStatistic,
    correlation,
    lemma2_check,
    lemma3_quantity,
    seminorm2,
    seminorm3,
    vdc_bound,
    ww_sup,
)

__all__ = [
    'SystemKind',
    'SystemSpec',
    'Observable',
    'Orbit',
    'generate_orbit',
    'observable_integral',
    'AverageTrace',
    'cube3_naive',
    'cube3_fast',
    'cube7_naive',
    'cube7_fast',
    'windowed_cube3',
    'trace',
    'CubeSpec',
    'cubek_naive',
    'cubek_fast',
    'lemma4_quantity',
    'WWStatistic',
    'SeminormEstimate',
    'ww_sup',
    'correlation',
    'seminorm2',
    'seminorm3',
    'vdc_bound',
    'lemma2_check',
    'lemma3_quantity',
    'Factor',
    'project',
    'eigenfunction_identity_check',
    'eq1_compare',
    'eq10_compare',
    'characteristic_compare',
    'ExperimentConfig',
    'load_config',
    'Report',
    'ExperimentRunner',
    'run',
]

__version__ = '0.1.0'
