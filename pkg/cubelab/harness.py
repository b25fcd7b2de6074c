"""
Experiment runner - dispatches a validated configuration to the numeric modules

Each run goes through setup, process and shutdown. Independent trials and
horizons are spread over TrialThread workers; rows always come back in
submission order.
"""

import logging
import time
from typing import Optional

import numpy as np

from .config import ExperimentConfig
from .cube_averages import cube3_fast, cube3_naive, cube7_fast, cube7_naive, trace
from .cube_general import CubeSpec, cubek_fast, cubek_naive, lemma4_quantity
from .dynamics import Observable, Orbit, default_start_point, generate_orbit, trial_seed
from .errors import CubelabError, TaskError
from .factors import (
    CHARACTERISTIC_FACTORS,
    Factor,
    characteristic_compare,
    eq1_compare,
    eq10_compare,
    project,
)
from .report import Report, build_metadata
from .spectral import lemma2_check, lemma3_quantity, seminorm2, seminorm3, vdc_bound, ww_sup
from .thread import run_ordered

__all__ = ['ExperimentRunner', 'run']

logger = logging.getLogger(__name__)

BOTH_METHODS_RTOL = 1e-8
# lemma2 pairs with lhs above SLACK * rhs are flagged
LEMMA2_SLACK = 2.0

_NAIVE = {2: cube3_naive, 3: cube7_naive}
_FAST = {2: cube3_fast, 3: cube7_fast}


class ExperimentRunner:
    """
    Runs one ExperimentConfig and collects its Report

    This runner:
    - Generates the orbits the task needs from the configured system
    - Dispatches to the numeric operation named by the task
    - Wraps downstream failures with the task context
    """

    def __init__(self, config: ExperimentConfig):
        self.config = ExperimentConfig.normalize(config)
        self.x0 = config.x0 if config.x0 is not None else default_start_point(config.system)
        self.started: Optional[float] = None

    def setup(self) -> None:
        logger.info(
            f"Setting up run: task={self.config.task}, system={self.config.system.kind.value}, "
            f"seed={self.config.seed}, threads={self.config.threads}"
        )
        self.started = time.perf_counter()

    def shutdown(self) -> None:
        elapsed = time.perf_counter() - self.started if self.started is not None else 0.0
        logger.info(f"Run finished in {elapsed:.3f}s")

    @property
    def check(self) -> Optional[str]:
        return self.config.parameters.get('check') if self.config.task == 'verify' else None

    def process(self) -> Report:
        """Execute the configured task and return its report"""
        task = self.config.task
        handler = getattr(self, f'_{task}_{self.check}' if self.check else f'_{task}')
        try:
            report = handler(self.config.parameters)
        except (CubelabError, OSError) as e:
            raise TaskError(task, self.check, str(e)) from e
        from . import __version__

        elapsed = time.perf_counter() - self.started if self.started is not None else None
        report.metadata = build_metadata(self.config, __version__, elapsed)
        return report

    # -- orbit helpers --------------------------------------------------------

    def observables_for(self, count: int) -> list[Observable]:
        observables = list(self.config.observables.values())
        if len(observables) == 1:
            return observables * count
        return observables

    def orbits_for(self, count: int, length: int) -> list[Orbit]:
        """One orbit per role; roles sharing an observable share its orbit"""
        cache: dict[int, Orbit] = {}
        orbits = []
        for obs in self.observables_for(count):
            if id(obs) not in cache:
                cache[id(obs)] = generate_orbit(self.config.system, obs, self.x0, length)
            orbits.append(cache[id(obs)])
        return orbits

    # -- tasks ----------------------------------------------------------------

    def _orbit(self, params: dict) -> Report:
        (orbit,) = self.orbits_for(1, params['L'])
        report = Report(columns=['n', 're', 'im'])
        for n, value in enumerate(orbit.samples):
            report.add_row(n=n, re=value.real, im=value.imag)
        return report

    def _evaluate(self, method: str, orbits: list[Orbit], k: int, N: int) -> complex:
        if k in _FAST:
            return (_NAIVE if method == 'naive' else _FAST)[k](*orbits, N)
        spec = CubeSpec(k=k, functions=tuple(orbits))
        return cubek_naive(spec, N) if method == 'naive' else cubek_fast(spec, N)

    def _avg(self, params: dict) -> Report:
        k, N, method = params['k'], params['N'], params['method']
        orbits = self.orbits_for(2**k - 1, k * (N - 1) + 1)
        methods = ['naive', 'fast'] if method == 'both' else [method]
        report = Report(columns=['N', 'method', 're', 'im', 'abs'])
        values = {}
        for m in methods:
            value = self._evaluate(m, orbits, k, N)
            values[m] = value
            report.add_row(N=N, method=m, re=value.real, im=value.imag, abs=abs(value))
        if method == 'both':
            gap = abs(values['fast'] - values['naive'])
            bound = float(np.prod([orbit.sup_norm for orbit in orbits]))
            report.flags['relative_difference'] = gap / max(abs(values['naive']), np.finfo(float).tiny)
            report.passed = bool(gap <= BOTH_METHODS_RTOL * max(abs(values['naive']), 1e-4 * bound))
            if not report.passed:
                logger.warning(f"naive and fast cube averages disagree at N={N}: gap {gap:.3g}")
        return report

    def _ww(self, params: dict) -> Report:
        N = params['N']
        (orbit,) = self.orbits_for(1, N)
        stat = ww_sup(orbit, N, params['oversample'])
        report = Report(columns=['N', 'oversample', 'value', 'argmax_t'])
        report.add_row(N=N, oversample=stat.oversample, value=stat.value, argmax_t=stat.argmax_t)
        return report

    def _seminorm(self, params: dict) -> Report:
        order, N, H = params['order'], params['N'], params['H']
        report = Report(columns=['order', 'N', 'H', 'H_inner', 'value'])
        if order == 2:
            (orbit,) = self.orbits_for(1, N + H)
            estimate = seminorm2(orbit, N, H)
        else:
            H_inner = params['H_inner']
            (orbit,) = self.orbits_for(1, N + H + H_inner)
            estimate = seminorm3(orbit, N, H, H_inner)
        report.add_row(
            order=order, N=N, H=H, H_inner=estimate.H_inner or 0, value=estimate.value
        )
        return report

    def _trace(self, params: dict) -> Report:
        k, horizons = params['k'], params['horizons']
        orbits = self.orbits_for(2**k - 1, k * (max(horizons) - 1) + 1)
        result = trace(k, orbits, horizons, threads=self.config.threads)
        report = Report(columns=['N', 're', 'im', 'abs'])
        for row in result.rows():
            report.add_row(**row)
        decaying = result.is_decaying()
        report.flags['decaying'] = decaying
        if not decaying:
            logger.warning(f"k={k} cube average does not decay over horizons {horizons}")
        return report

    def _verify_vdc(self, params: dict) -> Report:
        N, H, trials = params['N'], params['H'], params['trials']
        seed = self.config.seed

        def one_trial(index: int) -> tuple[float, float]:
            rng = np.random.default_rng(trial_seed(seed, index))
            u = rng.standard_normal(N) + 1j * rng.standard_normal(N)
            return vdc_bound(u, N, H)

        results = run_ordered(
            [lambda i=i: one_trial(i) for i in range(trials)], threads=self.config.threads
        )
        report = Report(columns=['trial', 'N', 'H', 'lhs', 'rhs', 'holds'])
        for index, (lhs, rhs) in enumerate(results):
            report.add_row(trial=index, N=N, H=H, lhs=lhs, rhs=rhs, holds=lhs <= rhs)
        report.passed = all(report.column('holds'))
        if not report.passed:
            logger.warning(f"van der Corput bound failed in {report.column('holds').count(False)} trials")
        return report

    def _verify_lemma2(self, params: dict) -> Report:
        N, H = params['N'], params['H']
        (orbit,) = self.orbits_for(1, N + H)
        lhs, rhs = lemma2_check(orbit, N, H)
        report = Report(columns=['N', 'H', 'lhs', 'rhs'])
        report.add_row(N=N, H=H, lhs=lhs, rhs=rhs)
        report.flags['violation'] = lhs > LEMMA2_SLACK * rhs
        return report

    def _verify_lemma3(self, params: dict) -> Report:
        N = params['N']
        a, b = self.orbits_for(2, 2 * N - 1)
        value = lemma3_quantity(a, b, N, params['oversample'])
        report = Report(columns=['N', 'value'])
        report.add_row(N=N, value=value)
        return report

    def _verify_lemma4(self, params: dict) -> Report:
        k, N = params['k'], params['N']
        orbits = self.orbits_for(2 ** (k - 2), (k - 1) * (N - 1) + 1)
        value = lemma4_quantity(orbits, k, N, params['oversample'])
        report = Report(columns=['N', 'value'])
        report.add_row(N=N, value=value)
        return report

    def _degenerate_projection(self, factor: Factor, raw, projected) -> Optional[bool]:
        """Exact outcome when every projection is the identity or zero; None otherwise"""
        observables = list(self.config.observables.values())
        images = [project(self.config.system, obs, factor) for obs in observables]
        passed = None
        if all(image == obs for image, obs in zip(images, observables)):
            passed = raw == projected
        elif all(not image.terms and image.indicator is None for image in images):
            passed = projected == 0
        if passed is False:
            logger.warning(f"degenerate projection case violated: raw={raw!r}, projected={projected!r}")
        return passed

    def _projection_report(self, factor: Factor, raw: float, projected: float) -> Report:
        report = Report(columns=['N', 'raw', 'projected'])
        report.add_row(N=self.config.parameters['N'], raw=raw, projected=projected)
        report.passed = self._degenerate_projection(factor, raw, projected)
        return report

    def _verify_eq1(self, params: dict) -> Report:
        obs1, obs2 = self.observables_for(2)
        raw, projected = eq1_compare(self.config.system, obs1, obs2, params['N'], self.x0)
        return self._projection_report(Factor.KRONECKER, raw, projected)

    def _verify_eq10(self, params: dict) -> Report:
        observables = self.observables_for(4)
        raw, projected = eq10_compare(self.config.system, *observables, params['N'], x0=self.x0)
        return self._projection_report(Factor.CL, raw, projected)

    def _verify_char(self, params: dict) -> Report:
        k, N = params['k'], params['N']
        observables = self.observables_for(2**k - 1)
        raw, projected = characteristic_compare(self.config.system, observables, N, k, x0=self.x0)
        report = Report(columns=['k', 'N', 'raw_re', 'raw_im', 'projected_re', 'projected_im', 'difference'])
        report.add_row(
            k=k,
            N=N,
            raw_re=raw.real,
            raw_im=raw.imag,
            projected_re=projected.real,
            projected_im=projected.imag,
            difference=abs(raw - projected),
        )
        report.passed = self._degenerate_projection(CHARACTERISTIC_FACTORS[k], raw, projected)
        return report


def run(config: ExperimentConfig) -> Report:
    """Run a configuration, write its CSV when an output path is set, and echo a summary"""
    runner = ExperimentRunner(config)
    runner.setup()
    try:
        report = runner.process()
    finally:
        runner.shutdown()

    if runner.config.output:
        report.write_csv(runner.config.output)
    logger.info(report.summary())
    return report
