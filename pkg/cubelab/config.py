"""
Experiment configuration for cubelab
"""

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .dynamics import MASK64, Observable, SystemKind, SystemSpec
from .errors import ConfigParseError, ConfigValidationError, CubelabError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

TASKS = ('orbit', 'avg', 'ww', 'seminorm', 'verify', 'trace')
CHECKS = ('vdc', 'lemma2', 'lemma3', 'lemma4', 'eq1', 'eq10', 'char')
METHODS = ('naive', 'fast', 'both')

MAX_THREADS = 64
DEFAULT_ALPHA = float(np.sqrt(2.0) - 1.0)

_HORIZON_RANGE = re.compile(r'^\s*2\^(\d+)\s*\.\.\s*2\^(\d+)\s*$')


def _require(params: dict, key: str) -> Any:
    if params.get(key) is None:
        raise ConfigValidationError(key, "required parameter is missing")
    return params[key]


def _as_int(key: str, value: Any, minimum: Optional[int] = None) -> int:
    try:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ValueError
        result = int(value)
    except (TypeError, ValueError):
        raise ConfigValidationError(key, f"expected an integer, got {value!r}") from None
    if minimum is not None and result < minimum:
        raise ConfigValidationError(key, f"must be >= {minimum}, got {result}")
    return result


def parse_horizons(value: Any) -> list[int]:
    """Horizons from '2^a..2^b', a comma list, or a list of integers"""
    if isinstance(value, str):
        match = _HORIZON_RANGE.match(value)
        if match:
            low, high = (int(match.group(1)), int(match.group(2)))
            if low > high:
                raise ConfigValidationError('horizons', f"empty range {value!r}")
            return [2**e for e in range(low, high + 1)]
        value = [part for part in value.split(',') if part.strip()]
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigValidationError('horizons', f"expected a non-empty list, got {value!r}")
    horizons = [_as_int('horizons', v, minimum=1) for v in value]
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ConfigValidationError('horizons', f"must be strictly increasing, got {horizons}")
    return horizons


def _check_oversample(params: dict) -> None:
    oversample = _as_int('oversample', params.get('oversample', 8), minimum=2)
    if oversample & (oversample - 1):
        raise ConfigValidationError('oversample', f"must be a power of two, got {oversample}")
    params['oversample'] = oversample


def _check_k(params: dict, low: int, high: int) -> int:
    k = _as_int('k', _require(params, 'k'))
    if not (low <= k <= high):
        raise ConfigValidationError('k', f"must lie in [{low}, {high}], got {k}")
    params['k'] = k
    return k


def observables_needed(task: str, params: dict) -> Optional[int]:
    """Number of observables a task consumes; None when observables are unused"""
    if task in ('orbit', 'ww', 'seminorm'):
        return 1
    if task in ('avg', 'trace'):
        return 2 ** params['k'] - 1
    check = params.get('check')
    return {
        'vdc': None,
        'lemma2': 1,
        'lemma3': 2,
        'lemma4': 2 ** max(params.get('k', 3) - 2, 0),
        'eq1': 2,
        'eq10': 4,
        'char': 2 ** params.get('k', 2) - 1,
    }[check]


@dataclass
class ExperimentConfig:
    """Configuration of one cubelab run

    Observables are kept in order; a single observable is used for every role
    of a multi-function task.
    """

    system: SystemSpec = field(
        default_factory=lambda: SystemSpec(kind=SystemKind.ROTATION, alpha=DEFAULT_ALPHA)
    )
    observables: dict[str, Observable] = field(
        default_factory=lambda: {'f': Observable.character(1)}
    )
    task: str = 'avg'
    parameters: dict[str, Any] = field(
        default_factory=lambda: {'k': 2, 'N': 64, 'method': 'fast'}
    )
    x0: Optional[tuple[float, ...]] = None
    output: Optional[str] = None
    seed: int = 0
    threads: int = 1

    @classmethod
    def normalize(cls, config: 'ExperimentConfig') -> 'ExperimentConfig':
        """Normalize and validate configuration"""
        if config.task not in TASKS:
            raise ConfigValidationError('task', f"must be one of {', '.join(TASKS)}, got {config.task!r}")

        config.seed = _as_int('seed', config.seed, minimum=0)
        if config.seed > MASK64:
            raise ConfigValidationError('seed', "must fit in 64 bits")

        config.threads = _as_int('threads', config.threads)
        if config.threads < 1:
            logger.warning(f"threads ({config.threads}) below 1, running inline")
            config.threads = 1
        elif config.threads > MAX_THREADS:
            logger.warning(f"threads ({config.threads}) exceeds {MAX_THREADS}, capping")
            config.threads = MAX_THREADS

        if config.x0 is not None:
            coords = [config.x0] if np.isscalar(config.x0) else list(config.x0)
            try:
                config.x0 = tuple(float(v) for v in coords)
            except (TypeError, ValueError):
                raise ConfigValidationError('x0', f"expected numbers, got {config.x0!r}") from None
            if len(config.x0) != config.system.dimension:
                raise ConfigValidationError(
                    'x0', f"{config.system.kind.value} needs {config.system.dimension} coordinates"
                )

        params = dict(config.parameters)
        getattr(cls, f'_normalize_{config.task}')(params)
        config.parameters = params

        needed = observables_needed(config.task, params)
        count = len(config.observables)
        if needed is not None:
            if count == 0:
                raise ConfigValidationError('observables', f"task needs {needed} observables, none given")
            if count not in (1, needed):
                raise ConfigValidationError(
                    'observables', f"task needs 1 or {needed} observables, got {count}"
                )
            if config.system.dimension == 1:
                for name, obs in config.observables.items():
                    if not obs.is_one_dimensional:
                        raise ConfigValidationError(
                            'observables', f"{name} has y-modes but the system is one-dimensional"
                        )

        return config

    @staticmethod
    def _normalize_orbit(params: dict) -> None:
        params['L'] = _as_int('L', _require(params, 'L'), minimum=1)

    @staticmethod
    def _normalize_avg(params: dict) -> None:
        _check_k(params, 2, 4)
        params['N'] = _as_int('N', _require(params, 'N'), minimum=1)
        method = params.get('method') or 'fast'
        if method not in METHODS:
            raise ConfigValidationError('method', f"must be one of {', '.join(METHODS)}, got {method!r}")
        params['method'] = method

    @staticmethod
    def _normalize_ww(params: dict) -> None:
        params['N'] = _as_int('N', _require(params, 'N'), minimum=1)
        _check_oversample(params)

    @staticmethod
    def _normalize_seminorm(params: dict) -> None:
        order = _as_int('order', _require(params, 'order'))
        if order not in (2, 3):
            raise ConfigValidationError('order', f"must be 2 or 3, got {order}")
        params['order'] = order
        params['N'] = _as_int('N', _require(params, 'N'), minimum=1)
        params['H'] = _as_int('H', _require(params, 'H'), minimum=1)
        if order == 3:
            params['H_inner'] = _as_int('H_inner', params.get('H_inner') or params['H'], minimum=1)

    @staticmethod
    def _normalize_trace(params: dict) -> None:
        _check_k(params, 2, 4)
        params['horizons'] = parse_horizons(_require(params, 'horizons'))

    @staticmethod
    def _normalize_verify(params: dict) -> None:
        check = _require(params, 'check')
        if check not in CHECKS:
            raise ConfigValidationError('check', f"must be one of {', '.join(CHECKS)}, got {check!r}")
        params['N'] = _as_int('N', _require(params, 'N'), minimum=1)
        if check in ('vdc', 'lemma2'):
            params['H'] = _as_int('H', _require(params, 'H'), minimum=1)
        if check == 'vdc':
            if params['H'] >= params['N']:
                raise ConfigValidationError('H', f"must be below N={params['N']}, got {params['H']}")
            params['trials'] = _as_int('trials', params.get('trials', 1000), minimum=1)
        if check in ('lemma3', 'lemma4'):
            _check_oversample(params)
        if check == 'lemma4':
            _check_k(params, 3, 4)
        if check == 'char':
            params.setdefault('k', 2)
            _check_k(params, 2, 3)

    def to_dict(self) -> dict[str, Any]:
        return {
            'schema': SCHEMA_VERSION,
            'system': self.system.to_dict(),
            'observables': {name: obs.to_dict() for name, obs in self.observables.items()},
            'task': self.task,
            'parameters': dict(self.parameters),
            'x0': list(self.x0) if self.x0 is not None else None,
            'output': self.output,
            'seed': self.seed,
            'threads': self.threads,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'ExperimentConfig':
        schema = data.get('schema')
        if schema != SCHEMA_VERSION:
            raise ConfigValidationError('schema', f"unsupported schema {schema!r}, expected {SCHEMA_VERSION}")
        try:
            system = SystemSpec.from_dict(data['system'])
        except KeyError as e:
            raise ConfigValidationError('system', f"missing key {e}") from None
        except CubelabError as e:
            raise ConfigValidationError('system', str(e)) from e
        try:
            observables = {
                name: Observable.from_dict(obs) for name, obs in (data.get('observables') or {}).items()
            }
        except (CubelabError, TypeError, ValueError) as e:
            raise ConfigValidationError('observables', str(e)) from e
        return cls(
            system=system,
            observables=observables,
            task=data.get('task', 'avg'),
            parameters=dict(data.get('parameters') or {}),
            x0=data.get('x0'),
            output=data.get('output'),
            seed=data.get('seed', 0),
            threads=data.get('threads', 1),
        )


def default_config() -> ExperimentConfig:
    return ExperimentConfig.normalize(ExperimentConfig())


def dump_config(config: ExperimentConfig, path: str) -> None:
    with open(path, 'w') as fh:
        json.dump(config.to_dict(), fh, indent=2)
        fh.write('\n')
    logger.info(f"Wrote config to {path}")


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment configuration"""
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(path, e.lineno, e.colno, e.msg) from None
    if not isinstance(data, dict):
        raise ConfigParseError(path, 1, 1, "top level must be an object")
    return ExperimentConfig.normalize(ExperimentConfig.from_dict(data))
