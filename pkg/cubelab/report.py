"""
Report building utilities
"""

import json
import logging
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Optional

import numpy as np

logger = logging.getLogger(__name__)

TOOL_NAME = 'cubelab'


def format_value(value: Any) -> str:
    """CSV cell: floats with 17 significant digits, integers and text verbatim"""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f'{float(value):.16e}'
    return str(value)


def build_metadata(config, version: str, wall_clock: Optional[float] = None) -> dict[str, Any]:
    """
    Build the metadata block written at the top of every report

    Args:
        config: ExperimentConfig that produced the report
        version: cubelab version string
        wall_clock: elapsed seconds of the run, when known

    Returns:
        Ordered metadata dictionary
    """
    metadata = {
        'id': str(uuid.uuid4()),
        'tool': f'{TOOL_NAME} {version}',
        'time': datetime.now(timezone.utc).isoformat().replace('+00:00', 'Z'),
        'task': config.task,
        'seed': config.seed,
        'config': json.dumps(config.to_dict(), sort_keys=True, separators=(',', ':')),
    }
    if config.task == 'verify':
        metadata['check'] = config.parameters.get('check')
    if wall_clock is not None:
        metadata['wall_clock_seconds'] = f'{wall_clock:.3f}'
    return metadata


@dataclass
class Report:
    """Rows of named columns plus a metadata block

    `passed` is None for tasks without a pass/fail outcome.
    """

    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)
    passed: Optional[bool] = None
    flags: dict[str, Any] = field(default_factory=dict)

    def add_row(self, **values: Any) -> None:
        missing = [c for c in self.columns if c not in values]
        if missing:
            raise KeyError(f"row is missing columns {missing}")
        self.rows.append({c: values[c] for c in self.columns})

    def column(self, name: str) -> list[Any]:
        return [row[name] for row in self.rows]

    def numeric_lines(self) -> list[str]:
        """Header plus formatted rows, without the metadata block"""
        lines = [','.join(self.columns)]
        for row in self.rows:
            lines.append(','.join(format_value(row[c]) for c in self.columns))
        return lines

    def write_csv(self, path: str) -> None:
        with open(path, 'w', newline='') as fh:
            for key, value in self.metadata.items():
                fh.write(f'# {key}: {value}\n')
            for key, value in self.flags.items():
                fh.write(f'# {key}: {format_value(value)}\n')
            for line in self.numeric_lines():
                fh.write(line + '\n')
        logger.info(f"Wrote {len(self.rows)} rows to {path}")

    def summary(self) -> str:
        task = self.metadata.get('task', '?')
        if self.metadata.get('check'):
            task = f"{task} {self.metadata['check']}"
        parts = [f"{task}: {len(self.rows)} rows"]
        if self.rows:
            last = self.rows[-1]
            parts.append(', '.join(f'{c}={format_value(last[c])}' for c in self.columns))
        parts.extend(f'{key}={format_value(value)}' for key, value in self.flags.items())
        if self.passed is not None:
            parts.append('PASS' if self.passed else 'FAIL')
        return ' | '.join(parts)
