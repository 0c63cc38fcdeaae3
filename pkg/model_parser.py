"""
Parsing for model config files and run manifests

Both use the same line-oriented format::

    # comment
    [model]
    name = "kgs"
    fhat = "-v*u^2 + m*u"
    ghat = "-mu + v + v*u^2"
    D_v = 7.2
    beta = 0

    [params]
    m = 0.5

Values are double-quoted strings, numbers, or comma-separated number lists.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

from utils import UsageError

Value = Union[str, float, List[float]]


class ConfigSyntaxError(UsageError):
    """Malformed config line; carries the 1-based line number"""

    def __init__(self, message: str, line_number: int, source: str = '<config>'):
        self.line_number = line_number
        self.source = source
        super().__init__(f"{source}:{line_number}: {message}")


@dataclass
class ModelDefinition:
    """Parsed [model] and [params] sections, expressions still as text"""
    name: str
    fhat: str
    ghat: str
    D_v: float
    beta: float = 0.0
    params: Dict[str, float] = field(default_factory=dict)


def _parse_value(raw: str, line_number: int, source: str) -> Value:
    raw = raw.strip()
    if raw.startswith('"'):
        if len(raw) < 2 or not raw.endswith('"'):
            raise ConfigSyntaxError("unterminated string", line_number, source)
        return raw[1:-1]
    if ',' in raw:
        try:
            return [float(item) for item in raw.split(',') if item.strip()]
        except ValueError:
            raise ConfigSyntaxError(f"invalid number list: {raw}", line_number, source)
    try:
        return float(raw)
    except ValueError:
        raise ConfigSyntaxError(f"expected a number or quoted string, got: {raw}", line_number, source)


def _format_value(value: Value) -> str:
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, (list, tuple)):
        text = ', '.join(repr(float(item)) for item in value)
        return text + ',' if len(value) == 1 else text
    return repr(float(value))


class ModelFileParser:
    """Parse sectioned key = value files"""

    def parse(self, content: str, source: str = '<config>') -> Dict[str, Dict[str, Value]]:
        """Parse into {section: {key: value}}"""
        sections: Dict[str, Dict[str, Value]] = {}
        current_section: Optional[str] = None

        for line_number, line in enumerate(content.split('\n'), start=1):
            line = line.strip()

            if not line or line.startswith('#'):
                continue

            if line.startswith('['):
                if not line.endswith(']') or len(line) < 3:
                    raise ConfigSyntaxError(f"malformed section header: {line}", line_number, source)
                current_section = line[1:-1].strip()
                if current_section in sections:
                    raise ConfigSyntaxError(f"duplicate section [{current_section}]", line_number, source)
                sections[current_section] = {}
            elif '=' in line:
                if current_section is None:
                    raise ConfigSyntaxError("key outside of any section", line_number, source)
                key, raw = line.split('=', 1)
                key = key.strip()
                if not key.isidentifier():
                    raise ConfigSyntaxError(f"invalid key: {key!r}", line_number, source)
                if key in sections[current_section]:
                    raise ConfigSyntaxError(f"duplicate key '{key}'", line_number, source)
                sections[current_section][key] = _parse_value(raw, line_number, source)
            else:
                raise ConfigSyntaxError(f"expected 'key = value' or [section], got: {line}", line_number, source)

        return sections

    def parse_model(self, content: str, source: str = '<config>') -> ModelDefinition:
        sections = self.parse(content, source)
        problems = self.validate(sections)
        if problems:
            raise UsageError(f"{source}: " + '; '.join(problems))
        return self.model_definition(sections)

    @staticmethod
    def validate(sections: Dict[str, Dict[str, Value]]) -> List[str]:
        """List problems with the [model] and [params] sections"""
        problems = []
        model = sections.get('model')
        if model is None:
            return ["missing [model] section"]
        for key in ('fhat', 'ghat'):
            if not isinstance(model.get(key), str) or not model.get(key):
                problems.append(f"[model] {key} must be a quoted expression")
        D_v = model.get('D_v')
        if not isinstance(D_v, float):
            problems.append("[model] D_v must be a number")
        elif not (math.isfinite(D_v) and D_v > 0):
            problems.append(f"[model] D_v must be positive (got {D_v})")
        beta = model.get('beta', 0.0)
        if not isinstance(beta, float) or not math.isfinite(beta) or beta < 0:
            problems.append(f"[model] beta must be a non-negative number (got {beta})")
        for key, value in sections.get('params', {}).items():
            if not isinstance(value, float) or not math.isfinite(value):
                problems.append(f"[params] {key} must be a finite number")
        unknown = set(model) - {'name', 'fhat', 'ghat', 'D_v', 'beta'}
        if unknown:
            problems.append(f"[model] unknown keys: {sorted(unknown)}")
        return problems

    @staticmethod
    def model_definition(sections: Dict[str, Dict[str, Value]]) -> ModelDefinition:
        model = sections['model']
        name = model.get('name', 'custom')
        return ModelDefinition(
            name=name if isinstance(name, str) else 'custom',
            fhat=model['fhat'],
            ghat=model['ghat'],
            D_v=float(model['D_v']),
            beta=float(model.get('beta', 0.0)),
            params={key: float(value) for key, value in sections.get('params', {}).items()},
        )

    @staticmethod
    def render_sections(sections: Dict[str, Dict[str, Value]]) -> str:
        lines = []
        for section, entries in sections.items():
            if lines:
                lines.append('')
            lines.append(f'[{section}]')
            for key, value in entries.items():
                lines.append(f'{key} = {_format_value(value)}')
        return '\n'.join(lines) + '\n'

    @classmethod
    def render(cls, definition: ModelDefinition) -> str:
        return cls.render_sections(cls.model_sections(definition))

    @staticmethod
    def model_sections(definition: ModelDefinition) -> Dict[str, Dict[str, Value]]:
        return {
            'model': {
                'name': definition.name,
                'fhat': definition.fhat,
                'ghat': definition.ghat,
                'D_v': definition.D_v,
                'beta': definition.beta,
            },
            'params': dict(definition.params),
        }
