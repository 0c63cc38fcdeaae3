"""
Output files: field CSVs, 8-bit PGM images with scale sidecars, and run manifests

A manifest uses the same sectioned ``key = value`` format as model files and
holds everything needed to repeat a simulation.
"""

import csv
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from model_parser import ModelFileParser, Value
from pattern_profile import Field2D
from utils import UsageError, get_logger

logger = get_logger('field_io')

MANIFEST_NAME = 'manifest.txt'
MANIFEST_SECTIONS = ('model', 'params', 'analysis', 'pattern', 'simulation')


def snapshot_basename(component: str, time: float) -> str:
    return f"{component}_t{time:g}"


def write_field_csv(path: str, values: np.ndarray) -> str:
    """One grid row per line, full precision"""
    np.savetxt(path, np.asarray(values, dtype=float), fmt='%.17g', delimiter=',')
    return path


def read_field_csv(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=',', ndmin=2)


def write_pgm(path: str, values: np.ndarray) -> Tuple[float, float]:
    """Binary P5 image, min-max scaled to 0..255; returns (min, max)"""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise UsageError("PGM output needs a 2-D array")
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        pixels = np.rint((values - lo) / (hi - lo) * 255.0)
    else:
        pixels = np.zeros_like(values)
    rows, cols = values.shape
    with open(path, 'wb') as handle:
        handle.write(f"P5\n{cols} {rows}\n255\n".encode('ascii'))
        handle.write(pixels.astype(np.uint8).tobytes())
    return lo, hi


def read_pgm(path: str) -> np.ndarray:
    with open(path, 'rb') as handle:
        content = handle.read()
    header = content.split(b'\n', 3)
    if len(header) < 4 or header[0] != b'P5':
        raise UsageError(f"{path}: not a binary PGM file")
    cols, rows = (int(item) for item in header[1].split())
    return np.frombuffer(header[3], dtype=np.uint8, count=rows * cols).reshape(rows, cols)


def write_scale_sidecar(path: str, component: str, time: float, lo: float, hi: float) -> str:
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(f"component = {component}\n")
        handle.write(f"time = {time!r}\n")
        handle.write(f"min = {lo!r}\n")
        handle.write(f"max = {hi!r}\n")
    return path


def write_snapshot(run_dir: str, time: float, snapshot: Field2D) -> List[str]:
    """``<component>_t<time>.csv``, ``.pgm`` and ``.scale.txt`` for u and v"""
    written = []
    for component, values in (('u', snapshot.u), ('v', snapshot.v)):
        base = os.path.join(run_dir, snapshot_basename(component, time))
        written.append(write_field_csv(base + '.csv', values))
        lo, hi = write_pgm(base + '.pgm', values)
        written.append(base + '.pgm')
        written.append(write_scale_sidecar(base + '.scale.txt', component, time, lo, hi))
    logger.debug(f"wrote snapshot t={time:g} to {run_dir}")
    return written


@dataclass
class RunManifest:
    """Sections of a recorded run, in the model-file format"""
    sections: Dict[str, Dict[str, Value]] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, Value]:
        if name not in self.sections:
            raise UsageError(f"manifest has no [{name}] section")
        return self.sections[name]

    def get(self, section: str, key: str, default: Optional[Value] = None) -> Value:
        entries = self.section(section)
        if key not in entries:
            if default is None:
                raise UsageError(f"manifest [{section}] is missing '{key}'")
            return default
        return entries[key]

    def to_text(self) -> str:
        ordered = {name: self.sections[name] for name in MANIFEST_SECTIONS if name in self.sections}
        ordered.update({name: entries for name, entries in self.sections.items() if name not in ordered})
        return ModelFileParser.render_sections(ordered)

    def save(self, path: str) -> str:
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(self.to_text())
        return path

    @classmethod
    def from_text(cls, content: str, source: str = '<manifest>') -> 'RunManifest':
        sections = ModelFileParser().parse(content, source)
        problems = ModelFileParser.validate(sections)
        if problems:
            raise UsageError(f"{source}: " + '; '.join(problems))
        return cls(sections=sections)

    @classmethod
    def load(cls, path: str) -> 'RunManifest':
        with open(path, 'r', encoding='utf-8') as handle:
            return cls.from_text(handle.read(), source=path)


def write_table_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    """Header line plus one row per record; floats are written with repr precision"""
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(value)) if isinstance(value, (float, np.floating)) else value
                             for value in row])
    return path
