"""
Simulation presets: built-in model, Turing point and dihedral coefficient set
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from localform import Predictors
from matching import REFERENCE_SETS
from model import ModelRegistry
from sim import snapshot_schedule
from turing import TuringPoint
from utils import UsageError

ENVELOPE_WAVELENGTHS = 3.0
DOMAIN_WAVELENGTHS = 20


@dataclass(frozen=True)
class ModelPreset:
    model_name: str
    guess_index: int
    amplitude: float
    reference_length: float
    envelope_wavelengths: float = ENVELOPE_WAVELENGTHS


# model, Turing guess index, C, reference domain length, envelope length in wavelengths
MODEL_PRESETS: Dict[str, ModelPreset] = {
    'kgs': ModelPreset('kgs', 0, 1.0, 396.0, 3.0),
    'logistic': ModelPreset('logistic_klausmeier', 0, 1.0, 780.0, 3.0),
    'gilad': ModelPreset('nfc_gilad', 0, 1.0, 378.0, 3.0),
    'vh1': ModelPreset('von_hardenberg', 0, 4.0, 1190.0, 3.0),
    'vh2': ModelPreset('von_hardenberg', 1, 1.0, 612.0, 3.0),
}


@dataclass(frozen=True)
class Preset:
    name: str
    model: ModelPreset
    pattern: str

    @property
    def m(self) -> int:
        return REFERENCE_SETS[self.pattern][0]

    @property
    def N(self) -> int:
        return REFERENCE_SETS[self.pattern][1]

    @property
    def coeffs(self) -> Tuple[float, ...]:
        return REFERENCE_SETS[self.pattern][2]

    @property
    def guess(self) -> Tuple[float, float, float]:
        return ModelRegistry.turing_guesses(self.model.model_name)[self.model.guess_index]

    @property
    def schedule(self) -> Tuple[float, ...]:
        return snapshot_schedule(self.model.model_name)


def parse_preset(text: str) -> Preset:
    """'<model>:<pattern>', e.g. 'kgs:hexagon'"""
    model_key, _, pattern = text.partition(':')
    if model_key not in MODEL_PRESETS:
        raise UsageError(f"unknown preset model '{model_key}' (available: {', '.join(MODEL_PRESETS)})")
    pattern = pattern or 'hexagon'
    if pattern not in REFERENCE_SETS:
        raise UsageError(f"unknown preset pattern '{pattern}' (available: {', '.join(REFERENCE_SETS)})")
    return Preset(name=f"{model_key}:{pattern}", model=MODEL_PRESETS[model_key], pattern=pattern)


def list_presets() -> List[str]:
    return [f"{model}:{pattern}" for model in MODEL_PRESETS for pattern in REFERENCE_SETS]


def default_eps(tp: TuringPoint, pred: Predictors, sign: Optional[int] = None,
                envelope_wavelengths: float = ENVELOPE_WAVELENGTHS) -> float:
    """ε with envelope exp(-sqrt(P1 ε) r) decaying over ``envelope_wavelengths`` wavelengths

    |ε| = 1 / (|P1| (nλ)²), on the side of sign(P1) unless a sign is forced.
    """
    if not envelope_wavelengths > 0:
        raise UsageError(f"envelope length must be positive (got {envelope_wavelengths})")
    if pred.P1 == 0.0:
        raise UsageError("P1 = 0: no bifurcation side for localised patterns")
    magnitude = 1.0 / (abs(pred.P1) * (envelope_wavelengths * tp.wavelength) ** 2)
    return magnitude * (sign if sign is not None else math.copysign(1.0, pred.P1))


def default_length(tp: TuringPoint) -> float:
    return DOMAIN_WAVELENGTHS * tp.wavelength
