"""
Tests for simulation presets and default run parameters.
"""
import math

import pytest

from localform import Predictors, analyze_point
from model import builtin
from presets import ENVELOPE_WAVELENGTHS, MODEL_PRESETS, default_eps, default_length, list_presets, parse_preset
from turing import find_turing_point
from utils import UsageError


class TestParsePreset:
    """Test cases for parse_preset"""

    def test_model_and_pattern(self):
        preset = parse_preset('vh2:square')
        assert preset.model.model_name == 'von_hardenberg'
        assert (preset.m, preset.N) == (4, 5)
        assert preset.guess == pytest.approx((0.414, 0.271, 0.556))
        assert preset.schedule[0] == 200.0

    def test_default_pattern(self):
        assert parse_preset('kgs').pattern == 'hexagon'

    def test_vh1_amplitude(self):
        assert parse_preset('vh1:pentagon').model.amplitude == 4.0

    @pytest.mark.parametrize('text', ['gray_scott:hexagon', 'kgs:octagon'])
    def test_unknown(self, text):
        with pytest.raises(UsageError):
            parse_preset(text)

    def test_list_presets(self):
        presets = list_presets()
        assert len(presets) == len(MODEL_PRESETS) * 3
        assert 'gilad:pentagon' in presets


class TestDefaults:
    """Test cases for default eps and domain length"""

    def setup_method(self):
        model = builtin('kgs')
        self.tp = find_turing_point(model, 1.002, (1.071, 0.467))
        _, self.pred = analyze_point(model, self.tp)

    def test_eps_follows_p1(self):
        eps = default_eps(self.tp, self.pred)
        assert eps > 0
        decay_length = 1.0 / math.sqrt(self.pred.P1 * eps)
        assert decay_length == pytest.approx(ENVELOPE_WAVELENGTHS * self.tp.wavelength, rel=1e-12)
        negative = Predictors(-self.pred.P1, self.pred.P2, self.pred.P3, self.pred.P4)
        assert default_eps(self.tp, negative) < 0

    def test_forced_sign(self):
        assert default_eps(self.tp, self.pred, sign=-1) < 0

    def test_length(self):
        assert default_length(self.tp) == pytest.approx(20 * self.tp.wavelength)

    def test_kgs_envelope_spans_hexagon_lattice(self):
        preset = parse_preset('kgs:hexagon')
        eps = default_eps(self.tp, self.pred, envelope_wavelengths=preset.model.envelope_wavelengths)
        assert eps == pytest.approx(4.10e-5, rel=5e-3)
        # outer lattice terms J_6 and J_12 peak near kr = 7 and kr = 13
        assert math.exp(-math.sqrt(self.pred.P1 * eps) * 13.0 / self.tp.k) > 0.4

    def test_envelope_must_be_positive(self):
        with pytest.raises(UsageError):
            default_eps(self.tp, self.pred, envelope_wavelengths=0.0)

    def test_every_preset_records_envelope(self):
        assert all(preset.envelope_wavelengths > 1.0 for preset in MODEL_PRESETS.values())
