"""
Tests for models, the built-in registry and the model config format.
"""
import os
import tempfile

import numpy as np
import pytest

import expr
from model import (InvalidModelError, ModelRegistry, UnknownModelError, builtin, default_turing_guesses,
                   effective_reaction, load_model_file, partial_keys, partial_tensor)
from model_parser import ConfigSyntaxError, ModelFileParser
from utils import UsageError


class TestBuiltinModels:
    """Test cases for the built-in registry"""

    def test_kgs_defaults(self):
        model = builtin('kgs')
        assert model.D_v == 7.2
        assert model.beta == 0.0
        assert model.params == {'m': 0.5}
        bindings = {'u': 1.3, 'v': 0.4, 'mu': 1.1, 'm': 0.5}
        assert model.fhat.evaluate(bindings) == pytest.approx(-0.4 * 1.3 ** 2 + 0.5 * 1.3)
        assert model.ghat.evaluate(bindings) == pytest.approx(-1.1 + 0.4 + 0.4 * 1.3 ** 2)

    def test_von_hardenberg_cross_diffusion(self):
        model = builtin('von_hardenberg')
        assert model.beta == 3.0
        assert model.D_v == 100.0

    def test_registry_lists_all_models(self):
        assert set(ModelRegistry.list_models()) >= {'kgs', 'logistic_klausmeier', 'nfc_gilad', 'von_hardenberg'}

    def test_unknown_model(self):
        with pytest.raises(UnknownModelError):
            builtin('gray_scott_3d')

    def test_unknown_override(self):
        with pytest.raises(UnknownModelError):
            builtin('kgs', {'zeta': 1.0})

    def test_override_aliases(self):
        model = builtin('kgs', {'delta_v': 3.0, 'm': 1.0})
        assert model.D_v == 3.0
        assert model.params['m'] == 1.0

    def test_invalid_diffusion(self):
        with pytest.raises(InvalidModelError):
            builtin('kgs', {'D_v': -1.0})

    def test_default_turing_guesses(self):
        assert len(default_turing_guesses('von_hardenberg')) == 2
        mu, u, v = default_turing_guesses('kgs')[0]
        assert (mu, u, v) == pytest.approx((1.002, 1.071, 0.467))


class TestEffectiveReaction:
    """Test cases for f = f̂ and g = ĝ/D_v + βf̂"""

    def setup_method(self):
        self.rng = np.random.default_rng(7)

    def test_zero_beta_reduces_to_scaled_ghat(self):
        model = builtin('kgs')
        f, g = effective_reaction(model)
        for u, v, mu in self.rng.uniform(0.1, 2.0, (50, 3)):
            bindings = expr.bindings_for(u, v, mu, model.bindings())
            assert f.evaluate(bindings) == pytest.approx(-v * u ** 2 + 0.5 * u, rel=1e-12, abs=1e-15)
            assert g.evaluate(bindings) == pytest.approx((-mu + v + v * u ** 2) / 7.2, rel=1e-12, abs=1e-15)

    def test_von_hardenberg_adds_beta_fhat(self):
        model = builtin('von_hardenberg')
        f, g = effective_reaction(model)
        gamma, sigma, nu, rho = 1.6, 1.6, 0.2, 1.5
        for u, v, mu in self.rng.uniform(0.05, 1.0, (50, 3)):
            bindings = expr.bindings_for(u, v, mu, model.bindings())
            fhat = -gamma * v * u / (1 + sigma * v) + u ** 2 + nu * u
            ghat = -mu + (1 - rho * u) * v + u * v ** 2
            assert g.evaluate(bindings) == pytest.approx(ghat / 100.0 + 3.0 * fhat, rel=1e-12, abs=1e-15)


class TestPartialTensor:
    """Test cases for evaluated partial derivatives"""

    def test_kgs_partials(self):
        model = builtin('kgs')
        values = partial_tensor(model, 1.2, 0.3, 1.0)
        assert values[('f', 1, 0, 0)] == pytest.approx(-2 * 1.2 * 0.3 + 0.5)
        assert values[('f', 3, 0, 0)] == pytest.approx(0.0)
        assert values[('f', 2, 1, 0)] == pytest.approx(-2.0)
        assert values[('g', 0, 0, 1)] == pytest.approx(-1 / 7.2)

    def test_partials_match_finite_differences(self):
        rng = np.random.default_rng(11)
        h = 1e-5
        for name in ('kgs', 'logistic_klausmeier', 'nfc_gilad', 'von_hardenberg'):
            model = builtin(name)
            for u, v, mu in rng.uniform(0.2, 1.0, (5, 3)):
                values = partial_tensor(model, u, v, mu, max_order=2)
                for component in ('f', 'g'):
                    plus = partial_tensor(model, u + h, v, mu, max_order=1)[(component, 0, 1, 0)]
                    minus = partial_tensor(model, u - h, v, mu, max_order=1)[(component, 0, 1, 0)]
                    numeric = (plus - minus) / (2 * h)
                    assert values[(component, 1, 1, 0)] == pytest.approx(numeric, rel=1e-6, abs=1e-8)

    def test_max_order_bounds(self):
        with pytest.raises(UsageError):
            partial_keys(4)

    def test_jet_matches_partial_tensor(self):
        model = builtin('nfc_gilad')
        values = partial_tensor(model, 0.5, 0.8, 1.6)
        M = model.jet.jacobian(0.5, 0.8, 1.6)
        assert M[0, 1] == pytest.approx(values[('f', 0, 1, 0)])
        assert M[1, 0] == pytest.approx(values[('g', 1, 0, 0)])


class TestModelFileParser:
    """Test cases for the sectioned config format"""

    def setup_method(self):
        self.parser = ModelFileParser()

    def test_parse_model_file(self):
        content = """
# Klausmeier-Gray-Scott
[model]
name = "kgs_file"
fhat = "-v*u^2 + m*u"
ghat = "-mu + v + v*u^2"
D_v = 7.2
beta = 0

[params]
m = 0.5
"""
        definition = self.parser.parse_model(content)
        assert definition.name == "kgs_file"
        assert definition.D_v == 7.2
        assert definition.params == {'m': 0.5}

    def test_syntax_error_line_number(self):
        content = "[model]\nfhat = \"u\"\nthis is not valid\n"
        with pytest.raises(ConfigSyntaxError) as info:
            self.parser.parse(content)
        assert info.value.line_number == 3

    def test_unterminated_string(self):
        with pytest.raises(ConfigSyntaxError):
            self.parser.parse('[model]\nfhat = "u\n')

    def test_key_outside_section(self):
        with pytest.raises(ConfigSyntaxError) as info:
            self.parser.parse('fhat = "u"\n')
        assert info.value.line_number == 1

    def test_validate_reports_problems(self):
        sections = self.parser.parse('[model]\nfhat = "u"\nD_v = -2\nextra = 1\n')
        problems = ModelFileParser.validate(sections)
        assert any('ghat' in problem for problem in problems)
        assert any('D_v' in problem for problem in problems)
        assert any('unknown keys' in problem for problem in problems)

    def test_number_lists(self):
        sections = self.parser.parse('[simulation]\ntimes = 100, 200, 300\none = 4.5,\n')
        assert sections['simulation']['times'] == [100.0, 200.0, 300.0]
        assert sections['simulation']['one'] == [4.5]

    def test_builtin_round_trip_through_file(self):
        model = builtin('von_hardenberg')
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'vh.model')
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write(model.to_config_text())
            loaded = load_model_file(path)
        assert loaded.fhat == model.fhat
        assert loaded.ghat == model.ghat
        assert loaded.params == model.params
        assert (loaded.D_v, loaded.beta) == (model.D_v, model.beta)

    def test_render_is_stable(self):
        text = builtin('nfc_gilad').to_config_text()
        sections = self.parser.parse(text)
        assert ModelFileParser.render_sections(sections) == text
