"""
Two-component reaction-diffusion models

    u_t = Δu - f̂(u, v; μ)
    v_t = D_v Δ(v - βu) - ĝ(u, v; μ)

Steady states solve f = 0, g = 0 with the effective reactions f = f̂ and
g = ĝ/D_v + βf̂. ``D_v`` and ``beta`` enter the effective expressions as
symbols, so derivatives are shared across parameter overrides and only the
bindings change.
"""

import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import sympy as sp

import expr
from expr import Expression, ExpressionEvaluationError
from model_parser import ModelFileParser, ModelDefinition
from utils import UsageError

PartialKey = Tuple[str, int, int, int]
"""(component 'f' or 'g', order in u, order in v, order in mu)"""

RESERVED = ('D_v', 'beta')
_OVERRIDE_ALIASES = {'delta_v': 'D_v', 'dv': 'D_v'}


class UnknownModelError(UsageError):
    pass


class InvalidModelError(UsageError):
    pass


class PartialEvaluationError(ExpressionEvaluationError):
    pass


def partial_name(key: PartialKey) -> str:
    """Readable name for a partial, e.g. ('f', 2, 1, 0) -> 'f_uuv'"""
    component, n_u, n_v, n_mu = key
    suffix = 'u' * n_u + 'v' * n_v + ('_mu' * n_mu if n_mu else '')
    return f"{component}_{suffix}" if suffix else component


@dataclass(frozen=True)
class ModelSpec:
    """A reaction-diffusion model with its parameter values"""
    name: str
    fhat: Expression
    ghat: Expression
    D_v: float
    beta: float = 0.0
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.D_v) and self.D_v > 0):
            raise InvalidModelError(f"{self.name}: D_v must be positive and finite (got {self.D_v})")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise InvalidModelError(f"{self.name}: beta must be non-negative and finite (got {self.beta})")
        for key, value in self.params.items():
            if key in RESERVED or key in expr.VARIABLES:
                raise InvalidModelError(f"{self.name}: '{key}' is reserved and cannot be a parameter")
            if not math.isfinite(value):
                raise InvalidModelError(f"{self.name}: parameter {key} is not finite ({value})")
        allowed = set(self.params) | set(expr.VARIABLES)
        for label, e in (('fhat', self.fhat), ('ghat', self.ghat)):
            unknown = e.free_names() - allowed
            if unknown:
                raise InvalidModelError(f"{self.name}: {label} uses undeclared names {sorted(unknown)}")

    def bindings(self) -> Dict[str, float]:
        """Parameter bindings including the reserved D_v and beta"""
        values = dict(self.params)
        values['D_v'] = self.D_v
        values['beta'] = self.beta
        return values

    def with_overrides(self, overrides: Optional[Mapping[str, float]] = None) -> 'ModelSpec':
        if not overrides:
            return self
        params = dict(self.params)
        changes = {}
        for raw_key, value in overrides.items():
            key = _OVERRIDE_ALIASES.get(raw_key, raw_key)
            if key in RESERVED:
                changes[key] = float(value)
            elif key in params:
                params[key] = float(value)
            else:
                raise UnknownModelError(
                    f"unknown override '{raw_key}' for model {self.name}; "
                    f"known: {sorted(list(params) + list(RESERVED))}")
        return replace(self, params=params, **changes)

    @cached_property
    def jet(self) -> 'ReactionJet':
        return ReactionJet(self)

    def to_definition(self) -> ModelDefinition:
        return ModelDefinition(
            name=self.name,
            fhat=expr.to_text(self.fhat),
            ghat=expr.to_text(self.ghat),
            D_v=self.D_v,
            beta=self.beta,
            params=dict(self.params),
        )

    def to_config_text(self) -> str:
        return ModelFileParser.render(self.to_definition())


def model_from_definition(definition: ModelDefinition) -> ModelSpec:
    names = definition.params.keys()
    return ModelSpec(
        name=definition.name,
        fhat=expr.parse(definition.fhat, names),
        ghat=expr.parse(definition.ghat, names),
        D_v=definition.D_v,
        beta=definition.beta,
        params=dict(definition.params),
    )


def load_model_file(path: str) -> ModelSpec:
    """Read a ``.model`` config file"""
    with open(path, 'r', encoding='utf-8') as handle:
        content = handle.read()
    definition = ModelFileParser().parse_model(content, source=path)
    return model_from_definition(definition)


@lru_cache(maxsize=None)
def _effective(fhat: Expression, ghat: Expression, cross_diffusion: bool) -> Tuple[Expression, Expression]:
    params = fhat.params | ghat.params | frozenset(RESERVED)
    g_tree = ghat.tree / expr.symbol('D_v')
    if cross_diffusion:
        g_tree = g_tree + expr.symbol('beta') * fhat.tree
    return Expression(fhat.tree, params), Expression(g_tree, params)


def effective_reaction(model: ModelSpec) -> Tuple[Expression, Expression]:
    """Effective steady-state reactions f = f̂ and g = ĝ/D_v + βf̂"""
    return _effective(model.fhat, model.ghat, model.beta != 0)


@lru_cache(maxsize=None)
def _partial_expression(e: Expression, n_u: int, n_v: int, n_mu: int) -> Expression:
    tree = e.tree
    for name, count in (('u', n_u), ('v', n_v), ('mu', n_mu)):
        if count:
            tree = sp.diff(tree, expr.symbol(name), count)
    return Expression(tree, e.params)


def partial_expression(model: ModelSpec, key: PartialKey) -> Expression:
    component, n_u, n_v, n_mu = key
    f, g = effective_reaction(model)
    return _partial_expression(f if component == 'f' else g, n_u, n_v, n_mu)


def partial_keys(max_order: int) -> List[PartialKey]:
    """All (u, v) partials up to ``max_order``, each also with up to two mu-derivatives"""
    if not 1 <= max_order <= 3:
        raise UsageError(f"max_order must be 1..3 (got {max_order})")
    keys = []
    for component in ('f', 'g'):
        for n_mu in range(3):
            for order in range(max_order + 1):
                for n_u in range(order, -1, -1):
                    key = (component, n_u, order - n_u, n_mu)
                    if order or n_mu:
                        keys.append(key)
    return keys


def partial_tensor(model: ModelSpec, u: float, v: float, mu: float,
                   max_order: int = 3) -> Dict[PartialKey, float]:
    """Evaluate every partial of (f, g) listed by :func:`partial_keys`"""
    bindings = expr.bindings_for(u, v, mu, model.bindings())
    values = {}
    for key in partial_keys(max_order):
        try:
            values[key] = partial_expression(model, key).evaluate(bindings)
        except ExpressionEvaluationError as exc:
            raise PartialEvaluationError(f"{partial_name(key)} of model {model.name}: {exc}") from exc
    return values


class ReactionJet:
    """numpy-compiled partials of the effective reactions for one model"""

    def __init__(self, model: ModelSpec):
        self.model = model
        self._param_names = tuple(sorted(model.bindings()))
        self._param_values = tuple(model.bindings()[name] for name in self._param_names)
        self._compiled: Dict[PartialKey, Callable] = {}

    def partial(self, key: PartialKey) -> Callable[..., np.ndarray]:
        func = self._compiled.get(key)
        if func is None:
            compiled = partial_expression(self.model, key).compile(('u', 'v', 'mu') + self._param_names)
            values = self._param_values

            def func(u, v, mu, _compiled=compiled, _values=values):
                return _compiled(u, v, mu, *_values)

            self._compiled[key] = func
        return func

    def __call__(self, key: PartialKey, u, v, mu) -> np.ndarray:
        return self.partial(key)(u, v, mu)

    def residual(self, u, v, mu) -> np.ndarray:
        """Stacked (f, g) with the component axis last"""
        return np.stack([self(('f', 0, 0, 0), u, v, mu), self(('g', 0, 0, 0), u, v, mu)], axis=-1)

    def jacobian(self, u, v, mu) -> np.ndarray:
        """M = ∂(f, g)/∂(u, v) with shape (..., 2, 2)"""
        rows = []
        for component in ('f', 'g'):
            rows.append(np.stack([self((component, 1, 0, 0), u, v, mu),
                                  self((component, 0, 1, 0), u, v, mu)], axis=-1))
        return np.stack(rows, axis=-2)

    def mu_derivative(self, u, v, mu) -> np.ndarray:
        return np.stack([self(('f', 0, 0, 1), u, v, mu), self(('g', 0, 0, 1), u, v, mu)], axis=-1)


class ModelRegistry:
    """Registry of built-in models"""

    _models: Dict[str, Callable[[], ModelSpec]] = {}
    _guesses: Dict[str, List[Tuple[float, float, float]]] = {}

    @classmethod
    def register(cls, name: str, factory: Callable[[], ModelSpec],
                 turing_guesses: Optional[List[Tuple[float, float, float]]] = None):
        """Register a model factory with optional (mu, u, v) Turing-point guesses"""
        cls._models[name] = factory
        cls._guesses[name] = list(turing_guesses or [])

    @classmethod
    def create(cls, name: str, overrides: Optional[Mapping[str, float]] = None) -> ModelSpec:
        if name not in cls._models:
            raise UnknownModelError(f"Unknown model: {name} (available: {', '.join(cls.list_models())})")
        return cls._models[name]().with_overrides(overrides)

    @classmethod
    def list_models(cls) -> List[str]:
        return list(cls._models.keys())

    @classmethod
    def turing_guesses(cls, name: str) -> List[Tuple[float, float, float]]:
        if name not in cls._models:
            raise UnknownModelError(f"Unknown model: {name}")
        return list(cls._guesses[name])


def builtin(name: str, overrides: Optional[Mapping[str, float]] = None) -> ModelSpec:
    return ModelRegistry.create(name, overrides)


def default_turing_guesses(name: str) -> List[Tuple[float, float, float]]:
    """Reported (mu, u, v) Turing points of a built-in, used as search starts"""
    return ModelRegistry.turing_guesses(name)


def _define(name: str, fhat: str, ghat: str, D_v: float, beta: float,
            params: Dict[str, float]) -> Callable[[], ModelSpec]:
    def factory() -> ModelSpec:
        return ModelSpec(
            name=name,
            fhat=expr.parse(fhat, params.keys()),
            ghat=expr.parse(ghat, params.keys()),
            D_v=D_v,
            beta=beta,
            params=dict(params),
        )
    return factory


ModelRegistry.register(
    'kgs',
    _define('kgs', '-v*u^2 + m*u', '-mu + v + v*u^2', D_v=7.2, beta=0.0, params={'m': 0.5}),
    turing_guesses=[(1.002, 1.071, 0.467)],
)
ModelRegistry.register(
    'logistic_klausmeier',
    _define('logistic_klausmeier', '-(1 - b*u)*v*u^2 + m*u', '-mu + v + v*u^2',
            D_v=182.5, beta=0.0, params={'b': 1.0, 'm': 0.45}),
    turing_guesses=[(2.200, 0.465, 1.809)],
)
ModelRegistry.register(
    'nfc_gilad',
    _define('nfc_gilad', '-Lambda*v*u*(1 - u)*(1 + eta*u)^2 + u',
            '-mu + nu*(1 - rho*u)*v + Lambda*v*u*(1 + eta*u)^2',
            D_v=125.0, beta=0.0,
            params={'Lambda': 16 / 35, 'eta': 14 / 5, 'nu': 10 / 7, 'rho': 7 / 10}),
    turing_guesses=[(1.635, 0.474, 0.768)],
)
ModelRegistry.register(
    'von_hardenberg',
    _define('von_hardenberg', '-gamma*v*u/(1 + sigma*v) + u^2 + nu*u', '-mu + (1 - rho*u)*v + u*v^2',
            D_v=100.0, beta=3.0,
            params={'gamma': 1.6, 'sigma': 1.6, 'nu': 0.2, 'rho': 1.5}),
    turing_guesses=[(0.169, 0.017, 0.173), (0.414, 0.271, 0.556)],
)
