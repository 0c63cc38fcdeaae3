#!/usr/bin/env python3
"""
Dihedral pattern toolkit - command-line entry point

Subcommands take a model (built-in name or config file), find its Turing point
and work from there: steady states, Turing search, predictors, P4 sign maps,
matching coefficients, initial profiles and full simulations.
"""

import argparse
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import Settings
from equilibria import find_steady_states
from field_io import MANIFEST_NAME, RunManifest, write_snapshot, write_table_csv
from kgs_oracle import ORACLE_MARGIN, closed_form_guess, closed_form_sign_map, oracle_compare
from localform import LocalForm, Predictors, analyze_point, interpret, p4_sign_map
from matching import (KINDS, REFERENCE_SETS, SPOT_A, MatchingSolution, from_coefficients,
                      multistart, reference_solution, solve)
from model import ModelRegistry, ModelSpec, builtin, default_turing_guesses, load_model_file, model_from_definition
from model_parser import ModelFileParser
from pattern_profile import (Field2D, PatternSpec, count_gaps, count_peaks, dihedral_symmetry_error,
                             pattern_amplitude, pattern_correlation, ring_field, spotA_field)
from presets import ENVELOPE_WAVELENGTHS, default_eps, default_length, list_presets, parse_preset
from sim import SimConfig, SimulationBlowUpError, run, snapshot_schedule
from turing import (TuringPoint, TuringSearchError, discriminant, dispersion_curve, find_turing_point,
                    scan_turing_points)
from ui import FancyUI, TaskStatus
from utils import NumericalError, UsageError, get_logger, setup_logging, validate_configuration

logger = get_logger('cli')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


@dataclass
class RunConfig:
    """Resolved invocation: where the model comes from and where output goes"""
    command: str
    model_source: str
    output_dir: str
    seed: int
    debug: bool = False
    options: Dict[str, object] = field(default_factory=dict)


@dataclass
class SimulationPlan:
    """Everything a simulation run needs; round-trips through a run manifest"""
    model: ModelSpec
    guess: Tuple[float, float, float]
    tp: TuringPoint
    lf: LocalForm
    pred: Predictors
    pattern: PatternSpec
    name: str
    n_grid: int
    L: float
    dt: float
    snapshot_times: Tuple[float, ...]
    seed: int
    force: bool = False

    @property
    def t_end(self) -> float:
        return self.snapshot_times[-1]


def _parse_overrides(items: Optional[Sequence[str]]) -> Dict[str, float]:
    overrides = {}
    for item in items or []:
        key, sep, raw = item.partition('=')
        if not sep or not key.strip():
            raise UsageError(f"expected NAME=VALUE, got '{item}'")
        try:
            overrides[key.strip()] = float(raw)
        except ValueError:
            raise UsageError(f"parameter {key.strip()} needs a number, got '{raw}'")
    return overrides


def resolve_model(args) -> ModelSpec:
    """Built-in name or config file, with --param overrides applied"""
    overrides = _parse_overrides(getattr(args, 'param', None))
    if getattr(args, 'model_file', None):
        if not os.path.exists(args.model_file):
            raise UsageError(f"model file '{args.model_file}' not found")
        return load_model_file(args.model_file).with_overrides(overrides)
    return builtin(args.model or 'kgs', overrides)


def _turing_candidates(model: ModelSpec, args, settings: Settings,
                       preferred: Optional[int] = None) -> List[Tuple[float, float, float]]:
    mu_guess = getattr(args, 'mu_guess', None)
    u_guess = getattr(args, 'u_guess', None)
    v_guess = getattr(args, 'v_guess', None)
    if mu_guess is not None and u_guess is not None and v_guess is not None:
        return [(mu_guess, u_guess, v_guess)]

    candidates: List[Tuple[float, float, float]] = []
    if model.name == 'kgs' and 'm' in model.params:
        guess = closed_form_guess(model)
        if guess is not None:
            candidates.append(guess)
    if model.name in ModelRegistry.list_models():
        guesses = default_turing_guesses(model.name)
        if preferred is not None and 0 <= preferred < len(guesses):
            guesses = [guesses[preferred]] + [g for i, g in enumerate(guesses) if i != preferred]
        if mu_guess is not None:
            guesses = sorted(guesses, key=lambda g: abs(g[0] - mu_guess))
        candidates.extend(guesses)
    if mu_guess is not None:
        for state in find_steady_states(model, mu_guess, u_max=settings.seed_box, v_max=settings.seed_box):
            candidates.append((mu_guess, state.u_star, state.v_star))
    return candidates


def resolve_turing_point(model: ModelSpec, args, settings: Settings,
                         preferred: Optional[int] = None) -> Tuple[TuringPoint, Tuple[float, float, float]]:
    """First Turing point reached from the guesses; falls back to a μ-scan when --mu-range is given"""
    for guess in _turing_candidates(model, args, settings, preferred):
        try:
            return find_turing_point(model, guess[0], guess[1:]), tuple(float(g) for g in guess)
        except NumericalError as exc:
            logger.debug(f"{model.name}: guess {guess} failed: {exc}")

    mu_range = getattr(args, 'mu_range', None)
    if mu_range:
        points = scan_turing_points(model, tuple(mu_range))
        if points:
            mu_guess = getattr(args, 'mu_guess', None)
            tp = min(points, key=lambda p: abs(p.mu - mu_guess)) if mu_guess is not None else points[0]
            return tp, (tp.mu, tp.u_star, tp.v_star)
    raise TuringSearchError(f"{model.name}: no Turing point found; give --mu-guess/--u-guess/--v-guess "
                            f"or --mu-range")


def _output_dir(args, settings: Settings, command: str) -> str:
    if args.output_dir:
        return args.output_dir
    timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
    return os.path.join(settings.output_dir, f'{timestamp}_{command}')


def _matching_from_args(args, settings: Settings) -> MatchingSolution:
    if getattr(args, 'pattern', None):
        return reference_solution(args.pattern)
    kind = args.kind
    if args.m is None or args.N is None:
        raise UsageError("give --pattern, or --kind with --m and --N")
    if args.coeffs:
        return solve(kind, args.m, args.N, args.coeffs)
    solutions = multistart(kind, args.m, args.N, args.trials, args.seed, workers=settings.threads)
    if not solutions:
        raise NumericalError(f"{kind} m={args.m} N={args.N}: no solution from {args.trials} starts")
    return solutions[0]


def _pattern_field(plan: SimulationPlan) -> Field2D:
    if plan.pattern.kind == SPOT_A:
        return spotA_field(plan.tp, plan.pred, plan.pattern, plan.n_grid, plan.L)
    return ring_field(plan.tp, plan.lf, plan.pattern, plan.n_grid, plan.L, force=plan.force)


def _report_lines(model: ModelSpec, tp: TuringPoint, pred: Predictors) -> List[str]:
    lines = [
        f"model: {model.name} (D_v={model.D_v:g}, beta={model.beta:g}, "
        + ', '.join(f"{key}={value:g}" for key, value in sorted(model.params.items())) + ")",
        f"steady state: u*={tp.u_star:.10g}, v*={tp.v_star:.10g}",
        f"Turing point: mu*={tp.mu:.10g}, k={tp.k:.10g}, wavelength={tp.wavelength:.10g}",
        f"linearly stable side: eps {'>' if tp.eps_side > 0 else '<'} 0",
        f"predictors: {pred}",
    ]
    return lines + interpret(pred)


def _predictor_rows(tp: TuringPoint, pred: Predictors):
    return [('mu_star', tp.mu), ('u_star', tp.u_star), ('v_star', tp.v_star), ('k', tp.k),
            ('wavelength', tp.wavelength), ('P1', pred.P1), ('P2', pred.P2), ('P3', pred.P3), ('P4', pred.P4)]


# Simulation plans and manifests

def build_plan(args, settings: Settings) -> SimulationPlan:
    preferred = None
    amplitude = args.amplitude
    envelope = args.envelope
    reference_length = None
    if args.preset:
        preset = parse_preset(args.preset)
        model = builtin(preset.model.model_name, _parse_overrides(args.param))
        preferred = preset.model.guess_index
        matching = reference_solution(preset.pattern)
        amplitude = amplitude if amplitude is not None else preset.model.amplitude
        envelope = envelope if envelope is not None else preset.model.envelope_wavelengths
        reference_length = preset.model.reference_length
        name = preset.name
    else:
        model = resolve_model(args)
        matching = _matching_from_args(args, settings)
        name = 'custom'

    tp, guess = resolve_turing_point(model, args, settings, preferred)
    lf, pred = analyze_point(model, tp)
    if envelope is None:
        envelope = ENVELOPE_WAVELENGTHS
    eps = args.eps if args.eps is not None else default_eps(tp, pred, args.eps_sign, envelope)
    pattern = PatternSpec(kind=matching.kind, matching=matching, eps=eps,
                          amplitude=amplitude if amplitude is not None else 1.0)

    if args.length is not None:
        L = args.length
    elif args.reference_length:
        if reference_length is None:
            raise UsageError("--reference-length needs --preset")
        L = reference_length
    else:
        L = default_length(tp)

    times = tuple(args.snapshots) if args.snapshots else snapshot_schedule(model.name)
    if args.t_end is not None:
        times = tuple(t for t in times if t <= args.t_end)
        if not times or times[-1] != args.t_end:
            times = times + (float(args.t_end),)
    return SimulationPlan(model=model, guess=guess, tp=tp, lf=lf, pred=pred, pattern=pattern, name=name,
                          n_grid=args.ngrid or settings.ngrid, L=float(L), dt=args.dt or settings.dt,
                          snapshot_times=tuple(float(t) for t in times), seed=args.seed, force=args.force)


def plan_manifest(plan: SimulationPlan) -> RunManifest:
    sections = ModelFileParser.model_sections(plan.model.to_definition())
    sections['analysis'] = {
        'guess': list(plan.guess),
        'mu_star': plan.tp.mu, 'u_star': plan.tp.u_star, 'v_star': plan.tp.v_star, 'k': plan.tp.k,
        'P1': plan.pred.P1, 'P2': plan.pred.P2, 'P3': plan.pred.P3, 'P4': plan.pred.P4,
    }
    sections['pattern'] = {
        'name': plan.name,
        'kind': plan.pattern.kind,
        'm': float(plan.pattern.matching.m),
        'N': float(plan.pattern.matching.N),
        'coeffs': list(plan.pattern.matching.coeffs),
        'eps': plan.pattern.eps,
        'amplitude': plan.pattern.amplitude,
        'force': 1.0 if plan.force else 0.0,
    }
    sections['simulation'] = {
        'n_grid': float(plan.n_grid),
        'L': plan.L,
        'dt': plan.dt,
        't_end': plan.t_end,
        'snapshot_times': list(plan.snapshot_times),
        'seed': float(plan.seed),
    }
    return RunManifest(sections=sections)


def _as_list(value) -> List[float]:
    return list(value) if isinstance(value, list) else [float(value)]


def plan_from_manifest(manifest: RunManifest) -> SimulationPlan:
    """Rebuild a plan; the Turing search restarts from the recorded guess"""
    model = model_from_definition(ModelFileParser.model_definition(manifest.sections))
    guess = tuple(_as_list(manifest.get('analysis', 'guess')))
    if len(guess) != 3:
        raise UsageError("manifest [analysis] guess must hold mu, u, v")
    tp = find_turing_point(model, guess[0], guess[1:])
    lf, pred = analyze_point(model, tp)

    kind = manifest.get('pattern', 'kind')
    m, N = int(manifest.get('pattern', 'm')), int(manifest.get('pattern', 'N'))
    matching = from_coefficients(kind, m, N, _as_list(manifest.get('pattern', 'coeffs')))
    pattern = PatternSpec(kind=kind, matching=matching, eps=float(manifest.get('pattern', 'eps')),
                          amplitude=float(manifest.get('pattern', 'amplitude')))
    return SimulationPlan(
        model=model, guess=guess, tp=tp, lf=lf, pred=pred, pattern=pattern,
        name=str(manifest.get('pattern', 'name', 'custom')),
        n_grid=int(manifest.get('simulation', 'n_grid')),
        L=float(manifest.get('simulation', 'L')),
        dt=float(manifest.get('simulation', 'dt')),
        snapshot_times=tuple(_as_list(manifest.get('simulation', 'snapshot_times'))),
        seed=int(manifest.get('simulation', 'seed')),
        force=bool(manifest.get('pattern', 'force', 0.0)),
    )


# Subcommands

def cmd_steady(args, settings: Settings, ui: FancyUI, output_dir: str) -> int:
    model = resolve_model(args)
    states = find_steady_states(model, args.mu, u_max=settings.seed_box, v_max=settings.seed_box)
    rows = [(s.u_star, s.v_star, s.mu, s.residual, discriminant(model, s)) for s in states]
    header = ('u', 'v', 'mu', 'residual', 'discriminant')
    ui.table(header, rows, title=f"{model.name}: steady states at mu={args.mu:g}")
    write_table_csv(os.path.join(output_dir, 'steady_states.csv'), header, rows)
    if not states:
        ui.warning("No steady states found")
    return EXIT_OK


def cmd_turing(args, settings: Settings, ui: FancyUI, output_dir: str) -> int:
    model = resolve_model(args)
    if args.scan:
        if not args.mu_range:
            raise UsageError("--scan needs --mu-range LO HI")
        with ui.spinner(f"Scanning mu in [{args.mu_range[0]:g}, {args.mu_range[1]:g}]"):
            points = scan_turing_points(model, tuple(args.mu_range), n_mu=args.n_mu)
    else:
        points = [resolve_turing_point(model, args, settings)[0]]

    header = ('mu_star', 'u_star', 'v_star', 'k', 'wavelength', 'eps_side', 'discriminant_residual')
    rows = [(tp.mu, tp.u_star, tp.v_star, tp.k, tp.wavelength, tp.eps_side, tp.discriminant_residual)
            for tp in points]
    ui.table(header, rows, title=f"{model.name}: Turing points")
    write_table_csv(os.path.join(output_dir, 'turing.csv'), header, rows)
    for index, tp in enumerate(points):
        ks, rates = dispersion_curve(model, tp.state, 3.0 * tp.k)
        write_table_csv(os.path.join(output_dir, f'dispersion_{index}.csv'), ('k', 'growth_rate'),
                        zip(ks.tolist(), rates.tolist()))
    if not points:
        ui.warning("No Turing points found in the given range")
    return EXIT_OK


def cmd_predict(args, settings: Settings, ui: FancyUI, output_dir: str) -> int:
    model = resolve_model(args)
    tp, _ = resolve_turing_point(model, args, settings)
    _, pred = analyze_point(model, tp)
    rows = _predictor_rows(tp, pred)
    ui.table(('quantity', 'value'), rows, title=f"{model.name}: predictors")
    write_table_csv(os.path.join(output_dir, 'predictors.csv'), ('quantity', 'value'), rows)
    return EXIT_OK


def cmd_analyze(args, settings: Settings, ui: FancyUI, output_dir: str) -> int:
    model = resolve_model(args)
    with ui.spinner(f"Locating the Turing point of {model.name}"):
        tp, _ = resolve_turing_point(model, args, settings)
    lf, pred = analyze_point(model, tp)
    lines = _report_lines(model, tp, pred)
    ui.panel('\n'.join(lines), title=f"{model.name} analysis")
    with open(os.path.join(output_dir, 'report.txt'), 'w', encoding='utf-8') as handle:
        handle.write('\n'.join(lines) + '\n')
    rows = _predictor_rows(tp, pred) + [('gamma', lf.gamma), ('M2_method', lf.m2_method)]
    write_table_csv(os.path.join(output_dir, 'report.csv'), ('quantity', 'value'), rows)
    return EXIT_OK


def cmd_p4map(args, settings: Settings, ui: FancyUI, output_dir: str) -> int:
    xs = np.linspace(args.x_range[0], args.x_range[1], int(args.x_range[2]))
    ys = np.linspace(args.y_range[0], args.y_range[1], int(args.y_range[2]))
    if args.closed_form:
        if args.x_param not in ('D_v', 'delta_v') or args.y_param != 'm':
            raise UsageError("--closed-form maps need --x-param delta_v and --y-param m")
        classes = closed_form_sign_map(xs, ys)
        p4 = np.full(classes.shape, np.nan)
    else:
        model = resolve_model(args)
        guess = closed_form_guess if model.name == 'kgs' else None
        if guess is None and not args.mu_range:
            raise UsageError("p4map needs --mu-range for models without closed forms")
        with ui.spinner(f"Classifying {xs.size}x{ys.size} cells"):
            sign_map = p4_sign_map(model, args.x_param, xs, args.y_param, ys,
                                   tuple(args.mu_range) if args.mu_range else (0.0, 1.0),
                                   guess=guess, workers=settings.threads)
        classes, p4 = sign_map.classes, sign_map.p4

    rows = [(float(x), float(y), int(classes[i, j]), float(p4[i, j]))
            for i, x in enumerate(xs) for j, y in enumerate(ys)]
    write_table_csv(os.path.join(output_dir, 'p4map.csv'), (args.x_param, args.y_param, 'class', 'P4'), rows)
    counts = [int(np.count_nonzero(classes == label)) for label in (0, -1, 1)]
    ui.details_section("P4 sign map", [f"no Turing point: {counts[0]}", f"P4 < 0: {counts[1]}",
                                       f"P4 > 0: {counts[2]}"])
    return EXIT_OK


def cmd_match(args, settings: Settings, ui: FancyUI, output_dir: str) -> int:
    if args.pattern:
        solutions = [reference_solution(args.pattern)]
    elif args.coeffs:
        solutions = [solve(args.kind, args.m, args.N, args.coeffs)]
    else:
        if args.m is None or args.N is None:
            raise UsageError("match needs --pattern, or --m and --N")
        with ui.spinner(f"Multistart Newton, {args.trials} starts"):
            solutions = multistart(args.kind, args.m, args.N, args.trials, args.seed, workers=settings.threads)

    width = max((s.N for s in solutions), default=0) + 1
    header = ('kind', 'm', 'N', 'residual', 'min_singular_value') + tuple(f'c{n}' for n in range(width))
    rows = [(s.kind, s.m, s.N, s.residual, s.jac_min_sv) + s.coeffs + ('',) * (width - len(s.coeffs))
            for s in solutions]
    ui.table(header, rows, title="Matching solutions")
    write_table_csv(os.path.join(output_dir, 'matching.csv'), header, rows)
    if not solutions:
        ui.warning("No nondegenerate solutions found")
    return EXIT_OK


def cmd_profile(args, settings: Settings, ui: FancyUI, output_dir: str) -> int:
    plan = build_plan(args, settings)
    initial = _pattern_field(plan)
    write_snapshot(output_dir, 0.0, initial)
    amplitude = pattern_amplitude(initial, plan.tp)
    symmetry = dihedral_symmetry_error(initial, plan.pattern.matching.m)
    ui.details_section(f"{plan.model.name} {plan.pattern.kind} profile", [
        f"m={plan.pattern.matching.m}, N={plan.pattern.matching.N}, eps={plan.pattern.eps:.6g}",
        f"grid {plan.n_grid}x{plan.n_grid}, L={plan.L:.6g}",
        f"pattern amplitude {amplitude:.4g}, dihedral symmetry error {symmetry:.3g}",
    ])
    return EXIT_OK


def cmd_simulate(args, settings: Settings, ui: FancyUI, output_dir: str) -> int:
    ui.add_task('plan', 'Locating the Turing point and building the profile')
    ui.add_task('run', 'Integrating')
    ui.add_task('summary', 'Summarising the final field')
    ui.update_task('plan', TaskStatus.IN_PROGRESS)

    if args.manifest:
        plan = plan_from_manifest(RunManifest.load(args.manifest))
    else:
        plan = build_plan(args, settings)
    initial = _pattern_field(plan)
    plan_manifest(plan).save(os.path.join(output_dir, MANIFEST_NAME))
    ui.update_task('plan', TaskStatus.COMPLETED, f"{plan.tp}; eps={plan.pattern.eps:.6g}, L={plan.L:.6g}")

    cfg = SimConfig(dt=plan.dt, t_end=plan.t_end, snapshot_times=plan.snapshot_times,
                    n_grid=plan.n_grid, L=plan.L, mu=plan.tp.mu + plan.pattern.eps)
    ui.update_task('run', TaskStatus.IN_PROGRESS)
    ui.print_status()
    try:
        with ui.spinner(f"Running {cfg.steps} steps on a {plan.n_grid}x{plan.n_grid} grid"):
            result = run(plan.model, initial, cfg,
                         sink=lambda t, snapshot: write_snapshot(output_dir, t, snapshot))
    except SimulationBlowUpError as exc:
        ui.update_task('run', TaskStatus.FAILED)
        write_snapshot(output_dir, exc.time, exc.last_good)
        raise
    ui.update_task('run', TaskStatus.COMPLETED, f"{result.steps} steps, {len(result.snapshots)} snapshots")

    final = result.final
    correlation = pattern_correlation(final, plan.tp.u_star, plan.tp.v_star)
    items = [
        f"phase: {'in-phase' if correlation > 0 else 'anti-phase'} (correlation {correlation:.3f})",
        f"gaps: {count_gaps(final, plan.tp.u_star)}, peaks: {count_peaks(final, plan.tp.u_star)}",
        f"dihedral symmetry error {dihedral_symmetry_error(final, plan.pattern.matching.m):.3g} "
        f"(amplitude {pattern_amplitude(final, plan.tp):.3g})",
    ]
    ui.update_task('summary', TaskStatus.COMPLETED)
    ui.print_status()
    ui.details_section("Final field", items)
    return EXIT_OK


def cmd_oracle(args, settings: Settings, ui: FancyUI, output_dir: str) -> int:
    if args.random:
        rng = np.random.default_rng(args.seed)
        points = []
        while len(points) < args.random:
            m = float(rng.uniform(0.1, 2.0))
            x = float(rng.uniform(ORACLE_MARGIN + 0.05, 20.0))
            points.append((m, x / m))
    else:
        points = [(args.m, args.delta_v)]

    header = ('m', 'delta_v', 'quantity', 'closed_form', 'pipeline', 'relative_deviation')
    rows = []
    failed = []
    for m, delta_v in points:
        report = oracle_compare(m, delta_v)
        closed = report.closed_values()
        rows.extend((m, delta_v, name, closed[name], report.generic[name], deviation)
                    for name, deviation in report.deviations.items())
        if len(points) == 1:
            ui.panel('\n'.join(report.lines()), title="KGS oracle")
        if not report.passed:
            failed.append(report)
    write_table_csv(os.path.join(output_dir, 'oracle.csv'), header, rows)
    if failed:
        name, worst = failed[0].worst
        raise NumericalError(f"{len(failed)} of {len(points)} oracle points failed "
                             f"(first: m={failed[0].m:g}, delta_v={failed[0].delta_v:g}, {name} {worst:.3g})")
    ui.success(f"{len(points)} oracle point(s) agree with the closed forms")
    return EXIT_OK


HANDLERS = {
    'steady': cmd_steady,
    'turing': cmd_turing,
    'predict': cmd_predict,
    'analyze': cmd_analyze,
    'p4map': cmd_p4map,
    'match': cmd_match,
    'profile': cmd_profile,
    'simulate': cmd_simulate,
    'oracle': cmd_oracle,
}


def _add_turing_options(parser):
    parser.add_argument('--mu-guess', type=float, help='Turing point guess for mu')
    parser.add_argument('--u-guess', type=float, help='Turing point guess for u')
    parser.add_argument('--v-guess', type=float, help='Turing point guess for v')
    parser.add_argument('--mu-range', type=float, nargs=2, metavar=('LO', 'HI'),
                        help='mu interval scanned when no guess converges')


def _add_pattern_options(parser):
    parser.add_argument('--pattern', choices=sorted(REFERENCE_SETS), help='Built-in spot A coefficient set')
    parser.add_argument('--kind', choices=KINDS, default=SPOT_A, help='Matching system (default: spotA)')
    parser.add_argument('--m', type=int, help='Dihedral index')
    parser.add_argument('--N', type=int, help='Truncation order')
    parser.add_argument('--coeffs', type=float, nargs='+', help='Initial coefficients for Newton')
    parser.add_argument('--trials', type=int, default=50, help='Multistart attempts (default: 50)')


def _add_profile_options(parser):
    parser.add_argument('--eps', type=float, help='Distance from the Turing point (default: set by --envelope)')
    parser.add_argument('--envelope', type=float,
                        help='Envelope decay length in wavelengths for the default eps (default: 3)')
    parser.add_argument('--eps-sign', type=int, choices=(-1, 1), help='Force the sign of the default eps')
    parser.add_argument('--amplitude', type=float, help='Profile amplitude C (default: 1, 4 for vh1)')
    parser.add_argument('--ngrid', type=int, help='Grid points per side (default: DIHEDRAL_NGRID)')
    parser.add_argument('--length', type=float, help='Domain side length (default: 20 wavelengths)')
    parser.add_argument('--force', action='store_true', help='Build ring profiles even when P4 >= 0')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--model', help=f"Built-in model ({', '.join(ModelRegistry.list_models())})")
    common.add_argument('--model-file', help='Model config file (see MODEL_GUIDE.md)')
    common.add_argument('--param', action='append', metavar='NAME=VALUE', help='Override a model parameter')
    common.add_argument('--output-dir', help='Output directory (default: runs/<timestamp>_<command>)')
    common.add_argument('--seed', type=int, help='Random seed (default: DIHEDRAL_SEED)')
    common.add_argument('--simple-ui', action='store_true', help='Plain-text output')
    common.add_argument('--debug', '-d', action='store_true', help='Enable debug output')

    parser = argparse.ArgumentParser(
        description='Turing analysis and localised dihedral patterns for two-component reaction-diffusion models',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python cli.py analyze --model kgs                              # Turing point, predictors, interpretation
  python cli.py analyze --model von_hardenberg --mu-guess 0.17   # First von Hardenberg Turing point
  python cli.py turing --model kgs --scan --mu-range 0.5 2       # Every Turing point in a mu interval
  python cli.py p4map --model kgs --x-param delta_v --x-range 0.5 20 40 --y-param m --y-range 0.1 2 40
  python cli.py match --kind ring --m 6 --N 2 --trials 200       # Ring coefficients by multistart
  python cli.py simulate --preset kgs:hexagon --ngrid 128        # Localised hexagon from the preset
  python cli.py simulate --manifest runs/<run>/manifest.txt      # Repeat a recorded run
  python cli.py oracle --random 50                               # Closed-form KGS cross-check
        """
    )
    commands = parser.add_subparsers(dest='command', required=True)

    steady = commands.add_parser('steady', parents=[common], help='Steady states at a given mu')
    steady.add_argument('--mu', type=float, required=True, help='Bifurcation parameter value')

    turing = commands.add_parser('turing', parents=[common], help='Locate Turing points')
    _add_turing_options(turing)
    turing.add_argument('--scan', action='store_true', help='Report every Turing point in --mu-range')
    turing.add_argument('--n-mu', type=int, default=64, help='mu samples for --scan (default: 64)')

    for name, text in (('predict', 'Predictors P1-P4 at the Turing point'),
                       ('analyze', 'Full report with interpretation')):
        sub = commands.add_parser(name, parents=[common], help=text)
        _add_turing_options(sub)

    p4map = commands.add_parser('p4map', parents=[common], help='Sign of P4 over a parameter grid')
    p4map.add_argument('--x-param', default='delta_v', help='Parameter on the first axis (default: delta_v)')
    p4map.add_argument('--x-range', type=float, nargs=3, metavar=('LO', 'HI', 'N'), required=True)
    p4map.add_argument('--y-param', default='m', help='Parameter on the second axis (default: m)')
    p4map.add_argument('--y-range', type=float, nargs=3, metavar=('LO', 'HI', 'N'), required=True)
    p4map.add_argument('--mu-range', type=float, nargs=2, metavar=('LO', 'HI'), help='mu interval scanned per cell')
    p4map.add_argument('--closed-form', action='store_true', help='Use the KGS closed forms')

    match = commands.add_parser('match', parents=[common], help='Solve the matching equations')
    _add_pattern_options(match)

    profile = commands.add_parser('profile', parents=[common], help='Write an initial dihedral profile')
    _add_turing_options(profile)
    _add_pattern_options(profile)
    _add_profile_options(profile)

    simulate = commands.add_parser('simulate', parents=[common], help='Simulate a localised pattern')
    _add_turing_options(simulate)
    _add_pattern_options(simulate)
    _add_profile_options(simulate)
    simulate.add_argument('--preset', help=f"model:pattern preset ({', '.join(list_presets()[:3])}, ...)")
    simulate.add_argument('--reference-length', action='store_true', help='Use the preset reference domain length')
    simulate.add_argument('--dt', type=float, help='Time step (default: DIHEDRAL_DT)')
    simulate.add_argument('--t-end', type=float, help='Final time (default: last preset snapshot)')
    simulate.add_argument('--snapshots', type=float, nargs='+', help='Snapshot times')
    simulate.add_argument('--manifest', help='Re-run from a recorded manifest')

    oracle = commands.add_parser('oracle', parents=[common], help='Compare against KGS closed forms')
    oracle.add_argument('--m', type=float, default=0.5, help='KGS parameter m (default: 0.5)')
    oracle.add_argument('--delta-v', type=float, default=7.2, help='KGS diffusion ratio (default: 7.2)')
    oracle.add_argument('--random', type=int, help='Check this many random (m, delta_v) points')
    return parser


def _fill_defaults(args):
    """Options that profile and simulate share with the preset-free path"""
    for name, default in (('preset', None), ('reference_length', False), ('dt', None), ('t_end', None),
                          ('snapshots', None), ('manifest', None)):
        if not hasattr(args, name):
            setattr(args, name, default)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    _fill_defaults(args)

    ui = FancyUI(use_rich=not args.simple_ui)
    try:
        settings = Settings.from_env()
    except ValueError as exc:
        ui.error(f"Configuration error: {exc}")
        return EXIT_USAGE
    if args.seed is None:
        args.seed = settings.seed

    output_dir = _output_dir(args, settings, args.command)
    errors, warnings = validate_configuration(settings, output_dir)
    if warnings and args.debug:
        print("\n⚠️  Warnings:")
        for warning in warnings:
            print(f"   • {warning}")
    if errors:
        print("\n❌ Configuration Errors:")
        for error in errors:
            print(f"   • {error}")
        print("\n💡 Please fix the above errors and try again.")
        return EXIT_USAGE

    try:
        os.makedirs(output_dir, exist_ok=True)
    except OSError as exc:
        ui.error(f"Error creating output directory: {exc}")
        return EXIT_FAILURE

    config = RunConfig(command=args.command, model_source=args.model_file or args.model or 'kgs',
                       output_dir=output_dir, seed=args.seed, debug=args.debug,
                       options={key: value for key, value in vars(args).items()
                                if key not in ('command', 'model', 'model_file', 'output_dir', 'seed', 'debug')})
    run_logger = setup_logging(output_dir, args.debug)
    run_logger.info(f"Command: {config.command}, model source: {config.model_source}, seed: {config.seed}")
    run_logger.info(f"Options: {config.options}")
    run_logger.info(f"Output directory: {output_dir}")

    try:
        code = HANDLERS[args.command](args, settings, ui, output_dir)
    except UsageError as exc:
        run_logger.error(f"Usage error: {exc}")
        ui.error(str(exc))
        return EXIT_USAGE
    except NumericalError as exc:
        run_logger.error(f"Numerical failure: {exc}")
        ui.error(str(exc))
        return EXIT_NUMERICAL
    except OSError as exc:
        run_logger.error(f"I/O failure: {exc}")
        ui.error(f"Error writing output: {exc}")
        return EXIT_FAILURE

    run_logger.info(f"{config.command} finished with exit code {code}")
    if code == EXIT_OK:
        ui.info(f"Output written to {output_dir}")
    return code


if __name__ == '__main__':
    sys.exit(main())
