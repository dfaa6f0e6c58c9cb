"""Command-line surface: coefficient tables, tolerable-q curves, the property
suite, the encoder optimizer and a one-shot report.

Data goes to stdout (or --out); logs and error documents go to stderr.
Exit codes: 0 success, 1 invalid input, 2 a verified property failed.
"""
import copy
import functools
import logging
import os
import time

import click
import numpy as np
from flask import current_app, has_app_context
from flask.cli import with_appcontext
from pydantic import ValidationError

from . import analysis, codes, encoder_opt, fidelity_engine
from .config import configure_logging, load_settings
from .errors import CodeConstructionError, ParameterRangeError, QECError
from .models import OptimizationReport, PropertyResult, RunConfig, VerifyReport
from .utils import dumps_canonical, dumps_curve_csv, error_document, write_output

logger = logging.getLogger(__name__)

ORACLE_POINTS = 20
DOMINANCE_P_MAX = 0.2
BASELINE_P_MAX = 0.3
GRID_POINTS = 21
TOLERANCE = 1e-10
SLACK = 1e-12
DEFAULT_CURVE_GRID = '0.0001:0.3:50'

# (unaugmented, augmented) pairs checked by `verify`
CODE_PAIRS = (
    ('rep3', 'rep3+aug'), ('rep5', 'rep5+aug'), ('rep7', 'rep7+aug'), ('rep9', 'rep9+aug'),
    ('perfect5', 'perfect5+aug'),
    ('concat3-unaug', 'concat3-top'), ('concat3-top', 'concat3-full'),
)


def _settings():
    if has_app_context():
        return {key: current_app.config[key] for key in load_settings()}
    return load_settings()


def _fail(error, exit_code=1):
    click.echo(dumps_canonical(error_document(error)), err=True, nl=False)
    click.get_current_context().exit(exit_code)


def guarded(command):
    """Turns validation and domain errors into an ErrorResponse on stderr and exit code 1."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ValidationError as e:
            logger.error(f"Invalid arguments: {e.error_count()} error(s)")
            _fail(e)
        except QECError as e:
            logger.error(f"{type(e).__name__}: {e}")
            _fail(e)
    return wrapper


class UsageErrorExitsOne:
    """Malformed or unknown options are invalid input like any other: ErrorResponse and exit code 1."""

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            logger.error(f"Invalid arguments: {e.format_message()}")
            click.echo(dumps_canonical(error_document(e.format_message())), err=True, nl=False)
            raise click.exceptions.Exit(1) from e


class QECCommand(UsageErrorExitsOne, click.Command):
    pass


class QECGroup(UsageErrorExitsOne, click.Group):
    command_class = QECCommand

    def resolve_command(self, ctx, args):
        try:
            return super().resolve_command(ctx, args)
        except click.UsageError as e:
            # 2 stays reserved for failed properties
            e.exit_code = 1
            raise


def _config(command, **options):
    settings = _settings()
    if options.get('seed') is None:
        options['seed'] = settings['SEED']
    if options.get('workers') is None:
        options['workers'] = settings['WORKERS']
    configure_logging(settings['LOG_LEVEL'])
    return RunConfig(command=command, **options)


def _emit(text, out):
    rest = write_output(text, out)
    if rest is not None:
        click.echo(rest, nl=False)


def _code(config):
    if config.code is None:
        raise CodeConstructionError("--code is required")
    code = codes.resolve_code(config.code, config.augment)
    return codes.with_channel(code, config.channel)


def _poly(code, config):
    return analysis.polynomial_for(code, workers=config.workers, chunk_size=_settings()['CHUNK_SIZE'])


code_option = click.option('--code', help='Code label, e.g. rep3, perfect5, concat3.')
augment_option = click.option('--augment', default='none', is_flag=False, flag_value='on',
                              help='none | on (single-level) | top | full (concat3); bare flag means on.')
channel_option = click.option('--channel', default=None, help='bitflip | depolarizing (default: the code\'s own).')
workers_option = click.option('--workers', type=int, default=None, help='Worker processes (default QEC_WORKERS).')
seed_option = click.option('--seed', type=int, default=None, help='Random seed (default QEC_SEED).')
out_option = click.option('--out', default=None, help='Output path; stdout when omitted.')
format_option = click.option('--format', 'format_', default=None, help='csv | json')


@click.group(cls=QECGroup)
def cli():
    """Mixed-ancilla error-correction fidelity tools."""


@cli.command('coeffs')
@code_option
@augment_option
@channel_option
@click.option('--max-order', type=int, default=1, help='Highest power of p to tabulate.')
@format_option
@out_option
@workers_option
@guarded
def coeffs_command(code, augment, channel, max_order, format_, out, workers):
    """Coefficient table c_k(q) of F_C(p, q) = sum_k c_k(q) p^k."""
    config = _config('coeffs', code=code, augment=augment, channel=channel, max_order=max_order,
                     format=format_, out=out, workers=workers)
    if config.format not in (None, 'json'):
        raise ParameterRangeError("coefficient tables are emitted as JSON")
    spec = _code(config)
    table = analysis.coefficient_table(spec, config.max_order, poly=_poly(spec, config))
    _emit(dumps_canonical(table.to_model()), config.out)


@cli.command('tolerable-q')
@code_option
@augment_option
@channel_option
@click.option('--p', 'p', type=float, default=None, help='A single main-error probability.')
@click.option('--p-grid', default=None, help='start:stop:count with 0 < start <= stop <= 1.')
@format_option
@out_option
@workers_option
@guarded
def tolerable_q_command(code, augment, channel, p, p_grid, format_, out, workers):
    """Largest tolerable ancilla initialization error q*(p)."""
    config = _config('tolerable-q', code=code, augment=augment, channel=channel, p=p, p_grid=p_grid,
                     format=format_, out=out, workers=workers)
    if config.p_grid is not None:
        grid = config.p_grid
    elif config.p is not None:
        grid = [config.p]
    else:
        raise ParameterRangeError("tolerable-q needs --p or --p-grid")
    spec = _code(config)
    curve = analysis.curve_sweep(spec, grid, poly=_poly(spec, config), workers=config.workers)
    if config.format == 'json':
        _emit(dumps_canonical(curve.to_model()), config.out)
    else:
        _emit(dumps_curve_csv(curve.csv_rows()), config.out)


def _selected_pairs(label):
    if label is None:
        return CODE_PAIRS
    base = label.split('+')[0]
    pairs = [pair for pair in CODE_PAIRS if pair[0].startswith(base) or pair[1].startswith(base)]
    if not pairs:
        raise CodeConstructionError(f"unknown code label {label!r}")
    return tuple(pairs)


def faulty_augmented_rep3():
    """rep3+aug with the prepended correction keyed on the wrong syndrome."""
    code = codes.repetition_code(1)
    wrong = codes.Gate(target=0, unitary=codes.X, controls=((1, 1), (2, 0)))
    encoder = codes.Circuit(n_qubits=3, gates=(wrong,)) + code.encoder
    return code.model_copy(update=dict(encoder=encoder, augmented=True, augmentation='on',
                                       label='rep3+aug(faulty)'))


def _oracle_property(code, poly, rng):
    points = rng.uniform(0.0, 1.0, size=(ORACLE_POINTS, 2))
    worst = max(abs(poly.eval(p, q) - fidelity_engine.oracle_fidelity(code, p, q)) for p, q in points)
    return PropertyResult(name=f'oracle equivalence {code.label}', passed=bool(worst <= TOLERANCE),
                          detail=f'max deviation {worst:.3e} over {ORACLE_POINTS} points')


def _degree_property(code, poly):
    passed = poly.degree_p() <= code.n_qubits and poly.degree_q() <= code.n_ancillas
    return PropertyResult(name=f'degree bounds {code.label}', passed=passed,
                          detail=f'p-degree {poly.degree_p()}, q-degree {poly.degree_q()}')


def _baseline_property(code, poly):
    grid = np.linspace(0.01, BASELINE_P_MAX, 30)
    excess = max(poly.eval(p, 1.0) - fidelity_engine.unencoded_baseline(code.channel_family, p) for p in grid)
    return PropertyResult(name=f'maximally mixed ancillas not useful {code.label}',
                          passed=bool(excess <= SLACK), detail=f'max excess {excess:.3e}')


def _pair_properties(plain, augmented, lower, upper):
    results = []
    p_grid = np.linspace(0.0, DOMINANCE_P_MAX, GRID_POINTS)
    q_grid = np.linspace(0.0, 1.0, GRID_POINTS)
    gap = min(float(np.min(upper.eval(p, q_grid) - lower.eval(p, q_grid))) for p in p_grid)
    results.append(PropertyResult(name=f'dominance {augmented.label} >= {plain.label}',
                                  passed=bool(gap >= -SLACK), detail=f'min gap {gap:.3e}'))
    collapse = max(abs(upper.eval(p, 0.0) - lower.eval(p, 0.0)) for p in p_grid)
    results.append(PropertyResult(name=f'pure ancillas collapse {augmented.label} to {plain.label}',
                                  passed=bool(collapse <= SLACK), detail=f'max difference {collapse:.3e}'))
    overhead = codes.gate_overhead(plain, augmented)
    results.append(PropertyResult(name=f'gate overhead {augmented.label}', passed=overhead <= 2.0,
                                  detail=f'ratio {overhead:.3f}'))
    return results


def _trivial_error_property(code, poly):
    c0 = poly.coefficient_in_p(0)
    deviation = max(abs(c0.eval(0.0, q) - 1.0) for q in np.linspace(0.0, 1.0, GRID_POINTS))
    return PropertyResult(name=f'c_0 = 1 {code.label}', passed=bool(deviation <= SLACK),
                          detail=f'max |c_0(q) - 1| {deviation:.3e}')


def _fast_path_property(code, config):
    fast = fidelity_engine.fidelity_polynomial(code, workers=config.workers)
    generic = fidelity_engine.fidelity_polynomial(code, workers=config.workers, fast_path=False)
    return PropertyResult(name=f'permutation path matches generic path {code.label}',
                          passed=fast.allclose(generic, atol=SLACK))


@cli.command('verify')
@code_option
@click.option('--inject-fault', is_flag=True, help='Replace rep3+aug by a miswired copy (the suite must fail).')
@seed_option
@out_option
@workers_option
@guarded
def verify_command(code, inject_fault, seed, out, workers):
    """Oracle equivalence, augmentation dominance and purity properties."""
    config = _config('verify', code=code, inject_fault=inject_fault, seed=seed, out=out, workers=workers)
    began = time.perf_counter()
    pairs = _selected_pairs(config.code)
    labels = list(dict.fromkeys(label for pair in pairs for label in pair))
    specs = {label: codes.build_code(label) for label in labels}
    if config.inject_fault and 'rep3+aug' in specs:
        specs['rep3+aug'] = faulty_augmented_rep3()
    polys = {label: _poly(spec, config) for label, spec in specs.items()}
    rng = np.random.default_rng(config.seed)
    results = []
    for label, spec in specs.items():
        results.append(_oracle_property(spec, polys[label], rng))
        results.append(_degree_property(spec, polys[label]))
        results.append(_baseline_property(spec, polys[label]))
        if spec.augmentation in ('on', 'full'):
            results.append(_trivial_error_property(spec, polys[label]))
    for plain, augmented in pairs:
        results.extend(_pair_properties(specs[plain], specs[augmented], polys[plain], polys[augmented]))
    small = [spec for spec in specs.values() if spec.channel_family == 'bitflip' and spec.n_qubits <= 5]
    if small:
        results.append(_fast_path_property(small[0], config))
    report = VerifyReport(passed=all(result.passed for result in results), properties=results)
    for result in results:
        logger.info(f"{'PASS' if result.passed else 'FAIL'} {result.name} ({result.detail})")
    logger.info(f"Verified {len(results)} properties in {time.perf_counter() - began:.1f}s.")
    _emit(dumps_canonical(report), config.out)
    if not report.passed:
        click.get_current_context().exit(2)


@cli.command('optimize')
@code_option
@augment_option
@click.option('--p', 'p', type=float, default=None, help='Main-error probability.')
@click.option('--q', 'q', type=float, default=None, help='Ancilla initialization parameter.')
@click.option('--restarts', type=int, default=8, help='Number of Nelder-Mead starts (at least 1).')
@seed_option
@out_option
@workers_option
@guarded
def optimize_command(code, augment, p, q, restarts, seed, out, workers):
    """Best controlled-unitary encoder extension, compared with augmentation."""
    config = _config('optimize', code=code, augment=augment, p=p, q=q, restarts=restarts,
                     seed=seed, out=out, workers=workers)
    if config.p is None or config.q is None:
        raise ParameterRangeError("optimize needs --p and --q")
    if config.augment != 'none':
        raise CodeConstructionError("optimize searches extensions of the unaugmented code")
    spec = _code(config)
    family, best, evaluations = encoder_opt.optimize(spec, config.p, config.q, config.restarts,
                                                     config.seed, workers=config.workers)
    augmented = analysis.polynomial_for(codes.augment(spec)).eval(config.p, config.q)
    plain = analysis.polynomial_for(spec).eval(config.p, config.q)
    report = OptimizationReport(
        code=spec.label, p=config.p, q=config.q, restarts=config.restarts, seed=config.seed,
        best_angles=family.angles.tolist(), best_fidelity=best, augmented_fidelity=float(augmented),
        unaugmented_fidelity=float(plain), gap=float(augmented - best), evaluations=evaluations)
    _emit(dumps_canonical(report), config.out)


@cli.command('report')
@click.option('--p-grid', default=DEFAULT_CURVE_GRID, help='Grid for the tolerable-q curves.')
@click.option('--max-order', type=int, default=1, help='Highest power of p to tabulate.')
@out_option
@workers_option
@guarded
def report_command(p_grid, max_order, out, workers):
    """Coefficient tables and tolerable-q curves for every code into one directory."""
    config = _config('report', p_grid=p_grid, max_order=max_order, out=out, workers=workers)
    directory = config.out or _settings()['OUTPUT_DIR']
    crossovers = {}
    for label in codes.CODE_LABELS:
        spec = codes.build_code(label)
        poly = _poly(spec, config)
        table = analysis.coefficient_table(spec, config.max_order, poly=poly)
        write_output(dumps_canonical(table.to_model()), os.path.join(directory, f'coeffs_{label}.json'))
        curve = analysis.curve_sweep(spec, config.p_grid, poly=poly, workers=config.workers)
        write_output(dumps_curve_csv(curve.csv_rows()), os.path.join(directory, f'tolerable_q_{label}.csv'))
        if spec.channel_family == 'depolarizing':
            crossovers[label] = analysis.crossover_p(spec, poly=poly)
    write_output(dumps_canonical(crossovers), os.path.join(directory, 'crossover.json'))
    logger.info(f"Wrote {2 * len(codes.CODE_LABELS) + 1} files to {directory}.")
    click.echo(directory)


def register(app):
    """Adds the commands to `flask`; there they read the app's config."""
    for name, command in cli.commands.items():
        bound = copy.copy(command)
        bound.callback = with_appcontext(command.callback)
        app.cli.add_command(bound, name)
