import csv
import io
import json
import os

import pytest
from click.testing import CliRunner

from app.cli import cli


def invoke(runner, *args):
    return runner.invoke(args=[str(arg) for arg in args])


class TestCoeffs:

    def test_augmented_rep3(self, runner):
        result = invoke(runner, 'coeffs', '--code', 'rep3', '--augment')
        assert result.exit_code == 0
        document = json.loads(result.output)
        assert document['code'] == 'rep3+aug'
        c1 = {(term['p_pow'], term['q_pow']): term['coeff'] for term in document['rows'][1]['terms']}
        assert c1[(0, 1)] == pytest.approx(-2.0)
        assert c1[(0, 2)] == pytest.approx(0.5)

    def test_perfect_code_is_depolarizing(self, runner):
        result = invoke(runner, 'coeffs', '--code', 'perfect5')
        assert result.exit_code == 0
        assert json.loads(result.output)['channel'] == 'depolarizing'

    def test_output_is_canonical(self, runner):
        first = invoke(runner, 'coeffs', '--code', 'rep3').output
        assert first == invoke(runner, 'coeffs', '--code', 'rep3').output
        assert first.endswith('\n')

    def test_writes_to_file(self, runner, tmp_path):
        target = tmp_path / 'nested' / 'rep3.json'
        result = invoke(runner, 'coeffs', '--code', 'rep3', '--out', target)
        assert result.exit_code == 0
        assert json.loads(target.read_text())['code'] == 'rep3'

    @pytest.mark.parametrize('args', [
        ('--code', 'nosuch'),
        ('--code', 'rep3', '--augment', 'top'),
        ('--code', 'rep3', '--format', 'csv'),
        ('--code', 'rep3', '--max-order', '9'),
        ('--code', 'rep3', '--channel', 'amplitude'),
        (),
        ('--code', 'rep3', '--bogus'),
        ('--code', 'rep3', '--max-order', 'two'),
    ])
    def test_invalid_input(self, runner, args):
        assert invoke(runner, 'coeffs', *args).exit_code == 1


class TestTolerableQ:

    def test_csv_curve(self, runner):
        result = invoke(runner, 'tolerable-q', '--code', 'rep3', '--augment', 'on', '--p-grid', '0.01:0.1:4')
        assert result.exit_code == 0
        rows = list(csv.reader(io.StringIO(result.output)))
        assert rows[0] == ['p', 'q_star', 'code']
        assert len(rows) == 5
        assert all(row[2] == 'rep3+aug' for row in rows[1:])

    def test_single_point_as_json(self, runner):
        result = invoke(runner, 'tolerable-q', '--code', 'rep3', '--p', '0.0001', '--format', 'json')
        assert result.exit_code == 0
        sample = json.loads(result.output)['samples'][0]
        assert sample['p'] == 0.0001
        assert 0.0 < sample['q_star'] < 0.05

    def test_independent_of_workers(self, runner):
        args = ('tolerable-q', '--code', 'rep5', '--p-grid', '0.01:0.2:5')
        assert invoke(runner, *args, '--workers', 1).output == invoke(runner, *args, '--workers', 2).output

    @pytest.mark.parametrize('args', [
        ('--code', 'rep3', '--p-grid', '0:0.1:3'),
        ('--code', 'rep3', '--p-grid', 'not-a-grid'),
        ('--code', 'rep3'),
        ('--code', 'rep3', '--p', '0.1', '--workers', '0'),
        ('--code', 'rep3', '--p', 'abc'),
        ('--code', 'rep3', '--p'),
    ])
    def test_invalid_input(self, runner, args):
        assert invoke(runner, 'tolerable-q', *args).exit_code == 1


class TestVerify:

    def test_repetition_pair_passes(self, runner):
        result = invoke(runner, 'verify', '--code', 'rep3')
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report['passed']
        names = [prop['name'] for prop in report['properties']]
        assert 'dominance rep3+aug >= rep3' in names
        assert 'permutation path matches generic path rep3' in names

    def test_injected_fault_is_caught(self, runner):
        result = invoke(runner, 'verify', '--code', 'rep3', '--inject-fault')
        assert result.exit_code == 2
        report = json.loads(result.output)
        failed = [prop['name'] for prop in report['properties'] if not prop['passed']]
        assert 'c_0 = 1 rep3+aug(faulty)' in failed

    def test_unknown_code(self, runner):
        assert invoke(runner, 'verify', '--code', 'nosuch').exit_code == 1


class TestOptimize:

    def test_report(self, runner):
        args = ('optimize', '--code', 'rep3', '--p', '0.05', '--q', '0.3', '--restarts', '3', '--seed', '1')
        result = invoke(runner, *args)
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report['code'] == 'rep3'
        assert len(report['best_angles']) == 4
        assert report['gap'] <= 1e-9
        assert report['augmented_fidelity'] >= report['unaugmented_fidelity']
        assert invoke(runner, *args).output == result.output

    @pytest.mark.parametrize('args', [
        ('--code', 'rep3', '--p', '0.1', '--q', '0.1', '--restarts', '0'),
        ('--code', 'rep3', '--p', '0.1'),
        ('--code', 'rep3', '--augment', '--p', '0.1', '--q', '0.1'),
        ('--code', 'rep3', '--p', '1.5', '--q', '0.1'),
        ('--code', 'rep3', '--p', '0.1', '--q', '0.1', '--restarts', 'x'),
        ('--code', 'rep3', '--p', '0.1', '--q', '0.1', '--seed', '1.5'),
    ])
    def test_invalid_input(self, runner, args):
        assert invoke(runner, 'optimize', *args).exit_code == 1


class TestReport:

    def test_writes_every_code(self, runner, tmp_path):
        result = invoke(runner, 'report', '--p-grid', '0.05:0.2:2', '--out', tmp_path)
        assert result.exit_code == 0
        names = set(os.listdir(tmp_path))
        assert 'coeffs_concat3-full.json' in names
        assert 'tolerable_q_rep9+aug.csv' in names
        crossover = json.loads((tmp_path / 'crossover.json').read_text())
        assert 0.17 <= crossover['perfect5'] <= 0.19

    def test_defaults_to_configured_directory(self, app, runner):
        result = invoke(runner, 'report', '--p-grid', '0.1:0.1:1')
        assert result.exit_code == 0
        assert result.output.strip() == app.config['OUTPUT_DIR']
        assert os.path.exists(os.path.join(app.config['OUTPUT_DIR'], 'crossover.json'))


class TestUsageErrors:

    def test_malformed_value_gets_an_error_document(self, runner):
        result = invoke(runner, 'tolerable-q', '--code', 'rep3', '--p', 'abc')
        assert result.exit_code == 1
        assert '"detail"' in result.output
        assert 'abc' in result.output

    def test_standalone_group(self):
        assert CliRunner().invoke(cli, ['coeffs', '--code', 'rep3', '--bogus']).exit_code == 1
        assert CliRunner().invoke(cli, ['nosuch']).exit_code == 1
