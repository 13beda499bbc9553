import csv

import numpy as np
import pytest

import qfront

SMALL_RUN = """\
[scenario]
name = small run
base = superior-baseline

[model]
mu = 2

[grid]
m_u = 32
m_v = 80
L_v = 10
t_end = 1
output_stride = 5

[output]
snapshots = 0.5
"""


def write_config(tmp_path, text, name='run.ini'):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(str(path), newline='') as fp:
        return list(csv.DictReader(fp))


class TestSemiwave:
    def test_table(self, tmp_path):
        assert qfront.run(['semiwave', '-a', '1', '-b', '1', '-d', '1', '--table', '-n', '20', '-o', str(tmp_path)]) == 0
        rows = read_csv(tmp_path / 'semiwave_table.csv')
        assert len(rows) == 20
        slopes = np.array([float(r['slope0']) for r in rows])
        assert np.all(np.diff(slopes) < 0)
        assert float(rows[0]['k']) == 0.0

    def test_speed(self, tmp_path):
        assert qfront.run(['semiwave', '--mu', '1', '-o', str(tmp_path)]) == 0
        row = read_csv(tmp_path / 'k0.csv')[0]
        assert 0 < float(row['k0']) < 2
        assert (tmp_path / 'semiwave_profile.csv').exists()

    def test_zero_mu_is_rejected(self):
        assert qfront.run(['semiwave', '--mu', '0']) == qfront.EXIT_CONFIG

    def test_needs_mu_or_table(self):
        assert qfront.run(['semiwave']) == qfront.EXIT_CONFIG


def test_unknown_subcommand():
    assert qfront.run(['plot']) == qfront.EXIT_CONFIG


class TestSimulate:
    def test_outputs_are_deterministic(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN)
        first, second = tmp_path / 'a', tmp_path / 'b'
        assert qfront.run(['simulate', '-c', cfg, '-o', str(first)]) == qfront.EXIT_OK
        assert qfront.run(['simulate', '-c', cfg, '-o', str(second)]) == qfront.EXIT_OK
        for name in ('trajectory.csv', 'snapshot_t0.5.csv', 'summary.txt', 'manifest.txt'):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_manifest_and_summary(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN)
        out = tmp_path / 'out'
        assert qfront.run(['simulate', '-c', cfg, '-o', str(out), '--horizon', '0.5']) == 0
        manifest = (out / 'manifest.txt').read_text()
        assert 'command: simulate' in manifest
        assert 'scenario: small_run' in manifest
        assert 'mu = 2.0' in manifest
        assert 't_end = 0.5' in manifest
        summary = (out / 'summary.txt').read_text()
        assert 'invariant audit: pass' in summary
        assert 'verdict:' in summary
        rows = read_csv(out / 'trajectory.csv')
        assert float(rows[-1]['t']) == pytest.approx(0.5)

    def test_malformed_config(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN.replace('mu = 2', 'mu = fast'))
        assert qfront.run(['simulate', '-c', cfg, '-o', str(tmp_path / 'out')]) == qfront.EXIT_CONFIG
        assert not (tmp_path / 'out').exists()

    def test_missing_config(self, tmp_path):
        assert qfront.run(['simulate', '-c', str(tmp_path / 'nope.ini')]) == qfront.EXIT_CONFIG

    def test_h0_override_too_large_for_grid(self, tmp_path):
        out = tmp_path / 'out'
        code = qfront.run(['simulate', '--scenario', 'superior-baseline', '--h0', '40', '-o', str(out)])
        assert code == qfront.EXIT_CONFIG
        assert not out.exists()

    def test_negative_horizon_override(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN)
        assert qfront.run(['simulate', '-c', cfg, '--horizon', '-1', '-o', str(tmp_path / 'out')]) == qfront.EXIT_CONFIG


class TestThreshold:
    def test_initial_ball_beyond_bound(self, tmp_path):
        assert qfront.run(['threshold', '--scenario', 'superior-baseline', '--h0', '1.2', '-o', str(tmp_path)]) == 0
        assert read_csv(tmp_path / 'threshold.csv') == []
        assert 'mu_star = 0.0' in (tmp_path / 'manifest.txt').read_text()

    def test_bracket_that_always_spreads(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN)
        code = qfront.run(['threshold', '-c', cfg, '--mu-lo', '5', '--mu-hi', '10', '-o', str(tmp_path / 'out')])
        assert code == qfront.EXIT_SOLVER

    def test_inconclusive_run_still_writes_history(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN + "\n[threshold]\nmax_doublings = 1\n")
        out = tmp_path / 'out'
        code = qfront.run(['threshold', '-c', cfg, '--h0', '0.4', '--horizon', '0.2', '-o', str(out)])
        assert code == qfront.EXIT_INCONCLUSIVE
        rows = read_csv(out / 'threshold.csv')
        assert len(rows) >= 3
        assert rows[-1]['verdict'] == 'Undetermined'
        assert float(rows[-1]['horizon']) == pytest.approx(0.4)
        manifest = (out / 'manifest.txt').read_text()
        assert 'status = HorizonExhausted' in manifest

    def test_invalid_bracket_still_writes_history(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN)
        out = tmp_path / 'out'
        assert qfront.run(['threshold', '-c', cfg, '--mu-lo', '5', '--mu-hi', '10', '-o', str(out)]) == qfront.EXIT_SOLVER
        rows = read_csv(out / 'threshold.csv')
        assert [r['mu'] for r in rows] == ['5.0', '10.0']
        assert 'status = BracketInvalid' in (out / 'manifest.txt').read_text()

    def test_reversed_bracket(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN)
        assert qfront.run(['threshold', '-c', cfg, '--mu-lo', '2', '--mu-hi', '1']) == qfront.EXIT_CONFIG


class TestSweep:
    def test_inferior_point_is_recorded(self, tmp_path):
        text = SMALL_RUN + "\n[sweep]\nparam1 = a1\nrange1 = 0.5, 3, 2\n"
        cfg = write_config(tmp_path, text)
        assert qfront.run(['sweep', '-c', cfg, '-o', str(tmp_path)]) == 0
        rows = read_csv(tmp_path / 'phase.csv')
        assert [r['param1'] for r in rows] == ['0.5', '3.0']
        assert rows[0]['verdict'] == 'WrongRegime'
        assert rows[1]['verdict'] in ('Spreading', 'Undetermined')
        assert rows[0]['param2'] == 'nan'
        matrix = (tmp_path / 'phase_matrix.dat').read_text().splitlines()
        assert matrix[-1].split()[0] == 'nan'

    def test_needs_axes(self, tmp_path):
        assert qfront.run(['sweep', '--scenario', 'inferior-baseline', '-o', str(tmp_path)]) == qfront.EXIT_CONFIG


@pytest.mark.slow
class TestAcceptanceRuns:
    def test_large_mu_spreads(self, tmp_path):
        assert qfront.run(['simulate', '--scenario', 'superior-baseline', '--mu', '8', '-o', str(tmp_path)]) == 0
        summary = (tmp_path / 'summary.txt').read_text()
        assert 'verdict: Spreading' in summary
        assert 'invariant audit: pass' in summary

    def test_inferior_invader_dies_out(self, tmp_path):
        assert qfront.run(['simulate', '--scenario', 'inferior-baseline', '-o', str(tmp_path)]) == 0
        assert 'inferior long-time check: pass' in (tmp_path / 'summary.txt').read_text()

    def test_large_mu_semiwave_speed(self, tmp_path):
        assert qfront.run(['semiwave', '-a', '1', '-b', '1', '-d', '1', '--mu', '1000', '-o', str(tmp_path)]) == 0
        assert float(read_csv(tmp_path / 'k0.csv')[0]['k0']) >= 1.5

    def test_phase_diagram_is_monotone_in_mu(self, tmp_path):
        out = tmp_path / 'phase'
        assert qfront.run(['sweep', '--scenario', 'superior-baseline', '--horizon', '20', '-w', '4', '-o', str(out)]) == 0
        rows = read_csv(out / 'phase.csv')
        assert len(rows) == 64
        rank = {'Vanishing': -1, 'Undetermined': 0, 'Spreading': 1}
        for i in range(8):
            line = [rank[r['verdict']] for r in rows[i * 8:(i + 1) * 8]]
            assert line == sorted(line)

    def test_single_point_sweep_matches_simulate(self, tmp_path):
        text = "[scenario]\nbase = superior-baseline\n\n[model]\nmu = 8\n\n[sweep]\nparam1 = mu\nrange1 = 8, 8, 1\n"
        cfg = write_config(tmp_path, text)
        assert qfront.run(['sweep', '-c', cfg, '-o', str(tmp_path / 'sweep')]) == 0
        assert qfront.run(['simulate', '-c', cfg, '-o', str(tmp_path / 'sim')]) == 0
        row = read_csv(tmp_path / 'sweep' / 'phase.csv')[0]
        summary = (tmp_path / 'sim' / 'summary.txt').read_text()
        assert 'verdict: {:s}'.format(row['verdict']) in summary
