import numpy as np
import pytest

from quickfront import scenario
from quickfront.scenario import ConfigError, Scenario, SweepAxis


class TestBuiltins:
    def test_names(self):
        assert sorted(scenario.BUILTIN_SCENARIOS) == ['inferior-baseline', 'scalar-logistic', 'superior-baseline']

    def test_superior_baseline(self, superior):
        p = superior.params
        assert (p.a1, p.a2, p.b1, p.b2, p.c1, p.c2) == (3.0, 1.0, 1.0, 1.0, 1.0, 1.0)
        assert p.h0 == 0.8 and p.dim == 1
        assert not superior.scalar
        assert [ax.param for ax in superior.sweep_axes] == ['mu', 'h0']

    def test_scalar_logistic_has_no_native(self, scalar):
        assert scalar.scalar
        assert scalar.params.h0 == 1.0
        assert scalar.grid.m_u == 256

    def test_unknown(self):
        with pytest.raises(ConfigError):
            scenario.builtin('no-such-thing')

    def test_resolve_defaults_to_superior(self, superior):
        assert scenario.resolve() == superior


class TestConfigRoundTrip:
    @pytest.mark.parametrize('name', sorted(scenario.BUILTIN_SCENARIOS))
    def test_builtin(self, name):
        scen = scenario.builtin(name)
        assert scenario.from_config(scen.to_config()) == scen

    def test_awkward_floats_survive(self, superior):
        scen = superior.with_overrides(mu=0.1 + 0.2, h0=1.0 / 3.0)
        scen.snapshot_times = [0.0, 2.5, 1e-3]
        back = scenario.from_config(scen.to_config())
        assert back.params.mu == 0.1 + 0.2
        assert back.params.h0 == 1.0 / 3.0
        assert back.snapshot_times == [0.0, 2.5, 1e-3]

    def test_file(self, inferior, tmp_path):
        path = str(tmp_path / 'inferior.ini')
        inferior.to_file(path)
        assert scenario.from_file(path) == inferior


class TestFromConfig:
    def test_base_with_overrides(self, superior):
        text = "[scenario]\nname = Fast Run\nbase = superior-baseline\n\n[model]\nmu = 4\n\n[grid]\nt_end = 5\n"
        scen = scenario.from_config(text)
        assert scen.id == 'fast_run'
        assert scen.params.mu == 4.0
        assert scen.params.a1 == superior.params.a1
        assert scen.grid.t_end == 5.0
        assert scen.grid.m_u == superior.grid.m_u

    def test_unknown_key_names_key_and_line(self):
        text = "[scenario]\nbase = superior-baseline\n\n[model]\nmu = 2\ngamma = 1\n"
        with pytest.raises(ConfigError) as exc:
            scenario.from_config(text, 'run.ini')
        assert exc.value.key == 'gamma'
        assert exc.value.line == 6
        assert 'run.ini:6' in str(exc.value)

    def test_bad_number(self):
        text = "[model]\na1 = three\n"
        with pytest.raises(ConfigError) as exc:
            scenario.from_config(text)
        assert exc.value.section == 'model'
        assert exc.value.key == 'a1'
        assert exc.value.line == 2

    def test_invalid_coefficient(self):
        with pytest.raises(ConfigError) as exc:
            scenario.from_config("[model]\n\nd1 = -1\n")
        assert exc.value.key == 'd1'
        assert exc.value.line == 3

    def test_unknown_section(self):
        with pytest.raises(ConfigError) as exc:
            scenario.from_config("[plots]\nstyle = dots\n")
        assert exc.value.section == 'plots'

    def test_unknown_base(self):
        with pytest.raises(ConfigError) as exc:
            scenario.from_config("[scenario]\nbase = baseline\n")
        assert exc.value.key == 'base'

    def test_syntax_error_has_line(self):
        with pytest.raises(ConfigError) as exc:
            scenario.from_config("[model]\na1 = 3\nthis is not a key\n")
        assert exc.value.line == 3

    def test_missing_section_header(self):
        with pytest.raises(ConfigError) as exc:
            scenario.from_config("a1 = 3\n")
        assert exc.value.line == 1

    def test_bracket_order(self):
        with pytest.raises(ConfigError) as exc:
            scenario.from_config("[threshold]\nmu_lo = 2\nmu_hi = 1\n")
        assert exc.value.key == 'mu_lo'

    def test_grid_too_small_for_ball(self):
        with pytest.raises(ConfigError) as exc:
            scenario.from_config("[model]\nh0 = 5\n\n[grid]\nL_v = 10\n")
        assert exc.value.section == 'grid'

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            scenario.from_file(str(tmp_path / 'absent.ini'))


class TestSweepAxes:
    def test_two_axes(self):
        text = "[sweep]\nparam1 = mu\nrange1 = 0.1, 10, 3\nspacing1 = log\nparam2 = h0\nrange2 = 0.5, 1.0, 6\n"
        axes = scenario.from_config(text).sweep_axes
        assert axes[0] == SweepAxis('mu', 0.1, 10.0, 3, 'log')
        assert axes[0].values() == pytest.approx([0.1, 1.0, 10.0])
        assert axes[1].values() == pytest.approx(np.linspace(0.5, 1.0, 6))

    def test_range_without_param(self):
        with pytest.raises(ConfigError) as exc:
            scenario.from_config("[sweep]\nrange1 = 0, 1, 3\n")
        assert exc.value.key == 'range1'

    def test_bad_range(self):
        with pytest.raises(ConfigError) as exc:
            scenario.from_config("[sweep]\nparam1 = mu\nrange1 = 0.1, 1\n")
        assert exc.value.key == 'range1'

    def test_not_a_coefficient(self):
        with pytest.raises(ConfigError) as exc:
            scenario.from_config("[sweep]\nparam1 = m_u\nrange1 = 16, 64, 3\n")
        assert exc.value.key == 'param1'


class TestOverrides:
    def test_with_overrides(self, superior):
        scen = superior.with_overrides(mu=2.0, h0=0.6, horizon=12.0, output_dir='out')
        assert scen.params.mu == 2.0 and scen.params.h0 == 0.6
        assert scen.grid.t_end == 12.0
        assert scen.output_dir == 'out'
        assert superior.params.mu == 1.0

    def test_h0_beyond_truncation_radius(self, superior):
        with pytest.raises(ConfigError) as exc:
            superior.with_overrides(h0=40.0)
        assert exc.value.section == 'grid'
        assert str(exc.value).startswith('<command line>: [grid]')

    def test_negative_mu(self, superior):
        with pytest.raises(ConfigError) as exc:
            superior.with_overrides(mu=-1.0)
        assert (exc.value.section, exc.value.key) == ('model', 'mu')

    def test_no_overrides_is_equal(self, superior):
        assert superior.with_overrides() == superior

    def test_dict_round_trip(self, scalar):
        assert Scenario(**scalar.to_dict()) == scalar
