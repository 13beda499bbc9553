"""
Scenarios: a model, initial data, grid and run options under one name, with
the INI config file format they are read from and written to.
"""

from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import configparser
import io
import logging
import re

import numpy as np

from . import util
from .fbsolver import GridSpec
from .model import COEFFICIENT_NAMES, InitialData, InvalidParameters, ModelParams


_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)

SECTIONS = ('scenario', 'model', 'initial', 'grid', 'output', 'threshold', 'sweep')

_GRID_INTS = ('m_u', 'm_v', 'output_stride')
_GRID_FLOATS = ('L_v', 'dt', 't_end')
_SPACINGS = ('linear', 'log')
_OVERRIDE_SOURCE = '<command line>'


class ConfigError(ValueError):
    """
    Raised when a scenario config cannot be parsed or holds a bad value.
    """
    def __init__(self, message: str, section: Optional[str]=None, key: Optional[str]=None, line: Optional[int]=None, source: str='<config>'):
        where = source
        if line is not None:
            where += ':{:d}'.format(line)
        if section is not None:
            loc = '[{:s}]'.format(section) + (' {:s}'.format(key) if key is not None else '')
            message = '{:s}: {:s}'.format(loc, message)
        super().__init__('{:s}: {:s}'.format(where, message))
        self.section = section
        self.key = key
        self.line = line
        self.source = source


class SweepAxis:
    def __init__(self, param: str, start: float, stop: float, count: int, spacing: str='linear'):
        if param not in COEFFICIENT_NAMES:
            raise ValueError("{!r} is not a model coefficient".format(param))
        if count < 1:
            raise ValueError("an axis needs at least one point")
        if spacing not in _SPACINGS:
            raise ValueError("spacing must be one of " + ', '.join(_SPACINGS))
        if spacing == 'log' and not (start > 0 and stop > 0):
            raise ValueError("log spacing needs positive end points")
        self.param = param
        self.start = float(start)
        self.stop = float(stop)
        self.count = int(count)
        self.spacing = spacing

    def values(self) -> np.ndarray:
        if self.spacing == 'log':
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SweepAxis):
            return False
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        s = "SweepAxis(param={!r}, start={!r}, stop={!r}, count={!r}, spacing={!r})"
        return s.format(self.param, self.start, self.stop, self.count, self.spacing)

    def to_dict(self) -> Dict[str, Any]:
        return {'param': self.param, 'start': self.start, 'stop': self.stop, 'count': self.count, 'spacing': self.spacing}


class Scenario:
    def __init__(self, **kwargs):
        """
        Create a new Scenario object. Kwargs can contain each of the
        properties of this Scenario, and if passed in the spread output of
        to_dict(), will recreate the original Scenario.
        """
        self.id: str = kwargs.get('id', 'custom')
        self.params: ModelParams = ModelParams()
        self.initial: InitialData = InitialData()
        self.grid: GridSpec = GridSpec()
        self.output_dir: str = kwargs.get('output_dir', '.')
        self.snapshot_times: List[float] = [float(t) for t in kwargs.get('snapshot_times', [])]
        self.mu_bracket: Tuple[float, float] = tuple(float(x) for x in kwargs.get('mu_bracket', (0.05, 10.0)))
        self.rtol: float = float(kwargs.get('rtol', 0.01))
        self.max_doublings: int = int(kwargs.get('max_doublings', 3))
        self.sweep_axes: List[SweepAxis] = []

        params = kwargs.get('params', None)
        if params is not None:
            self.params = params if isinstance(params, ModelParams) else ModelParams(**params)
        initial = kwargs.get('initial', None)
        if initial is not None:
            self.initial = initial if isinstance(initial, InitialData) else InitialData(**initial)
        grid = kwargs.get('grid', None)
        if grid is not None:
            self.grid = grid if isinstance(grid, GridSpec) else GridSpec(**grid)
        for ax in kwargs.get('sweep_axes', []):
            self.sweep_axes.append(ax if isinstance(ax, SweepAxis) else SweepAxis(**ax))

    @property
    def id(self) -> str:
        return self._id

    @id.setter
    def id(self, value: str):
        self._id = util.normalize_id(value)

    @property
    def scalar(self) -> bool:
        """Whether the native species is absent, reducing the run to the single-species problem."""
        return self.initial.native_absent

    def with_overrides(self, mu: Optional[float]=None, h0: Optional[float]=None, horizon: Optional[float]=None, output_dir: Optional[str]=None) -> 'Scenario':
        """
        Copy of this scenario with the command-line overrides applied.

        :raises ConfigError: If an override leaves the model or grid
        inadmissible, e.g. an h0 too large for the truncation radius.
        """
        d = self.to_dict()
        params = self.params
        grid = self.grid
        changes = {}
        if mu is not None:
            changes['mu'] = mu
        if h0 is not None:
            changes['h0'] = h0
        if len(changes) > 0:
            try:
                params = params.with_values(**changes)
            except InvalidParameters as e:
                raise ConfigError(e.reason, 'model', e.field, source=_OVERRIDE_SOURCE)
        if horizon is not None:
            grid = grid.with_values(t_end=horizon)
        try:
            grid.validate(params.h0)
        except ValueError as e:
            raise ConfigError(str(e), 'grid', source=_OVERRIDE_SOURCE)
        d['params'] = params
        d['grid'] = grid
        if output_dir is not None:
            d['output_dir'] = output_dir
        return Scenario(**d)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return False
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash((self.id, self.params, self.initial, self.grid))

    def __str__(self) -> str:
        return "Scenario<id: {!s}, params: {!s}, grid: {!r}>".format(self.id, self.params, self.grid)

    def __repr__(self) -> str:
        s = "Scenario(id={!r}, params={!r}, initial={!r}, grid={!r}, output_dir={!r})"
        return s.format(self.id, self.params, self.initial, self.grid, self.output_dir)

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert this Scenario to a dict. Scenario(**s.to_dict()) compares
        equal to s.
        """
        return {
            'id': self.id,
            'params': self.params.to_dict(),
            'initial': self.initial.to_dict(),
            'grid': self.grid.to_dict(),
            'output_dir': self.output_dir,
            'snapshot_times': list(self.snapshot_times),
            'mu_bracket': tuple(self.mu_bracket),
            'rtol': self.rtol,
            'max_doublings': self.max_doublings,
            'sweep_axes': [ax.to_dict() for ax in self.sweep_axes],
        }

    def to_config(self) -> str:
        """
        Render this scenario in the config file format. Floats are written so
        they parse back to the identical value.
        """
        f = util.format_float
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp['scenario'] = {'name': self.id}
        model = {n: f(getattr(self.params, n)) for n in COEFFICIENT_NAMES}
        model['dim'] = str(self.params.dim)
        cp['model'] = model
        cp['initial'] = {
            'u_shape': self.initial.u_shape,
            'u_amplitude': f(self.initial.u_amplitude),
            'v_level': f(self.initial.v_level),
        }
        cp['grid'] = {k: (str(v) if k in _GRID_INTS else f(v)) for k, v in self.grid.to_dict().items()}
        cp['output'] = {
            'directory': self.output_dir,
            'snapshots': ', '.join(f(t) for t in self.snapshot_times),
        }
        cp['threshold'] = {
            'mu_lo': f(self.mu_bracket[0]),
            'mu_hi': f(self.mu_bracket[1]),
            'rtol': f(self.rtol),
            'max_doublings': str(self.max_doublings),
        }
        sweep = {}
        for i, ax in enumerate(self.sweep_axes, start=1):
            sweep['param{:d}'.format(i)] = ax.param
            sweep['range{:d}'.format(i)] = '{:s}, {:s}, {:d}'.format(f(ax.start), f(ax.stop), ax.count)
            sweep['spacing{:d}'.format(i)] = ax.spacing
        cp['sweep'] = sweep

        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def to_file(self, file_path: str):
        with open(file_path, 'w') as fp:
            fp.write(self.to_config())


def _locate(text: str, section: Optional[str], key: Optional[str]) -> Optional[int]:
    """Line number (1-based) of a key inside a section of config text."""
    current = None
    sec_pat = re.compile(r'^\s*\[([^\]]+)\]')
    for num, line in enumerate(text.splitlines(), start=1):
        m = sec_pat.match(line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return num
            continue
        if current == section and key is not None:
            name = re.split(r'[=:]', line, maxsplit=1)[0].strip()
            if name == key:
                return num
    return None


class _Reader:
    """Typed access to parsed config values, with located errors."""
    def __init__(self, cp: configparser.ConfigParser, text: str, source: str):
        self.cp = cp
        self.text = text
        self.source = source

    def error(self, message: str, section: str, key: Optional[str]=None) -> ConfigError:
        return ConfigError(message, section, key, _locate(self.text, section, key), self.source)

    def has(self, section: str, key: str) -> bool:
        return self.cp.has_option(section, key)

    def get(self, section: str, key: str, conv: Callable[[str], Any], what: str):
        raw = self.cp.get(section, key).strip()
        try:
            return conv(raw)
        except ValueError:
            raise self.error("{!r} is not {:s}".format(raw, what), section, key)

    def number(self, section: str, key: str) -> float:
        return self.get(section, key, float, 'a number')

    def integer(self, section: str, key: str) -> int:
        return self.get(section, key, int, 'an integer')

    def numbers(self, section: str, key: str) -> List[float]:
        def conv(raw: str) -> List[float]:
            return [float(x) for x in raw.split(',') if x.strip() != '']
        return self.get(section, key, conv, 'a comma-separated list of numbers')


_KNOWN_KEYS = {
    'scenario': {'name', 'base'},
    'model': set(COEFFICIENT_NAMES) | {'dim'},
    'initial': {'u_shape', 'u_amplitude', 'v_level'},
    'grid': set(_GRID_INTS) | set(_GRID_FLOATS),
    'output': {'directory', 'snapshots'},
    'threshold': {'mu_lo', 'mu_hi', 'rtol', 'max_doublings'},
}


def from_config(text: str, source: str='<config>') -> Scenario:
    """
    Parse a scenario from config text. A [scenario] base key starts from a
    built-in scenario; every other key overrides the value it names.
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        line = getattr(e, 'lineno', None)
        if line is None and isinstance(e, configparser.ParsingError) and len(e.errors) > 0:
            line = e.errors[0][0]
        raise ConfigError(getattr(e, 'message', str(e)).splitlines()[0], line=line, source=source)

    rd = _Reader(cp, text, source)
    for section in cp.sections():
        if section not in SECTIONS:
            raise rd.error("unknown section; expected one of " + ', '.join(SECTIONS), section)
        known = _KNOWN_KEYS.get(section)
        for key in cp.options(section):
            if known is not None and key not in known:
                raise rd.error("unknown key", section, key)
            if known is None and not re.fullmatch(r'(param|range|spacing)[12]', key):
                raise rd.error("unknown key", section, key)

    base = None
    if rd.has('scenario', 'base'):
        base_name = cp.get('scenario', 'base').strip()
        if base_name not in BUILTIN_SCENARIOS:
            raise rd.error("no built-in scenario named {!r}".format(base_name), 'scenario', 'base')
        base = builtin(base_name)
    d = base.to_dict() if base is not None else Scenario().to_dict()
    if rd.has('scenario', 'name'):
        d['id'] = cp.get('scenario', 'name')

    model = dict(d['params'])
    if cp.has_section('model'):
        for key in cp.options('model'):
            model[key] = rd.integer('model', key) if key == 'dim' else rd.number('model', key)

    initial = dict(d['initial'])
    if cp.has_section('initial'):
        for key in cp.options('initial'):
            initial[key] = cp.get('initial', key).strip() if key == 'u_shape' else rd.number('initial', key)

    grid = dict(d['grid'])
    if cp.has_section('grid'):
        for key in cp.options('grid'):
            grid[key] = rd.integer('grid', key) if key in _GRID_INTS else rd.number('grid', key)

    if rd.has('output', 'directory'):
        d['output_dir'] = cp.get('output', 'directory').strip()
    if rd.has('output', 'snapshots'):
        d['snapshot_times'] = rd.numbers('output', 'snapshots')

    lo, hi = d['mu_bracket']
    if rd.has('threshold', 'mu_lo'):
        lo = rd.number('threshold', 'mu_lo')
    if rd.has('threshold', 'mu_hi'):
        hi = rd.number('threshold', 'mu_hi')
    if not 0 < lo < hi:
        raise rd.error("need 0 < mu_lo < mu_hi, got {!r}, {!r}".format(lo, hi), 'threshold', 'mu_lo' if rd.has('threshold', 'mu_lo') else None)
    d['mu_bracket'] = (lo, hi)
    if rd.has('threshold', 'rtol'):
        d['rtol'] = rd.number('threshold', 'rtol')
    if rd.has('threshold', 'max_doublings'):
        d['max_doublings'] = rd.integer('threshold', 'max_doublings')

    if cp.has_section('sweep'):
        d['sweep_axes'] = _read_axes(rd)

    try:
        d['params'] = ModelParams(**model)
    except InvalidParameters as e:
        raise rd.error(e.reason, 'model', e.field if e.field in model else None)
    try:
        d['initial'] = InitialData(**initial)
    except InvalidParameters as e:
        raise rd.error(e.reason, 'initial', e.field if e.field in initial else None)
    d['grid'] = GridSpec(**grid)
    try:
        d['grid'].validate(d['params'].h0)
    except ValueError as e:
        raise rd.error(str(e), 'grid')

    return Scenario(**d)


def _read_axes(rd: _Reader) -> List[SweepAxis]:
    axes = []
    for i in (1, 2):
        pkey = 'param{:d}'.format(i)
        rkey = 'range{:d}'.format(i)
        if not rd.has('sweep', pkey):
            if rd.has('sweep', rkey):
                raise rd.error("range given without {:s}".format(pkey), 'sweep', rkey)
            continue
        param = rd.cp.get('sweep', pkey).strip()
        if param not in COEFFICIENT_NAMES:
            raise rd.error("{!r} is not a model coefficient".format(param), 'sweep', pkey)
        if not rd.has('sweep', rkey):
            raise rd.error("missing; expected 'start, stop, count'", 'sweep', rkey)
        values = rd.numbers('sweep', rkey)
        if len(values) != 3 or values[2] != int(values[2]) or values[2] < 1:
            raise rd.error("expected 'start, stop, count'", 'sweep', rkey)
        spacing = 'linear'
        skey = 'spacing{:d}'.format(i)
        if rd.has('sweep', skey):
            spacing = rd.cp.get('sweep', skey).strip()
        try:
            axes.append(SweepAxis(param, values[0], values[1], int(values[2]), spacing))
        except ValueError as e:
            raise rd.error(str(e), 'sweep', skey if spacing not in _SPACINGS else rkey)
    if rd.has('sweep', 'param2') and not rd.has('sweep', 'param1'):
        raise rd.error("param2 given without param1", 'sweep', 'param2')
    return axes


def from_file(file_path: str) -> Scenario:
    """
    Load a scenario from a config file on disk.
    """
    try:
        with open(file_path, 'r') as fp:
            text = fp.read()
    except OSError as e:
        raise ConfigError("cannot read config: {:s}".format(e.strerror or str(e)), source=file_path)
    return from_config(text, file_path)


def _superior_baseline() -> Scenario:
    p = ModelParams(d1=1.0, d2=1.0, a1=3.0, a2=1.0, b1=1.0, b2=1.0, c1=1.0, c2=1.0, mu=1.0, h0=0.8, dim=1)
    return Scenario(
        id='superior-baseline',
        params=p,
        initial=InitialData(u_shape='parabola', u_amplitude=1.5, v_level=1.0),
        grid=GridSpec(m_u=128, m_v=960, L_v=120.0, dt=0.01, t_end=30.0, output_stride=10),
        mu_bracket=(0.05, 10.0),
        sweep_axes=[SweepAxis('mu', 0.1, 8.0, 8), SweepAxis('h0', 0.4, 1.2, 8)],
    )


def _inferior_baseline() -> Scenario:
    p = ModelParams(d1=1.0, d2=1.0, a1=1.0, a2=3.0, b1=1.0, b2=1.0, c1=1.0, c2=1.0, mu=1.0, h0=0.8, dim=1)
    return Scenario(
        id='inferior-baseline',
        params=p,
        initial=InitialData(u_shape='parabola', u_amplitude=0.5, v_level=3.0),
        grid=GridSpec(m_u=128, m_v=256, L_v=20.0, dt=0.01, t_end=30.0, output_stride=10),
    )


def _scalar_logistic() -> Scenario:
    p = ModelParams(d1=1.0, d2=1.0, a1=1.0, a2=0.5, b1=1.0, b2=1.0, c1=1.0, c2=1.0, mu=1.0, h0=1.0, dim=1)
    return Scenario(
        id='scalar-logistic',
        params=p,
        initial=InitialData(u_shape='parabola', u_amplitude=0.5, v_level=0.0),
        grid=GridSpec(m_u=256, m_v=64, L_v=100.0, dt=0.01, t_end=50.0, output_stride=10),
        mu_bracket=(0.01, 10.0),
    )


BUILTIN_SCENARIOS: Dict[str, Callable[[], Scenario]] = {
    'superior-baseline': _superior_baseline,
    'inferior-baseline': _inferior_baseline,
    'scalar-logistic': _scalar_logistic,
}


def builtin(name: str) -> Scenario:
    try:
        return BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise ConfigError("no built-in scenario named {!r}; choose from {:s}".format(name, ', '.join(BUILTIN_SCENARIOS)), source='--scenario')


def resolve(name: Optional[str]=None, config_path: Optional[str]=None) -> Scenario:
    """
    The scenario selected on the command line: a config file if one is
    given, else the named built-in, else superior-baseline.
    """
    if config_path is not None:
        if name is not None:
            _log.warning("--config given; ignoring --scenario {:s}".format(name))
        return from_file(config_path)
    return builtin(name if name is not None else 'superior-baseline')
