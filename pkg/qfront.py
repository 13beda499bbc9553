from quickfront import scenario as qfscenario
from quickfront.actions import semiwave_actions as semiwaves, simulate_actions as simulations, sweep_actions as sweeps, threshold_actions as thresholds
from quickfront.analysis import AnalysisError, HorizonExhausted
from quickfront.fbsolver import SolverError
from quickfront.model import InvalidParameters
from quickfront.oracle import Instability
import sys
import logging
import logging.handlers
import argparse
from typing import Iterable, Union


_log = logging.getLogger('qfront')
_log.setLevel(logging.DEBUG)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INCONCLUSIVE = 4


def main(argv=None):
    _setup_console_logger()
    sys.exit(run(argv))


def run(argv=None) -> int:
    """
    Parse the command line, execute it, and return the exit code.
    """
    # noinspection PyBroadException
    try:
        _parse_cli_and_run(argv)
    except KeyboardInterrupt:
        pass
    except SystemExit as e:
        # argparse usage errors
        return e.code if isinstance(e.code, int) else EXIT_CONFIG
    except (qfscenario.ConfigError, InvalidParameters) as e:
        _log.error(str(e))
        return EXIT_CONFIG
    except HorizonExhausted as e:
        _log.error(str(e))
        return EXIT_INCONCLUSIVE
    except (ValueError, SolverError, AnalysisError, Instability) as e:
        _log.error("{:s}: {!s}".format(type(e).__name__, e))
        return EXIT_SOLVER
    except Exception:
        _log.exception("Problem during execution")
        return EXIT_UNEXPECTED
    return EXIT_OK


def _add_scenario_args(p: argparse.ArgumentParser):
    p.add_argument('-c', '--config', help="Scenario config file to run. Overrides --scenario.")
    p.add_argument('-s', '--scenario', help="Name of a built-in scenario.", choices=sorted(qfscenario.BUILTIN_SCENARIOS))
    p.add_argument('--mu', type=float, help="Override the Stefan coefficient mu.")
    p.add_argument('--h0', type=float, help="Override the initial front radius.")
    p.add_argument('--horizon', type=float, help="Override the time horizon t_end.")
    p.add_argument('-o', '--out', help="Directory to write results to. Will be created if it doesn't already exist.")


def _scenario_from(ns: argparse.Namespace) -> qfscenario.Scenario:
    scen = qfscenario.resolve(ns.scenario, ns.config)
    return scen.with_overrides(mu=ns.mu, h0=ns.h0, horizon=ns.horizon, output_dir=ns.out)


def _parse_cli_and_run(argv=None):
    parser = argparse.ArgumentParser(description="Free boundary competition-diffusion simulator")

    # space at the end of metavar is not a typo; we need it so help output is prettier
    subparsers = parser.add_subparsers(description="Functionality to execute.", metavar=" SUBCOMMAND ", dest='cmd')
    subparsers.required = True

    # Simulation
    sim_parser = subparsers.add_parser('simulate', help="Run one scenario and write trajectory.csv, summary.txt and manifest.txt.", description="Simulate a scenario.")
    _add_scenario_args(sim_parser)
    sim_parser.set_defaults(func=lambda ns: simulations.run(_scenario_from(ns)))

    # Semi-wave
    sw_parser = subparsers.add_parser('semiwave', help="Compute the semi-wave speed k0 for a Stefan coefficient, or a table of U_k'(0) over k.", description="Semi-wave computations.")
    sw_parser.add_argument('-a', type=float, default=1.0, help="Growth rate a.")
    sw_parser.add_argument('-b', type=float, default=1.0, help="Competition rate b.")
    sw_parser.add_argument('-d', type=float, default=1.0, help="Diffusion rate d.")
    sw_parser.add_argument('--mu', type=float, help="Stefan coefficient; prints k0.")
    sw_parser.add_argument('--table', action='store_true', help="Print (k, slope0) rows instead of k0.")
    sw_parser.add_argument('-n', type=int, default=20, help="Number of table rows.")
    sw_parser.add_argument('-o', '--out', help="Also write CSV files to this directory.")
    sw_parser.set_defaults(func=_run_semiwave)

    # Threshold
    th_parser = subparsers.add_parser('threshold', help="Bisect for the threshold mu* between vanishing and spreading.", description="Find the sharp threshold mu*.")
    _add_scenario_args(th_parser)
    th_parser.add_argument('--mu-lo', type=float, help="Lower end of the mu bracket (must vanish).")
    th_parser.add_argument('--mu-hi', type=float, help="Upper end of the mu bracket (must spread).")
    th_parser.add_argument('-w', '--workers', type=int, default=1, help="Processes used to validate the bracket end points.")
    th_parser.set_defaults(func=_run_threshold)

    # Sweep
    sweep_parser = subparsers.add_parser('sweep', help="Classify a one- or two-parameter grid and write phase.csv.", description="Phase-diagram sweep.")
    _add_scenario_args(sweep_parser)
    sweep_parser.add_argument('-w', '--workers', type=int, default=1, help="Number of grid points simulated concurrently.")
    sweep_parser.set_defaults(func=lambda ns: sweeps.run(_scenario_from(ns), max(1, ns.workers)))

    args = parser.parse_args(argv)
    args.func(args)


def _run_semiwave(ns: argparse.Namespace):
    if ns.table:
        semiwaves.table(ns.a, ns.b, ns.d, ns.n, ns.out)
    elif ns.mu is None:
        raise InvalidParameters('mu', None, "give --mu or --table")
    else:
        semiwaves.spreading_speed(ns.mu, ns.a, ns.b, ns.d, ns.out)


def _run_threshold(ns: argparse.Namespace):
    scen = _scenario_from(ns)
    if ns.mu_lo is not None or ns.mu_hi is not None:
        d = scen.to_dict()
        lo = ns.mu_lo if ns.mu_lo is not None else scen.mu_bracket[0]
        hi = ns.mu_hi if ns.mu_hi is not None else scen.mu_bracket[1]
        if not 0 < lo < hi:
            raise InvalidParameters('mu bracket', (lo, hi), "need 0 < mu_lo < mu_hi")
        d['mu_bracket'] = (lo, hi)
        scen = qfscenario.Scenario(**d)
    thresholds.run(scen, max(1, ns.workers))


class _ExactLevelFilter(logging.Filter):
    """
    Passes only records whose level is one of the given levels, so the stdout
    handler carries INFO (tables, verdicts, k0) and nothing else.
    """

    def __init__(self, levels: Iterable[Union[int, str]]):
        super().__init__()
        self.levels = frozenset(self._level_number(lev) for lev in levels)

    @staticmethod
    def _level_number(lev: Union[int, str]) -> int:
        if isinstance(lev, int):
            return lev
        number = logging.getLevelName(lev.upper())
        if not isinstance(number, int):
            raise ValueError("unknown log level name: {!r}".format(lev))
        return number

    def min_level(self) -> int:
        return min(self.levels)

    def filter(self, record: logging.LogRecord) -> bool:
        return record.levelno in self.levels


def _setup_console_logger():
    file_handler = logging.handlers.RotatingFileHandler('qfront.log', maxBytes=25*1024*1024, backupCount=5)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter("[%(asctime)s] %(name)s %(levelname)s: %(message)s"))
    logging.getLogger().addHandler(file_handler)

    stderr_handler = logging.StreamHandler(stream=sys.stderr)
    stderr_handler.setLevel(logging.WARNING)
    stderr_handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    logging.getLogger().addHandler(stderr_handler)

    lev_filter = _ExactLevelFilter(['INFO'])
    stdout_handler = logging.StreamHandler(stream=sys.stdout)
    stdout_handler.setLevel(lev_filter.min_level())
    stdout_handler.setFormatter(logging.Formatter("%(message)s"))
    stdout_handler.addFilter(lev_filter)
    logging.getLogger().addHandler(stdout_handler)


if __name__ == '__main__':
    main()
