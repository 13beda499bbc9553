from typing import List, Optional
import logging
import os

from .. import analysis, layout, util
from ..analysis import ClassificationResult, NotSpreading, InsufficientRecords, SpeedEstimate
from ..fbsolver import SimulationResult, simulate
from ..model import BoundaryRegime, Regime, classify_regime
from ..scenario import Scenario

_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)


class SimulationReport:
    def __init__(self, result: SimulationResult, regime: str, audit: analysis.CheckReport, classification: Optional[ClassificationResult], speed: Optional[SpeedEstimate], longtime: Optional[analysis.CheckReport], files: List[str]):
        self.result = result
        self.regime = regime
        self.audit = audit
        self.classification = classification
        self.speed = speed
        self.longtime = longtime
        self.files = files


def regime_name(scen: Scenario) -> str:
    try:
        return str(classify_regime(scen.params))
    except BoundaryRegime:
        return 'boundary'


def snapshot_name(t: float) -> str:
    return 'snapshot_t{:s}.csv'.format(util.format_float(t))


def run(scen: Scenario) -> SimulationReport:
    """
    Simulate one scenario and write trajectory.csv, any requested snapshots,
    summary.txt and manifest.txt to its output directory.
    """
    p = scen.params
    out = scen.output_dir
    os.makedirs(out, exist_ok=True)
    regime = regime_name(scen)

    _log.info("(1/3) Simulating {:s} ({:s}) up to t={:g}...".format(scen.id, regime, scen.grid.t_end))
    result = simulate(p, scen.initial, scen.grid, snapshot_times=scen.snapshot_times, allow_exhaustion=True)
    traj = result.trajectory
    if traj.termination != 'horizon':
        _log.warning("run ended early at t={:g}: {:s}".format(traj.t[-1], traj.termination))

    _log.info("(2/3) Analysing the run...")
    audit = analysis.invariant_audit(traj, p, scen.initial, scen.grid.L_v, result.state)
    classification = None
    speed = None
    longtime = None
    notes = []
    if scen.scalar or regime == str(Regime.SUPERIOR_U):
        classification = analysis.classify(traj, p, scalar=scen.scalar)
        if classification.verdict == analysis.Verdict.SPREADING:
            try:
                speed = analysis.estimate_speed(traj, p, scalar=scen.scalar)
            except (NotSpreading, InsufficientRecords) as e:
                notes.append("no speed estimate: {!s}".format(e))
    elif regime == str(Regime.INFERIOR_U):
        longtime = analysis.inferior_longtime_check(traj, result.state, p, scen.grid)
    else:
        notes.append("no spreading-vanishing verdict for regime {:s}".format(regime))

    _log.info("(3/3) Writing results to {:s}...".format(out))
    files = ['trajectory.csv']
    traj.to_file(os.path.join(out, 'trajectory.csv'))
    for snap in result.snapshots:
        name = snapshot_name(snap.requested)
        snap.to_file(os.path.join(out, name))
        files.append(name)
    summary = layout.gen_summary(scen, result, regime, audit, classification, speed, longtime, notes)
    with open(os.path.join(out, 'summary.txt'), 'w') as fp:
        fp.write(summary)
    files.append('summary.txt')
    manifest = layout.gen_manifest('simulate', scen, files + ['manifest.txt'], {'snapshots': ', '.join(util.format_float(t) for t in scen.snapshot_times)})
    with open(os.path.join(out, 'manifest.txt'), 'w') as fp:
        fp.write(manifest)
    files.append('manifest.txt')

    _log.info("h(t={:g}) = {:.8g}".format(traj.t[-1], traj.h[-1]))
    if classification is not None:
        _log.info("verdict: {!s}".format(classification))
    if speed is not None:
        _log.info("front speed {:.6g} in [{:.6g}, {:.6g}]".format(speed.c_hat, speed.lower, speed.upper))
    if longtime is not None:
        _log.info("{:s}: {:s}".format(longtime.title, 'pass' if longtime.passed else 'fail'))
    if not audit.passed:
        _log.warning("invariant audit failed: " + '; '.join(str(c) for c in audit.failures()))

    return SimulationReport(result, regime, audit, classification, speed, longtime, files)
