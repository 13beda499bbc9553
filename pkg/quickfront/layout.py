from typing import Any, Dict, Optional, Sequence
import logging

import jinja2

from . import filters, __version__
from .analysis import CheckReport, ClassificationResult, SpeedEstimate
from .fbsolver import SimulationResult
from .scenario import Scenario

_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)

_jinja_loader = jinja2.PackageLoader("quickfront")

# plain-text reports; nothing here is HTML
_jinja_env = jinja2.Environment(
    loader=_jinja_loader,
    autoescape=False,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)

_jinja_env.filters['sci'] = filters.sci
_jinja_env.filters['exact'] = filters.exact
_jinja_env.filters['passfail'] = filters.passfail


def gen_manifest(command: str, scen: Scenario, outputs: Sequence[str], extra: Optional[Dict[str, Any]]=None) -> str:
    """
    Every resolved input of a run plus the code version. Contains no
    timestamps so identical runs give identical manifests.
    """
    template = _jinja_env.get_template('manifest.txt.jinja')
    data = {
        'version': __version__,
        'command': command,
        'scenario': scen,
        'params': scen.params.to_dict(),
        'initial': scen.initial.to_dict(),
        'grid': scen.grid.to_dict(),
        'outputs': list(outputs),
        'extra': sorted((extra or {}).items()),
    }
    return template.render(data)


def gen_summary(
    scen: Scenario,
    result: SimulationResult,
    regime: str,
    audit: CheckReport,
    classification: Optional[ClassificationResult]=None,
    speed: Optional[SpeedEstimate]=None,
    longtime: Optional[CheckReport]=None,
    notes: Sequence[str]=()
) -> str:
    template = _jinja_env.get_template('summary.txt.jinja')
    traj = result.trajectory
    data = {
        'scenario': scen,
        'regime': regime,
        'records': len(traj),
        't_final': traj.t[-1],
        'h_final': traj.h[-1],
        'sup_u': traj.sup_u[-1],
        'sup_v': traj.sup_v[-1],
        'termination': traj.termination,
        'bounds': result.bounds,
        'audit': audit,
        'classification': classification,
        'speed': speed,
        'longtime': longtime,
        'notes': list(notes),
    }
    return template.render(data)
