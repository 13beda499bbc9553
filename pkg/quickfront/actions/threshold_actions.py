from typing import Any, Dict, Sequence, Tuple
import csv
import logging
import os

from .. import analysis, eigen, layout, util
from ..scenario import Scenario

_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)


def run(scen: Scenario, workers: int=1) -> analysis.MuStarResult:
    """
    Bisect for the threshold Stefan coefficient of a scenario and write the
    trial history to threshold.csv.
    """
    p = scen.params
    out = scen.output_dir
    os.makedirs(out, exist_ok=True)

    bound = analysis.spreading_bound(p, scen.scalar)
    _log.info("spreading bound R* sqrt(d1/a_eff) = {:.8g}, h0 = {:g}".format(bound, p.h0))
    extra = {
        'mu_lo': util.format_float(scen.mu_bracket[0]),
        'mu_hi': util.format_float(scen.mu_bracket[1]),
        'rtol': util.format_float(scen.rtol),
        'max_doublings': scen.max_doublings,
    }

    if scen.scalar:
        mass = analysis.initial_mass(scen.initial, p.h0, p.dim)
        mu_bar = analysis.spreading_mu_estimate(p.d1, p.a1, p.b1, p.h0, p.dim, scen.initial.u_sup(p.h0), mass)
        _log.info("explicit sufficient mu for spreading: {:.8g}".format(mu_bar))
        extra['mu_sufficient'] = util.format_float(mu_bar)
    elif p.h0 < eigen.critical_radius(p.d1, p.a1, p.dim):
        _log.info("h0 is below R* sqrt(d1/a1): the threshold is positive")

    _log.info("Bisecting on mu in [{:g}, {:g}]...".format(*scen.mu_bracket))
    try:
        result = analysis.find_mu_star(
            p, scen.initial, scen.mu_bracket, scen.grid,
            rtol=scen.rtol,
            max_doublings=scen.max_doublings,
            workers=workers,
            scalar=scen.scalar,
        )
    except (analysis.HorizonExhausted, analysis.BracketInvalid) as e:
        # keep what was learned before giving up
        extra['status'] = type(e).__name__
        if getattr(e, 'bracket', None) is not None:
            extra['bracket'] = '{:s}, {:s}'.format(util.format_float(e.bracket[0]), util.format_float(e.bracket[1]))
        _write_outputs(scen, e.history, extra)
        raise

    extra['status'] = 'converged'
    extra['mu_star'] = util.format_float(result.mu_star)
    extra['bracket'] = '{:s}, {:s}'.format(util.format_float(result.lo), util.format_float(result.hi))
    _write_outputs(scen, result.history, extra)

    if result.simulations == 0:
        _log.info("mu* = 0 (h0 is at or beyond the spreading bound; nothing simulated)")
    else:
        _log.info("mu* = {:.8g} in [{:.8g}, {:.8g}] after {:d} simulations".format(result.mu_star, result.lo, result.hi, result.simulations))
    return result


def _write_outputs(scen: Scenario, history: Sequence[Tuple[float, analysis.Verdict, float]], extra: Dict[str, Any]):
    out = scen.output_dir
    with open(os.path.join(out, 'threshold.csv'), 'w', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        writer.writerow(('mu', 'verdict', 'horizon'))
        for mu, verdict, horizon in history:
            writer.writerow((util.format_float(mu), str(verdict), util.format_float(horizon)))

    with open(os.path.join(out, 'manifest.txt'), 'w') as fp:
        fp.write(layout.gen_manifest('threshold', scen, ['threshold.csv', 'manifest.txt'], extra))
