from concurrent.futures import ProcessPoolExecutor
from datetime import timedelta
from typing import Any, Dict, List, Tuple
import csv
import logging
import os

from .. import analysis, layout, util
from ..fbsolver import SolverError, simulate
from ..scenario import ConfigError, Scenario

_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)

PHASE_FIELDS = ('param1', 'param2', 'verdict', 'h_final', 'c_hat')

_NAN = float('nan')


def sweep_point(args: Tuple[Scenario, Dict[str, float]]) -> Dict[str, Any]:
    """
    Classify one grid point. Errors are recorded in the row instead of
    propagating so one bad point does not end the sweep.
    """
    scen, changes = args
    row = {'verdict': '', 'h_final': _NAN, 'c_hat': _NAN}
    try:
        p = scen.params.with_values(**changes)
        res = simulate(p, scen.initial, scen.grid, allow_exhaustion=True)
        row['h_final'] = res.trajectory.h[-1]
        verdict = analysis.classify(res.trajectory, p, scalar=scen.scalar)
        row['verdict'] = str(verdict.verdict)
        if verdict.verdict == analysis.Verdict.SPREADING:
            try:
                row['c_hat'] = analysis.estimate_speed(res.trajectory, p, scalar=scen.scalar).c_hat
            except (analysis.NotSpreading, analysis.InsufficientRecords):
                pass
    except (ValueError, SolverError, analysis.AnalysisError) as e:
        _log.debug("sweep point {!r}: {!s}".format(changes, e))
        row['verdict'] = type(e).__name__
    return row


def _matrix_code(verdict: str) -> str:
    for v in analysis.Verdict:
        if verdict == v.value:
            return str(v.code)
    return 'nan'


def run(scen: Scenario, workers: int=1) -> List[Dict[str, Any]]:
    """
    Classify every point of the scenario's sweep grid and write phase.csv and
    the gnuplot matrix phase_matrix.dat.
    """
    if len(scen.sweep_axes) == 0:
        raise ConfigError("a sweep needs at least param1 and range1", 'sweep', 'param1')
    out = scen.output_dir
    os.makedirs(out, exist_ok=True)

    ax1 = scen.sweep_axes[0]
    values1 = [float(x) for x in ax1.values()]
    if len(scen.sweep_axes) > 1:
        ax2 = scen.sweep_axes[1]
        values2 = [float(x) for x in ax2.values()]
    else:
        ax2 = None
        values2 = [_NAN]

    points = []
    for v2 in values2:
        for v1 in values1:
            changes = {ax1.param: v1}
            if ax2 is not None:
                changes[ax2.param] = v2
            points.append((v1, v2, changes))

    _log.info("Sweeping {:d} points on {:d} worker(s)...".format(len(points), workers))
    jobs = [(scen, changes) for _, _, changes in points]
    rows = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            show_progress = util.once_every(timedelta(seconds=5), lambda: _log.info(util.progress(rows, jobs)))
            # map yields in submission order, which keeps the output in grid order
            for row in pool.map(sweep_point, jobs):
                rows.append(row)
                show_progress()
    else:
        show_progress = util.once_every(timedelta(seconds=5), lambda: _log.info(util.progress(rows, jobs)))
        for job in jobs:
            show_progress()
            rows.append(sweep_point(job))

    results = []
    for (v1, v2, _), row in zip(points, rows):
        full = {'param1': v1, 'param2': v2}
        full.update(row)
        results.append(full)

    f = util.format_float
    with open(os.path.join(out, 'phase.csv'), 'w', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        writer.writerow(PHASE_FIELDS)
        for r in results:
            writer.writerow((f(r['param1']), f(r['param2']), r['verdict'], f(r['h_final']), f(r['c_hat'])))

    with open(os.path.join(out, 'phase_matrix.dat'), 'w') as fp:
        fp.write("# rows: {:s} = {:s}\n".format(ax2.param if ax2 else '-', ' '.join(f(v) for v in values2)))
        fp.write("# columns: {:s} = {:s}\n".format(ax1.param, ' '.join(f(v) for v in values1)))
        fp.write("# Vanishing -1, Undetermined 0, Spreading 1, error nan\n")
        n1 = len(values1)
        for i in range(len(values2)):
            fp.write(' '.join(_matrix_code(r['verdict']) for r in results[i * n1:(i + 1) * n1]) + '\n')

    extra = {'param1': ax1.param, 'param2': ax2.param if ax2 else '-', 'workers': workers}
    with open(os.path.join(out, 'manifest.txt'), 'w') as fp:
        fp.write(layout.gen_manifest('sweep', scen, ['phase.csv', 'phase_matrix.dat', 'manifest.txt'], extra))

    counts = {}
    for r in results:
        counts[r['verdict']] = counts.get(r['verdict'], 0) + 1
    _log.info(', '.join('{:s}: {:d}'.format(k, v) for k, v in sorted(counts.items())))
    return results
