from typing import List, Optional, Tuple
import csv
import logging
import os

import numpy as np

from .. import semiwave, util
from ..model import InvalidParameters

_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)


def _check_inputs(**values):
    for name, value in values.items():
        if value is None or not value > 0:
            raise InvalidParameters(name, value, "must be positive")


def table(a: float, b: float, d: float, n: int, output_dir: Optional[str]=None) -> List[Tuple[float, float]]:
    """
    U_k'(0) on n evenly spaced speeds k = j*2sqrt(ad)/n, j = 0..n-1.
    """
    _check_inputs(a=a, b=b, d=d)
    if n < 1:
        raise InvalidParameters('n', n, "must be at least 1")

    limit = semiwave.speed_limit(a, d)
    ks = limit * np.arange(n) / n
    rows = []
    for k in ks:
        rows.append((float(k), semiwave.boundary_slope(a, b, d, float(k))))

    _log.info("k,slope0")
    for k, s in rows:
        _log.info("{:s},{:s}".format(util.format_float(k), util.format_float(s)))

    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        with open(os.path.join(output_dir, 'semiwave_table.csv'), 'w', newline='') as fp:
            writer = csv.writer(fp, lineterminator='\n')
            writer.writerow(('k', 'slope0'))
            for k, s in rows:
                writer.writerow((util.format_float(k), util.format_float(s)))
    return rows


def spreading_speed(mu: float, a: float, b: float, d: float, output_dir: Optional[str]=None) -> float:
    """
    k0 with mu*U_k0'(0) = k0; with an output directory the profile U_k0 is
    written too.
    """
    _check_inputs(mu=mu, a=a, b=b, d=d)
    k0 = semiwave.find_k0(mu, a, b, d)
    _log.info("k0 = {:.12g}  (k0/sqrt(ad) = {:.8g})".format(k0, k0 / np.sqrt(a * d)))

    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        profile = semiwave.solve_semiwave(a, b, d, k0)
        with open(os.path.join(output_dir, 'k0.csv'), 'w', newline='') as fp:
            writer = csv.writer(fp, lineterminator='\n')
            writer.writerow(('mu', 'a', 'b', 'd', 'k0', 'slope0'))
            writer.writerow([util.format_float(x) for x in (mu, a, b, d, k0, profile.slope0)])
        with open(os.path.join(output_dir, 'semiwave_profile.csv'), 'w', newline='') as fp:
            writer = csv.writer(fp, lineterminator='\n')
            writer.writerow(('r', 'U'))
            for r, u in zip(profile.grid, profile.values):
                writer.writerow((util.format_float(r), util.format_float(u)))
    return k0
