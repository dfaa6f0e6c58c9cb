"""Coefficient tables, the usefulness predicate and tolerable-q curves."""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .bipoly import BiPoly
from .errors import ParameterRangeError, check_probability
from .fidelity_engine import DEFAULT_CHUNK_SIZE, fidelity_polynomial, unencoded_baseline
from .models import CoefficientRow, CoefficientTableResponse, CurveSample, TolerableQCurveResponse

logger = logging.getLogger(__name__)

SLACK = 1e-12
SCAN_STEP = 1e-3
RESOLUTION = 1e-6

_polynomials = {}


def polynomial_for(code, workers=1, chunk_size=DEFAULT_CHUNK_SIZE):
    """F_C(p, q) of a code, cached per (label, channel family)."""
    key = (code.label, code.channel_family)
    if key not in _polynomials:
        _polynomials[key] = fidelity_polynomial(code, workers=workers, chunk_size=chunk_size)
    return _polynomials[key]


def clear_cache():
    _polynomials.clear()


@dataclass
class CoefficientTable:
    label: str
    channel: str
    rows: List[Tuple[int, BiPoly]]

    def reassemble(self):
        p = BiPoly.p()
        total = BiPoly()
        for k, c_k in self.rows:
            total = total + c_k * p ** k
        return total

    def to_model(self):
        return CoefficientTableResponse(
            code=self.label, channel=self.channel,
            rows=[CoefficientRow(k=k, terms=c_k.to_json()) for k, c_k in self.rows])


@dataclass
class TolerableQCurve:
    label: str
    samples: List[Tuple[float, float]] = field(default_factory=list)
    resolution: float = RESOLUTION

    def to_model(self):
        return TolerableQCurveResponse(
            code=self.label, resolution=self.resolution,
            samples=[CurveSample(p=p, q_star=q_star) for p, q_star in self.samples])

    def csv_rows(self):
        return [(p, q_star, self.label) for p, q_star in self.samples]


def _margin(poly, family, p, q):
    return poly.eval(p, q) - unencoded_baseline(family, p) + SLACK


def usefulness(code, p, q, poly=None):
    """True iff the code's channel fidelity meets the unencoded baseline."""
    p, q = check_probability('p', p), check_probability('q', q)
    poly = poly if poly is not None else polynomial_for(code)
    return bool(_margin(poly, code.channel_family, p, q) >= 0)


def tolerable_q(code, p, poly=None, scan_step=SCAN_STEP, resolution=RESOLUTION):
    """Largest q in [0, 1] at which the code is still useful at main-error p.

    Scans q on a coarse grid for the last useful point, then bisects the
    interval to the next grid point. Monotonicity in q is not assumed.
    """
    if not 0.0 < p <= 1.0:
        raise ParameterRangeError(f"tolerable_q needs p in (0, 1], got {p}")
    poly = poly if poly is not None else polynomial_for(code)
    family = code.channel_family
    grid = np.linspace(0.0, 1.0, int(round(1.0 / scan_step)) + 1)
    margins = poly.eval(p, grid) - unencoded_baseline(family, p) + SLACK
    useful = np.flatnonzero(margins >= 0)
    if len(useful) == 0:
        return 0.0
    last = int(useful[-1])
    if last == len(grid) - 1:
        return 1.0
    lo, hi = float(grid[last]), float(grid[last + 1])
    while hi - lo > resolution:
        middle = 0.5 * lo + 0.5 * hi
        if _margin(poly, family, p, middle) >= 0:
            lo = middle
        else:
            hi = middle
    return lo


def coefficient_table(code, max_k, poly=None):
    poly = poly if poly is not None else polynomial_for(code)
    if max_k < 0 or max_k > max(poly.degree_p(), 0):
        raise ParameterRangeError(f"max order {max_k} exceeds the p-degree {poly.degree_p()}")
    rows = [(k, poly.coefficient_in_p(k)) for k in range(max_k + 1)]
    return CoefficientTable(label=code.label, channel=code.channel_family, rows=rows)


def _tolerable_job(args):
    return tolerable_q(*args)


def curve_sweep(code, p_grid, poly=None, workers=1):
    poly = poly if poly is not None else polynomial_for(code)
    for p in p_grid:
        if not 0.0 < p <= 1.0:
            raise ParameterRangeError(f"curve grid values must lie in (0, 1], got {p}")
    jobs = [(code, float(p), poly) for p in p_grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_tolerable_job, jobs))
    else:
        values = [_tolerable_job(job) for job in jobs]
    logger.info(f"Swept {len(jobs)} points of the tolerable-q curve for {code.label}.")
    return TolerableQCurve(label=code.label, samples=[(float(p), q) for p, q in zip(p_grid, values)])


def crossover_p(code, poly=None, p_max=1.0, scan_step=SCAN_STEP, resolution=RESOLUTION) -> Optional[float]:
    """Smallest p at which the code is no longer useful even with pure ancillas."""
    poly = poly if poly is not None else polynomial_for(code)
    grid = np.arange(scan_step, p_max + scan_step / 2, scan_step)
    family = code.channel_family
    failing = [p for p in grid if _margin(poly, family, float(p), 0.0) < 0]
    if not failing:
        return None
    hi = float(failing[0])
    lo = hi - scan_step
    while hi - lo > resolution:
        middle = 0.5 * lo + 0.5 * hi
        if _margin(poly, family, middle, 0.0) < 0:
            hi = middle
        else:
            lo = middle
    return hi
