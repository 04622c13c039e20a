"""Central finite-difference gradient verification."""
from dataclasses import dataclass, field

import numpy as np


def relative_error(analytic, numeric, floor=1e-8):
    """Entrywise ``|a - n| / max(|a|, |n|, floor)``."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def numeric_gradient(fun, params, names=None, step=1e-5):
    """Central differences of the scalar ``fun(params)`` for every entry of ``params``.

    Entries are perturbed in place and restored afterwards.
    """
    names = list(params) if names is None else list(names)
    grads = {}
    for name in names:
        value = params[name]
        g = np.zeros_like(value)
        flat, gflat = value.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = fun(params)
            flat[i] = orig - step
            f_minus = fun(params)
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * step)
        grads[name] = g
    return grads


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_parameter: dict = field(default_factory=dict)
    worst_parameter: str = ""

    def passed(self, tol=1e-4):
        return self.max_rel_error <= tol


def compare_gradients(analytic, numeric, floor=None, floor_fraction=1e-3):
    """Worst entrywise relative error per tensor.

    The denominator is floored at ``floor_fraction`` times the largest
    analytic gradient magnitude (or at ``floor`` if given), so entries many
    orders below the gradient's scale are judged against that scale instead of
    against the differencing round-off.
    """
    if floor is None:
        scale = max((float(np.max(np.abs(analytic[n]), initial=0.0)) for n in numeric), default=0.0)
        floor = max(floor_fraction * scale, 1e-12)
    per = {}
    for name, num in numeric.items():
        per[name] = float(np.max(relative_error(analytic[name], num, floor), initial=0.0))
    worst = max(per, key=per.get) if per else ""
    return GradCheckReport(per.get(worst, 0.0), per, worst)
