# This file is part of desgn, distributed energy system design for LV feeders
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

"""Logistic curve fitting for heat-pump performance data."""

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

from desgn.core import IllegalInputError, Logistic, Msg

_COMPONENT = "fit"


def _model(params, x):
    L, k, x0, c = params
    return L * expit(k * (x - x0)) + c


def _initial_guess(x, y):
    c0 = float(np.min(y))
    L0 = float(np.ptp(y))
    mid = c0 + 0.5 * L0
    x0 = float(np.median(x))
    for i in range(len(x) - 1):
        lo, hi = y[i] - mid, y[i + 1] - mid
        if lo == 0.0:
            x0 = float(x[i])
            break
        if lo * hi < 0:
            x0 = float(x[i] + (x[i + 1] - x[i]) * lo / (lo - hi))
            break
    slope = float(np.interp(x0, x, np.gradient(y, x)))
    k0 = 4.0 * slope / L0 if slope != 0.0 else 1.0 / max(float(np.ptp(x)), 1.0)
    return np.array([L0, k0, x0, c0])


def fit_logistic(points, *, max_nfev=2000):
    """Least-squares logistic through ``points`` (a sequence of ``(x, y)``).

    The start point is derived from the data only, so the fit is
    deterministic. Flat data returns ``L = k = 0`` and ``c`` equal to the
    common value.
    """
    data = np.asarray(points, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise IllegalInputError("logistic fit expects (x, y) pairs")
    if len(data) < 4:
        raise IllegalInputError(f"logistic fit needs at least 4 points, got {len(data)}")
    order = np.argsort(data[:, 0])
    x, y = data[order, 0], data[order, 1]
    if np.any(np.diff(x) == 0):
        raise IllegalInputError("logistic fit needs distinct x values")

    if np.ptp(y) <= 1e-12 * max(1.0, abs(y[0])):
        return Logistic(0.0, 0.0, float(np.mean(x)), float(y[0]))

    start = _initial_guess(x, y)
    result = least_squares(
        lambda p: _model(p, x) - y,
        start,
        method="lm",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    best = result.x
    if np.sum(result.fun**2) > np.sum((_model(start, x) - y) ** 2):
        best = start
    if result.status == 0:
        Msg.warning(_COMPONENT, f"logistic fit stopped after {result.nfev} evaluations without converging")
    L, k, x0, c = (float(v) for v in best)
    return Logistic(L, k, x0, c)


def hp_profile(hp, t_amb):
    """Capacity (kW) and COP of heat pump ``hp`` at each ambient temperature."""
    t_amb = np.asarray(t_amb, dtype=float)
    cap = np.maximum(hp.cap_fit(t_amb), 0.0)
    cop = np.maximum(hp.cop_fit(t_amb), 1e-3)
    return cap, cop
