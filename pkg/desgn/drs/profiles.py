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

from dataclasses import dataclass

import numpy as np

from desgn.core import IllegalInputError, IncompatibleInputError

# kW added to every winter hour: three appliances of 0.35 kW
ROBUST_EXTRA_KW = 1.05


@dataclass(frozen=True, eq=False)
class RobustProfiles:
    elec: np.ndarray
    heat: np.ndarray
    irradiance: np.ndarray
    t_amb: np.ndarray


def make_robust_season(winter_elec, heat_daily, irr_winter, temp_days, dt=1.0):
    """Worst-case day built from winter data.

    ``heat_daily`` and ``temp_days`` hold one row per winter day.
    ``irr_winter`` is either one day of points or one row per day, in which
    case the rows are averaged.
    """
    winter_elec = np.asarray(winter_elec, dtype=float)
    heat_daily = np.atleast_2d(np.asarray(heat_daily, dtype=float))
    irr_winter = np.asarray(irr_winter, dtype=float)
    temp_days = np.atleast_2d(np.asarray(temp_days, dtype=float))
    if winter_elec.size == 0 or heat_daily.size == 0 or irr_winter.size == 0 or temp_days.size == 0:
        raise IllegalInputError("robust season needs non-empty winter data")

    irr = irr_winter.mean(axis=0) if irr_winter.ndim == 2 else irr_winter
    n = winter_elec.size
    for label, width in (("heat", heat_daily.shape[1]), ("irradiance", irr.size), ("temperature", temp_days.shape[1])):
        if width != n:
            raise IncompatibleInputError(f"robust season: {label} has {width} points, expected {n}")

    # np.argmax/argmin return the first index on ties
    heat = heat_daily[int(np.argmax(heat_daily.sum(axis=1)))]
    t_amb = temp_days[int(np.argmin(temp_days.mean(axis=1)))]
    return RobustProfiles(
        elec=winter_elec + ROBUST_EXTRA_KW * dt,
        heat=heat.copy(),
        irradiance=irr.copy(),
        t_amb=t_amb.copy(),
    )


def synthesize_profiles(load_ids, timeline, seed=0):
    """Seeded diurnal electricity and heat profiles for every id in ``load_ids``.

    Returns ``{load_id: (elec, heat)}`` in kWh per timepoint. The robust
    block is derived from the coldest regular season with
    :func:`make_robust_season`.
    """
    rng = np.random.default_rng(seed)
    dt = timeline.dt
    hours = timeline.clock_hours
    # morning and evening peaks
    shape = 0.25 + 0.35 * np.exp(-0.5 * ((hours - 8.0) / 1.5) ** 2) + 0.55 * np.exp(-0.5 * ((hours - 19.0) / 2.0) ** 2)
    heat_shape = np.maximum(15.5 - timeline.t_amb, 0.0) * 0.12

    regular = timeline.regular
    coldest = min(regular, key=lambda s: float(np.mean(timeline.seasons[s].t_amb)))
    cold_block = timeline.blocks[coldest]

    out = {}
    for load_id in load_ids:
        scale = rng.uniform(0.8, 1.2)
        elec = dt * scale * shape * (1.0 + 0.1 * rng.standard_normal(timeline.T))
        heat = dt * scale * heat_shape * (1.0 + 0.1 * rng.standard_normal(timeline.T))
        elec = np.maximum(elec, 0.0)
        heat = np.maximum(heat, 0.0)
        robust = timeline.robust_index
        if robust is not None:
            block = timeline.blocks[robust]
            if len(block) != len(cold_block):
                raise IncompatibleInputError("robust and winter blocks differ in length")
            profiles = make_robust_season(
                elec[cold_block.start:cold_block.stop],
                heat[cold_block.start:cold_block.stop],
                timeline.irradiance[cold_block.start:cold_block.stop],
                timeline.t_amb[cold_block.start:cold_block.stop],
                dt,
            )
            elec[block.start:block.stop] = profiles.elec
            heat[block.start:block.stop] = profiles.heat
        out[load_id] = (elec, heat)
    return out
