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

"""Technology catalog containers.

Prices are in pounds, energies in kWh and powers in kW. The catalog is read
by :func:`desgn.drs.des.load_catalog`, which also fits the heat-pump curves.
"""

from dataclasses import dataclass, fields

import numpy as np
from scipy.special import expit

from .error import IllegalInputError


@dataclass(frozen=True)
class Logistic:
    """``L / (1 + exp(-k (x - x0))) + c``."""

    L: float
    k: float
    x0: float
    c: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.L * expit(self.k * (x - self.x0)) + self.c

    @property
    def band(self):
        return (min(self.c, self.c + self.L), max(self.c, self.c + self.L))

    def to_dict(self):
        return {"L": self.L, "k": self.k, "x0": self.x0, "c": self.c}


@dataclass(frozen=True)
class PvSpec:
    panel_area: float = 1.75
    eta: float = 0.18
    panel_cap: float = 0.25
    cap_max: float = 5000.0
    r_capital: float = 450.0
    r_fixed_op: float = 12.5
    roof_max: float = 35.0


@dataclass(frozen=True)
class BatterySpec:
    name: str = "li-ion"
    ved: float = 148.37
    soc_max: float = 0.9
    dod_max: float = 0.9
    eta_chg: float = 0.97
    eta_dis: float = 0.97
    chg_rate: float = 0.2
    dis_rate: float = 0.2
    r_capital: float = 799.0
    r_op: float = 11.0
    vol_avail: float = 0.5


@dataclass(frozen=True)
class BoilerSpec:
    eta: float = 0.94
    r_capital: float = 120.0


@dataclass(frozen=True)
class HeatPumpSpec:
    name: str
    cop_fit: Logistic
    cap_fit: Logistic
    t_supply: float
    r_capital: float
    r_install: float = 3000.0
    r_maint: float = 500.0


@dataclass(frozen=True)
class TankSpec:
    name: str
    volume: float
    loss: float
    r_capital: float
    r_maint: float = 0.0
    t_min: float = 49.0


@dataclass(frozen=True)
class Tariffs:
    day: float = 0.18
    night: float = 0.08
    seg: float = 0.132
    gas: float = 0.02514
    night_start: float = 0.0
    night_end: float = 7.0

    def grid_price(self, clock_hours):
        """Grid tariff for each clock hour; night applies on ``[night_start, night_end)``."""
        hour = np.mod(np.asarray(clock_hours, dtype=float), 24.0)
        if self.night_start <= self.night_end:
            night = (hour >= self.night_start) & (hour < self.night_end)
        else:
            night = (hour >= self.night_start) | (hour < self.night_end)
        return np.where(night, self.night, self.day)


@dataclass(frozen=True)
class BigM:
    grid: float = 100.0
    batt_type: float = 100.0
    batt_chg: float = 100.0
    boiler: float = 100.0
    pump: float = 100.0
    tank: float = 100.0


@dataclass(frozen=True)
class Water:
    density: float = 1.0
    specific_heat: float = 0.00116

    def heat_capacity(self, volume_l):
        """kWh per degree for ``volume_l`` litres."""
        return self.density * self.specific_heat * volume_l


@dataclass(frozen=True)
class TechCatalog:
    pv: PvSpec
    batteries: tuple
    boiler: BoilerSpec
    heat_pumps: tuple
    tanks: tuple
    tariffs: Tariffs
    crf: float
    pf: float = 0.95
    t_setpoint: float = 20.0
    big_m: BigM = BigM()
    water: Water = Water()
    interest: float = 0.075
    n_years: int = 20

    def __post_init__(self):
        object.__setattr__(self, "batteries", tuple(self.batteries))
        object.__setattr__(self, "heat_pumps", tuple(self.heat_pumps))
        object.__setattr__(self, "tanks", tuple(self.tanks))
        self.validate()

    def validate(self):
        prices = [
            self.pv.r_capital, self.pv.r_fixed_op, self.boiler.r_capital,
            *(getattr(self.tariffs, f.name) for f in fields(Tariffs) if not f.name.startswith("night_")),
        ]
        for bat in self.batteries:
            prices += [bat.r_capital, bat.r_op]
        for hp in self.heat_pumps:
            prices += [hp.r_capital, hp.r_install, hp.r_maint]
        for tank in self.tanks:
            prices += [tank.r_capital, tank.r_maint]
        if any(p < 0 for p in prices):
            raise IllegalInputError("catalog prices must be non-negative")
        efficiencies = [self.pv.eta, self.boiler.eta]
        for bat in self.batteries:
            efficiencies += [bat.eta_chg, bat.eta_dis, bat.soc_max, bat.dod_max]
        if any(not 0 < e <= 1 for e in efficiencies):
            raise IllegalInputError("catalog efficiencies must lie in (0, 1]")
        if not 0 < self.pf <= 1:
            raise IllegalInputError("power factor must lie in (0, 1]")
        if any(getattr(self.big_m, f.name) <= 0 for f in fields(BigM)):
            raise IllegalInputError("big-M values must be positive")
        if self.crf <= 0:
            raise IllegalInputError("capital recovery factor must be positive")
        for tank in self.tanks:
            if tank.volume <= 0:
                raise IllegalInputError(f"tank {tank.name} has non-positive volume")
