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

"""Per-building design model.

One :class:`DesProblem` holds the linear siting, sizing and dispatch model
of a single load: variables, constraint rows grouped in named families and
the seasonal cost terms. Sizing variables carry one copy per season block;
linking families keep the copies equal.
"""

from dataclasses import dataclass, field, fields, replace
import json
from pathlib import Path

import numpy as np

from desgn.core import (
    BatterySpec,
    BigM,
    BoilerSpec,
    DataNotFoundError,
    FileIOError,
    HeatPumpSpec,
    IllegalInputError,
    IncompatibleInputError,
    Logistic,
    Msg,
    PvSpec,
    Tariffs,
    TankSpec,
    TechCatalog,
    Water,
)

from .fit import fit_logistic, hp_profile
from .lp import RowBuilder, VarIndex

_COMPONENT = "des"

TECHNOLOGIES = ("pv", "battery", "boiler", "heat_pump", "tank", "grid")

# rows replaced by complementarity products in the relaxed stage
OPERATIONAL_FAMILIES = (
    "Battery Charge BigM",
    "Battery Discharge BigM",
    "Grid Electricity Purchase",
    "Grid Electricity Sale",
)

OPERATIONAL_BINARIES = ("q_batt", "x_sell")


def crf(interest, n_years):
    """Capital recovery factor ``i (1+i)^n / ((1+i)^n - 1)``."""
    if interest <= 0:
        raise IllegalInputError(f"interest rate must be positive, got {interest}")
    if n_years < 1:
        raise IllegalInputError(f"annuity needs at least one year, got {n_years}")
    growth = (1.0 + interest) ** n_years
    return interest * growth / (growth - 1.0)


def _spec(cls, doc, label):
    if not isinstance(doc, dict):
        raise IllegalInputError(f"catalog {label} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise IllegalInputError(f"catalog {label}: unknown field(s) {', '.join(sorted(unknown))}")
    try:
        return cls(**doc)
    except TypeError as err:
        raise IllegalInputError(f"catalog {label}: {err}") from None


def _curve(doc, name, label):
    if f"{name}_fit" in doc:
        return _spec(Logistic, doc[f"{name}_fit"], f"{label}.{name}_fit")
    if f"{name}_points" in doc:
        return fit_logistic(doc[f"{name}_points"])
    raise IllegalInputError(f"catalog {label}: needs {name}_fit or {name}_points")


def load_catalog(path, *, seg=None):
    """Read ``catalog.json``; heat-pump data points are fitted here.

    ``seg`` overrides the export tariff when given.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise FileIOError(f"cannot read catalog {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise IllegalInputError(f"catalog {path} is not valid JSON: {err}") from err

    pumps = []
    for i, hp in enumerate(doc.get("heat_pumps", [])):
        label = f"heat_pumps[{i}]"
        rest = {k: v for k, v in hp.items() if k not in ("cop_fit", "cop_points", "cap_fit", "cap_points")}
        rest["cop_fit"] = _curve(hp, "cop", label)
        rest["cap_fit"] = _curve(hp, "cap", label)
        pumps.append(_spec(HeatPumpSpec, rest, label))

    tariffs = _spec(Tariffs, doc.get("tariffs", {}), "tariffs")
    if seg is not None:
        tariffs = replace(tariffs, seg=float(seg))
    interest = float(doc.get("interest", 0.075))
    n_years = int(doc.get("n_years", 20))
    catalog = TechCatalog(
        pv=_spec(PvSpec, doc.get("pv", {}), "pv"),
        batteries=[_spec(BatterySpec, b, f"batteries[{i}]") for i, b in enumerate(doc.get("batteries", []))],
        boiler=_spec(BoilerSpec, doc.get("boiler", {}), "boiler"),
        heat_pumps=pumps,
        tanks=[_spec(TankSpec, w, f"tanks[{i}]") for i, w in enumerate(doc.get("tanks", []))],
        tariffs=tariffs,
        crf=float(doc["crf"]) if "crf" in doc else crf(interest, n_years),
        pf=float(doc.get("pf", 0.95)),
        t_setpoint=float(doc.get("t_setpoint", 20.0)),
        big_m=_spec(BigM, doc.get("big_m", {}), "big_m"),
        water=_spec(Water, doc.get("water", {}), "water"),
        interest=interest,
        n_years=n_years,
    )
    Msg.debug(
        _COMPONENT,
        f"catalog {path.name}: {len(catalog.batteries)} batteries, {len(catalog.heat_pumps)} heat pumps, "
        f"{len(catalog.tanks)} tanks, crf {catalog.crf:.4f}",
    )
    return catalog


@dataclass(frozen=True, eq=False)
class CostTerm:
    technology: str
    season: int
    kind: str  # capex, opex or income
    cols: np.ndarray
    coefs: np.ndarray

    def value(self, x):
        return float(self.coefs @ x[self.cols])


@dataclass
class CostBreakdown:
    """Annual cost per technology and season (pounds).

    ``opex`` has a ``grid`` entry for purchased electricity; ``income`` is
    the export income per season.
    """

    seasons: tuple
    capex: dict
    opex: dict
    income: np.ndarray
    scale: float = 1.0

    @classmethod
    def zeros(cls, seasons, scale=1.0):
        S = len(seasons)
        return cls(
            tuple(seasons),
            {tech: np.zeros(S) for tech in TECHNOLOGIES},
            {tech: np.zeros(S) for tech in TECHNOLOGIES},
            np.zeros(S),
            scale,
        )

    @property
    def total_capex(self):
        return float(sum(v.sum() for v in self.capex.values()))

    @property
    def total_opex(self):
        return float(sum(v.sum() for v in self.opex.values()))

    @property
    def grid_opex(self):
        return float(self.opex["grid"].sum())

    @property
    def seg_income(self):
        return float(self.income.sum())

    @property
    def tac(self):
        return self.scale * (self.total_capex + self.total_opex - self.seg_income)

    def __add__(self, other):
        if self.seasons != other.seasons:
            raise IncompatibleInputError("cannot add cost breakdowns over different seasons")
        return CostBreakdown(
            self.seasons,
            {t: self.capex[t] + other.capex[t] for t in TECHNOLOGIES},
            {t: self.opex[t] + other.opex[t] for t in TECHNOLOGIES},
            self.income + other.income,
            self.scale,
        )

    def rows(self):
        """One record per technology and season, income on the pv rows."""
        out = []
        for tech in TECHNOLOGIES:
            for s, name in enumerate(self.seasons):
                out.append(
                    {
                        "technology": tech,
                        "season": name,
                        "capex": float(self.capex[tech][s]),
                        "opex": float(self.opex[tech][s]),
                        "income": float(self.income[s]) if tech == "pv" else 0.0,
                    }
                )
        return out

    def to_dict(self):
        return {
            "tac": self.tac,
            "capex": self.total_capex,
            "opex": self.total_opex,
            "grid_opex": self.grid_opex,
            "seg_income": self.seg_income,
        }


class DecisionVars:
    """Named view of a solution vector."""

    def __init__(self, index, x):
        self.index = index
        self.x = np.asarray(x, dtype=float)
        if self.x.size != index.size:
            raise IncompatibleInputError(f"expected {index.size} decision values, got {self.x.size}")

    @classmethod
    def zeros(cls, index):
        return cls(index, np.zeros(index.size))

    def __getitem__(self, name):
        return self.x[self.index[name]]

    def set(self, name, values):
        self.x[self.index[name]] = values

    def as_dict(self):
        return {name: self[name].tolist() for name in self.index.names()}


@dataclass(frozen=True)
class FeasibilityReport:
    violations: dict = field(default_factory=dict)
    tol: float = 1e-9

    @property
    def feasible(self):
        return all(v <= self.tol for v in self.violations.values())

    @property
    def worst(self):
        if not self.violations:
            return ("", 0.0)
        name = max(self.violations, key=self.violations.get)
        return (name, self.violations[name])


class DesProblem:
    """Linear model of one load, built by :func:`build_des_problem`."""

    def __init__(self, load, catalog, timeline, index, lp, cost_terms):
        self.load = load
        self.catalog = catalog
        self.timeline = timeline
        self.index = index
        self.lp = lp
        self.cost_terms = tuple(cost_terms)

    @property
    def binaries(self):
        return np.flatnonzero(self.index.binary)

    @property
    def operational_binaries(self):
        return np.concatenate([self.index[name].ravel() for name in OPERATIONAL_BINARIES])

    @property
    def pairs(self):
        """Complementarity pairs as two aligned index arrays."""
        u = np.concatenate([self.index["e_grid"].ravel(), self.index["e_batt_charge"].ravel()])
        v = np.concatenate([self.index["e_pv_sold"].ravel(), self.index["e_batt_discharge"].ravel()])
        return u, v

    def family_rows(self, family):
        rows = np.flatnonzero(self.lp.families == family)
        if rows.size == 0:
            raise DataNotFoundError(f"no constraint family {family!r}")
        return rows

    def counts(self):
        names, counts = np.unique(self.lp.families.astype(str), return_counts=True)
        return {
            "variables": int(self.lp.n),
            "binaries": int(self.binaries.size),
            "constraints": int(self.lp.m),
            "families": {str(k): int(v) for k, v in zip(names, counts)},
        }

    def __repr__(self):
        return f"DesProblem(load={self.load.id}, variables={self.lp.n}, constraints={self.lp.m})"


def build_des_problem(load, cat, tl):
    """Instantiate every constraint family of ``load`` over the timeline."""
    T = tl.T
    if load.elec.size != T:
        raise IncompatibleInputError(f"load {load.id}: {load.elec.size} profile points, timeline has {T}")
    for label, family in (("batteries", cat.batteries), ("heat_pumps", cat.heat_pumps), ("tanks", cat.tanks)):
        if not family:
            raise DataNotFoundError(f"catalog has no {label}")

    S, C, HP, W = len(tl.seasons), len(cat.batteries), len(cat.heat_pumps), len(cat.tanks)
    dt = tl.dt
    M = cat.big_m
    pv_spec = cat.pv
    s_t = tl.season_of
    first = tl.is_first
    t_idx = np.arange(T)
    prev = np.maximum(t_idx - 1, 0)
    not_first = (~first).astype(float)
    firsts = np.array([b.start for b in tl.blocks])
    lasts = np.array([b.stop - 1 for b in tl.blocks])

    ix = VarIndex()
    pv = ix.add("pv_panels", (S,))
    w_batt = ix.add("w_batt", (S, C), binary=True)
    cap_batt = ix.add("cap_batt", (S, C))
    vol_batt = ix.add("vol_batt", (S, C))
    b_boiler = ix.add("b_boiler", (S,), binary=True)
    hb_max = ix.add("h_boiler_max", (S,))
    p_pump = ix.add("p_pump", (S, HP), binary=True)
    z_tank = ix.add("z_tank", (S, W), binary=True)

    e_load = ix.add("e_load", (T,))
    e_grid = ix.add("e_grid", (T,))
    e_grid_load = ix.add("e_grid_load", (T,))
    e_pv_used = ix.add("e_pv_used", (T,))
    e_pv_sold = ix.add("e_pv_sold", (T,))
    x_sell = ix.add("x_sell", (T,), binary=True)
    h_boiler = ix.add("h_boiler", (T,))
    e_grid_charge = ix.add("e_grid_charge", (T, C))
    e_pv_charge = ix.add("e_pv_charge", (T, C))
    stored = ix.add("e_batt_stored", (T, C))
    charge = ix.add("e_batt_charge", (T, C))
    discharge = ix.add("e_batt_discharge", (T, C))
    q_batt = ix.add("q_batt", (T, C), binary=True)
    h_pump = ix.add("h_pump", (T, HP, W))
    e_pump = ix.add("e_pump", (T, HP))
    tank_in = ix.add("h_tank_charge", (T, W))
    tank_out = ix.add("h_tank_discharge", (T, W))
    tank_heat = ix.add("h_tank_internal", (T, W))
    tank_temp = ix.add("t_tank", (T, W))

    rb = RowBuilder()
    zeros_t = np.zeros(T)

    # heat and electricity balances
    rb.add("Heating Balance", "E", load.heat, (h_boiler, dt), *((tank_out[:, w], 1.0) for w in range(W)))
    rb.add("Electrical Load", "E", load.elec, (e_load, 1.0), *((e_pump[:, hp], -1.0) for hp in range(HP)))
    rb.add(
        "Electrical Balance", "E", zeros_t,
        (e_load, 1.0), (e_grid_load, -1.0), (e_pv_used, -1.0),
        *((discharge[:, c], -1.0) for c in range(C)),
    )

    # PV
    pv_out = [(e_pv_used, 1.0), (e_pv_sold, 1.0), *((e_pv_charge[:, c], 1.0) for c in range(C))]
    yield_per_panel = pv_spec.panel_area * tl.irradiance * pv_spec.eta * dt
    rb.add("PV Generation", "L", zeros_t, *pv_out, (pv[s_t], -yield_per_panel))
    rb.add("PV Maximum Generation Capacity", "L", zeros_t, *pv_out, (pv[s_t], -pv_spec.panel_cap * dt))
    rb.add("Maximum Roof Area", "L", np.full(S, pv_spec.roof_max), (pv, pv_spec.panel_area))
    rb.add("PV Capacity Limitation", "L", np.full(S, pv_spec.cap_max), (pv, pv_spec.panel_cap))

    # batteries, (season, type) and (t, type) rows flattened in C order
    eta_c = np.array([b.eta_chg for b in cat.batteries])
    eta_d = np.array([b.eta_dis for b in cat.batteries])
    ved = np.array([b.ved for b in cat.batteries])
    soc = np.array([b.soc_max for b in cat.batteries])
    dod = np.array([b.dod_max for b in cat.batteries])
    chg = np.array([b.chg_rate for b in cat.batteries])
    dis = np.array([b.dis_rate for b in cat.batteries])
    vol_avail = np.array([b.vol_avail for b in cat.batteries])
    ones_sc = np.ones(S * C)
    zeros_tc = np.zeros(T * C)
    cap_t = cap_batt[s_t, :].ravel()
    bcast = lambda a: np.broadcast_to(a, (T, C)).ravel()  # noqa: E731

    rb.add("Battery Type", "L", np.ones(S), *((w_batt[:, c], 1.0) for c in range(C)))
    rb.add("Battery Type BigM", "L", 0.0 * ones_sc, (cap_batt.ravel(), 1.0), (w_batt.ravel(), -M.batt_type))
    rb.add(
        "Installed Battery Capacity", "E", 0.0 * ones_sc,
        (cap_batt.ravel(), 1.0), (vol_batt.ravel(), -np.tile(ved, S)),
    )
    rb.add("Battery Volume Limit", "L", np.tile(vol_avail, S), (vol_batt.ravel(), 1.0))
    rb.add("Battery Capacity 1", "L", zeros_tc, (stored.ravel(), 1.0), (cap_t, -bcast(soc)))
    rb.add("Battery Capacity 2", "G", zeros_tc, (stored.ravel(), 1.0), (cap_t, -bcast(1.0 - dod)))
    rb.add(
        "Battery Storage Balance", "E", zeros_tc,
        (stored.ravel(), 1.0),
        (stored[prev, :].ravel(), -np.repeat(not_first, C)),
        (charge.ravel(), -bcast(eta_c)),
        (discharge.ravel(), bcast(1.0 / eta_d)),
    )
    later = t_idx[~first]
    rb.add(
        "Battery Discharge Condition", "L", np.zeros(later.size * C),
        (discharge[later, :].ravel(), np.broadcast_to(1.0 / eta_d, (later.size, C)).ravel()),
        (stored[later - 1, :].ravel(), -1.0),
    )
    rb.add("Battery Charge Limitation", "L", zeros_tc, (charge.ravel(), bcast(eta_c)), (cap_t, -bcast(chg)))
    rb.add("Battery Discharge Limitation", "L", zeros_tc, (discharge.ravel(), bcast(1.0 / eta_d)), (cap_t, -bcast(dis)))
    rb.add(
        "Battery Charge", "E", zeros_tc,
        (charge.ravel(), 1.0), (e_pv_charge.ravel(), -1.0), (e_grid_charge.ravel(), -1.0),
    )
    rb.add("Battery Charge BigM", "L", zeros_tc, (charge.ravel(), 1.0), (q_batt.ravel(), -M.batt_chg))
    rb.add(
        "Battery Discharge BigM", "L", np.full(T * C, M.batt_chg),
        (discharge.ravel(), 1.0), (q_batt.ravel(), M.batt_chg),
    )
    rb.add(
        "Battery Start and End SoC", "E", np.zeros(S * C),
        (stored[firsts, :].ravel(), 1.0), (stored[lasts, :].ravel(), -1.0),
    )

    # grid
    rb.add(
        "Grid Electricity Usage", "E", zeros_t,
        (e_grid, 1.0), (e_grid_load, -1.0), *((e_grid_charge[:, c], -1.0) for c in range(C)),
    )
    rb.add("Grid Electricity Usage for Local Load", "L", zeros_t, (e_grid_load, 1.0), (e_load, -1.0))
    rb.add("Grid Electricity Purchase", "L", np.full(T, M.grid), (e_grid, 1.0), (x_sell, M.grid))
    rb.add("Grid Electricity Sale", "L", zeros_t, (e_pv_sold, 1.0), (x_sell, -M.grid))

    # boiler
    rb.add("Boiler BigM", "L", np.zeros(S), (hb_max, 1.0), (b_boiler, -M.boiler))
    rb.add("Maximum Boiler Capacity", "L", zeros_t, (h_boiler, 1.0), (hb_max[s_t], -1.0))

    # heat pumps
    caps, cops = zip(*(hp_profile(hp, tl.t_amb) for hp in cat.heat_pumps))
    cap_hp = np.column_stack(caps)
    cop_hp = np.column_stack(cops)
    t_supply = np.array([hp.t_supply for hp in cat.heat_pumps])
    rb.add("Heat Pump Limitation", "L", np.ones(S), *((p_pump[:, hp], 1.0) for hp in range(HP)))
    rb.add(
        "Heat Pump BigM", "L", np.zeros(T * HP * W),
        (h_pump.ravel(), 1.0),
        (np.broadcast_to(p_pump[s_t, :, None], (T, HP, W)).ravel(), -M.pump),
    )
    rb.add(
        "Heat Pump Electrical Load", "E", np.zeros(T * HP),
        (e_pump.ravel(), 1.0), *((h_pump[:, :, w].ravel(), -1.0 / cop_hp.ravel()) for w in range(W)),
    )
    rb.add(
        "Heat Pump Maximum Capacity", "L", (cap_hp * dt).ravel(),
        *((h_pump[:, :, w].ravel(), 1.0) for w in range(W)),
    )
    rb.add(
        "Simultaneous Heating Technologies", "L", np.ones(S * HP),
        (p_pump.ravel(), 1.0), (np.repeat(b_boiler, HP), 1.0),
    )

    # hot water tanks
    cap_w = np.array([cat.water.heat_capacity(w.volume) for w in cat.tanks])
    t_min = np.array([w.t_min for w in cat.tanks])
    loss = np.array([w.loss for w in cat.tanks])
    t_set = cat.t_setpoint
    z_t = z_tank[s_t, :].ravel()
    zeros_tw = np.zeros(T * W)
    bw = lambda a: np.broadcast_to(a, (T, W)).ravel()  # noqa: E731
    rb.add("Hot Water Tank Limitation", "L", np.ones(S), *((z_tank[:, w], 1.0) for w in range(W)))
    rb.add(
        "Hot Water Tank Heat Charge", "E", zeros_tw,
        (tank_in.ravel(), 1.0), *((h_pump[:, hp, :].ravel(), -1.0) for hp in range(HP)),
    )
    rb.add("Hot Water Tank BigM Limitation", "L", zeros_tw, (tank_in.ravel(), 1.0), (z_t, -M.tank))
    rb.add("Hot Water Tank Minimum Temperature", "L", zeros_tw, (z_t, bw(t_min)), (tank_temp.ravel(), -1.0))
    rb.add(
        "Hot Water Tank Temperature", "E", zeros_tw,
        (tank_temp.ravel(), 1.0), (tank_heat.ravel(), -bw(1.0 / cap_w)), (z_t, -t_set),
    )
    rb.add(
        "Hot Water Tank Maximum Temperature", "L", zeros_tw,
        (tank_temp.ravel(), 1.0),
        *((np.repeat(p_pump[s_t, hp], W), -t_supply[hp]) for hp in range(HP)),
    )
    rb.add(
        "Hot Water Tank Heat", "E", zeros_tw,
        (tank_heat.ravel(), 1.0),
        (tank_heat[prev, :].ravel(), -np.repeat(not_first, W)),
        (tank_in.ravel(), -1.0),
        (tank_out.ravel(), 1.0),
        (z_t, bw(loss * dt) - np.outer(first, (t_min - t_set) * cap_w).ravel()),
    )
    rb.add(
        "Hot Water Tank Heat Timebounds", "E", np.zeros(S * W),
        (tank_heat[firsts, :].ravel(), 1.0), (tank_heat[lasts, :].ravel(), -1.0),
    )

    # one sizing decision across seasons
    regular = tl.regular
    robust = tl.robust_index
    for family, var in (
        ("PV Panel", pv),
        ("Battery Selection", w_batt),
        ("Battery Capacity", cap_batt),
        ("Battery Volume", vol_batt),
        ("Boiler Selection", b_boiler),
        ("Boiler Capacity", hb_max),
        ("Heat Pump", p_pump),
        ("Hot Water Tank", z_tank),
    ):
        for a, b in zip(regular[1:], regular[:-1]):
            size = var[a].size
            rb.add(f"{family} Seasonal Linking", "E", np.zeros(size), (np.ravel(var[a]), 1.0), (np.ravel(var[b]), -1.0))
        if robust is not None:
            size = var[robust].size
            rb.add(
                f"{family} Robust Linking", "E", np.zeros(size),
                (np.ravel(var[robust]), 1.0), (np.ravel(var[regular[0]]), -1.0),
            )

    terms = _cost_terms(cat, tl, ix)
    c = np.zeros(ix.size)
    for term in terms:
        sign = -1.0 if term.kind == "income" else 1.0
        np.add.at(c, term.cols, sign * term.coefs)
    lp = rb.build(c, ix.lb, ix.ub)
    Msg.debug(_COMPONENT, f"load {load.id}: {lp.n} variables, {lp.m} constraints")
    return DesProblem(load, cat, tl, ix, lp, terms)


def _cost_terms(cat, tl, ix):
    dt = tl.dt
    n_season = tl.n_season
    annuity = cat.crf / n_season
    price = cat.tariffs.grid_price(tl.clock_hours)
    terms = []
    for s in tl.regular:
        season = tl.seasons[s]
        block = np.arange(tl.blocks[s].start, tl.blocks[s].stop)
        year_share = season.n_day / 365.0
        one = lambda cols, coef: np.broadcast_to(np.asarray(coef, dtype=float), np.shape(cols)).ravel()  # noqa: E731

        def add(tech, kind, cols, coef):
            cols = np.ravel(cols)
            terms.append(CostTerm(tech, s, kind, cols, one(cols, coef)))

        add("pv", "capex", ix["pv_panels"][s], cat.pv.r_capital * annuity)
        add("pv", "opex", ix["pv_panels"][s], cat.pv.r_fixed_op * year_share * cat.pv.panel_cap)
        r_cap = np.array([b.r_capital for b in cat.batteries])
        r_op = np.array([b.r_op for b in cat.batteries])
        add("battery", "capex", ix["cap_batt"][s], r_cap * annuity)
        add("battery", "opex", ix["cap_batt"][s], r_op * year_share)
        add("boiler", "capex", ix["h_boiler_max"][s], cat.boiler.r_capital * annuity)
        add("boiler", "opex", ix["h_boiler"][block], cat.tariffs.gas / cat.boiler.eta * dt * season.n_day)
        hp_cap = np.array([hp.r_capital + hp.r_install for hp in cat.heat_pumps])
        hp_maint = np.array([hp.r_maint for hp in cat.heat_pumps])
        add("heat_pump", "capex", ix["p_pump"][s], hp_cap * annuity)
        add("heat_pump", "opex", ix["p_pump"][s], hp_maint / n_season)
        add("tank", "capex", ix["z_tank"][s], np.array([w.r_capital for w in cat.tanks]) * annuity)
        add("tank", "opex", ix["z_tank"][s], np.array([w.r_maint for w in cat.tanks]) / n_season)
        add("grid", "opex", ix["e_grid"][block], price[block] * season.n_day)
        add("pv", "income", ix["e_pv_sold"][block], cat.tariffs.seg * season.n_day)
    return terms


def cost_breakdown(v, p, scale=1.0):
    """Evaluate every seasonal cost term of ``p`` at ``v``."""
    out = CostBreakdown.zeros([s.name for s in p.timeline.seasons], scale)
    for term in p.cost_terms:
        value = term.value(v.x)
        if term.kind == "capex":
            out.capex[term.technology][term.season] += value
        elif term.kind == "opex":
            out.opex[term.technology][term.season] += value
        else:
            out.income[term.season] += value
    return out


def eval_feasibility(p, v, tol=1e-9):
    """Largest violation per constraint family, plus ``Variable Bounds``."""
    lp = p.lp
    r = lp.A @ v.x - lp.rhs
    viol = np.where(lp.senses == "E", np.abs(r), np.where(lp.senses == "L", np.maximum(r, 0.0), np.maximum(-r, 0.0)))
    out = {}
    for family in dict.fromkeys(lp.families):
        out[family] = float(viol[lp.families == family].max())
    bound = np.maximum(lp.lb - v.x, 0.0) + np.maximum(v.x - lp.ub, 0.0)
    out["Variable Bounds"] = float(bound.max(initial=0.0))
    return FeasibilityReport(out, tol)


def compute_injections(v, load, cat, tl, *, s_base):
    """Real and reactive injections of ``load`` in p.u., shape ``(3, T)``."""
    if cat.pf == 0:
        raise IllegalInputError("power factor must be non-zero")
    if s_base <= 0:
        raise IllegalInputError("s_base must be positive")
    dt = tl.dt
    P = np.zeros((3, tl.T))
    Q = np.zeros((3, tl.T))
    P[load.phase] = 1e-3 * (v["e_pv_sold"] - v["e_grid"]) / (s_base * dt)
    Q[load.phase] = reactive_injection(load.elec, cat.pf, s_base, dt)
    return P, Q


def reactive_injection(e_bld, pf, s_base, dt):
    """Constant-power-factor reactive draw of the building demand."""
    e_bld = np.asarray(e_bld, dtype=float)
    return -1e-3 * np.sqrt(e_bld**2 * (1.0 / pf**2 - 1.0)) / (s_base * dt)
