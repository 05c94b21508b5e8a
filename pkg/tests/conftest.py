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

# Small feeders, timelines and run configurations built in memory,
# plus the location of the bundled data sets.

import json
from pathlib import Path

import numpy as np
from pytest import fixture

import desgn
from desgn.core import Branch, Bus, BusKind, LoadPoint, Msg, Network, Phase, Season, Timeline
from desgn.drs import assemble_branch_admittance, load_catalog

DATA_DIR = Path(desgn.__file__).parent / "data"

# uniform cable, ohm/km
CABLE_R = np.array([[0.32, 0.1, 0.1], [0.1, 0.32, 0.1], [0.1, 0.1, 0.32]])
CABLE_X = np.array([[0.25, 0.09, 0.09], [0.09, 0.25, 0.09], [0.09, 0.09, 0.25]])


@fixture(scope="session")
def data_dir():
    return DATA_DIR


@fixture(autouse=True)
def quiet_messages():
    level = Msg.get_config()["level"]
    Msg.set_config(level=Msg.SeverityLevel.WARNING)
    yield
    Msg.set_config(level=level)


@fixture(scope="session")
def catalog():
    return load_catalog(DATA_DIR / "catalog.json")


@fixture(scope="session")
def make_timeline():
    def _make_timeline(**kwargs):
        """Regular seasons of ``points`` points each, optionally followed by a robust day."""
        points = kwargs.get("points", 4)
        dt = kwargs.get("dt", 24 / points)
        names = kwargs.get("seasons", ("winter", "summer"))
        t_mean = kwargs.get("t_mean", {"winter": 4.0, "intermediate": 10.0, "summer": 17.0})
        peak = kwargs.get("peak", {"winter": 0.25, "intermediate": 0.5, "summer": 0.75})
        start = kwargs.get("start_hour", 3.0)
        hours = start + dt * np.arange(points)
        sun = np.clip(np.sin(np.pi * (hours - 6.0) / 12.0), 0.0, None) * ((hours > 6) & (hours < 18))
        swing = np.sin(2.0 * np.pi * (hours - 9.0) / 24.0)
        seasons = [
            Season(
                name,
                kwargs.get("n_day", 182),
                dt * points,
                start,
                False,
                peak.get(name, 0.5) * sun,
                t_mean.get(name, 10.0) + 3.0 * swing,
            )
            for name in names
        ]
        if kwargs.get("robust", False):
            seasons.append(Season("robust", 1, dt * points, start, True, peak["winter"] * sun, -1.0 + 3.0 * swing))
        return Timeline(seasons, dt)

    return _make_timeline


def _branch(frm, to, length, v_base=416.0, s_base=0.8):
    g, b = assemble_branch_admittance(CABLE_R + 1j * CABLE_X, length, v_base, s_base)
    return Branch(frm, to, g, b, CABLE_R.copy(), CABLE_X.copy(), length)


@fixture(scope="session")
def make_network():
    def _make_network(edges, loads=(), **kwargs):
        """Radial feeder from ``(from, to, length_km)`` edges; bus "1" is the slack.

        ``loads`` holds ``(load_id, bus, phase)`` triples. Profiles are
        constant at ``elec`` and ``heat`` kWh per point.
        """
        T = kwargs.get("T", 8)
        s_base = kwargs.get("s_base", 0.8)
        ids = []
        for frm, to, _ in edges:
            for bus in (frm, to):
                if bus not in ids:
                    ids.append(bus)
        loaded = {bus for _, bus, _ in loads}
        buses = [
            Bus(
                bus,
                BusKind.SLACK if bus == "1" else BusKind.LOAD if bus in loaded else BusKind.JUNCTION,
                (Phase.A, Phase.B, Phase.C),
                416.0,
            )
            for bus in ids
        ]
        branches = [_branch(frm, to, length, s_base=s_base) for frm, to, length in edges]
        points = [
            LoadPoint(
                load_id,
                bus,
                Phase.parse(phase),
                np.full(T, kwargs.get("elec", 2.0)),
                np.full(T, kwargs.get("heat", 4.0)),
            )
            for load_id, bus, phase in loads
        ]
        return Network(buses, branches, points, s_base, name=kwargs.get("name", "test"), version="1")

    return _make_network


@fixture
def two_load_feeder(make_network):
    return make_network(
        [("1", "2", 0.04), ("2", "3", 0.05), ("2", "4", 0.03)],
        [("L1", "3", "A"), ("L2", "4", "B")],
    )


@fixture
def make_run_config(tmp_path):
    def _make_run_config(network="micro1", timeline="timeline8.json", **settings):
        """Write a run configuration that points at the bundled data and return its path."""
        doc = {
            "mode": settings.pop("mode", "central"),
            "network": str(DATA_DIR / network),
            "catalog": str(DATA_DIR / "catalog.json"),
            "timeline": str(DATA_DIR / timeline),
            "output": str(tmp_path / "out"),
        }
        doc.update(settings)
        path = tmp_path / "run.json"
        path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
        return path

    return _make_run_config
