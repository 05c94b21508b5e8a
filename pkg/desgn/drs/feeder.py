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

"""Feeder files, per-unit admittances and reduced sub-feeders.

A network directory holds ``buses.csv``, ``branches.csv``, ``loads.csv``,
``profiles.csv`` and optionally ``feeder.json``.
"""

import json
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd
import scipy.linalg

from desgn.core import (
    ALL_PHASES,
    Branch,
    Bus,
    BusKind,
    DataNotFoundError,
    FileIOError,
    IllegalInputError,
    IncompatibleInputError,
    LoadPoint,
    Msg,
    Network,
    Phase,
    SingularMatrixError,
)

_COMPONENT = "feeder"
_R_COLS = [f"r{i}{j}" for i in range(1, 4) for j in range(1, 4)]
_X_COLS = [f"x{i}{j}" for i in range(1, 4) for j in range(1, 4)]

# condition number above which a present-phase impedance is treated as singular
_COND_LIMIT = 1e12


def _base_impedance(v_base, s_base):
    return v_base**2 / (s_base * 1e6)


def assemble_branch_admittance(z_per_km, length_km, v_base, s_base):
    """Invert a series impedance into per-unit ``(G, B)``.

    ``z_per_km`` is a 3x3 complex matrix in ohm/km. A phase whose diagonal
    entry is zero is absent and keeps zero rows and columns.
    """
    z_per_km = np.asarray(z_per_km, dtype=complex)
    if z_per_km.shape != (3, 3):
        raise IncompatibleInputError("impedance matrix must be 3x3")
    if length_km <= 0:
        raise IllegalInputError(f"line length must be positive, got {length_km}")
    present = [p for p in ALL_PHASES if z_per_km[p, p] != 0]
    y = np.zeros((3, 3), dtype=complex)
    if present:
        sub = z_per_km[np.ix_(present, present)] * length_km
        if np.linalg.cond(sub) > _COND_LIMIT:
            raise SingularMatrixError("singular impedance submatrix")
        try:
            y_sub = scipy.linalg.inv(sub)
        except (np.linalg.LinAlgError, ValueError) as err:
            raise SingularMatrixError(f"singular impedance submatrix: {err}") from err
        y[np.ix_(present, present)] = y_sub * _base_impedance(v_base, s_base)
    return y.real.copy(), y.imag.copy()


def branch_impedance(g, b, length_km, v_base, s_base):
    """Reverse of :func:`assemble_branch_admittance`: ohm/km impedance."""
    y = np.asarray(g) + 1j * np.asarray(b)
    present = [p for p in ALL_PHASES if y[p, p] != 0]
    z = np.zeros((3, 3), dtype=complex)
    if present:
        y_ohm = y[np.ix_(present, present)] / _base_impedance(v_base, s_base)
        z[np.ix_(present, present)] = scipy.linalg.inv(y_ohm) / length_km
    return z


def _read_csv(path, required):
    if not path.is_file():
        raise FileIOError(f"missing file {path}")
    try:
        frame = pd.read_csv(path, dtype={"id": str, "from": str, "to": str, "load_id": str, "bus_id": str})
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as err:
        raise FileIOError(f"cannot read {path}: {err}") from err
    missing = [col for col in required if col not in frame.columns]
    if missing:
        raise IllegalInputError(f"{path.name}: missing column(s) {', '.join(missing)}")
    return frame


def parse_network(directory, *, s_base=0.8):
    """Read a feeder directory into a validated :class:`Network`."""
    directory = Path(directory)
    meta = {}
    meta_path = directory / "feeder.json"
    if meta_path.is_file():
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise IllegalInputError(f"{meta_path} is not valid JSON: {err}") from err
    s_base = float(meta.get("s_base_mva", s_base))

    bus_frame = _read_csv(directory / "buses.csv", ["id", "kind", "phases", "v_base_v"])
    buses = [
        Bus(
            id=str(row.id),
            kind=BusKind.parse(row.kind),
            phases=Phase.parse_set(row.phases),
            v_base=float(row.v_base_v),
        )
        for row in bus_frame.itertuples(index=False)
    ]
    v_base = {bus.id: bus.v_base for bus in buses}

    branch_frame = _read_csv(directory / "branches.csv", ["from", "to", *_R_COLS, *_X_COLS, "length_km"])
    branches = []
    for row in branch_frame.to_dict("records"):
        frm, to = str(row["from"]), str(row["to"])
        for end in (frm, to):
            if end not in v_base:
                raise DataNotFoundError(f"branch {frm}-{to}: unknown bus {end}")
        r = np.array([row[c] for c in _R_COLS], dtype=float).reshape(3, 3)
        x = np.array([row[c] for c in _X_COLS], dtype=float).reshape(3, 3)
        length = float(row["length_km"])
        g, b = assemble_branch_admittance(r + 1j * x, length, v_base[frm], s_base)
        branches.append(Branch(frm, to, g, b, r, x, length))

    load_frame = _read_csv(directory / "loads.csv", ["load_id", "bus_id", "phase"])
    profile_path = directory / "profiles.csv"
    profiles = {}
    if len(load_frame):
        profile_frame = _read_csv(profile_path, ["load_id", "kind"])
        value_cols = [c for c in profile_frame.columns if c not in ("load_id", "kind")]
        for row in profile_frame.to_dict("records"):
            kind = str(row["kind"]).strip().lower()
            if kind not in ("elec", "heat"):
                raise IllegalInputError(f"profiles.csv: unknown profile kind {kind!r}")
            values = np.array([row[c] for c in value_cols], dtype=float)
            if np.any(np.isnan(values)):
                raise IncompatibleInputError(f"profiles.csv: load {row['load_id']} has a short {kind} row")
            profiles[(str(row["load_id"]), kind)] = values
    known = set(load_frame["load_id"].astype(str))
    for load_id, _ in profiles:
        if load_id not in known:
            raise DataNotFoundError(f"profiles.csv: unknown load {load_id}")

    loads = []
    for row in load_frame.itertuples(index=False):
        load_id = str(row.load_id)
        try:
            elec = profiles[(load_id, "elec")]
            heat = profiles[(load_id, "heat")]
        except KeyError as err:
            raise DataNotFoundError(f"load {load_id}: missing {err.args[0][1]} profile") from None
        loads.append(LoadPoint(load_id, str(row.bus_id), Phase.parse(row.phase), elec, heat))

    net = Network(
        buses,
        branches,
        loads,
        s_base,
        name=meta.get("name", directory.name),
        version=str(meta.get("version", "")),
        radial=bool(meta.get("radial", True)),
    )
    Msg.debug(_COMPONENT, f"parsed {net!r} from {directory}")
    return net


def write_network(net, directory):
    """Write ``net`` in the feeder directory layout."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(
        {
            "id": [bus.id for bus in net.buses],
            "kind": [bus.kind.value for bus in net.buses],
            "phases": ["".join(p.name for p in bus.phases) for bus in net.buses],
            "v_base_v": [bus.v_base for bus in net.buses],
        }
    ).to_csv(directory / "buses.csv", index=False)

    rows = []
    for br in net.branches:
        row = {"from": br.from_bus, "to": br.to_bus}
        row.update(zip(_R_COLS, br.r_ohm_per_km.ravel()))
        row.update(zip(_X_COLS, br.x_ohm_per_km.ravel()))
        row["length_km"] = br.length_km
        rows.append(row)
    pd.DataFrame(rows, columns=["from", "to", *_R_COLS, *_X_COLS, "length_km"]).to_csv(
        directory / "branches.csv", index=False
    )

    pd.DataFrame(
        {
            "load_id": [load.id for load in net.loads],
            "bus_id": [load.bus for load in net.loads],
            "phase": [load.phase.name for load in net.loads],
        }
    ).to_csv(directory / "loads.csv", index=False)

    T = net.timepoints
    profile_rows = []
    for load in net.loads:
        for kind, values in (("elec", load.elec), ("heat", load.heat)):
            profile_rows.append([load.id, kind, *values])
    pd.DataFrame(profile_rows, columns=["load_id", "kind", *(f"t{t}" for t in range(T))]).to_csv(
        directory / "profiles.csv", index=False
    )
    meta = {"name": net.name, "version": net.version, "s_base_mva": net.s_base, "radial": net.radial}
    (directory / "feeder.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def derive_subfeeder(net, keep_loads):
    """Minimal sub-feeder connecting the slack to the loads in ``keep_loads``."""
    keep_loads = list(keep_loads)
    if not keep_loads:
        raise IllegalInputError("keep set is empty")
    kept = [net.load(load_id) for load_id in keep_loads]
    keep_ids = {load.id for load in kept}

    keep_buses = {net.slack.id}
    for load in kept:
        keep_buses.update(nx.shortest_path(net.graph, net.slack.id, load.bus))

    buses = [bus for bus in net.buses if bus.id in keep_buses]
    branches = [br for br in net.branches if br.from_bus in keep_buses and br.to_bus in keep_buses]
    loads = [load for load in net.loads if load.id in keep_ids]
    Msg.debug(
        _COMPONENT,
        f"sub-feeder for {len(loads)} load(s): {len(buses)} buses, {len(branches)} branches",
    )
    return Network(buses, branches, loads, net.s_base, name=net.name, version=net.version, radial=net.radial)
