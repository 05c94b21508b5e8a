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
from functools import cached_property
import json
from pathlib import Path

import numpy as np

from .error import FileIOError, IllegalInputError, IncompatibleInputError


@dataclass(frozen=True, eq=False)
class Season:
    """A representative day covering ``hours`` hours with one point per ``dt``."""

    name: str
    n_day: int
    hours: float
    start_hour: float = 0.0
    robust: bool = False
    irradiance: np.ndarray = None
    t_amb: np.ndarray = None

    def points(self, dt):
        n = self.hours / dt
        if n < 1 or abs(n - round(n)) > 1e-9:
            raise IllegalInputError(f"season {self.name}: {self.hours} h is not a multiple of dt={dt}")
        return int(round(n))

    def to_dict(self):
        return {
            "name": self.name,
            "n_day": self.n_day,
            "hours": self.hours,
            "start_hour": self.start_hour,
            "robust": self.robust,
            "irradiance": [float(v) for v in self.irradiance],
            "t_amb": [float(v) for v in self.t_amb],
        }


class Timeline:
    """Concatenation of season blocks.

    Timepoint ``t`` belongs to exactly one season block; storage recursions
    and cyclic boundaries are applied per block.
    """

    def __init__(self, seasons, dt=1.0):
        self.seasons = tuple(seasons)
        self.dt = float(dt)
        if self.dt <= 0:
            raise IllegalInputError("timeline dt must be positive")
        if not self.seasons:
            raise IllegalInputError("timeline has no seasons")
        if sum(1 for s in self.seasons if s.robust) > 1:
            raise IllegalInputError("at most one robust season is supported")
        if self.n_season == 0:
            raise IllegalInputError("timeline needs at least one regular season")
        for season in self.seasons:
            n = season.points(self.dt)
            for label in ("irradiance", "t_amb"):
                values = getattr(season, label)
                if values is None or len(values) != n:
                    raise IncompatibleInputError(f"season {season.name}: {label} needs {n} values")
            if season.n_day < 0:
                raise IllegalInputError(f"season {season.name}: negative n_day")

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as err:
            raise FileIOError(f"cannot read timeline {path}: {err}") from err
        except json.JSONDecodeError as err:
            raise IllegalInputError(f"timeline {path} is not valid JSON: {err}") from err
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc):
        try:
            seasons = [
                Season(
                    name=s["name"],
                    n_day=int(s["n_day"]),
                    hours=float(s.get("hours", 24.0)),
                    start_hour=float(s.get("start_hour", 0.0)),
                    robust=bool(s.get("robust", False)),
                    irradiance=np.asarray(s["irradiance"], dtype=float),
                    t_amb=np.asarray(s["t_amb"], dtype=float),
                )
                for s in doc["seasons"]
            ]
        except KeyError as err:
            raise IllegalInputError(f"timeline season lacks field {err}") from None
        return cls(seasons, doc.get("dt", 1.0))

    def to_dict(self):
        return {"dt": self.dt, "seasons": [s.to_dict() for s in self.seasons]}

    @cached_property
    def blocks(self):
        out, start = [], 0
        for season in self.seasons:
            n = season.points(self.dt)
            out.append(range(start, start + n))
            start += n
        return tuple(out)

    @property
    def T(self):
        return self.blocks[-1].stop

    @property
    def n_season(self):
        """Number of regular (non-robust) seasons."""
        return sum(1 for s in self.seasons if not s.robust)

    @property
    def robust_index(self):
        for i, season in enumerate(self.seasons):
            if season.robust:
                return i
        return None

    @property
    def regular(self):
        return tuple(i for i, s in enumerate(self.seasons) if not s.robust)

    @cached_property
    def season_of(self):
        out = np.empty(self.T, dtype=int)
        for i, block in enumerate(self.blocks):
            out[block.start:block.stop] = i
        return out

    @cached_property
    def is_first(self):
        out = np.zeros(self.T, dtype=bool)
        out[[b.start for b in self.blocks]] = True
        return out

    @cached_property
    def clock_hours(self):
        return np.concatenate(
            [s.start_hour + self.dt * np.arange(len(b)) for s, b in zip(self.seasons, self.blocks)]
        )

    @cached_property
    def irradiance(self):
        return np.concatenate([s.irradiance for s in self.seasons])

    @cached_property
    def t_amb(self):
        return np.concatenate([s.t_amb for s in self.seasons])

    @cached_property
    def n_day(self):
        """Days represented by each timepoint; zero on the robust block."""
        return np.array([0 if self.seasons[s].robust else self.seasons[s].n_day for s in self.season_of])

    def __repr__(self):
        names = ",".join(s.name for s in self.seasons)
        return f"Timeline(T={self.T}, dt={self.dt}, seasons=[{names}])"
