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

from desgn import __version__
from desgn.core import Msg
from desgn.ui.parameter import ParameterList


class Recipe:
    """Base class of the desgn recipes.

    Subclasses fill in the descriptive class attributes, declare their
    ``parameters`` and implement :meth:`run`, which takes the input
    :class:`FrameSet` plus a mapping of parameter overrides and returns the
    products as a new :class:`FrameSet`.
    """

    _name = ""
    _version = __version__
    _author = "desgn developers"
    _email = "desgn@users.noreply.github.com"
    _copyright = "GPL-3.0-or-later"
    _synopsis = ""
    _description = ""

    def __init__(self):
        self.parameters = ParameterList()

    @property
    def name(self):
        return self._name

    @property
    def version(self):
        return self._version

    @property
    def synopsis(self):
        return self._synopsis

    @property
    def description(self):
        return self._description

    def apply_settings(self, settings):
        """Set recipe parameters from a mapping of names to values."""
        for name, value in (settings or {}).items():
            self.parameters[name].value = value
            Msg.debug(self._name, f"{name} = {value!r}")

    def run(self, frameset, settings=None):
        raise NotImplementedError

    def __repr__(self):
        return f"<desgn.ui.Recipe {self._name} {self._version}>"
