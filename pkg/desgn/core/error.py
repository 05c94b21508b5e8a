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

"""Exception hierarchy shared by every desgn layer.

Each class carries the process exit code the command line reports when the
exception escapes a recipe: 2 for configuration and input problems, 3 for a
stage that cannot produce a valid result, 4 for iterative processes that ran
out of iterations.
"""


class Error(Exception):
    """Base class of all desgn errors."""

    exit_code = 3

    def __init__(self, message, *, location=None):
        super().__init__(message)
        self.message = message
        self.location = location

    def __str__(self):
        if self.location:
            return f"{self.location}: {self.message}"
        return self.message


class IllegalInputError(Error):
    exit_code = 2


class DataNotFoundError(Error):
    exit_code = 2


class FileIOError(Error):
    exit_code = 2


class IncompatibleInputError(Error):
    exit_code = 2


class TypeMismatchError(Error, TypeError):
    exit_code = 2


class SingularMatrixError(Error):
    exit_code = 3


class IllegalOutputError(Error):
    exit_code = 3


class InfeasibleProblemError(Error):
    """A stage problem has no feasible point.

    ``load_id`` names the offending load when the problem belongs to one.
    """

    exit_code = 3

    def __init__(self, message, *, load_id=None, location=None):
        super().__init__(message, location=location)
        self.load_id = load_id


class ContinueError(Error):
    """An iterative method stopped at its iteration cap.

    ``result`` holds the best point reached, so callers that can live with an
    unconverged answer may still use it.
    """

    exit_code = 4

    def __init__(self, message, *, result=None, location=None):
        super().__init__(message, location=location)
        self.result = result
