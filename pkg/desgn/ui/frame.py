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

"""Tagged input and product files passed to and from recipes."""

from enum import Enum
from pathlib import Path

from desgn.core import DataNotFoundError, FileIOError, IllegalInputError

INPUT_TAGS = ("NETWORK", "CATALOG", "TIMELINE", "PARTITION", "TIMINGS", "REPORT", "CONFIG")
PRODUCT_TAGS = ("REPORT", "COSTS", "TRACE", "VIOLATIONS", "TIMING", "PARTITION", "CHECKSUMS")


class Frame:
    """A file (or feeder directory) with a tag and a group."""

    class FrameGroup(Enum):
        NONE = 0
        INPUT = 1
        PRODUCT = 2

    class FrameLevel(Enum):
        NONE = 0
        TEMPORARY = 1
        INTERMEDIATE = 2
        FINAL = 3

    class FrameType(Enum):
        NONE = 0
        DIRECTORY = 1
        JSON = 2
        CSV = 3
        TEXT = 4

    def __init__(self, file, tag="", group=FrameGroup.NONE, level=FrameLevel.NONE, frameType=FrameType.NONE):
        self.file = file
        self.tag = tag
        self.group = group
        self.level = level
        self.type = frameType

    @property
    def file(self):
        return self._file

    @file.setter
    def file(self, value):
        path = Path(value)
        if not path.exists():
            raise FileIOError(f"frame file {path} does not exist")
        self._file = str(path)

    @property
    def path(self):
        return Path(self._file)

    @property
    def group(self):
        return self._group

    @group.setter
    def group(self, value):
        if not isinstance(value, Frame.FrameGroup):
            raise IllegalInputError(f"frame group must be a Frame.FrameGroup, got {value!r}")
        self._group = value

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self._file == other._file
            and self.tag == other.tag
            and self._group is other._group
            and self.level is other.level
            and self.type is other.type
        )

    __hash__ = None

    def __repr__(self):
        return f"Frame(file={self._file!r}, tag={self.tag!r}, group={self._group.name})"


class FrameSet:
    """Ordered collection of frames."""

    def __init__(self, frames=()):
        self._frames = list(frames)

    def append(self, frame):
        if not isinstance(frame, Frame):
            raise IllegalInputError(f"only frames can be added to a FrameSet, got {type(frame).__name__}")
        self._frames.append(frame)

    def __len__(self):
        return len(self._frames)

    def __iter__(self):
        return iter(self._frames)

    def __getitem__(self, index):
        return self._frames[index]

    def tagged(self, tag):
        return [f for f in self._frames if f.tag == tag]

    def find(self, tag, *, required=True):
        """The single frame tagged ``tag``; ``None`` when absent and not required."""
        found = self.tagged(tag)
        if len(found) > 1:
            raise IllegalInputError(f"expected one {tag} frame, found {len(found)}")
        if not found:
            if required:
                raise DataNotFoundError(f"no {tag} frame given")
            return None
        return found[0]

    def __repr__(self):
        return f"<desgn.ui.FrameSet, {len(self._frames)} frames>"
