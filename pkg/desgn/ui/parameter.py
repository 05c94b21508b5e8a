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

"""Typed, named recipe parameters."""

from desgn.core import DataNotFoundError, IllegalInputError, Type, TypeMismatchError


class ParameterValue:
    """A named value whose type is fixed by its default.

    Integers are accepted for double parameters; every other mismatch
    raises :class:`TypeMismatchError` and leaves the value unchanged.
    """

    def __init__(self, name, description, context, default):
        self._name = name
        self._description = description
        self._context = context
        self._type = Type.of(default)
        self._default = default
        self._value = default
        self.cli_alias = name

    @property
    def name(self):
        return self._name

    @property
    def description(self):
        return self._description

    @property
    def context(self):
        return self._context

    @property
    def type(self):
        return self._type

    @property
    def default(self):
        return self._default

    @property
    def value(self):
        return self._value

    @value.setter
    def value(self, new):
        new = self._coerce(new)
        self._check(new)
        self._value = new

    def reset(self):
        self._value = self._default

    def _coerce(self, new):
        kind = Type.of(new)
        if kind is self._type:
            return new
        if self._type is Type.DOUBLE and kind is Type.INT:
            return float(new)
        raise TypeMismatchError(
            f"parameter {self._name} expects {self._type.value}, got {kind.value}", location=self._name
        )

    def _check(self, new):
        pass

    def __eq__(self, other):
        if not isinstance(other, ParameterValue):
            return NotImplemented
        return (
            type(self) is type(other)
            and self._name == other._name
            and self._type is other._type
            and self._value == other._value
        )

    __hash__ = None

    def __repr__(self):
        return f"<desgn.ui.{type(self).__name__} {self._name}={self._value!r}>"


class ParameterRange(ParameterValue):
    def __init__(self, name, description, context, default, min, max):  # noqa: A002
        if Type.of(default) not in (Type.INT, Type.DOUBLE):
            raise IllegalInputError(f"range parameter {name} needs a numeric default")
        if not min <= default <= max:
            raise IllegalInputError(f"default of {name} lies outside [{min}, {max}]")
        self._min = min
        self._max = max
        super().__init__(name, description, context, default)

    @property
    def min(self):
        return self._min

    @property
    def max(self):
        return self._max

    def _check(self, new):
        if not self._min <= new <= self._max:
            raise IllegalInputError(f"{self._name}={new} lies outside [{self._min}, {self._max}]", location=self._name)


class ParameterEnum(ParameterValue):
    def __init__(self, name, description, context, default, alternatives):
        alternatives = tuple(alternatives)
        if default not in alternatives:
            raise IllegalInputError(f"default of {name} is not one of {list(alternatives)}")
        self._alternatives = alternatives
        super().__init__(name, description, context, default)

    @property
    def alternatives(self):
        return list(self._alternatives)

    def _check(self, new):
        if new not in self._alternatives:
            raise IllegalInputError(f"{self._name}={new!r} is not one of {list(self._alternatives)}", location=self._name)


class ParameterList:
    """Ordered parameters, addressable by index or dotted name."""

    def __init__(self, parameters=()):
        self._items = []
        for p in parameters:
            self.append(p)

    def append(self, parameter):
        if any(p.name == parameter.name for p in self._items):
            raise IllegalInputError(f"duplicate parameter {parameter.name}")
        self._items.append(parameter)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __contains__(self, name):
        return any(p.name == name for p in self._items)

    def __getitem__(self, key):
        if isinstance(key, int):
            return self._items[key]
        for p in self._items:
            if p.name == key or p.cli_alias == key:
                return p
        raise DataNotFoundError(f"unknown parameter {key}")

    def values(self):
        return {p.name: p.value for p in self._items}

    def __eq__(self, other):
        if not isinstance(other, ParameterList):
            return NotImplemented
        return self._items == other._items

    __hash__ = None

    def __repr__(self):
        return f"<desgn.ui.ParameterList, {len(self._items)} Parameters>"

    def dump(self, filename=None):
        """One ``name = value (default ...)`` line per parameter."""
        text = "".join(
            f"{p.name} = {p.value!r}  (default {p.default!r}, {p.type.value})  # {p.description}\n"
            for p in self._items
        )
        if filename is None:
            return text
        with open(filename, "w", encoding="utf-8") as out:
            out.write(text)
        return text
