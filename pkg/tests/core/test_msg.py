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


import re

import pytest

from desgn.core import Msg

TIME_REGEX = "[0-2][0-9]:[0-5][0-9]:[0-5][0-9]"


@pytest.fixture
def saved_config():
    config = Msg.get_config()
    yield
    Msg.stop_file()
    Msg.set_config(**config)


class TestMessage:
    def test_display(self, saved_config):
        Msg.set_config(level=Msg.SeverityLevel.DEBUG)
        Msg.debug("TestMessage", "This is a debug message")
        Msg.info("TestMessage", "This is an info message")
        Msg.warning("TestMessage", "This is a warning message")
        Msg.error("TestMessage", "This is an error message")

    def test_settings(self, saved_config):
        Msg.set_config(
            level=Msg.SeverityLevel.DEBUG,
            domain="unit_testing",
            show_domain=True,
            show_time=True,
            indent=3,
        )
        config = Msg.get_config()
        assert config["level"] == Msg.SeverityLevel.DEBUG
        assert config["domain"] == "unit_testing"
        assert config["indent"] == 3
        assert config["show_domain"]
        assert config["show_time"]
        assert not config["show_threadid"]

    def test_unknown_setting(self, saved_config):
        with pytest.raises(KeyError):
            Msg.set_config(colour=True)

    def test_level_accepts_integers(self, saved_config):
        Msg.set_config(level=int(Msg.SeverityLevel.ERROR))
        assert Msg.get_config()["level"] is Msg.SeverityLevel.ERROR

    def test_file(self, tmp_path, saved_config):
        component = "test_component"
        Msg.set_config(level=Msg.SeverityLevel.ERROR, domain="test_file", show_time=False)
        log_path = tmp_path / "test_log.txt"
        Msg.start_file(Msg.SeverityLevel.DEBUG, log_path)
        Msg.debug(component, "Debug line")
        Msg.info(component, "Info line")
        Msg.warning(component, "Warning line")
        Msg.error(component, "Error line: Oh no!")
        Msg.set_config(indent=1)
        Msg.info(component, "Indented line")
        Msg.stop_file()
        log_lines = log_path.read_text(encoding="utf-8").splitlines()
        assert re.fullmatch(r"Start time     : [0-9]{4}-[0-1][0-9]-[0-3][0-9]T" + TIME_REGEX, log_lines[1])
        assert log_lines[2] == "Program name   : test_file"
        assert log_lines[3] == "Severity level : [ DEBUG ] "
        body = log_lines[5:]
        assert re.fullmatch(TIME_REGEX + r" \[ DEBUG \] test_component: Debug line", body[0])
        assert re.fullmatch(TIME_REGEX + r" \[ INFO  \] test_component: Info line", body[1])
        assert re.fullmatch(TIME_REGEX + r" \[WARNING\] test_component: Warning line", body[2])
        assert re.fullmatch(TIME_REGEX + r" \[ ERROR \] test_component: Error line: Oh no!", body[3])
        assert re.fullmatch(TIME_REGEX + r" \[ INFO  \] test_component:   Indented line", body[4])
        assert Msg.get_config()["log_name"] == str(log_path)

    def test_file_level_filters(self, tmp_path, saved_config):
        log_path = tmp_path / "warnings.txt"
        Msg.start_file(Msg.SeverityLevel.WARNING, log_path)
        Msg.info("filter", "dropped")
        Msg.warning("filter", "kept")
        Msg.stop_file()
        text = log_path.read_text(encoding="utf-8")
        assert "dropped" not in text
        assert "kept" in text

    def test_stop_without_file(self):
        Msg.stop_file()
        Msg.stop_file()
