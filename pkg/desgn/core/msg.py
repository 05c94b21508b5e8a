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

"""Component-tagged messaging on top of :mod:`logging`.

Every message names the component that emits it::

    Msg.info("milp", "load L1 solved in 14 nodes")

Terminal output goes to stderr through a single handler on the ``desgn``
logger. A log file can be attached with :meth:`Msg.start_file`.
"""

from datetime import datetime
from enum import IntEnum
import logging
from pathlib import Path
import sys
import threading


class _MsgFormatter(logging.Formatter):
    _labels = {
        logging.DEBUG: "[ DEBUG ]",
        logging.INFO: "[ INFO  ]",
        logging.WARNING: "[WARNING]",
        logging.ERROR: "[ ERROR ]",
    }

    def __init__(self, settings):
        super().__init__()
        self._settings = settings

    def format(self, record):
        cfg = self._settings
        parts = []
        if cfg["show_time"]:
            parts.append(datetime.fromtimestamp(record.created).strftime("%H:%M:%S"))
        parts.append(self._labels.get(record.levelno, "[ ERROR ]"))
        if cfg["show_domain"]:
            parts.append(f"{cfg['domain']}:")
        component = getattr(record, "component", "")
        if cfg["show_component"] and component:
            parts.append(f"{component}:")
        if cfg["show_threadid"]:
            parts.append(f"[tid={threading.get_ident() % 1000:03d}]")
        text = "  " * cfg["indent"] + record.getMessage()
        if cfg["width"] > 0:
            text = text[: cfg["width"]]
        parts.append(text)
        return " ".join(parts)


class Msg:
    """Static messaging facade.

    The settings dictionary mirrors :meth:`get_config`; changing it with
    :meth:`set_config` takes effect for the next message on every handler.
    """

    class SeverityLevel(IntEnum):
        DEBUG = logging.DEBUG
        INFO = logging.INFO
        WARNING = logging.WARNING
        ERROR = logging.ERROR
        OFF = logging.CRITICAL + 10

    _logger = logging.getLogger("desgn")
    _settings = {
        "level": SeverityLevel.INFO,
        "domain": "desgn",
        "width": 0,
        "log_name": ".logfile",
        "indent": 0,
        "show_threadid": False,
        "show_domain": False,
        "show_time": False,
        "show_component": True,
    }
    _terminal = None
    _file = None
    _lock = threading.Lock()

    @classmethod
    def _ensure_terminal(cls):
        if cls._terminal is None:
            handler = logging.StreamHandler(sys.stderr)
            handler.setFormatter(_MsgFormatter(cls._settings))
            handler.setLevel(cls._settings["level"])
            cls._logger.addHandler(handler)
            cls._logger.setLevel(logging.DEBUG)
            cls._logger.propagate = False
            cls._terminal = handler

    @classmethod
    def _emit(cls, level, component, message):
        with cls._lock:
            cls._ensure_terminal()
        cls._logger.log(level, message, extra={"component": component})

    @classmethod
    def debug(cls, component, message):
        cls._emit(logging.DEBUG, component, message)

    @classmethod
    def info(cls, component, message):
        cls._emit(logging.INFO, component, message)

    @classmethod
    def warning(cls, component, message):
        cls._emit(logging.WARNING, component, message)

    @classmethod
    def error(cls, component, message):
        cls._emit(logging.ERROR, component, message)

    @classmethod
    def set_config(cls, **kwargs):
        """Update message settings.

        Accepted keys are those returned by :meth:`get_config`. ``level``
        applies to the terminal; the file level is fixed by :meth:`start_file`.
        """
        unknown = set(kwargs) - set(cls._settings)
        if unknown:
            raise KeyError(f"unknown Msg setting(s): {', '.join(sorted(unknown))}")
        with cls._lock:
            cls._ensure_terminal()
            if "level" in kwargs:
                kwargs["level"] = cls.SeverityLevel(kwargs["level"])
                cls._terminal.setLevel(kwargs["level"])
            cls._settings.update(kwargs)

    @classmethod
    def get_config(cls):
        return dict(cls._settings)

    @classmethod
    def start_file(cls, level, path):
        """Copy messages at ``level`` or above into ``path``."""
        cls.stop_file()
        level = cls.SeverityLevel(level)
        path = Path(path)
        with path.open("w", encoding="utf-8") as header:
            header.write("\n")
            header.write(f"Start time     : {datetime.now().isoformat(timespec='seconds')}\n")
            header.write(f"Program name   : {cls._settings['domain']}\n")
            header.write(f"Severity level : [{level.name:^7}] \n")
            header.write("\n")
        handler = logging.FileHandler(path, mode="a", encoding="utf-8")
        # file lines always carry a time stamp
        handler.setFormatter(_MsgFormatter(_FileSettings(cls._settings)))
        handler.setLevel(level)
        with cls._lock:
            cls._ensure_terminal()
            cls._logger.addHandler(handler)
            cls._file = handler
            cls._settings["log_name"] = str(path)

    @classmethod
    def stop_file(cls):
        with cls._lock:
            if cls._file is not None:
                cls._logger.removeHandler(cls._file)
                cls._file.close()
                cls._file = None


class _FileSettings(dict):
    """Live view of the shared settings with the time stamp forced on."""

    def __init__(self, base):
        super().__init__()
        self._base = base

    def __getitem__(self, key):
        if key == "show_time":
            return True
        if key == "show_domain":
            return False
        return self._base[key]
