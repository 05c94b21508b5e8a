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

"""Run configuration.

A run is described by one JSON document. Nested objects are flattened to
dotted names (``{"admm": {"tau": 1.05}}`` becomes ``admm.tau``) and applied
on top of the defaults of :func:`run_parameters`. Paths are resolved
against the directory holding the document.
"""

import hashlib
import json
import math
from pathlib import Path

from desgn.core import FileIOError, IllegalInputError, Msg
from desgn.drs.admm import AdmmParams
from desgn.drs.nlp import CompSchedule
from desgn.ui.parameter import ParameterEnum, ParameterList, ParameterRange, ParameterValue

_COMPONENT = "config"
STAGE_ORDER = ("milp", "nlp", "comp")
PATH_KEYS = ("network", "catalog", "timeline", "output", "partition.path", "partition.timings", "reference")
# keys holding structured values rather than scalars
_STRUCTURED = ("stages", "partition.preassign", "tariffs.seg")

_INF = math.inf


def run_parameters():
    """Scalar run parameters with their defaults."""
    ctx = "desgn.run"
    params = [
        ParameterEnum("mode", "central or distributed solve", ctx, "central", ("central", "distributed")),
        ParameterRange(
            "seed", "recorded in the run manifest for reproducibility only; the pipeline draws no random numbers", ctx,
            0, 0, 2**31 - 1,
        ),
        ParameterRange("network.s_base", "MVA base used when the feeder has no metadata", ctx, 0.8, 1e-9, _INF),
        ParameterRange("limits.v_max", "upper voltage limit (p.u.)", ctx, 1.05, 1e-9, _INF),
        ParameterRange("limits.v_min", "lower voltage limit (p.u.)", ctx, 0.95, 1e-9, _INF),
        ParameterEnum("milp.lp_method", "LP engine for branch-and-bound nodes", ctx, "highs", ("highs", "simplex")),
        ParameterRange("milp.node_limit", "branch-and-bound node cap per load", ctx, 20000, 1, 2**31 - 1),
        ParameterRange("milp.workers", "per-load MILP threads", ctx, 4, 1, 1024),
        ParameterRange("nlp.tol", "stationarity and feasibility tolerance", ctx, 1e-6, 1e-14, 1.0),
        ParameterRange("nlp.max_outer", "augmented Lagrangian outer iterations", ctx, 50, 1, 100000),
        ParameterRange("nlp.max_inner", "inner iterations per bound-constrained solve", ctx, 3000, 1, 10**7),
        ParameterRange("nlp.penalty0", "initial augmented Lagrangian penalty", ctx, 10.0, 1e-12, _INF),
        ParameterValue("comp.eps0", "initial complementarity relaxation", ctx, 1e-2),
        ParameterValue("comp.shrink", "relaxation shrink factor per round", ctx, 0.1),
        ParameterValue("comp.threshold", "final complementarity relaxation", ctx, 1e-6),
        ParameterValue("admm.beta", "proximal weight", ctx, 10.0),
        ParameterValue("admm.zeta", "multiplier damping", ctx, 0.1),
        ParameterEnum("admm.beta_mode", "use of admm.beta", ctx, "off", ("off", "proximal")),
        ParameterEnum("admm.zeta_mode", "use of admm.zeta", ctx, "off", ("off", "damping")),
        ParameterRange("admm.eps0_nlp", "initial penalty of the NLP stage", ctx, 1e3, 1e-12, _INF),
        ParameterRange("admm.eps0_comp", "initial penalty of the complementarity stage", ctx, 5e3, 1e-12, _INF),
        ParameterValue("admm.kappa", "residual decrease ratio below which the penalty is kept", ctx, 0.99),
        ParameterValue("admm.tau", "penalty growth factor", ctx, 1.02),
        ParameterValue("admm.lambda_min", "lower multiplier clip", ctx, -1e9),
        ParameterValue("admm.lambda_max", "upper multiplier clip", ctx, 1e9),
        ParameterValue("admm.conv_threshold", "primal residual stopping threshold", ctx, 1e-4),
        ParameterValue("admm.max_iters", "iteration cap per ADMM pass", ctx, 300),
        ParameterRange("admm.workers", "x-update threads", ctx, 4, 1, 1024),
        ParameterEnum("partition.source", "where the partition comes from", ctx, "auto", ("auto", "file")),
        ParameterRange("partition.k", "number of groups for automatic partitioning", ctx, 2, 1, 64),
        ParameterRange("partition.max_buses", "bus cap per group, 0 for none", ctx, 0, 0, 2**31 - 1),
        ParameterRange("partition.close_hops", "branches within which loads stay together", ctx, 2, 0, 1000),
    ]
    for key in PATH_KEYS:
        params.append(ParameterValue(key, f"path of the {key.replace('.', ' ')} input", ctx, ""))
    return ParameterList(params)


def flatten(doc, prefix=""):
    """Nested mapping to dotted names; structured keys keep their value."""
    out = {}
    for key, value in doc.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict) and name not in _STRUCTURED:
            nested = flatten(value, f"{name}.")
            # {"network": {"path": ..., "s_base": ...}} names the feeder directory
            if name in ("network", "catalog", "timeline") and f"{name}.path" in nested:
                nested[name] = nested.pop(f"{name}.path")
            out.update(nested)
        else:
            out[name] = value
    return out


class RunConfig:
    """Validated settings of one run.

    Scalars live in :attr:`parameters`; ``stages``, ``preassign`` and the
    optional SEG override are kept alongside.
    """

    def __init__(self, settings=None, base_dir="."):
        self.base_dir = Path(base_dir)
        self.parameters = run_parameters()
        self.stages = STAGE_ORDER
        self.preassign = {}
        self.seg = None
        self._given = {}
        self.update(settings or {})

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as err:
            raise FileIOError(f"cannot read config {path}: {err}") from err
        except json.JSONDecodeError as err:
            raise IllegalInputError(f"config {path} is not valid JSON: {err}") from err
        if not isinstance(doc, dict):
            raise IllegalInputError(f"config {path} must hold a JSON object")
        Msg.debug(_COMPONENT, f"reading run configuration {path}")
        return cls(doc, path.parent)

    def update(self, settings):
        """Apply nested or dotted settings and re-validate."""
        for name, value in flatten(settings).items():
            if name == "stages":
                self._set_stages(value)
            elif name == "partition.preassign":
                self._set_preassign(value)
            elif name == "tariffs.seg":
                self._set_seg(value)
            elif name in self.parameters:
                self.parameters[name].value = value
            else:
                raise IllegalInputError(f"unknown configuration key {name!r}")
            self._given[name] = value
        self._validate()
        return self

    def _set_stages(self, value):
        if isinstance(value, str) or not isinstance(value, (list, tuple)):
            raise IllegalInputError("stages must be a list")
        stages = tuple(value)
        if stages != STAGE_ORDER[: len(stages)] or not stages:
            raise IllegalInputError(f"stages {list(stages)} are not a non-empty prefix of {list(STAGE_ORDER)}")
        self.stages = stages

    def _set_preassign(self, value):
        if not isinstance(value, dict):
            raise IllegalInputError("partition.preassign must map load ids to group indices")
        out = {}
        for load_id, index in value.items():
            if isinstance(index, bool) or not isinstance(index, int) or index < 0:
                raise IllegalInputError(f"partition.preassign: load {load_id} needs a group index >= 0")
            out[str(load_id)] = index
        self.preassign = out

    def _set_seg(self, value):
        if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0):
            raise IllegalInputError("tariffs.seg must be a non-negative number")
        self.seg = None if value is None else float(value)

    def _validate(self):
        p = self.parameters
        if p["limits.v_min"].value >= p["limits.v_max"].value:
            raise IllegalInputError("limits.v_min must be below limits.v_max")
        if self.mode == "distributed" and self.partition_source == "file" and not p["partition.path"].value:
            raise IllegalInputError("distributed mode with partition.source=file needs partition.path")
        # construction validates the remaining ranges
        self.comp_schedule()
        self.admm_params()

    def __getitem__(self, name):
        return self.parameters[name].value

    def path(self, key):
        """Resolved path of ``key``, or ``None`` when unset."""
        value = self.parameters[key].value
        if not value:
            return None
        return (self.base_dir / value).resolve()

    def require_path(self, key):
        value = self.path(key)
        if value is None:
            raise IllegalInputError(f"configuration lacks {key!r}")
        return value

    @property
    def mode(self):
        return self["mode"]

    @property
    def seed(self):
        return self["seed"]

    @property
    def partition_source(self):
        return self["partition.source"]

    @property
    def v_limits(self):
        return self["limits.v_min"], self["limits.v_max"]

    def comp_schedule(self):
        return CompSchedule(self["comp.eps0"], self["comp.shrink"], self["comp.threshold"])

    def admm_params(self):
        return AdmmParams(
            beta=self["admm.beta"],
            zeta=self["admm.zeta"],
            eps0_nlp=self["admm.eps0_nlp"],
            eps0_comp=self["admm.eps0_comp"],
            kappa=self["admm.kappa"],
            tau=self["admm.tau"],
            lambda_min=self["admm.lambda_min"],
            lambda_max=self["admm.lambda_max"],
            conv_threshold=self["admm.conv_threshold"],
            max_iters=self["admm.max_iters"],
            beta_mode=self["admm.beta_mode"],
            zeta_mode=self["admm.zeta_mode"],
            workers=self["admm.workers"],
        )

    def nlp_kwargs(self):
        return {
            "max_outer": self["nlp.max_outer"],
            "max_inner": self["nlp.max_inner"],
            "penalty0": self["nlp.penalty0"],
        }

    def to_dict(self):
        """Effective settings as a nested mapping in a fixed key order.

        ``output`` is left out: it names where products go, not what is
        computed.
        """
        out = {}
        for p in self.parameters:
            if p.name == "output":
                continue
            _nest(out, p.name, p.value)
        _nest(out, "stages", list(self.stages))
        _nest(out, "tariffs.seg", self.seg)
        _nest(out, "partition.preassign", dict(sorted(self.preassign.items())))
        return _sorted(out)

    def digest(self):
        """md5 of the canonical effective settings."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.md5(text.encode("utf-8")).hexdigest()


def _nest(doc, name, value):
    parts = name.split(".")
    node = doc
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            # a path key and its options share a prefix, as in network / network.s_base
            child = node[part] = {"path": child}
        node = child
    leaf = parts[-1]
    if isinstance(node.get(leaf), dict):
        node[leaf]["path"] = value
    else:
        node[leaf] = value


def _sorted(doc):
    if isinstance(doc, dict):
        return {k: _sorted(doc[k]) for k in sorted(doc)}
    return doc
