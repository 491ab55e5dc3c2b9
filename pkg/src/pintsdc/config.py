"""Experiment descriptions stored as TOML files.

A description has the sections ``problem``, ``sweeper``, ``level``, ``step``,
``controller``, ``transfer``, ``run`` and optionally ``faults`` plus a list of
``variants``. Any list-valued entry in ``problem.params``, ``sweeper`` or
``level`` creates one level per entry; shorter lists are padded with their
last value and scalars apply to every level.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path

import tomli
import tomli_w

from .controller import ControllerConfig, LevelSpec
from .faults import FaultConfig
from .hierarchy import LevelParams, TransferError, build_transfer, Level
from .kernel import SolverCaps
from .problems import EXACT_CAPS, INEXACT_CAPS, PROBLEMS, make_problem
from .sweeper import Sweeper, SweeperConfig


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "problem": {"class": None, "params": {}},
    "sweeper": {"node_kind": "radau-right", "num_nodes": 3, "qdelta_implicit": "LU",
                "qdelta_explicit": "EE", "qdelta_implicit2": "LU"},
    "level": {"dt": None, "restol": 1e-10, "nsweeps": 1},
    "step": {"maxiter": 20},
    "controller": {"num_procs": 1, "mode": "emulated", "predictor": "spread",
                   "logger_level": logging.WARNING},
    "transfer": {},
    "run": {"t0": 0.0, "t_end": None},
}
FAULT_DEFAULTS = {"probability": 0.03, "rng_seed": 0, "recovery": "interpolation",
                  "coarse_correction_sweeps": 0}
MANDATORY = {("problem", "class"), ("level", "dt"), ("run", "t_end")}
LEVEL_SECTIONS = ("sweeper", "level")
CAPS_PRESETS = {"exact": EXACT_CAPS, "inexact": INEXACT_CAPS}


@dataclass
class Description:
    """Validated experiment description with defaults filled in."""

    tree: dict
    variants: list = field(default_factory=list)

    @property
    def problem_class(self) -> str:
        return self.tree["problem"]["class"]

    @property
    def nlevels(self) -> int:
        return _nlevels(self.tree)

    def level_specs(self) -> list[LevelSpec]:
        specs = []
        for i in range(self.nlevels):
            params = {k: _pick(v, i) for k, v in self.tree["problem"]["params"].items()}
            params = _resolve_caps(params)
            sw = {k: _pick(v, i) for k, v in self.tree["sweeper"].items()}
            lv = {k: _pick(v, i) for k, v in self.tree["level"].items()}
            specs.append(LevelSpec(
                make_problem=lambda name=self.problem_class, p=params: make_problem(name, **p),
                sweeper=SweeperConfig(**sw),
                params=LevelParams(**lv)))
        return specs

    def controller_config(self, **overrides) -> ControllerConfig:
        cfg = dict(self.tree["controller"])
        cfg["maxiter"] = self.tree["step"]["maxiter"]
        cfg.update({k: v for k, v in overrides.items() if v is not None})
        return ControllerConfig(**cfg)

    def fault_config(self) -> FaultConfig | None:
        f = self.tree.get("faults")
        return FaultConfig(**f) if f is not None else None

    @property
    def t0(self) -> float:
        return float(self.tree["run"]["t0"])

    @property
    def t_end(self) -> float:
        return float(self.tree["run"]["t_end"])

    def expand_variants(self) -> list[tuple[str, "Description"]]:
        """One description per variant, or ``[("", self)]`` without variants."""
        if not self.variants:
            return [("", self)]
        out = []
        for var in self.variants:
            var = dict(var)
            name = var.pop("name")
            tree = copy.deepcopy(self.tree)
            _merge(tree, var)
            out.append((name, validate(tree)))
        return out

    def to_dict(self) -> dict:
        d = copy.deepcopy(self.tree)
        if self.variants:
            d["variants"] = copy.deepcopy(self.variants)
        return d


def _pick(value, i):
    if isinstance(value, list):
        return value[min(i, len(value) - 1)]
    return value


def _nlevels(tree) -> int:
    lengths = [len(v) for v in tree["problem"]["params"].values() if isinstance(v, list)]
    for sec in LEVEL_SECTIONS:
        lengths += [len(v) for v in tree[sec].values() if isinstance(v, list)]
    return max(lengths, default=1)


def _resolve_caps(params):
    caps = params.get("caps")
    if caps is None:
        return params
    params = dict(params)
    if isinstance(caps, str):
        if caps not in CAPS_PRESETS:
            raise ConfigError(f"problem.params.caps: unknown preset {caps!r}")
        params["caps"] = CAPS_PRESETS[caps]
    else:
        params["caps"] = SolverCaps(**caps)
    return params


def _merge(base, extra):
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value


def _check_keys(section, given, allowed):
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"[{section}] unknown key(s): {', '.join(unknown)}")


def validate(raw: dict) -> Description:
    """Check a raw key-value tree and return a :class:`Description`."""
    if not isinstance(raw, dict):
        raise ConfigError("description must be a table")
    raw = copy.deepcopy(raw)
    variants = raw.pop("variants", [])
    allowed = set(DEFAULTS) | {"faults"}
    _check_keys("top level", raw, allowed)
    missing_sections = sorted(s for s in ("problem", "level", "run") if s not in raw)
    if missing_sections:
        raise ConfigError(f"missing section(s): {', '.join(missing_sections)}")
    tree = {}
    for sec, defaults in DEFAULTS.items():
        given = raw.get(sec, {})
        if not isinstance(given, dict):
            raise ConfigError(f"[{sec}] must be a table")
        if sec == "problem":
            _check_keys(sec, given, ("class", "params"))
        elif sec == "transfer":
            # injection and linear interpolation take no parameters
            _check_keys(sec, given, ())
        else:
            _check_keys(sec, given, defaults)
        merged = copy.deepcopy(defaults)
        merged.update(copy.deepcopy(given))
        tree[sec] = merged
    if "faults" in raw:
        _check_keys("faults", raw["faults"], FAULT_DEFAULTS)
        tree["faults"] = {**FAULT_DEFAULTS, **raw["faults"]}
    for sec, key in sorted(MANDATORY):
        if tree[sec][key] is None:
            raise ConfigError(f"[{sec}] missing mandatory key {key!r}")
    if tree["problem"]["class"] not in PROBLEMS:
        raise ConfigError(f"[problem] unknown class {tree['problem']['class']!r}, "
                          f"choose from {sorted(PROBLEMS)}")
    if not isinstance(tree["problem"]["params"], dict):
        raise ConfigError("[problem] params must be a table")
    _check_types(tree)
    for i, var in enumerate(variants):
        if not isinstance(var, dict) or "name" not in var:
            raise ConfigError(f"variants[{i}] needs a name")
    desc = Description(tree, variants)
    _check_hierarchy(desc)
    if variants:
        names = [v["name"] for v in variants]
        if len(set(names)) != len(names):
            raise ConfigError("variant names must be unique")
        desc.expand_variants()  # validates every variant tree
    return desc


_TYPES = {
    ("sweeper", "num_nodes"): int, ("sweeper", "node_kind"): str,
    ("sweeper", "qdelta_implicit"): str, ("sweeper", "qdelta_explicit"): str,
    ("sweeper", "qdelta_implicit2"): str, ("level", "dt"): (int, float),
    ("level", "restol"): (int, float), ("level", "nsweeps"): int,
    ("step", "maxiter"): int, ("controller", "num_procs"): int,
    ("controller", "mode"): str, ("controller", "predictor"): str,
    ("controller", "logger_level"): int, ("run", "t0"): (int, float),
    ("run", "t_end"): (int, float),
}


def _check_types(tree):
    for (sec, key), typ in _TYPES.items():
        value = tree[sec].get(key)
        if value is None:
            continue
        values = value if isinstance(value, list) and sec in LEVEL_SECTIONS else [value]
        if isinstance(value, list) and not value:
            raise ConfigError(f"[{sec}] {key}: empty list")
        for v in values:
            if isinstance(v, bool) or not isinstance(v, typ):
                raise ConfigError(f"[{sec}] {key}: expected {_tname(typ)}, got {type(v).__name__}")
    for key, value in tree["problem"]["params"].items():
        if isinstance(value, list) and not value:
            raise ConfigError(f"[problem.params] {key}: empty list")
    if isinstance(tree["level"]["dt"], list) and len(set(tree["level"]["dt"])) > 1:
        raise ConfigError("[level] dt: inconsistent step sizes across levels")


def _tname(typ):
    if isinstance(typ, tuple):
        return " or ".join(t.__name__ for t in typ)
    return typ.__name__


def _check_hierarchy(desc: Description):
    """Instantiate the level stack once so that nesting errors surface early."""
    try:
        specs = desc.level_specs()
        levels = []
        for i, spec in enumerate(specs):
            prob = spec.make_problem()
            levels.append(Level(i, prob, Sweeper(spec.sweeper, prob.layout), spec.params))
        for fine, coarse in zip(levels, levels[1:]):
            build_transfer(fine, coarse)
        desc.controller_config()
        desc.fault_config()
    except TransferError as exc:
        raise ConfigError(f"inconsistent level hierarchy: {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> Description:
    path = Path(path)
    try:
        raw = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return validate(raw)


def dump_config(desc: Description) -> str:
    """TOML text of the full description, defaults included."""
    return tomli_w.dumps(_strip_none(desc.to_dict()))


def _strip_none(d):
    if isinstance(d, dict):
        return {k: _strip_none(v) for k, v in d.items() if v is not None}
    if isinstance(d, list):
        return [_strip_none(v) for v in d]
    return d
