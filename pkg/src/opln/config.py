"""Strict YAML job configs.

Every mapping is checked against a fixed key set and every scalar against a
type, and errors carry ``file:line`` so a typo fails fast instead of hours
into a run.

A design job looks like::

    target: {gvm: 3}            # or {signal_um: 3.5, idler_um: 3.5}
    crystal: {length_mm: 30, temperature_c: 20}
    analysis: {slice_count: 600, window_nm: 60, grid: 200}
    pump: {center_offset_nm: 5, width_nm: [0.5, 15]}
    schedule: {pump_iterations: 100, duty_iterations: 200, rounds: 200}
    init: erf                   # or flat
    seed: 1
    pso_pump: {swarm_size: 40}
    pso_duty: {swarm_size: 60, init_spread: 0.02}
    output: results/gvm3        # relative to the working directory

Everything except ``target`` has a default.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import yaml

from . import designer, pso
from .phasematch import GvmCondition, Media, solve_gvm_wavelength


class ConfigError(ValueError):
    pass


def scenario_names() -> list[str]:
    return sorted(p.stem for p in scenarios_dir().glob("*.yaml"))


def scenarios_dir() -> Path:
    return Path(str(resources.files("opln") / "scenarios"))


def resolve_config(name_or_path) -> Path:
    """A config path, or the name of a shipped scenario."""
    p = Path(name_or_path)
    if p.exists():
        return p
    shipped = scenarios_dir() / f"{name_or_path}.yaml"
    if shipped.exists():
        return shipped
    raise ConfigError(f"{name_or_path}: no such file or shipped scenario (try one of: {', '.join(scenario_names())})")


@dataclass
class _Node:
    value: object
    line: int


def _wrap(node, source: str):
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value
            if key in out:
                raise ConfigError(f"{source}:{k.start_mark.line + 1}: duplicate key {key!r}")
            out[key] = _wrap(v, source)
        return _Node(out, line)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_wrap(v, source) for v in node.value], line)
    return _Node(yaml.safe_load(yaml.serialize(node)), line)


def load_tree(path) -> tuple[_Node, str]:
    source = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{source}: cannot read config ({exc.strerror})") from None
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"{source}:{mark.line + 1}" if mark else source
        raise ConfigError(f"{where}: YAML syntax error: {exc.problem}") from None
    if node is None:
        raise ConfigError(f"{source}:1: empty config")
    return _wrap(node, source), source


class _Section:
    """Typed, key-checked view over one mapping node."""

    def __init__(self, node: _Node | None, source: str, name: str, allowed: set):
        self.source, self.name = source, name
        if node is None:
            self.items, self.line = {}, 0
            return
        if not isinstance(node.value, dict):
            raise ConfigError(f"{source}:{node.line}: '{name}' must be a mapping")
        self.items, self.line = node.value, node.line
        for key, child in self.items.items():
            if key not in allowed:
                known = ", ".join(sorted(allowed))
                raise ConfigError(f"{source}:{child.line}: unknown key {key!r} in {name} (allowed: {known})")

    def _where(self, key):
        n = self.items.get(key)
        return f"{self.source}:{n.line if n else self.line}"

    def has(self, key) -> bool:
        return key in self.items

    def node(self, key):
        return self.items.get(key)

    def number(self, key, default=None, integer=False, positive=False):
        n = self.items.get(key)
        if n is None or n.value is None:
            return default
        v = n.value
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self._where(key)}: {self.name}.{key} must be a number, got {v!r}")
        if integer and (not isinstance(v, int)):
            raise ConfigError(f"{self._where(key)}: {self.name}.{key} must be an integer")
        if positive and not v > 0:
            raise ConfigError(f"{self._where(key)}: {self.name}.{key} must be positive")
        return int(v) if integer else float(v)

    def pair(self, key, default):
        n = self.items.get(key)
        if n is None:
            return default
        if not isinstance(n.value, list) or len(n.value) != 2:
            raise ConfigError(f"{self._where(key)}: {self.name}.{key} must be a two-element list")
        out = []
        for item in n.value:
            if isinstance(item.value, bool) or not isinstance(item.value, (int, float)):
                raise ConfigError(f"{self.source}:{item.line}: {self.name}.{key} entries must be numbers")
            out.append(float(item.value))
        return tuple(out)

    def string(self, key, default=None, choices=None):
        n = self.items.get(key)
        if n is None:
            return default
        if not isinstance(n.value, str):
            raise ConfigError(f"{self._where(key)}: {self.name}.{key} must be a string")
        if choices and n.value not in choices:
            raise ConfigError(f"{self._where(key)}: {self.name}.{key} must be one of {sorted(choices)}")
        return n.value


TOP_KEYS = {"target", "crystal", "analysis", "pump", "schedule", "init", "seed", "pso_pump", "pso_duty", "output"}
PSO_KEYS = {"swarm_size", "inertia", "cognitive", "social", "velocity_clamp", "init_spread", "stall_tolerance"}


@dataclass
class DesignJob:
    problem: designer.DesignProblem
    pso_pump: pso.PsoConfig
    pso_duty: pso.PsoConfig
    seed: int
    output: Path | None
    source: str


def _pso(section: _Section, base: pso.PsoConfig) -> pso.PsoConfig:
    kw = {}
    for key in ("inertia", "cognitive", "social", "velocity_clamp", "init_spread"):
        v = section.number(key)
        if v is not None:
            kw[key] = v
    size = section.number("swarm_size", integer=True)
    if size is not None:
        kw["swarm_size"] = size
    if section.has("stall_tolerance"):
        st = section.pair("stall_tolerance", None)
        kw["stall_tolerance"] = (int(st[0]), st[1])
    try:
        return replace(base, **kw)
    except ValueError as exc:
        raise ConfigError(f"{section.source}:{section.line}: {section.name}: {exc}") from None


def load_design_job(path, media: Media | None = None) -> DesignJob:
    root, source = load_tree(path)
    top = _Section(root, source, "config", TOP_KEYS)
    if not top.has("target"):
        raise ConfigError(f"{source}:1: missing required section 'target'")
    target = _Section(top.node("target"), source, "target", {"gvm", "signal_um", "idler_um"})
    crystal = _Section(top.node("crystal"), source, "crystal", {"length_mm", "temperature_c"})
    analysis = _Section(top.node("analysis"), source, "analysis", {"slice_count", "window_nm", "grid"})
    pump = _Section(top.node("pump"), source, "pump", {"center_offset_nm", "width_nm"})
    sched = _Section(top.node("schedule"), source, "schedule", {"pump_iterations", "duty_iterations", "rounds"})

    temperature = crystal.number("temperature_c", 20.0)
    if target.has("gvm") == target.has("signal_um"):
        raise ConfigError(f"{source}:{target.line}: target needs exactly one of 'gvm' or 'signal_um'")
    if target.has("gvm"):
        if target.has("idler_um"):
            raise ConfigError(f"{target._where('idler_um')}: idler_um only goes with signal_um")
        raw = target.node("gvm").value
        try:
            cond = GvmCondition.parse(raw)
        except (ValueError, TypeError):
            raise ConfigError(f"{target._where('gvm')}: unknown GVM condition {raw!r}") from None
        signal, idler = solve_gvm_wavelength(cond, temperature, media=media), None
    else:
        signal = target.number("signal_um", positive=True)
        idler = target.number("idler_um", positive=True)

    schedule_defaults = designer.Schedule()
    try:
        problem = designer.DesignProblem(
            signal_wavelength=signal,
            idler_wavelength=idler,
            length=crystal.number("length_mm", 30.0, positive=True),
            temperature=temperature,
            slice_count=analysis.number("slice_count", 600, integer=True),
            window=analysis.number("window_nm", 60.0),
            grid=analysis.number("grid", 200, integer=True),
            pump_center_offset=pump.number("center_offset_nm", 5.0),
            pump_width_bounds=pump.pair("width_nm", (0.5, 15.0)),
            schedule=designer.Schedule(
                sched.number("pump_iterations", schedule_defaults.pump_iterations, integer=True),
                sched.number("duty_iterations", schedule_defaults.duty_iterations, integer=True),
                sched.number("rounds", schedule_defaults.rounds, integer=True),
            ),
            init=top.string("init", "erf", {"erf", "flat"}),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}:{top.line}: {exc}") from None

    seed = top.number("seed", 0, integer=True)
    out = top.string("output")
    output = Path(out) if out else None
    return DesignJob(
        problem=problem,
        pso_pump=_pso(_Section(top.node("pso_pump"), source, "pso_pump", PSO_KEYS), designer.default_pump_pso()),
        pso_duty=_pso(_Section(top.node("pso_duty"), source, "pso_duty", PSO_KEYS), designer.default_duty_pso()),
        seed=seed,
        output=output,
        source=source,
    )
