"""Scenario files: a small INI dialect with a canonical serialization.

Example::

    [scenario]
    name = mod-1lax-fig1-center
    system = modified
    uL = 2.0
    vL = 1.0
    uR = -1.0
    vR = -0.75
    seed = 0

Numbers are plain decimals; closed forms such as ``(3+sqrt2)/2`` are not
evaluated (``deltashock presets --constants`` prints them to full precision).
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .core import (
    DeltaShockError,
    FluxError,
    PiecewiseQuadraticFlux,
    State,
    SystemSpec,
    VFluxKind,
    double_well_system,
    korchinski_system,
    modified_system,
)

SYSTEMS = ("korchinski", "modified", "doublewell", "custom")
ARTIFACTS = ("solve", "verify", "fvm", "figure")


class ScenarioError(DeltaShockError, ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class FvmSettings:
    cells: int = 4000
    cfl: float = 0.45
    end_time: float = 1.0
    domain: tuple[float, float] | None = None
    grids: tuple[int, ...] = ()


@dataclass(frozen=True)
class Tolerances:
    mass_balance: float = 1e-10
    weak: float = 1e-6
    weak_quadrature: int = 512
    atom_deletion: float = 1e-2
    spike_rel: float = 0.1
    spike_abs: float = 0.0375
    classify: float = 1e-12


@dataclass(frozen=True)
class Scenario:
    name: str
    system: str
    uL: float
    vL: float
    uR: float
    vR: float
    seed: int = 0
    flux_breakpoints: tuple[float, ...] = ()
    flux_pieces: tuple[tuple[float, float, float], ...] = ()
    vflux: str = "linear"
    artifacts: tuple[str, ...] = ARTIFACTS
    time: float = 1.0
    samples: int = 401
    fvm: FvmSettings = field(default_factory=FvmSettings)
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ScenarioError(f"unknown system {self.system!r}; expected one of {', '.join(SYSTEMS)}",
                                key="system")
        if self.system == "custom" and not self.flux_pieces:
            raise ScenarioError("custom systems need a [flux] section", key="pieces")
        if self.vflux not in ("linear", "quadratic"):
            raise ScenarioError(f"vflux must be 'linear' or 'quadratic', got {self.vflux!r}", key="vflux")
        for a in self.artifacts:
            if a not in ARTIFACTS:
                raise ScenarioError(f"unknown artifact {a!r}", key="artifacts")
        if self.time <= 0:
            raise ScenarioError("time must be positive", key="time")

    @property
    def left(self) -> State:
        return State(self.uL, self.vL)

    @property
    def right(self) -> State:
        return State(self.uR, self.vR)

    def system_spec(self) -> SystemSpec:
        if self.system == "korchinski":
            return korchinski_system()
        if self.system == "modified":
            return modified_system()
        if self.system == "doublewell":
            return double_well_system()
        try:
            flux = PiecewiseQuadraticFlux(self.flux_breakpoints, self.flux_pieces)
        except FluxError as exc:
            raise ScenarioError(str(exc), key="pieces") from exc
        return SystemSpec(flux, VFluxKind(self.vflux), "custom")


# --------------------------------------------------------------------------
# parsing


def _key_line(text: str, section: str, key: str) -> int | None:
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.fullmatch(r"\[(.+)\]", line)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"{re.escape(key)}\s*[=:]", line):
            return no
    return None


class _Reader:
    def __init__(self, text: str, cp: configparser.ConfigParser):
        self.text, self.cp = text, cp

    def _fail(self, section, key, msg):
        raise ScenarioError(msg, _key_line(self.text, section, key), key)

    def raw(self, section, key, required=False):
        if not self.cp.has_section(section) or not self.cp.has_option(section, key):
            if required:
                raise ScenarioError(f"missing field [{section}] {key}", None, key)
            return None
        return self.cp.get(section, key).strip()

    def float(self, section, key, default=None, required=False):
        s = self.raw(section, key, required)
        if s is None:
            return default
        try:
            return float(s)
        except ValueError:
            self._fail(section, key, f"expected a decimal number, got {s!r}")

    def int(self, section, key, default=None):
        s = self.raw(section, key)
        if s is None:
            return default
        try:
            return int(s)
        except ValueError:
            self._fail(section, key, f"expected an integer, got {s!r}")

    def floats(self, section, key, sep=","):
        s = self.raw(section, key)
        if s is None or s == "":
            return None
        try:
            return tuple(float(p) for p in s.split(sep) if p.strip())
        except ValueError:
            self._fail(section, key, f"expected comma-separated decimals, got {s!r}")

    def ints(self, section, key):
        s = self.raw(section, key)
        if s is None or s == "":
            return ()
        try:
            return tuple(int(p) for p in s.split(",") if p.strip())
        except ValueError:
            self._fail(section, key, f"expected comma-separated integers, got {s!r}")

    def words(self, section, key):
        s = self.raw(section, key)
        if s is None:
            return None
        return tuple(p.strip() for p in s.split(",") if p.strip())


_KNOWN = {
    "scenario": {"name", "system", "uL", "vL", "uR", "vR", "seed"},
    "flux": {"breakpoints", "pieces", "vflux"},
    "outputs": {"artifacts", "time", "samples"},
    "fvm": {"cells", "cfl", "end_time", "domain", "grids"},
    "tolerances": {f.name for f in fields(Tolerances)},
}


def parse_scenario(text: str) -> Scenario:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ScenarioError(str(exc).splitlines()[0], line) from exc
    for section in cp.sections():
        if section not in _KNOWN:
            raise ScenarioError(f"unknown section [{section}]", _section_line(text, section))
        for key in cp.options(section):
            if key not in _KNOWN[section]:
                raise ScenarioError(f"unknown field in [{section}]", _key_line(text, section, key), key)
    r = _Reader(text, cp)
    name = r.raw("scenario", "name", required=True)
    system = r.raw("scenario", "system", required=True)
    kw = dict(name=name, system=system,
              uL=r.float("scenario", "uL", required=True), vL=r.float("scenario", "vL", required=True),
              uR=r.float("scenario", "uR", required=True), vR=r.float("scenario", "vR", required=True),
              seed=r.int("scenario", "seed", 0))
    if cp.has_section("flux"):
        kw["flux_breakpoints"] = r.floats("flux", "breakpoints") or ()
        pieces_raw = r.raw("flux", "pieces")
        if pieces_raw:
            try:
                kw["flux_pieces"] = tuple(tuple(float(x) for x in chunk.split()) for chunk in pieces_raw.split("|"))
            except ValueError:
                r._fail("flux", "pieces", f"expected 'a b c | a b c | ...', got {pieces_raw!r}")
        kw["vflux"] = r.raw("flux", "vflux") or "linear"
    artifacts = r.words("outputs", "artifacts")
    if artifacts is not None:
        kw["artifacts"] = artifacts
    kw["time"] = r.float("outputs", "time", 1.0)
    kw["samples"] = r.int("outputs", "samples", 401)
    fv = FvmSettings()
    dom = r.floats("fvm", "domain")
    if dom is not None and len(dom) != 2:
        r._fail("fvm", "domain", "domain needs exactly two numbers")
    kw["fvm"] = FvmSettings(cells=r.int("fvm", "cells", fv.cells), cfl=r.float("fvm", "cfl", fv.cfl),
                            end_time=r.float("fvm", "end_time", fv.end_time),
                            domain=dom, grids=r.ints("fvm", "grids"))
    tol = Tolerances()
    tkw = {}
    for f in fields(Tolerances):
        getter = r.int if f.type in (int, "int") else r.float
        tkw[f.name] = getter("tolerances", f.name, getattr(tol, f.name))
    kw["tolerances"] = Tolerances(**tkw)
    try:
        return Scenario(**kw)
    except ScenarioError as exc:
        sec = "flux" if exc.key in ("pieces", "vflux") else ("outputs" if exc.key in ("artifacts", "time") else "scenario")
        line = _key_line(text, sec, exc.key) if exc.key else None
        raise ScenarioError(str(exc).split(": ", 1)[-1], line, exc.key) from None


def _section_line(text, section):
    for no, raw in enumerate(text.splitlines(), 1):
        if raw.strip() == f"[{section}]":
            return no
    return None


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())


# --------------------------------------------------------------------------
# canonical serialization


def _num(x: float) -> str:
    return repr(float(x))


def serialize_scenario(sc: Scenario) -> str:
    out = ["[scenario]", f"name = {sc.name}", f"system = {sc.system}",
           f"uL = {_num(sc.uL)}", f"vL = {_num(sc.vL)}", f"uR = {_num(sc.uR)}", f"vR = {_num(sc.vR)}",
           f"seed = {sc.seed}", ""]
    if sc.system == "custom":
        out += ["[flux]",
                "breakpoints = " + ", ".join(_num(b) for b in sc.flux_breakpoints),
                "pieces = " + " | ".join(" ".join(_num(c) for c in p) for p in sc.flux_pieces),
                f"vflux = {sc.vflux}", ""]
    out += ["[outputs]", "artifacts = " + ", ".join(sc.artifacts), f"time = {_num(sc.time)}",
            f"samples = {sc.samples}", ""]
    fv = sc.fvm
    out += ["[fvm]", f"cells = {fv.cells}", f"cfl = {_num(fv.cfl)}", f"end_time = {_num(fv.end_time)}"]
    if fv.domain is not None:
        out.append("domain = " + ", ".join(_num(d) for d in fv.domain))
    if fv.grids:
        out.append("grids = " + ", ".join(str(g) for g in fv.grids))
    out.append("")
    out.append("[tolerances]")
    for f in fields(Tolerances):
        val = getattr(sc.tolerances, f.name)
        out.append(f"{f.name} = {val if isinstance(val, int) else _num(val)}")
    return "\n".join(line.rstrip() for line in out) + "\n"


# --------------------------------------------------------------------------
# presets

DOUBLE_WELL_U = 2.2071067811865475  # (3 + sqrt(2)) / 2

PRESETS: dict[str, Scenario] = {
    "korchinski-fig1-left": Scenario("korchinski-fig1-left", "korchinski", 1.0, 1.0, -1.0, 1.0),
    "mod-1lax-fig1-center": Scenario("mod-1lax-fig1-center", "modified", 2.0, 1.0, -1.0, -0.75),
    "mod-transitional-fig1-right": Scenario("mod-transitional-fig1-right", "modified", 2.0, 0.125, -1.0, -0.75),
    "doublewell-fig2": Scenario("doublewell-fig2", "doublewell", DOUBLE_WELL_U, 1.0, -DOUBLE_WELL_U, 1.0),
    # mirror image (x, u) -> (-x, -u) of the 1-Lax case
    "mod-2lax-mirrored": Scenario("mod-2lax-mirrored", "modified", 1.0, -0.75, -2.0, 1.0),
    "mod-stationary-null": Scenario("mod-stationary-null", "modified", 1.0, -0.5, -1.0, -0.5),
}

REFERENCE_PRESETS = ("korchinski-fig1-left", "mod-1lax-fig1-center", "mod-transitional-fig1-right", "doublewell-fig2")


def preset(name: str) -> Scenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None

