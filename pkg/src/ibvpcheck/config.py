"""Experiment configuration: a sectioned ``key = value`` file.

Data fields (``u0``, ``ub_left``, ``ub_right``) use a small grammar::

    const:C                      C
    step:S0:LEFT:RIGHT           LEFT for s < S0, RIGHT otherwise
    sin:AMP:FREQ[:MEAN[:PHASE]]  MEAN + AMP sin(2 pi FREQ s + PHASE)
    cos:AMP:FREQ[:MEAN[:PHASE]]  same with cos

``s`` is ``x`` for the initial datum and ``t`` for boundary data.
"""
from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .flux import get_flux

EXPERIMENTS = ("custom", "constant-state", "riemann")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class DataSpec:
    kind: str
    params: tuple

    @classmethod
    def parse(cls, text):
        parts = [p.strip() for p in str(text).strip().split(":")]
        kind = parts[0].lower()
        try:
            nums = tuple(float(p) for p in parts[1:])
        except ValueError:
            raise ConfigError(f"non-numeric parameter in data spec {text!r}") from None
        arity = {"const": (1, 1), "step": (3, 3), "sin": (2, 4), "cos": (2, 4)}
        if kind not in arity:
            raise ConfigError(f"unknown data spec kind {kind!r} in {text!r}")
        lo, hi = arity[kind]
        if not lo <= len(nums) <= hi:
            raise ConfigError(f"{kind} takes {lo}..{hi} parameters, got {len(nums)} in {text!r}")
        if kind in ("sin", "cos"):
            nums = nums + (0.0, 0.0)[: 4 - len(nums)]
        return cls(kind, nums)

    def __str__(self):
        return ":".join([self.kind] + [repr(p) for p in self.params])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        p = self.params
        if self.kind == "const":
            return p[0] + 0.0 * s
        if self.kind == "step":
            return np.where(s < p[0], p[1], p[2])
        trig = np.sin if self.kind == "sin" else np.cos
        return p[2] + p[0] * trig(2.0 * np.pi * p[1] * s + p[3])

    @property
    def breaks(self):
        return (self.params[0],) if self.kind == "step" else ()

    def bound(self):
        p = self.params
        if self.kind == "const":
            return abs(p[0])
        if self.kind == "step":
            return max(abs(p[1]), abs(p[2]))
        return abs(p[2]) + abs(p[0])


@dataclass(frozen=True)
class ExperimentConfig:
    flux: str = "burgers"
    domain: tuple = (0.0, 1.0)
    horizon: float = 1.0
    u0: DataSpec = DataSpec("const", (1.0,))
    ub_left: DataSpec = DataSpec("const", (1.0,))
    ub_right: DataSpec = DataSpec("const", (-1.0,))
    cells: int = 200
    cfl: float = 0.45
    experiment: str = "custom"
    seed: int = 0
    tol: float = 1e-9
    slack: float = 0.0
    k_grid: int = 257
    k_points: int = 33
    samples: int = 10_000
    output: str = "ibvpcheck-out"

    def __post_init__(self):
        try:
            get_flux(self.flux)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        a, b = self.domain
        if not a < b:
            raise ConfigError("domain must satisfy a < b")
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if self.cells < 4:
            raise ConfigError("cells must be >= 4")
        if not 0 < self.cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1]")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
        for name in ("u0", "ub_left", "ub_right"):
            if not isinstance(getattr(self, name), DataSpec):
                object.__setattr__(self, name, DataSpec.parse(getattr(self, name)))

    def problem(self):
        from .solver import IBVPProblem
        return IBVPProblem(get_flux(self.flux), self.u0, self.ub_left, self.ub_right,
                           domain=tuple(self.domain), horizon=self.horizon,
                           u0_breaks=self.u0.breaks,
                           ub_breaks=tuple(sorted(set(self.ub_left.breaks + self.ub_right.breaks))),
                           name=self.experiment)

    def grid(self):
        from .solver import Grid1D
        return Grid1D(self.cells, tuple(self.domain), self.cfl)

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    # --- text form ---------------------------------------------------------------

    def to_ini(self):
        cp = configparser.ConfigParser(interpolation=None)
        cp["problem"] = {"flux": self.flux, "domain": f"{self.domain[0]!r}, {self.domain[1]!r}",
                         "horizon": repr(self.horizon), "u0": str(self.u0),
                         "ub_left": str(self.ub_left), "ub_right": str(self.ub_right)}
        cp["grid"] = {"cells": str(self.cells), "cfl": repr(self.cfl)}
        cp["run"] = {"experiment": self.experiment, "seed": str(self.seed), "tol": repr(self.tol),
                     "slack": repr(self.slack), "k_grid": str(self.k_grid),
                     "k_points": str(self.k_points), "samples": str(self.samples),
                     "output": self.output}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text):
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        known = {"problem": {"flux", "domain", "horizon", "u0", "ub_left", "ub_right"},
                 "grid": {"cells", "cfl"},
                 "run": {"experiment", "seed", "tol", "slack", "k_grid", "k_points", "samples",
                         "output"}}
        kw = {}
        for section in cp.sections():
            if section not in known:
                raise ConfigError(f"unknown section [{section}]")
            for key, value in cp[section].items():
                if key not in known[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                kw[key] = value
        types = {f.name: f.type for f in fields(cls)}
        out = {}
        try:
            for key, value in kw.items():
                if key == "domain":
                    a, b = (float(v) for v in value.split(","))
                    out[key] = (a, b)
                elif key in ("u0", "ub_left", "ub_right"):
                    out[key] = DataSpec.parse(value)
                elif types[key] == "int":
                    out[key] = int(value)
                elif types[key] == "float":
                    out[key] = float(value)
                else:
                    out[key] = value.strip()
        except ValueError as exc:
            raise ConfigError(f"bad value: {exc}") from None
        return cls(**out)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_ini(fh.read())

    def as_json_dict(self):
        d = asdict(self)
        for name in ("u0", "ub_left", "ub_right"):
            d[name] = str(getattr(self, name))
        d["domain"] = list(self.domain)
        return d

    def digest(self):
        return hashlib.sha256(self.to_ini().encode("utf-8")).hexdigest()


def constant_state_config(**kw):
    return ExperimentConfig(experiment="constant-state", **kw)


def to_json(cfg: ExperimentConfig):
    return json.dumps(cfg.as_json_dict(), indent=2, sort_keys=True)

