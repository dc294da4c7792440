"""
Run configuration files.

The format is INI (sections of ``key = value`` lines, ``#`` comments),
read with :mod:`configparser`. Vectors are whitespace- or comma-separated
numbers; matrices and vector lists separate rows with ``;``. Example::

    [model]
    name = quartic
    epsilon = 0.1

    [initial]
    x = 1 0
    # upper triangle (M11 M12 M22) or full rows "1 0.3; 0.3 0.5"
    M = 1 0.3 0.5

    [integrator]
    method = adaptive
    t_end = 100
    rtol = 1e-10
    atol = 1e-12

    [run]
    form = two

    [output]
    trajectory = quartic.csv
    report = quartic.json
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .integrate import FORMS, IntegratorConfig
from .model import harmonic, load_polynomial, quartic
from .structure import compose, from_upper_triangle

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "format_config"]

MODELS = ("quartic", "harmonic", "polynomial")
ORACLES = ("quadratic", "zero-phi", "stationary", "action-angle")


class ConfigError(ValueError):
    pass


Matrix = tuple  # tuple of row tuples


@dataclass(frozen=True)
class RunConfig:
    model: str = "quartic"
    epsilon: float = 0.1
    model_file: str | None = None
    n: int = 1
    form: str = "two"
    compare_form: str | None = None
    tolerance: float = 1e-8
    oracle: str | None = None
    samples: int = 101
    x0: tuple = ()
    M0: Matrix | None = None
    ys: Matrix = ()
    zs: Matrix = ()
    action_coeffs: tuple = ()
    action_initial: tuple = ()
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    trajectory_path: str | None = None
    report_path: str | None = None

    def build_model(self):
        if self.model == "quartic":
            return quartic(self.epsilon)
        if self.model == "harmonic":
            return harmonic(self.n)
        return load_polynomial(self.model_file, self.n)

    def initial_moments(self):
        """Initial ``M`` as an array, from ``M`` or from the y/z vector lists."""
        d = 2 * self.n
        if self.M0 is not None:
            return np.array(self.M0, dtype=float)
        return compose(np.array(self.ys).reshape(-1, d), np.array(self.zs).reshape(-1, d), d)

    def x_labels(self):
        return ["q", "p"] if self.model == "quartic" else None


def _floats(text, key):
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from None


def _rows(text, key):
    return tuple(_floats(r, key) for r in text.split(";") if r.strip())


def _fmt_num(v):
    return repr(float(v))


def _fmt_vec(v):
    return " ".join(_fmt_num(a) for a in v)


def _fmt_rows(rows):
    return "; ".join(_fmt_vec(r) for r in rows)


_INTEGRATOR_TYPES = {f.name: f.type for f in fields(IntegratorConfig)}


def parse_config(text, base_dir="."):
    """Parse configuration text into a validated :class:`RunConfig`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0]) from None

    def get(section, key, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key).strip()
        return default

    kw = {}
    try:
        model = get("model", "name", "quartic")
        if model not in MODELS:
            raise ConfigError(f"model.name must be one of {MODELS}, got {model!r}")
        kw["model"] = model
        kw["epsilon"] = float(get("model", "epsilon", "0.1"))
        kw["n"] = int(get("model", "n", "1"))
        mf = get("model", "file")
        if mf is not None:
            kw["model_file"] = os.path.abspath(os.path.join(base_dir, mf))
        if model == "polynomial" and mf is None:
            raise ConfigError("model.file is required for a polynomial model")
        if model == "quartic" and kw["n"] != 1:
            raise ConfigError("the quartic model has n = 1")

        kw["form"] = get("run", "form", "two")
        kw["compare_form"] = get("run", "compare")
        kw["tolerance"] = float(get("run", "tolerance", "1e-8"))
        kw["oracle"] = get("run", "oracle")
        kw["samples"] = int(get("run", "samples", "101"))

        integ = {}
        if cp.has_section("integrator"):
            for key, val in cp.items("integrator"):
                if key not in _INTEGRATOR_TYPES:
                    raise ConfigError(f"unknown integrator key {key!r}")
                conv = {"str": str, "int": int}.get(_INTEGRATOR_TYPES[key], float)
                integ[key] = conv(val.strip())
        kw["integrator"] = IntegratorConfig(**integ)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

    d = 2 * kw["n"]
    x = get("initial", "x")
    kw["x0"] = _floats(x, "x") if x is not None else (0.0,) * d
    M = get("initial", "M")
    if M is not None:
        rows = _rows(M, "M")
        if len(rows) == 1 and len(rows[0]) == d * (d + 1) // 2:
            rows = tuple(map(tuple, from_upper_triangle(rows[0], d)))
        kw["M0"] = rows
    kw["ys"] = _rows(get("initial", "ys", ""), "ys")
    kw["zs"] = _rows(get("initial", "zs", ""), "zs")
    kw["action_coeffs"] = _floats(get("run", "action_coeffs", ""), "action_coeffs")
    kw["action_initial"] = _floats(get("run", "action_initial", ""), "action_initial")
    for key, name in (("trajectory", "trajectory_path"), ("report", "report_path")):
        val = get("output", key)
        if val is not None:
            kw[name] = val
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def validate(cfg):
    d = 2 * cfg.n
    if cfg.n < 1:
        raise ConfigError("n must be >= 1")
    for name in ("form", "compare_form"):
        val = getattr(cfg, name)
        if val is not None and val not in FORMS:
            raise ConfigError(f"run.{'compare' if name == 'compare_form' else 'form'} "
                              f"must be one of {FORMS}, got {val!r}")
    if cfg.oracle is not None and cfg.oracle not in ORACLES:
        raise ConfigError(f"run.oracle must be one of {ORACLES}, got {cfg.oracle!r}")
    if len(cfg.x0) != d:
        raise ConfigError(f"initial.x must have {d} entries, got {len(cfg.x0)}")
    if cfg.M0 is not None:
        M = np.array(cfg.M0, dtype=float)
        if M.shape != (d, d):
            raise ConfigError(
                f"initial.M must be {d}x{d} or its {d * (d + 1) // 2}-entry upper triangle"
            )
        if np.linalg.norm(M - M.T) > 1e-9 * max(1.0, np.linalg.norm(M)):
            raise ConfigError("initial.M must be symmetric (M = -J Phi with Phi in sp(2n))")
        if cfg.ys or cfg.zs:
            raise ConfigError("give either initial.M or initial.ys/zs, not both")
    for name in ("ys", "zs"):
        for v in getattr(cfg, name):
            if len(v) != d:
                raise ConfigError(f"initial.{name} vectors must have {d} entries")
    if len(cfg.ys) + len(cfg.zs) > d:
        raise ConfigError("initial.ys and initial.zs hold more than 2n vectors")
    if cfg.samples < 2:
        raise ConfigError("run.samples must be >= 2")


def load_config(path):
    """Read and parse a configuration file."""
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def format_config(cfg):
    """Serialise ``cfg``; :func:`parse_config` of the result gives ``cfg`` back."""
    lines = ["[model]", f"name = {cfg.model}", f"epsilon = {_fmt_num(cfg.epsilon)}",
             f"n = {cfg.n}"]
    if cfg.model_file is not None:
        lines.append(f"file = {cfg.model_file}")
    lines += ["", "[initial]", f"x = {_fmt_vec(cfg.x0)}"]
    if cfg.M0 is not None:
        lines.append(f"M = {_fmt_rows(cfg.M0)}")
    if cfg.ys:
        lines.append(f"ys = {_fmt_rows(cfg.ys)}")
    if cfg.zs:
        lines.append(f"zs = {_fmt_rows(cfg.zs)}")
    lines += ["", "[integrator]"]
    for f in fields(IntegratorConfig):
        val = getattr(cfg.integrator, f.name)
        lines.append(f"{f.name} = {val if isinstance(val, (str, int)) else _fmt_num(val)}")
    lines += ["", "[run]", f"form = {cfg.form}", f"tolerance = {_fmt_num(cfg.tolerance)}",
              f"samples = {cfg.samples}"]
    if cfg.compare_form is not None:
        lines.append(f"compare = {cfg.compare_form}")
    if cfg.oracle is not None:
        lines.append(f"oracle = {cfg.oracle}")
    if cfg.action_coeffs:
        lines.append(f"action_coeffs = {_fmt_vec(cfg.action_coeffs)}")
    if cfg.action_initial:
        lines.append(f"action_initial = {_fmt_vec(cfg.action_initial)}")
    out = [(k, v) for k, v in (("trajectory", cfg.trajectory_path),
                                ("report", cfg.report_path)) if v is not None]
    if out:
        lines += ["", "[output]"] + [f"{k} = {v}" for k, v in out]
    return "\n".join(lines) + "\n"
